use std::fmt::Write;
use std::path::Path;

use iterprior::tasks::{builtin_tasks, load_task_file, TaskRegistry};

use crate::{emit, CliError, CliResult};

/// Builtin tasks plus any from `task_file`.
pub fn registry(task_file: Option<&Path>) -> CliResult<TaskRegistry> {
    let mut reg = builtin_tasks();
    if let Some(path) = task_file {
        let extra = load_task_file(path).map_err(CliError::usage)?;
        reg.extend(extra).map_err(CliError::usage)?;
    }
    Ok(reg)
}

pub fn list(task_file: Option<&Path>) -> CliResult<()> {
    let reg = registry(task_file)?;
    let mut rows = vec![["NAME", "LIKELIHOOD", "BOUNDS", "SEEDS"].map(String::from)];
    for t in reg.iter() {
        let (lo, hi) = t.hypothesis_bounds;
        rows.push([
            t.name.clone(),
            t.likelihood.notation(),
            format!("[{lo}, {hi}]"),
            t.seed_rule.describe(),
        ]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for r in &rows {
        let _ = writeln!(
            text,
            "{:<w0$}  {:<w1$}  {:<w2$}  {}",
            r[0],
            r[1],
            r[2],
            r[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        );
    }
    emit(&text)
}
