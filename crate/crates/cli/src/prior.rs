use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use iterprior::agents::Prior;
use iterprior::bayes::posterior_mean;
use iterprior::chains::{empirical_prior, hypotheses_at, load, ChainSet};
use iterprior::numerics::{median, Bandwidth, DensityGrid2D};

use crate::config::{Manifest, RECORDS};
use crate::svg;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct PriorArgs {
    /// Run directory written by `iterprior run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Directory for prior.csv, prior.svg and summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Iteration to read [default: last]
    #[arg(long)]
    iteration: Option<u32>,
    /// Kernel bandwidth [default: Silverman's rule]
    #[arg(long)]
    bandwidth: Option<f64>,
}

/// A finished run read back from disk.
pub struct RunDir {
    pub manifest: Manifest,
    pub chains: ChainSet,
}

impl RunDir {
    pub fn open(dir: &Path) -> CliResult<Self> {
        let manifest = Manifest::read(dir)?;
        let chains = load(dir.join(&manifest.artifacts.records))?;
        Ok(Self { manifest, chains })
    }

    pub fn prior(&self, iteration: Option<u32>, bandwidth: Bandwidth) -> CliResult<Prior> {
        Ok(empirical_prior(
            &self.chains,
            &self.manifest.task,
            iteration,
            bandwidth,
        )?)
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Rows of `w0`, columns of `w1`.
pub fn grid_csv(grid: &DensityGrid2D) -> String {
    let mut out = String::new();
    for row in grid.masses().chunks(grid.resolution()) {
        let cells: Vec<String> = row.iter().map(|m| m.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Reads a square matrix written by [`grid_csv`], renormalizing it.
pub fn read_grid_csv(path: &Path) -> CliResult<DensityGrid2D> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
    let mut weights = Vec::new();
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::failed(format!("{}:{}: bad value `{field}`", path.display(), i + 1)))?;
            weights.push(v);
        }
        rows += 1;
    }
    if rows * rows != weights.len() {
        return Err(CliError::failed(format!(
            "{}: expected a square matrix, got {rows} rows and {} values",
            path.display(),
            weights.len()
        )));
    }
    Ok(DensityGrid2D::from_weights(rows, weights)?)
}

pub fn prior(args: PriorArgs) -> CliResult<()> {
    if same_dir(&args.input, &args.out) {
        return Err(CliError::usage(
            "--out must differ from --in; run directories are never modified",
        ));
    }
    let bandwidth = match args.bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => Bandwidth::Fixed(h),
        Some(h) => return Err(CliError::usage(format!("--bandwidth must be positive, got {h}"))),
        None => Bandwidth::Auto,
    };
    let run = RunDir::open(&args.input)?;
    let task = &run.manifest.task;
    let iteration = match args.iteration {
        Some(t) => t,
        None => run.chains.final_iteration().ok_or_else(|| {
            CliError::failed(format!("no surviving chains in {}", args.input.join(RECORDS).display()))
        })?,
    };
    let prior = run.prior(Some(iteration), bandwidth)?;
    let hs = hypotheses_at(&run.chains, iteration)?;
    std::fs::create_dir_all(&args.out)?;

    let mut summary = json!({
        "task": task.name,
        "iteration": iteration,
        "chains_used": hs.len(),
        "chains_failed": run.chains.failed_count(),
        "bandwidth": args.bandwidth,
    });
    let title = format!("{}: iteration {iteration}, {} chains", task.name, hs.len());
    let (csv, svg) = match &prior {
        Prior::Scalar(d) => {
            let xs: Vec<f64> = hs.iter().filter_map(|h| h.as_scalar()).collect();
            summary["median"] = json!(median(&xs)?);
            summary["mean"] = json!(xs.iter().sum::<f64>() / xs.len() as f64);
            summary["density_mean"] = json!(d.mean());
            summary["density_median"] = json!(d.quantile(0.5));
            let mut csv = String::from("center,mass\n");
            for (i, m) in d.masses().iter().enumerate() {
                let _ = writeln!(csv, "{},{m}", d.center(i));
            }
            (csv, svg::histogram(d, &xs, &title, &task.name))
        }
        Prior::Causal(g) => {
            let (w0, w1): (Vec<f64>, Vec<f64>) = hs.iter().filter_map(|h| h.as_causal()).map(|c| (c.w0, c.w1)).unzip();
            let n = w0.len() as f64;
            let (m0, m1) = posterior_mean(g);
            summary["median"] = json!({ "w0": median(&w0)?, "w1": median(&w1)? });
            summary["mean"] = json!({ "w0": w0.iter().sum::<f64>() / n, "w1": w1.iter().sum::<f64>() / n });
            summary["density_mean"] = json!({ "w0": m0, "w1": m1 });
            (grid_csv(g), svg::heatmap(g, &title))
        }
    };
    std::fs::write(args.out.join("prior.csv"), csv)?;
    std::fs::write(args.out.join("prior.svg"), svg)?;
    let text = serde_json::to_string_pretty(&summary).map_err(CliError::failed)?;
    std::fs::write(args.out.join("summary.json"), text + "\n")?;
    println!("wrote {}", args.out.display());
    Ok(())
}
