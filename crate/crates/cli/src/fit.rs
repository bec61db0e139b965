use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use iterprior::agents::Prior;
use iterprior::bayes::{
    fit_metrics, load_judgments, model_predictions, prior_grid, window_bins, JudgmentItem, PriorSpec, DEFAULT_ALPHA,
};
use iterprior::likelihoods::CausalDirection;
use iterprior::numerics::{Bandwidth, DensityGrid2D, GRID_RESOLUTION};

use crate::prior::{read_grid_csv, RunDir};
use crate::{emit, CliError, CliResult};

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV of judgments: direction,n_c_plus,n_c_minus,k_plus,k_minus,judged_w0,judged_w1
    #[arg(long)]
    judgments: PathBuf,
    /// uniform, sparse-strong or empirical:<run dir or prior.csv>; repeatable
    #[arg(long = "prior", default_values = ["uniform", "sparse-strong"])]
    priors: Vec<String>,
    /// Only score items of this direction.
    #[arg(long, value_parser = parse_direction)]
    direction: Option<CausalDirection>,
    /// Strength of the sparse-strong prior.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Equal-width windows over the model predictions.
    #[arg(long, default_value_t = 13)]
    bins: usize,
    /// Directory for fit.json and the binned CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_direction(s: &str) -> Result<CausalDirection, String> {
    CausalDirection::ALL
        .into_iter()
        .find(|d| d.as_str() == s)
        .ok_or_else(|| format!("expected generative or preventive, got `{s}`"))
}

enum PriorChoice {
    Uniform,
    SparseStrong,
    Empirical(DensityGrid2D),
}

impl PriorChoice {
    fn parse(text: &str) -> CliResult<Self> {
        match text {
            "uniform" => Ok(PriorChoice::Uniform),
            "sparse-strong" => Ok(PriorChoice::SparseStrong),
            _ => match text.strip_prefix("empirical:") {
                Some(path) => Ok(PriorChoice::Empirical(empirical_grid(Path::new(path))?)),
                None => Err(CliError::usage(format!(
                    "unknown prior `{text}`; expected uniform, sparse-strong or empirical:<path>"
                ))),
            },
        }
    }

    fn grid(&self, direction: CausalDirection, alpha: f64) -> CliResult<DensityGrid2D> {
        match self {
            PriorChoice::Uniform => Ok(DensityGrid2D::uniform(GRID_RESOLUTION)),
            PriorChoice::SparseStrong => {
                prior_grid(&PriorSpec::SparseStrong { alpha, direction }).map_err(CliError::usage)
            }
            PriorChoice::Empirical(g) => Ok(g.clone()),
        }
    }
}

fn empirical_grid(path: &Path) -> CliResult<DensityGrid2D> {
    if path.is_dir() {
        match RunDir::open(path)?.prior(None, Bandwidth::Auto)? {
            Prior::Causal(g) => Ok(g),
            Prior::Scalar(_) => Err(CliError::usage(format!("{} is not a causal run", path.display()))),
        }
    } else {
        read_grid_csv(path)
    }
}

#[derive(Serialize)]
struct FitRow {
    prior: String,
    direction: String,
    items: usize,
    pearson: f64,
    rmsd: f64,
}

fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    while out.contains("--") {
        out = out.replace("--", "-");
    }
    out.trim_matches('-').to_string()
}

pub fn fit(args: FitArgs) -> CliResult<()> {
    if !(args.alpha >= 0.0 && args.alpha.is_finite()) {
        return Err(CliError::usage(format!(
            "--alpha must be non-negative, got {}",
            args.alpha
        )));
    }
    if args.bins == 0 {
        return Err(CliError::usage("--bins must be at least 1"));
    }
    let choices = args
        .priors
        .iter()
        .map(|p| PriorChoice::parse(p))
        .collect::<CliResult<Vec<_>>>()?;
    let items = load_judgments(&args.judgments)?;
    let directions: Vec<CausalDirection> = CausalDirection::ALL
        .into_iter()
        .filter(|d| args.direction.map_or(true, |x| x == *d))
        .filter(|d| items.iter().any(|it| it.direction == *d))
        .collect();
    if directions.is_empty() {
        return Err(CliError::failed(format!(
            "{}: no judgments to score",
            args.judgments.display()
        )));
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
    }

    let mut rows = Vec::new();
    for (label, choice) in args.priors.iter().zip(&choices) {
        let mut preds = Vec::new();
        let mut judged = Vec::new();
        for &dir in &directions {
            let subset: Vec<JudgmentItem> = items.iter().filter(|it| it.direction == dir).cloned().collect();
            let p = model_predictions(&subset, &choice.grid(dir, args.alpha)?)?;
            let j: Vec<(f64, f64)> = subset.iter().filter_map(|it| it.agent_judgment).collect();
            rows.push(score(label, dir.as_str(), &p, &j)?);
            write_bins(args.out.as_deref(), label, dir.as_str(), &p, &j, args.bins)?;
            preds.extend(p);
            judged.extend(j);
        }
        if directions.len() > 1 {
            rows.push(score(label, "both", &preds, &judged)?);
            write_bins(args.out.as_deref(), label, "both", &preds, &judged, args.bins)?;
        }
    }

    let mut table = format!(
        "{:<24} {:<11} {:>6} {:>8} {:>8}\n",
        "PRIOR", "DIRECTION", "ITEMS", "PEARSON", "RMSD"
    );
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<24} {:<11} {:>6} {:>8.4} {:>8.4}",
            r.prior, r.direction, r.items, r.pearson, r.rmsd
        );
    }
    if let Some(out) = &args.out {
        let text = serde_json::to_string_pretty(&rows).map_err(CliError::failed)?;
        std::fs::write(out.join("fit.json"), text + "\n")?;
    }
    emit(&table)
}

fn score(label: &str, direction: &str, preds: &[(f64, f64)], judged: &[(f64, f64)]) -> CliResult<FitRow> {
    let m = fit_metrics(preds, judged)?;
    Ok(FitRow {
        prior: label.to_string(),
        direction: direction.to_string(),
        items: preds.len(),
        pearson: m.pearson,
        rmsd: m.rmsd,
    })
}

fn write_bins(
    out: Option<&Path>,
    label: &str,
    direction: &str,
    preds: &[(f64, f64)],
    judged: &[(f64, f64)],
    bins: usize,
) -> CliResult<()> {
    let Some(out) = out else { return Ok(()) };
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = String::from("lo,hi,count,mean_prediction,mean_judgment\n");
    for b in window_bins(preds, judged, bins)? {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            b.lo,
            b.hi,
            b.count,
            cell(b.mean_prediction),
            cell(b.mean_judgment)
        );
    }
    std::fs::write(out.join(format!("bins-{}-{direction}.csv", slug(label))), csv)?;
    Ok(())
}
