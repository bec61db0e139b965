//! Grid Bayesian models of causal strength judgments.
//!
//! Priors and posteriors live on the unit-square grid of
//! [`DensityGrid2D`]. A model's judgment for a contingency table is its
//! posterior mean of `(w0, w1)`.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihoods::{causal_log_likelihood, CausalDirection, CausalHypothesis, CausalObservation};
use crate::numerics::{pearson_r, rmsd, DensityGrid2D, GRID_RESOLUTION};

pub const DEFAULT_ALPHA: f64 = 5.0;

/// Group sizes swept by [`generate_judgment_items`].
pub const SAMPLE_SIZES: [u32; 3] = [8, 16, 32];

/// Effect-count levels per group size.
pub const EFFECT_LEVELS: u32 = 9;

#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    Uniform,
    /// Favors one strong and one weak cause; `alpha = 0` is uniform.
    SparseStrong {
        alpha: f64,
        direction: CausalDirection,
    },
    Empirical(DensityGrid2D),
}

/// Unnormalized sparse-and-strong prior density.
pub fn sparse_strong_weight(w0: f64, w1: f64, alpha: f64, direction: CausalDirection) -> f64 {
    let strong_candidate = match direction {
        CausalDirection::Generative => w0 + 1.0 - w1,
        CausalDirection::Preventive => 2.0 - w0 - w1,
    };
    let strong_background = 1.0 - w0 + w1;
    (-alpha * strong_candidate).exp() + (-alpha * strong_background).exp()
}

pub fn prior_grid(spec: &PriorSpec) -> Result<DensityGrid2D> {
    prior_grid_with_resolution(spec, GRID_RESOLUTION)
}

/// Empirical grids keep their own resolution.
pub fn prior_grid_with_resolution(spec: &PriorSpec, resolution: usize) -> Result<DensityGrid2D> {
    match spec {
        PriorSpec::Uniform => Ok(DensityGrid2D::uniform(resolution)),
        PriorSpec::SparseStrong { alpha, direction } => {
            if !(*alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "alpha must be non-negative, got {alpha}"
                )));
            }
            DensityGrid2D::from_fn(resolution, |w0, w1| sparse_strong_weight(w0, w1, *alpha, *direction))
        }
        PriorSpec::Empirical(grid) => Ok(grid.clone()),
    }
}

/// Cellwise `prior * p(d | w0, w1)`, normalized.
pub fn posterior_grid(
    prior: &DensityGrid2D,
    d: &CausalObservation,
    direction: CausalDirection,
) -> Result<DensityGrid2D> {
    let res = prior.resolution();
    let loglik: Vec<f64> = (0..res * res)
        .map(|c| {
            let (w0, w1) = prior.cell_coords(c);
            causal_log_likelihood(d, &CausalHypothesis { w0, w1 }, direction)
        })
        .collect();
    let max = prior
        .masses()
        .iter()
        .zip(&loglik)
        .filter(|(p, l)| **p > 0.0 && l.is_finite())
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegeneratePosterior);
    }
    let weights = prior
        .masses()
        .iter()
        .zip(&loglik)
        .map(|(p, l)| {
            if *p > 0.0 && l.is_finite() {
                p * (l - max).exp()
            } else {
                0.0
            }
        })
        .collect();
    DensityGrid2D::from_weights(res, weights)
}

/// Mass-weighted mean of `(w0, w1)`.
pub fn posterior_mean(grid: &DensityGrid2D) -> (f64, f64) {
    let res = grid.resolution();
    let (mut m0, mut m1) = (0.0, 0.0);
    for (c, p) in grid.masses().iter().enumerate() {
        let (w0, w1) = grid.cell_coords(c);
        m0 += p * w0;
        m1 += p * w1;
    }
    debug_assert_eq!(grid.masses().len(), res * res);
    (m0.clamp(0.0, 1.0), m1.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgmentItem {
    pub observation: CausalObservation,
    pub direction: CausalDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_prediction: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_judgment: Option<(f64, f64)>,
}

/// Every contingency table of the judgment sweep, generative first.
///
/// Both groups range over [`SAMPLE_SIZES`]; effect counts run from 0 to the
/// group size in steps of size/8, giving 729 tables per direction.
pub fn generate_judgment_items() -> Vec<JudgmentItem> {
    let levels = |n: u32| (0..EFFECT_LEVELS).map(move |i| i * n / (EFFECT_LEVELS - 1));
    let mut items = Vec::with_capacity(2 * 729);
    for direction in CausalDirection::ALL {
        for n_plus in SAMPLE_SIZES {
            for n_minus in SAMPLE_SIZES {
                for k_plus in levels(n_plus) {
                    for k_minus in levels(n_minus) {
                        items.push(JudgmentItem {
                            observation: CausalObservation {
                                n_c_plus: n_plus,
                                n_c_minus: n_minus,
                                k_plus,
                                k_minus,
                            },
                            direction,
                            model_prediction: None,
                            agent_judgment: None,
                        });
                    }
                }
            }
        }
    }
    items
}

/// Posterior-mean predictions for each item under `prior`, using each
/// item's own direction for the likelihood.
pub fn model_predictions(items: &[JudgmentItem], prior: &DensityGrid2D) -> Result<Vec<(f64, f64)>> {
    items
        .iter()
        .map(|it| posterior_grid(prior, &it.observation, it.direction).map(|g| posterior_mean(&g)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub pearson: f64,
    pub rmsd: f64,
}

fn flatten(pairs: &[(f64, f64)]) -> Vec<f64> {
    pairs.iter().flat_map(|&(a, b)| [a, b]).collect()
}

/// Pearson r and RMSD over the flattened `(w0, w1)` pairs.
pub fn fit_metrics(predictions: &[(f64, f64)], judgments: &[(f64, f64)]) -> Result<FitMetrics> {
    let (x, y) = (flatten(predictions), flatten(judgments));
    Ok(FitMetrics {
        pearson: pearson_r(&x, &y)?,
        rmsd: rmsd(&x, &y)?,
    })
}

/// One x-axis window of a prediction/judgment scatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_prediction: Option<f64>,
    pub mean_judgment: Option<f64>,
}

/// Splits [0, 1] into `bins` equal windows of model prediction and averages
/// the points in each. `1.0` falls in the last window.
pub fn window_bins(predictions: &[(f64, f64)], judgments: &[(f64, f64)], bins: usize) -> Result<Vec<WindowBin>> {
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let (x, y) = (flatten(predictions), flatten(judgments));
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions but {} judgments",
            predictions.len(),
            judgments.len()
        )));
    }
    let mut sums = vec![(0usize, 0.0, 0.0); bins];
    for (&a, &b) in x.iter().zip(&y) {
        let i = ((a.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        sums[i].0 += 1;
        sums[i].1 += a;
        sums[i].2 += b;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, (n, sx, sy))| WindowBin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            count: n,
            mean_prediction: (n > 0).then(|| sx / n as f64),
            mean_judgment: (n > 0).then(|| sy / n as f64),
        })
        .collect())
}

#[derive(Debug, Deserialize)]
struct JudgmentRow {
    direction: CausalDirection,
    n_c_plus: u32,
    n_c_minus: u32,
    k_plus: u32,
    k_minus: u32,
    judged_w0: f64,
    judged_w1: f64,
}

/// Reads a judgments table with header
/// `direction,n_c_plus,n_c_minus,k_plus,k_minus,judged_w0,judged_w1`.
/// Judged strengths are on [0, 1]. Errors carry the 1-based file line.
pub fn read_judgments(input: impl Read, origin: &Path) -> Result<Vec<JudgmentItem>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut items = Vec::new();
    for row in reader.deserialize::<JudgmentRow>() {
        let row = row.map_err(|e| Error::Load {
            path: origin.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = items.len() + 2;
        let bad = |message: String| Error::Load {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let observation = CausalObservation::new(row.n_c_plus, row.n_c_minus, row.k_plus, row.k_minus)
            .map_err(|e| bad(e.to_string()))?;
        for v in [row.judged_w0, row.judged_w1] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(format!("judged strength {v} is outside [0, 1]")));
            }
        }
        items.push(JudgmentItem {
            observation,
            direction: row.direction,
            model_prediction: None,
            agent_judgment: Some((row.judged_w0, row.judged_w1)),
        });
    }
    Ok(items)
}

pub fn load_judgments(path: impl AsRef<Path>) -> Result<Vec<JudgmentItem>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Load {
        path: PathBuf::from(path),
        line: 0,
        message: e.to_string(),
    })?;
    read_judgments(file, path)
}
