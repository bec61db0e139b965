//! Regenerates the synthetic fixtures used by the acceptance suite.
//!
//! ```text
//! cargo run -p iterprior --example synthetic_fixtures -- crates/cli/tests/fixtures/synthetic
//! ```
//!
//! Nothing here comes from a real model. The "timeline" records come from a
//! scripted agent that samples a Bayesian posterior under a made-up Beta
//! prior, rounds the year to a multiple of five and wraps it in prose. The
//! judgments are sparse-strong posterior means plus uniform noise.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use iterprior::agents::{Agent, AgentResponse, Prior, SimulatedAgent};
use iterprior::bayes::{
    fit_metrics, generate_judgment_items, model_predictions, prior_grid, JudgmentItem, PriorSpec, DEFAULT_ALPHA,
};
use iterprior::chains::{
    detect_convergence, empirical_prior, persist, run_ensemble, scalar_hypotheses_at, EnsembleConfig,
};
use iterprior::likelihoods::{CausalDirection, Hypothesis, Observation};
use iterprior::numerics::{median, Bandwidth, Density1D, RandomStream};
use iterprior::tasks::{builtin_tasks, TaskSpec};

const TIMELINES: [(&str, f64, f64); 3] = [
    ("superhuman-ai", 1.5, 6.0),
    ("zero-carbon", 2.5, 6.0),
    ("mars-colony", 3.0, 6.0),
];

/// Answers like a chatty forecaster who only names round years.
struct RoundingForecaster {
    inner: SimulatedAgent,
}

impl Agent for RoundingForecaster {
    fn respond(&self, task: &TaskSpec, d: &Observation, rng: &mut RandomStream) -> iterprior::Result<AgentResponse> {
        let r = self.inner.respond(task, d, rng)?;
        let year = r.hypothesis.as_scalar().expect("scalar task");
        let (lo, hi) = task.hypothesis_bounds;
        let rounded = ((year / 5.0).round() * 5.0).clamp(lo, hi);
        Ok(AgentResponse {
            hypothesis: Hypothesis::Scalar(rounded),
            raw_text: Some(format!("My best guess is around {rounded}.")),
            attempts: 1,
            timestamp: None,
        })
    }
}

fn config() -> EnsembleConfig {
    EnsembleConfig {
        n_chains: 100,
        n_iterations: 12,
        base_seed: 2024,
        parallel: None,
    }
}

fn judgments(items: &[JudgmentItem], path: &Path) -> std::io::Result<()> {
    let mut rng = RandomStream::new(99);
    let mut by_dir = Vec::new();
    for dir in CausalDirection::ALL {
        let subset: Vec<JudgmentItem> = items.iter().filter(|it| it.direction == dir).cloned().collect();
        let grid = prior_grid(&PriorSpec::SparseStrong {
            alpha: DEFAULT_ALPHA,
            direction: dir,
        })
        .unwrap();
        by_dir.extend(subset.iter().cloned().zip(model_predictions(&subset, &grid).unwrap()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "direction,n_c_plus,n_c_minus,k_plus,k_minus,judged_w0,judged_w1")?;
    let mut noisy = |x: f64| ((x + 0.3 * (rng.next_f64() - 0.5)).clamp(0.0, 1.0) * 100.0).round() / 100.0;
    for (it, (w0, w1)) in by_dir {
        let o = it.observation;
        let (j0, j1) = (noisy(w0), noisy(w1));
        writeln!(
            out,
            "{},{},{},{},{},{j0},{j1}",
            it.direction.as_str(),
            o.n_c_plus,
            o.n_c_minus,
            o.k_plus,
            o.k_minus
        )?;
    }
    out.flush()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/cli/tests/fixtures/synthetic"));
    std::fs::create_dir_all(&dir)?;
    let reg = builtin_tasks();
    let mut expected = json!({ "synthetic": true });

    for (name, a, b) in TIMELINES {
        let task = reg.lookup(name)?;
        let prior = Density1D::beta(task.support()?, a, b)?;
        let agent = RoundingForecaster {
            inner: SimulatedAgent::new(task, Prior::Scalar(prior))?,
        };
        let set = run_ensemble(task, &agent, &config(), None)?;
        persist(&set, dir.join(format!("{name}.jsonl")))?;
        let last = set.final_iteration().expect("chains survive");
        let report = detect_convergence(&set, 0.05)?;
        expected["timelines"][name] = json!({
            "median_final_year": median(&scalar_hypotheses_at(&set, last)?)?,
            "first_converged_iteration": report.first_converged_iteration,
        });
    }

    let causal = reg.lookup("causal-generative")?;
    let grid = prior_grid(&PriorSpec::SparseStrong {
        alpha: DEFAULT_ALPHA,
        direction: CausalDirection::Generative,
    })?;
    let agent = SimulatedAgent::new(causal, Prior::Causal(grid))?;
    let set = run_ensemble(causal, &agent, &config(), None)?;
    persist(&set, dir.join("causal-generative.jsonl"))?;

    let items = generate_judgment_items();
    let judgments_path = dir.join("judgments.csv");
    judgments(&items, &judgments_path)?;
    let scored = iterprior::bayes::load_judgments(&judgments_path)?;
    let judged: Vec<(f64, f64)> = scored.iter().filter_map(|it| it.agent_judgment).collect();
    let Prior::Causal(empirical) = empirical_prior(&set, causal, None, Bandwidth::Auto)? else {
        unreachable!("causal task")
    };
    let mut sparse = Vec::new();
    for dir in CausalDirection::ALL {
        let subset: Vec<JudgmentItem> = scored.iter().filter(|it| it.direction == dir).cloned().collect();
        let g = prior_grid(&PriorSpec::SparseStrong {
            alpha: DEFAULT_ALPHA,
            direction: dir,
        })?;
        sparse.extend(model_predictions(&subset, &g)?);
    }
    let uniform = model_predictions(&scored, &prior_grid(&PriorSpec::Uniform)?)?;
    let emp = model_predictions(&scored, &empirical)?;
    for (label, preds) in [("uniform", &uniform), ("sparse-strong", &sparse), ("empirical", &emp)] {
        let m = fit_metrics(preds, &judged)?;
        expected["fits"][label] = json!({ "pearson": m.pearson, "rmsd": m.rmsd });
    }
    expected["judgment_items"] = json!(scored.len());

    let text = serde_json::to_string_pretty(&expected)?;
    std::fs::write(dir.join("expected.json"), text + "\n")?;
    println!("wrote {}", dir.display());
    Ok(())
}
