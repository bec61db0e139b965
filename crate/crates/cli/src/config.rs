use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use iterprior::agents::{LlmAgentSpec, Prior};
use iterprior::bayes::{prior_grid, PriorSpec, DEFAULT_ALPHA};
use iterprior::chains::EnsembleConfig;
use iterprior::likelihoods::Likelihood;
use iterprior::numerics::{Density1D, DensityGrid2D, GRID_RESOLUTION};
use iterprior::tasks::TaskSpec;

use crate::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const RECORDS: &str = "records.jsonl";
pub const CONVERGENCE: &str = "convergence.json";

/// Keys accepted in a `--config` file. Flags override them.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub task: Option<String>,
    pub task_file: Option<PathBuf>,
    pub agent: Option<AgentKind>,
    pub chains: Option<usize>,
    pub iters: Option<u32>,
    pub seed: Option<u64>,
    pub parallel: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default, deserialize_with = "sim_prior_text")]
    pub sim_prior: Option<SimPrior>,
    pub alpha: Option<f64>,
    pub llm: Option<LlmAgentSpec>,
}

impl RunFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Sim,
    Llm,
}

/// Prior of the simulated agent: `uniform`, `beta:A,B` or
/// `sparse-strong[:ALPHA]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SimPrior {
    Uniform,
    Beta { a: f64, b: f64 },
    SparseStrong { alpha: f64 },
}

impl FromStr for SimPrior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{t}` in `{s}`"))
        };
        match (name, arg) {
            ("uniform", None) => Ok(SimPrior::Uniform),
            ("beta", Some(a)) => {
                let (x, y) = a
                    .split_once(',')
                    .ok_or_else(|| format!("expected beta:A,B, got `{s}`"))?;
                Ok(SimPrior::Beta { a: num(x)?, b: num(y)? })
            }
            ("sparse-strong", None) => Ok(SimPrior::SparseStrong { alpha: DEFAULT_ALPHA }),
            ("sparse-strong", Some(a)) => Ok(SimPrior::SparseStrong { alpha: num(a)? }),
            _ => Err(format!(
                "unknown prior `{s}`; expected uniform, beta:A,B or sparse-strong[:ALPHA]"
            )),
        }
    }
}

fn sim_prior_text<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<SimPrior>, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

impl SimPrior {
    pub fn build(&self, task: &TaskSpec) -> CliResult<Prior> {
        match (*self, task.likelihood) {
            (SimPrior::Uniform, Likelihood::Causal { .. }) => {
                Ok(Prior::Causal(DensityGrid2D::uniform(GRID_RESOLUTION)))
            }
            (SimPrior::Uniform, _) => Ok(Prior::Scalar(Density1D::uniform(task.support()?))),
            (SimPrior::SparseStrong { alpha }, Likelihood::Causal { direction, .. }) => Ok(Prior::Causal(
                prior_grid(&PriorSpec::SparseStrong { alpha, direction }).map_err(CliError::usage)?,
            )),
            (SimPrior::Beta { a, b }, l) if !matches!(l, Likelihood::Causal { .. }) => Ok(Prior::Scalar(
                Density1D::beta(task.support()?, a, b).map_err(CliError::usage)?,
            )),
            (p, _) => Err(CliError::usage(format!(
                "prior {p:?} does not apply to task `{}`",
                task.name
            ))),
        }
    }
}

/// How the agent of a run was configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AgentConfig {
    Sim { prior: SimPrior },
    Llm(LlmAgentSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub records: String,
    pub convergence: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exchanges: Option<String>,
}

/// Everything needed to reproduce or read back a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub task: TaskSpec,
    pub agent: AgentConfig,
    pub ensemble: EnsembleConfig,
    pub convergence_alpha: f64,
    pub started_at: String,
    #[serde(default)]
    pub finished_at: Option<String>,
    pub artifacts: Artifacts,
    #[serde(default)]
    pub chains_failed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(CliError::failed)?;
        std::fs::write(dir.join(MANIFEST), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
