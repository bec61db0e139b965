//! Agents map an observation to a sampled hypothesis.

mod llm;
mod parse;
mod simulated;

pub use llm::{Completion, LlmAgent, LlmAgentSpec, LlmClient, DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT};
pub use parse::parse_numeric_response;
pub use simulated::{posterior_cumulative, posterior_sample_grid, Prior, SimulatedAgent};

use crate::error::Result;
use crate::likelihoods::{Hypothesis, Observation};
use crate::numerics::RandomStream;
use crate::tasks::TaskSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResponse {
    pub hypothesis: Hypothesis,
    pub raw_text: Option<String>,
    pub attempts: u32,
    /// Wall-clock time of the answer; `None` for simulated agents so their
    /// records stay reproducible.
    pub timestamp: Option<String>,
}

pub trait Agent: Send + Sync {
    /// Returns a hypothesis for data `d`. Stochastic agents draw from `rng`.
    fn respond(&self, task: &TaskSpec, d: &Observation, rng: &mut RandomStream) -> Result<AgentResponse>;

    /// Upper bound on concurrent calls, if the agent has one.
    fn max_concurrency(&self) -> Option<usize> {
        None
    }
}
