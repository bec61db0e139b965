//! Iterated-learning chains and ensembles of them.
//!
//! A chain starts from a seed observation `d_0`. Each step asks the agent
//! for `h_t` given `d_{t-1}` and draws `d_t ~ p(d | h_t)` from the task
//! likelihood. Every chain owns a stream forked from the ensemble seed by
//! its id, so results do not depend on scheduling.

mod convergence;
mod persist;
mod prior;

pub use convergence::{detect_convergence, ConvergenceReport, IterationTest, LOW_POWER_CHAINS};
pub use persist::{load, persist, read_records, write_records};
pub use prior::{empirical_prior, hypotheses_at, scalar_hypotheses_at};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::agents::Agent;
use crate::error::{Error, Result};
use crate::likelihoods::{Hypothesis, Observation};
use crate::numerics::RandomStream;
use crate::tasks::TaskSpec;

/// One line of a chain's history.
///
/// Iteration 0 carries the seed observation and no hypothesis. A record with
/// `error` set marks the step at which the chain failed; it has neither
/// observation nor hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain_id: u64,
    pub iteration: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Hypothesis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    pub stream_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
    /// Index into the task's seed rule; iteration 0 only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub chain_id: u64,
    pub stream_seed: u64,
    pub seed_index: usize,
    pub records: Vec<ChainRecord>,
}

impl Chain {
    pub fn failed(&self) -> bool {
        self.records.last().map_or(true, |r| r.error.is_some())
    }

    /// The failure reason, if the chain was truncated.
    pub fn failure(&self) -> Option<&str> {
        self.records.last().and_then(|r| r.error.as_deref())
    }

    /// Highest iteration with a hypothesis.
    pub fn last_iteration(&self) -> u32 {
        self.records
            .iter()
            .filter(|r| r.hypothesis.is_some())
            .map(|r| r.iteration)
            .max()
            .unwrap_or(0)
    }

    pub fn hypothesis_at(&self, iteration: u32) -> Option<Hypothesis> {
        self.records
            .iter()
            .find(|r| r.iteration == iteration && r.error.is_none())
            .and_then(|r| r.hypothesis)
    }
}

/// An immutable, chain-id-ordered collection of chains.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainSet {
    chains: Vec<Chain>,
}

impl ChainSet {
    /// Sorts by chain id.
    pub fn new(mut chains: Vec<Chain>) -> Self {
        chains.sort_by_key(|c| c.chain_id);
        Self { chains }
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn surviving(&self) -> impl Iterator<Item = &Chain> {
        self.chains.iter().filter(|c| !c.failed())
    }

    pub fn failed_count(&self) -> usize {
        self.chains.iter().filter(|c| c.failed()).count()
    }

    /// Last iteration reached by every surviving chain.
    pub fn final_iteration(&self) -> Option<u32> {
        self.surviving().map(Chain::last_iteration).min()
    }

    pub fn records(&self) -> impl Iterator<Item = &ChainRecord> {
        self.chains.iter().flat_map(|c| c.records.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n_chains: usize,
    pub n_iterations: u32,
    pub base_seed: u64,
    /// Worker threads; `None` uses the available parallelism. The agent's
    /// own cap always applies.
    pub parallel: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_chains: 100,
            n_iterations: 12,
            base_seed: 0,
            parallel: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.n_iterations == 0 {
            return Err(Error::Config("n_chains and n_iterations must be at least 1".into()));
        }
        if self.parallel == Some(0) {
            return Err(Error::Config("parallel must be at least 1".into()));
        }
        Ok(())
    }
}

fn failure_record(
    chain_id: u64,
    iteration: u32,
    stream_seed: u64,
    seed_index: Option<usize>,
    e: &Error,
) -> ChainRecord {
    let (raw_text, attempts) = match e {
        Error::AgentFailure { attempts, last_raw, .. } => (last_raw.clone(), Some(*attempts)),
        _ => (None, None),
    };
    ChainRecord {
        chain_id,
        iteration,
        observation: None,
        hypothesis: None,
        raw_text,
        stream_seed,
        timestamp: None,
        attempts,
        seed_index,
        error: Some(e.to_string()),
    }
}

/// Runs one chain for `n_iter` steps.
///
/// `chain_id` selects the seed slot of the task. A failed step ends the
/// chain with an error record; earlier records are kept.
pub fn run_chain(chain_id: u64, mut rng: RandomStream, task: &TaskSpec, agent: &dyn Agent, n_iter: u32) -> Chain {
    let stream_seed = rng.seed();
    let seed_index = task.seed_rule.seed_index(chain_id as usize);
    let mut chain = Chain {
        chain_id,
        stream_seed,
        seed_index,
        records: Vec::with_capacity(n_iter as usize + 1),
    };
    let mut d = match task.initial_observation(&mut rng, chain_id as usize) {
        Ok((d, _)) => d,
        Err(e) => {
            chain
                .records
                .push(failure_record(chain_id, 0, stream_seed, Some(seed_index), &e));
            return chain;
        }
    };
    chain.records.push(ChainRecord {
        chain_id,
        iteration: 0,
        observation: Some(d),
        hypothesis: None,
        raw_text: None,
        stream_seed,
        timestamp: None,
        attempts: None,
        seed_index: Some(seed_index),
        error: None,
    });
    for t in 1..=n_iter {
        let step = agent.respond(task, &d, &mut rng).and_then(|resp| {
            if !task.contains(&resp.hypothesis) {
                return Err(Error::AgentFailure {
                    attempts: resp.attempts,
                    reason: format!("hypothesis {:?} is outside task `{}`", resp.hypothesis, task.name),
                    last_raw: resp.raw_text,
                });
            }
            let next = task.likelihood.sample(&mut rng, &resp.hypothesis)?;
            Ok((resp, next))
        });
        match step {
            Ok((resp, next)) => {
                chain.records.push(ChainRecord {
                    chain_id,
                    iteration: t,
                    observation: Some(next),
                    hypothesis: Some(resp.hypothesis),
                    raw_text: resp.raw_text,
                    stream_seed,
                    timestamp: resp.timestamp,
                    attempts: Some(resp.attempts),
                    seed_index: None,
                    error: None,
                });
                d = next;
            }
            Err(e) => {
                chain.records.push(failure_record(chain_id, t, stream_seed, None, &e));
                break;
            }
        }
    }
    chain
}

/// Called with (finished, total) after each chain completes.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// Runs `config.n_chains` chains concurrently.
///
/// Chain `i` uses the stream `RandomStream::new(base_seed).fork(i)`. Chain
/// failures are recorded; the call fails only when every chain fails.
pub fn run_ensemble(
    task: &TaskSpec,
    agent: &dyn Agent,
    config: &EnsembleConfig,
    progress: Option<Progress<'_>>,
) -> Result<ChainSet> {
    config.validate()?;
    let root = RandomStream::new(config.base_seed);
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = config
        .parallel
        .unwrap_or(available)
        .min(agent.max_concurrency().unwrap_or(usize::MAX))
        .min(config.n_chains)
        .max(1);
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(config.n_chains));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= config.n_chains {
                    break;
                }
                let chain = run_chain(i as u64, root.fork(i as u64), task, agent, config.n_iterations);
                results.lock().unwrap().push(chain);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(p) = progress {
                    p(finished, config.n_chains);
                }
            });
        }
    });
    let set = ChainSet::new(results.into_inner().unwrap());
    if set.surviving().next().is_none() {
        return Err(Error::EnsembleFailed {
            chains: set.len(),
            first_error: set.chains()[0].failure().unwrap_or("unknown").to_owned(),
        });
    }
    Ok(set)
}
