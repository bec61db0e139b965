//! Elicit the implicit prior of an agent by iterated in-context learning.
//!
//! Each chain alternates between asking an agent for a hypothesis given the
//! current data and drawing fresh data from a task likelihood at that
//! hypothesis. For a Bayesian agent this is a Gibbs sampler whose hypothesis
//! marginal converges to the agent's prior, so the hypotheses at late
//! iterations across many chains estimate that prior.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: seeded streams, samplers, densities, KDE and tests.
//! - [`likelihoods`]: noisy-OR / noisy-AND-NOT, binomial and uniform models.
//! - [`tasks`]: the builtin task registry and prompt rendering.
//! - [`agents`]: the exact simulated Bayesian agent and the LLM agent.
//! - [`chains`]: chain and ensemble execution, convergence, persistence.
//! - [`bayes`]: grid Bayesian models of causal judgments.

pub mod agents;
pub mod bayes;
pub mod chains;
pub mod error;
pub mod likelihoods;
pub mod numerics;
pub mod tasks;

pub use error::{Error, Result};
