//! Compiles and runs every Rust snippet in the guide as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/iterated-learning.md")]
pub mod iterated_learning {}

#[doc = include_str!("../../../book/src/likelihoods.md")]
pub mod likelihoods {}

#[doc = include_str!("../../../book/src/causal-models.md")]
pub mod causal_models {}

#[doc = include_str!("../../../book/src/tasks.md")]
pub mod tasks {}

#[doc = include_str!("../../../book/src/agents.md")]
pub mod agents {}

#[doc = include_str!("../../../book/src/convergence-and-priors.md")]
pub mod convergence_and_priors {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
