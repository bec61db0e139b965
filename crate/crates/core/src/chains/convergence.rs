use serde::{Deserialize, Serialize};

use super::ChainSet;
use crate::error::{Error, Result};
use crate::likelihoods::Hypothesis;
use crate::numerics::mann_whitney_u;

/// Below this many surviving chains the report carries a warning.
pub const LOW_POWER_CHAINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTest {
    pub iteration: u32,
    /// Two-sided p-value against the final iteration. For causal
    /// hypotheses this is twice the smaller per-coordinate p, capped at 1.
    pub p_value: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub final_iteration: u32,
    pub tests: Vec<IterationTest>,
    /// Smallest `t` such that neither the test at `t` nor any later one
    /// rejects.
    pub first_converged_iteration: Option<u32>,
    pub chains_used: usize,
    pub chains_failed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl ConvergenceReport {
    pub fn p_values(&self) -> Vec<f64> {
        self.tests.iter().map(|t| t.p_value).collect()
    }
}

fn coordinates(hs: &[Hypothesis]) -> Vec<Vec<f64>> {
    match hs.first() {
        Some(Hypothesis::Causal(_)) => {
            let (w0, w1) = hs
                .iter()
                .filter_map(Hypothesis::as_causal)
                .map(|c| (c.w0, c.w1))
                .unzip();
            vec![w0, w1]
        }
        _ => vec![hs.iter().filter_map(Hypothesis::as_scalar).collect()],
    }
}

/// Tests each iteration's cross-chain hypotheses against the final
/// iteration's with a Mann-Whitney U test.
///
/// Failed chains are left out and counted. The result does not depend on
/// chain order.
pub fn detect_convergence(chains: &ChainSet, alpha: f64) -> Result<ConvergenceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbability(alpha));
    }
    let surviving: Vec<_> = chains.surviving().collect();
    let final_iteration = chains.final_iteration().ok_or(Error::EmptyEnsemble)?;
    if final_iteration < 2 {
        return Err(Error::InvalidInput(format!(
            "convergence needs at least 2 iterations, chains end at {final_iteration}"
        )));
    }
    let at = |t: u32| -> Vec<Hypothesis> { surviving.iter().filter_map(|c| c.hypothesis_at(t)).collect() };
    let last = coordinates(&at(final_iteration));
    let mut tests = Vec::with_capacity(final_iteration as usize - 1);
    for t in 1..final_iteration {
        let current = coordinates(&at(t));
        let ps = current
            .iter()
            .zip(&last)
            .map(|(a, b)| mann_whitney_u(a, b).map(|m| m.p_value))
            .collect::<Result<Vec<_>>>()?;
        let min = ps.iter().copied().fold(1.0, f64::min);
        let p_value = (min * ps.len() as f64).min(1.0);
        tests.push(IterationTest {
            iteration: t,
            p_value,
            rejected: p_value < alpha,
        });
    }
    let first_converged_iteration = match tests.iter().rposition(|t| t.rejected) {
        None => Some(1),
        Some(i) if i + 1 < tests.len() => Some(tests[i + 1].iteration),
        Some(_) => None,
    };
    let warning = (surviving.len() < LOW_POWER_CHAINS)
        .then(|| format!("only {} surviving chains; tests have low power", surviving.len()));
    Ok(ConvergenceReport {
        alpha,
        final_iteration,
        tests,
        first_converged_iteration,
        chains_used: surviving.len(),
        chains_failed: chains.failed_count(),
        warning,
    })
}
