use super::ChainSet;
use crate::agents::Prior;
use crate::error::{Error, Result};
use crate::likelihoods::Hypothesis;
use crate::numerics::{kde_1d, kde_2d, Bandwidth, GRID_RESOLUTION};
use crate::tasks::TaskSpec;

/// Hypotheses of all surviving chains at `iteration`, by chain id.
pub fn hypotheses_at(chains: &ChainSet, iteration: u32) -> Result<Vec<Hypothesis>> {
    let mut out = Vec::with_capacity(chains.len());
    for chain in chains.surviving() {
        let h = chain.hypothesis_at(iteration).ok_or_else(|| {
            Error::InvalidInput(format!(
                "chain {} has no hypothesis at iteration {iteration}",
                chain.chain_id
            ))
        })?;
        out.push(h);
    }
    if out.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(out)
}

pub fn scalar_hypotheses_at(chains: &ChainSet, iteration: u32) -> Result<Vec<f64>> {
    hypotheses_at(chains, iteration)?
        .iter()
        .map(|h| {
            h.as_scalar()
                .ok_or_else(|| Error::InvalidInput("expected scalar hypotheses".into()))
        })
        .collect()
}

/// Kernel-smoothed distribution of the hypotheses at `iteration` (the final
/// one when `None`), on the task's bins or the unit-square grid.
pub fn empirical_prior(
    chains: &ChainSet,
    task: &TaskSpec,
    iteration: Option<u32>,
    bandwidth: Bandwidth,
) -> Result<Prior> {
    let iteration = match iteration {
        Some(t) => t,
        None => chains.final_iteration().ok_or(Error::EmptyEnsemble)?,
    };
    let hs = hypotheses_at(chains, iteration)?;
    if task.is_causal() {
        let points = hs
            .iter()
            .map(|h| {
                h.as_causal()
                    .map(|c| (c.w0, c.w1))
                    .ok_or_else(|| Error::InvalidInput("expected causal hypotheses".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Prior::Causal(kde_2d(&points, bandwidth, GRID_RESOLUTION)?))
    } else {
        let values = scalar_hypotheses_at(chains, iteration)?;
        Ok(Prior::Scalar(kde_1d(&values, bandwidth, task.support()?)?))
    }
}
