use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::{Agent, AgentResponse};
use crate::error::{Error, Result};
use crate::likelihoods::{causal_log_likelihood, CausalHypothesis, Hypothesis, Likelihood, Observation};
use crate::numerics::{Density1D, DensityGrid2D, RandomStream};
use crate::tasks::{HypothesisKind, TaskSpec};

/// A discretized prior over a task's hypothesis space.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Scalar(Density1D),
    Causal(DensityGrid2D),
}

/// Unnormalized posterior weights `prior[i] * exp(loglik[i] - max)`,
/// accumulated. The maximum runs over cells with positive prior mass.
pub fn posterior_cumulative(prior: &[f64], loglik: &[f64]) -> Result<Vec<f64>> {
    if prior.len() != loglik.len() {
        return Err(Error::InvalidInput(format!(
            "prior has {} cells but log-likelihood has {}",
            prior.len(),
            loglik.len()
        )));
    }
    let max = prior
        .iter()
        .zip(loglik)
        .filter(|(p, l)| **p > 0.0 && l.is_finite())
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegeneratePosterior);
    }
    let mut acc = 0.0;
    let cum = prior
        .iter()
        .zip(loglik)
        .map(|(p, l)| {
            if *p > 0.0 && l.is_finite() {
                acc += p * (l - max).exp();
            }
            acc
        })
        .collect::<Vec<_>>();
    if acc.is_nan() || acc <= 0.0 {
        return Err(Error::DegeneratePosterior);
    }
    Ok(cum)
}

fn draw_cumulative(rng: &mut RandomStream, cum: &[f64]) -> usize {
    let total = *cum.last().expect("non-empty cumulative weights");
    let u = rng.next_f64() * total;
    cum.partition_point(|c| *c <= u).min(cum.len() - 1)
}

/// Draws a cell index with probability proportional to
/// `prior[i] * exp(loglik[i])`.
pub fn posterior_sample_grid(rng: &mut RandomStream, prior: &[f64], loglik: &[f64]) -> Result<usize> {
    let cum = posterior_cumulative(prior, loglik)?;
    Ok(draw_cumulative(rng, &cum))
}

/// An exact Bayesian learner: samples `h ~ p(h | d)` on a discretized
/// hypothesis space.
///
/// Scalar hypotheses are emitted at bin centers and causal hypotheses at
/// grid points, so posterior sampling is exact on the discretization.
#[derive(Debug)]
pub struct SimulatedAgent {
    prior: Prior,
    likelihood: Likelihood,
    // Causal posteriors depend only on the four counts; cache them.
    causal_cache: Mutex<HashMap<crate::likelihoods::CausalObservation, Arc<Vec<f64>>>>,
}

impl SimulatedAgent {
    /// Binds `prior` to the task's likelihood, checking it covers exactly
    /// the task's hypothesis space.
    pub fn new(task: &TaskSpec, prior: Prior) -> Result<Self> {
        match (&prior, task.hypothesis_kind) {
            (Prior::Causal(_), HypothesisKind::CausalPair) => {}
            (Prior::Scalar(d), kind) if kind != HypothesisKind::CausalPair => {
                let (lo, hi) = task.hypothesis_bounds;
                if (d.lo() - lo).abs() > 1e-9 || (d.hi() - hi).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "prior support [{}, {}] differs from task `{}` bounds [{lo}, {hi}]",
                        d.lo(),
                        d.hi(),
                        task.name
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "prior dimension does not match task `{}`",
                    task.name
                )))
            }
        }
        Ok(Self {
            prior,
            likelihood: task.likelihood,
            causal_cache: Mutex::new(HashMap::new()),
        })
    }

    /// Uniform prior over the task's default discretization.
    pub fn uniform(task: &TaskSpec) -> Result<Self> {
        let prior = if task.is_causal() {
            Prior::Causal(DensityGrid2D::uniform(crate::numerics::GRID_RESOLUTION))
        } else {
            Prior::Scalar(Density1D::uniform(task.support()?))
        };
        Self::new(task, prior)
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    /// Seed probes are drawn at the task maximum, which can exceed every bin
    /// center. Such a probe is read as the largest one the top center can
    /// produce.
    fn clamp_probe(&self, density: &Density1D, d: Observation) -> Observation {
        match (d, self.likelihood) {
            (Observation::Probe(x), Likelihood::Uniform { integer, .. }) => {
                let top = density.center(density.bins() - 1);
                let top = if integer { top.floor() } else { top };
                Observation::Probe(x.min(top))
            }
            _ => d,
        }
    }

    /// Normalized posterior masses over the discretization for data `d`.
    pub fn posterior(&self, d: &Observation) -> Result<Vec<f64>> {
        let cum = self.cumulative(d)?;
        let total = *cum.last().unwrap();
        let mut prev = 0.0;
        Ok(cum
            .iter()
            .map(|c| {
                let m = (c - prev) / total;
                prev = *c;
                m
            })
            .collect())
    }

    fn cumulative(&self, d: &Observation) -> Result<Arc<Vec<f64>>> {
        match (&self.prior, d) {
            (Prior::Causal(grid), Observation::Causal(obs)) => {
                if let Some(hit) = self.causal_cache.lock().unwrap().get(obs) {
                    return Ok(Arc::clone(hit));
                }
                let direction = match self.likelihood {
                    Likelihood::Causal { direction, .. } => direction,
                    _ => unreachable!("causal prior is bound to a causal likelihood"),
                };
                let loglik: Vec<f64> = (0..grid.masses().len())
                    .map(|c| {
                        let (w0, w1) = grid.cell_coords(c);
                        causal_log_likelihood(obs, &CausalHypothesis { w0, w1 }, direction)
                    })
                    .collect();
                let cum = Arc::new(posterior_cumulative(grid.masses(), &loglik)?);
                self.causal_cache.lock().unwrap().insert(*obs, Arc::clone(&cum));
                Ok(cum)
            }
            (Prior::Scalar(density), d) => {
                let d = &self.clamp_probe(density, *d);
                let loglik = (0..density.bins())
                    .map(|i| {
                        self.likelihood
                            .log_likelihood(d, &Hypothesis::Scalar(density.center(i)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Arc::new(posterior_cumulative(density.masses(), &loglik)?))
            }
            (Prior::Causal(_), other) => Err(Error::InvalidInput(format!(
                "causal agent cannot condition on {other:?}"
            ))),
        }
    }

    fn hypothesis_at(&self, index: usize) -> Hypothesis {
        match &self.prior {
            Prior::Scalar(d) => Hypothesis::Scalar(d.center(index)),
            Prior::Causal(g) => {
                let (w0, w1) = g.cell_coords(index);
                Hypothesis::Causal(CausalHypothesis { w0, w1 })
            }
        }
    }
}

impl Agent for SimulatedAgent {
    fn respond(&self, _task: &TaskSpec, d: &Observation, rng: &mut RandomStream) -> Result<AgentResponse> {
        let cum = self.cumulative(d)?;
        let index = draw_cumulative(rng, &cum);
        Ok(AgentResponse {
            hypothesis: self.hypothesis_at(index),
            raw_text: None,
            attempts: 1,
            timestamp: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihoods::CausalObservation;
    use crate::numerics::{Support1D, GRID_RESOLUTION};
    use crate::tasks::builtin_tasks;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    /// Pearson goodness-of-fit p-value. Cells expecting fewer than five
    /// draws are pooled.
    fn chi_square_p(counts: &[usize], probs: &[f64]) -> f64 {
        let draws = counts.iter().sum::<usize>() as f64;
        let (mut chi2, mut cells) = (0.0, 0usize);
        let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
        for (&c, &p) in counts.iter().zip(probs) {
            let e = draws * p;
            if e < 5.0 {
                pooled_obs += c as f64;
                pooled_exp += e;
            } else {
                chi2 += (c as f64 - e).powi(2) / e;
                cells += 1;
            }
        }
        if pooled_exp > 0.0 {
            chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
            cells += 1;
        }
        1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2)
    }

    #[test]
    fn degenerate_inputs() {
        let mut rng = RandomStream::new(0);
        assert!(matches!(
            posterior_sample_grid(&mut rng, &[0.5, 0.5], &[f64::NEG_INFINITY; 2]),
            Err(Error::DegeneratePosterior)
        ));
        assert!(matches!(
            posterior_sample_grid(&mut rng, &[0.0, 1.0], &[0.0, f64::NEG_INFINITY]),
            Err(Error::DegeneratePosterior)
        ));
        assert!(posterior_sample_grid(&mut rng, &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn single_finite_cell_always_wins() {
        let mut rng = RandomStream::new(1);
        let mut ll = vec![f64::NEG_INFINITY; 101];
        ll[37] = -1234.5;
        let prior = vec![1.0 / 101.0; 101];
        for _ in 0..1000 {
            assert_eq!(posterior_sample_grid(&mut rng, &prior, &ll).unwrap(), 37);
        }
    }

    #[test]
    fn flat_posterior_is_uniform() {
        let mut rng = RandomStream::new(2);
        let prior = vec![1.0 / 101.0; 101];
        let ll = vec![-3.0; 101];
        let draws = 100_000;
        let mut counts = vec![0usize; 101];
        for _ in 0..draws {
            counts[posterior_sample_grid(&mut rng, &prior, &ll).unwrap()] += 1;
        }
        let p = chi_square_p(&counts, &[1.0 / 101.0; 101]);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn five_cell_frequencies_match_normalized_products() {
        let prior = [0.1, 0.2, 0.3, 0.15, 0.25];
        let ll = [-1.0, -2.5, -0.3, f64::NEG_INFINITY, -1.7];
        // Direct normalization of prior * exp(loglik).
        let w: Vec<f64> = prior.iter().zip(&ll).map(|(p, l)| p * f64::exp(*l)).collect();
        let total: f64 = w.iter().sum();
        let mut rng = RandomStream::new(3);
        let draws = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            counts[posterior_sample_grid(&mut rng, &prior, &ll).unwrap()] += 1;
        }
        for i in 0..5 {
            let p = w[i] / total;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[i] as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "cell {i}");
        }
        assert_eq!(counts[3], 0);
    }

    #[test]
    fn prior_support_must_match_task() {
        let reg = builtin_tasks();
        let life = reg.lookup("lifespan-male").unwrap();
        let wrong = Density1D::uniform(Support1D::new(0.0, 150.0, 100).unwrap());
        assert!(SimulatedAgent::new(life, Prior::Scalar(wrong)).is_err());
        let grid = DensityGrid2D::uniform(GRID_RESOLUTION);
        assert!(SimulatedAgent::new(life, Prior::Causal(grid.clone())).is_err());
        assert!(SimulatedAgent::new(reg.lookup("causal-generative").unwrap(), Prior::Causal(grid)).is_ok());
    }

    #[test]
    fn laplace_rule_for_ten_heads() {
        let reg = builtin_tasks();
        let coin = reg.lookup("coin-flips").unwrap();
        let agent = SimulatedAgent::uniform(coin).unwrap();
        let mut rng = RandomStream::new(4);
        let n = 100_000;
        let d = Observation::Coin { heads: 10, flips: 10 };
        let mean: f64 = (0..n)
            .map(|_| {
                agent
                    .respond(coin, &d, &mut rng)
                    .unwrap()
                    .hypothesis
                    .as_scalar()
                    .unwrap()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 11.0 / 12.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn zero_prior_mass_above_100_bounds_lifespan() {
        let reg = builtin_tasks();
        let life = reg.lookup("lifespan-male").unwrap();
        let support = life.support().unwrap();
        let weights = support.centers().map(|c| if c <= 100.0 { 1.0 } else { 0.0 }).collect();
        let prior = Density1D::from_weights(support, weights).unwrap();
        let agent = SimulatedAgent::new(life, Prior::Scalar(prior)).unwrap();
        let mut rng = RandomStream::new(5);
        for _ in 0..5000 {
            let h = agent
                .respond(life, &Observation::Probe(40.0), &mut rng)
                .unwrap()
                .hypothesis
                .as_scalar()
                .unwrap();
            assert!((40.0..=100.0).contains(&h), "{h}");
        }
    }

    #[test]
    fn seed_probes_above_the_top_center_pick_the_top_bin() {
        let reg = builtin_tasks();
        let mut rng = RandomStream::new(8);
        for (name, probe) in [("lifespan-male", 150.0), ("movie-grosses", 2999.0)] {
            let task = reg.lookup(name).unwrap();
            let agent = SimulatedAgent::uniform(task).unwrap();
            let top = task.support().unwrap().center(99);
            let h = agent
                .respond(task, &Observation::Probe(probe), &mut rng)
                .unwrap()
                .hypothesis;
            assert_eq!(h, Hypothesis::Scalar(top));
        }
    }

    #[test]
    fn causal_sampling_matches_grid_enumeration() {
        let reg = builtin_tasks();
        let gen = reg.lookup("causal-generative").unwrap();
        let agent = SimulatedAgent::uniform(gen).unwrap();
        let obs = CausalObservation::new(16, 16, 8, 8).unwrap();
        let d = Observation::Causal(obs);

        // Independent oracle: enumerate the grid in log space.
        let n = GRID_RESOLUTION;
        let lp: Vec<f64> = (0..n * n)
            .map(|c| {
                let (w0, w1) = ((c / n) as f64 / 100.0, (c % n) as f64 / 100.0);
                let pp = 1.0 - (1.0 - w0) * (1.0 - w1);
                let pm = w0;
                let term = |k: f64, m: f64, p: f64| {
                    let hit = if k > 0.0 { k * p.ln() } else { 0.0 };
                    let miss = if m - k > 0.0 { (m - k) * (1.0 - p).ln() } else { 0.0 };
                    hit + miss
                };
                term(8.0, 16.0, pp) + term(8.0, 16.0, pm)
            })
            .collect();
        let max = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lp.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();

        // Compare on a coarse 10x10 binning of the grid.
        let coarse = |c: usize| ((c / n).min(99) / 10) * 10 + (c % n).min(99) / 10;
        let mut expected = [0.0; 100];
        for (c, wi) in w.iter().enumerate() {
            expected[coarse(c)] += wi / total;
        }
        let mut rng = RandomStream::new(6);
        let draws = 100_000;
        let mut counts = [0usize; 100];
        for _ in 0..draws {
            let h = agent
                .respond(gen, &d, &mut rng)
                .unwrap()
                .hypothesis
                .as_causal()
                .unwrap();
            let c = gen_index(h.w0) * n + gen_index(h.w1);
            counts[coarse(c)] += 1;
        }
        let p = chi_square_p(&counts, &expected);
        assert!(p > 0.001, "p = {p}");

        fn gen_index(w: f64) -> usize {
            (w * 100.0).round() as usize
        }
    }
}
