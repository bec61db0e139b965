//! Likelihood families `p(d | h)` used to generate each chain's next data
//! and to weight hypotheses in grid posteriors.
//!
//! - Causal contingency data under a noisy-OR (generative) or noisy-AND-NOT
//!   (preventive) parameterization of a background cause `w0` and a
//!   candidate cause `w1`.
//! - Coin flips, `k ~ Bin(n, h)`.
//! - Uniform probes `x ~ U[lower, h]`, integer or continuous.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::numerics::{sample_binomial, sample_uniform_int, sample_uniform_real, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalDirection {
    Generative,
    Preventive,
}

impl CausalDirection {
    pub const ALL: [CausalDirection; 2] = [CausalDirection::Generative, CausalDirection::Preventive];

    pub fn as_str(self) -> &'static str {
        match self {
            CausalDirection::Generative => "generative",
            CausalDirection::Preventive => "preventive",
        }
    }
}

impl fmt::Display for CausalDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CausalDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "generative" => Ok(CausalDirection::Generative),
            "preventive" => Ok(CausalDirection::Preventive),
            other => Err(Error::InvalidInput(format!("unknown causal direction `{other}`"))),
        }
    }
}

/// Strengths of the background cause (`w0`) and the candidate cause (`w1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalHypothesis {
    pub w0: f64,
    pub w1: f64,
}

impl CausalHypothesis {
    pub fn new(w0: f64, w1: f64) -> Result<Self> {
        for w in [w0, w1] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidProbability(w));
            }
        }
        Ok(Self { w0, w1 })
    }
}

/// Effect counts among items exposed (`+`) and not exposed (`-`) to the
/// candidate cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CausalObservation {
    pub n_c_plus: u32,
    pub n_c_minus: u32,
    pub k_plus: u32,
    pub k_minus: u32,
}

impl CausalObservation {
    pub fn new(n_c_plus: u32, n_c_minus: u32, k_plus: u32, k_minus: u32) -> Result<Self> {
        if k_plus > n_c_plus || k_minus > n_c_minus {
            return Err(Error::InvalidInput(format!(
                "effect counts ({k_plus}, {k_minus}) exceed group sizes ({n_c_plus}, {n_c_minus})"
            )));
        }
        Ok(Self {
            n_c_plus,
            n_c_minus,
            k_plus,
            k_minus,
        })
    }
}

/// A point in a task's hypothesis space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Causal(CausalHypothesis),
    /// A proportion, quantity or year.
    Scalar(f64),
}

impl Hypothesis {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Hypothesis::Scalar(v) => Some(*v),
            Hypothesis::Causal(_) => None,
        }
    }

    pub fn as_causal(&self) -> Option<CausalHypothesis> {
        match self {
            Hypothesis::Causal(c) => Some(*c),
            Hypothesis::Scalar(_) => None,
        }
    }
}

/// Data handed to an agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observation {
    Causal(CausalObservation),
    Coin {
        heads: u32,
        flips: u32,
    },
    /// `t_present`, a first-stage year, or similar scalar probe.
    Probe(f64),
}

/// A likelihood family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Likelihood {
    Causal {
        direction: CausalDirection,
        n_c_plus: u32,
        n_c_minus: u32,
    },
    Binomial {
        trials: u32,
    },
    Uniform {
        lower: f64,
        /// Probes are whole numbers (ages, line numbers, years).
        integer: bool,
    },
}

impl Likelihood {
    /// Draws `d ~ p(d | h)`.
    pub fn sample(&self, rng: &mut RandomStream, h: &Hypothesis) -> Result<Observation> {
        match (self, h) {
            (
                Likelihood::Causal {
                    direction,
                    n_c_plus,
                    n_c_minus,
                },
                Hypothesis::Causal(c),
            ) => sample_causal_observation(rng, c, *direction, *n_c_plus, *n_c_minus).map(Observation::Causal),
            (_, Hypothesis::Scalar(v)) => sample_scalar_observation(rng, *v, self),
            _ => Err(self.mismatch("hypothesis")),
        }
    }

    /// `ln p(d | h)`; `-inf` when the data are impossible under `h`.
    pub fn log_likelihood(&self, d: &Observation, h: &Hypothesis) -> Result<f64> {
        match (self, d, h) {
            (Likelihood::Causal { direction, .. }, Observation::Causal(obs), Hypothesis::Causal(c)) => {
                Ok(causal_log_likelihood(obs, c, *direction))
            }
            (Likelihood::Binomial { trials }, Observation::Coin { heads, flips }, Hypothesis::Scalar(p)) => {
                if flips != trials || heads > flips {
                    return Err(Error::InvalidInput(format!(
                        "coin observation {heads}/{flips} does not match Bin({trials}, h)"
                    )));
                }
                Ok(binomial_log_pmf(*heads, *flips, *p))
            }
            (Likelihood::Uniform { lower, integer }, Observation::Probe(x), Hypothesis::Scalar(h)) => {
                Ok(uniform_log_density(*x, *h, *lower, *integer))
            }
            _ => Err(self.mismatch("observation or hypothesis")),
        }
    }

    /// Short notation such as `U[1, h]`, `Bin(10, h)` or `noisy-OR`.
    pub fn notation(&self) -> String {
        match self {
            Likelihood::Causal {
                direction: CausalDirection::Generative,
                ..
            } => "noisy-OR".into(),
            Likelihood::Causal {
                direction: CausalDirection::Preventive,
                ..
            } => "noisy-AND-NOT".into(),
            Likelihood::Binomial { trials } => format!("Bin({trials}, h)"),
            Likelihood::Uniform { lower, .. } => format!("U[{lower}, h]"),
        }
    }

    fn mismatch(&self, what: &str) -> Error {
        Error::InvalidInput(format!("{what} kind does not match the {} likelihood", self.notation()))
    }
}

/// `p(e+ | C)` under noisy-OR (generative) or noisy-AND-NOT (preventive).
pub fn effect_probability(h: &CausalHypothesis, dir: CausalDirection, c_present: bool) -> f64 {
    match (dir, c_present) {
        (_, false) => h.w0,
        (CausalDirection::Generative, true) => 1.0 - (1.0 - h.w0) * (1.0 - h.w1),
        (CausalDirection::Preventive, true) => h.w0 * (1.0 - h.w1),
    }
}

/// `k ln p`, taking `0 ln 0 = 0`.
fn xlogp(k: u32, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

pub fn binomial_log_pmf(k: u32, n: u32, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_binomial(n as u64, k as u64) + xlogp(k, p) + xlogp(n - k, 1.0 - p)
}

/// Log of `Bin(k+ | n+, p(e+|C+)) * Bin(k- | n-, p(e+|C-))`.
pub fn causal_log_likelihood(d: &CausalObservation, h: &CausalHypothesis, dir: CausalDirection) -> f64 {
    binomial_log_pmf(d.k_plus, d.n_c_plus, effect_probability(h, dir, true))
        + binomial_log_pmf(d.k_minus, d.n_c_minus, effect_probability(h, dir, false))
}

pub fn sample_causal_observation(
    rng: &mut RandomStream,
    h: &CausalHypothesis,
    dir: CausalDirection,
    n_c_plus: u32,
    n_c_minus: u32,
) -> Result<CausalObservation> {
    let k_plus = sample_binomial(rng, n_c_plus, effect_probability(h, dir, true))?;
    let k_minus = sample_binomial(rng, n_c_minus, effect_probability(h, dir, false))?;
    CausalObservation::new(n_c_plus, n_c_minus, k_plus, k_minus)
}

/// Draws a coin count or uniform probe for scalar hypothesis `h`.
///
/// Uniform supports are closed, so `h == lower` yields the probe `lower`.
/// Integer families draw from `lower..=floor(h)`.
pub fn sample_scalar_observation(rng: &mut RandomStream, h: f64, family: &Likelihood) -> Result<Observation> {
    match *family {
        Likelihood::Binomial { trials } => Ok(Observation::Coin {
            heads: sample_binomial(rng, trials, h)?,
            flips: trials,
        }),
        Likelihood::Uniform { lower, integer } => {
            if !h.is_finite() || h < lower {
                return Err(Error::DegenerateHypothesis { value: h, lower });
            }
            let probe = if integer {
                sample_uniform_int(rng, lower.ceil() as i64, h.floor() as i64)
                    .map_err(|_| Error::DegenerateHypothesis { value: h, lower })? as f64
            } else {
                sample_uniform_real(rng, lower, h)?
            };
            Ok(Observation::Probe(probe))
        }
        Likelihood::Causal { .. } => Err(family.mismatch("scalar hypothesis")),
    }
}

/// `ln p(x | h)` for `x ~ U[lower, h]`.
pub fn uniform_log_density(x: f64, h: f64, lower: f64, integer: bool) -> f64 {
    if integer {
        let (lo, top) = (lower.ceil(), h.floor());
        if top < lo || x < lo || x > top || x.fract() != 0.0 {
            return f64::NEG_INFINITY;
        }
        -(top - lo + 1.0).ln()
    } else {
        if h < lower || x < lower || x > h {
            return f64::NEG_INFINITY;
        }
        if h == lower {
            // Point-mass support; treat as unit density so the posterior is
            // still defined.
            return 0.0;
        }
        -(h - lower).ln()
    }
}
