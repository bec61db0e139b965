//! Elicitation tasks: prompt templates bound to a likelihood, a seed rule
//! and hypothesis bounds.
//!
//! The builtin registry covers the everyday-quantity, proportion, causal
//! (one generative and one preventive gene/protein story plus four
//! alternative generative cover stories) and speculative-event tasks. It is
//! stored as TOML in `builtin.toml`, the same format [`load_task_file`]
//! reads for custom tasks.

mod prompt;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use prompt::{
    observation_values, placeholders_for, render_prompt, substitute, template_placeholders, Message, Prompt,
};

use crate::error::{Error, Result};
use crate::likelihoods::{sample_causal_observation, CausalHypothesis, Hypothesis, Likelihood, Observation};
use crate::numerics::{sample_binomial, RandomStream, Support1D, DEFAULT_BINS};

const BUILTIN_TASKS: &str = include_str!("builtin.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisKind {
    CausalPair,
    Proportion,
    Scalar,
    Year,
}

/// Shape of a single model answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseSchema {
    OneNumber,
    TwoNumbers,
}

impl ResponseSchema {
    pub fn arity(self) -> usize {
        match self {
            ResponseSchema::OneNumber => 1,
            ResponseSchema::TwoNumbers => 2,
        }
    }
}

/// How the data shown at iteration 0 are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SeedRule {
    /// Probe drawn from the scalar likelihood at `h = t_max`.
    MaxValue { t_max: f64 },
    /// Contingency data drawn at one `(w0, w1)` pair, assigned round-robin.
    CausalPairs { pairs: Vec<(f64, f64)> },
    /// Coin flips drawn at one head probability, assigned round-robin.
    HeadProbs { values: Vec<f64> },
}

impl SeedRule {
    pub fn len(&self) -> usize {
        match self {
            SeedRule::MaxValue { .. } => 1,
            SeedRule::CausalPairs { pairs } => pairs.len(),
            SeedRule::HeadProbs { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Seed slot for chain `chain_index`.
    pub fn seed_index(&self, chain_index: usize) -> usize {
        chain_index % self.len().max(1)
    }

    pub fn describe(&self) -> String {
        match self {
            SeedRule::MaxValue { t_max } => format!("max={t_max}"),
            SeedRule::CausalPairs { pairs } => {
                let items: Vec<_> = pairs.iter().map(|(a, b)| format!("({a},{b})")).collect();
                format!("(w0,w1)={{{}}}", items.join(","))
            }
            SeedRule::HeadProbs { values } => {
                let items: Vec<_> = values.iter().map(|v| v.to_string()).collect();
                format!("p(head)={{{}}}", items.join(","))
            }
        }
    }
}

/// A declarative elicitation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    #[serde(default)]
    pub title: String,
    pub hypothesis_kind: HypothesisKind,
    pub hypothesis_bounds: (f64, f64),
    /// Shape of the answer to each user question. A causal task either
    /// asks one question answered with two numbers or two questions
    /// answered with one number each (`w0` first).
    pub response_schema: ResponseSchema,
    pub system_prompt: String,
    pub user_templates: Vec<String>,
    pub likelihood: Likelihood,
    pub seed_rule: SeedRule,
}

#[derive(Debug, Deserialize)]
struct TaskFile {
    #[serde(default)]
    task: Vec<TaskSpec>,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("task `{}`: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::Config("task name must not be empty".into()));
        }
        let (lo, hi) = self.hypothesis_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("hypothesis bounds [{lo}, {hi}] must be finite and ordered"));
        }
        if self.user_templates.is_empty() {
            return bad("needs at least one user template".into());
        }
        let allowed = placeholders_for(&self.likelihood);
        for t in &self.user_templates {
            for name in template_placeholders(t)? {
                if !allowed.contains(&name.as_str()) {
                    return bad(format!(
                        "placeholder `{{{name}}}` is not provided by the {} likelihood",
                        self.likelihood.notation()
                    ));
                }
            }
        }
        let numbers = self.user_templates.len() * self.response_schema.arity();
        let wanted = match self.hypothesis_kind {
            HypothesisKind::CausalPair => 2,
            _ => 1,
        };
        if numbers != wanted {
            return bad(format!(
                "{} question(s) answered with {:?} give {numbers} number(s), need {wanted}",
                self.user_templates.len(),
                self.response_schema
            ));
        }
        let kind_ok = matches!(
            (self.hypothesis_kind, &self.likelihood),
            (HypothesisKind::CausalPair, Likelihood::Causal { .. })
                | (HypothesisKind::Proportion, Likelihood::Binomial { .. })
                | (
                    HypothesisKind::Scalar | HypothesisKind::Year,
                    Likelihood::Uniform { .. }
                )
        );
        if !kind_ok {
            return bad(format!(
                "{:?} hypotheses do not fit the {} likelihood",
                self.hypothesis_kind,
                self.likelihood.notation()
            ));
        }
        if matches!(
            self.hypothesis_kind,
            HypothesisKind::CausalPair | HypothesisKind::Proportion
        ) && (lo, hi) != (0.0, 1.0)
        {
            return bad("probability hypotheses must have bounds [0, 1]".into());
        }
        if let Likelihood::Uniform { lower, .. } = self.likelihood {
            if lower < lo || lower >= hi {
                return bad(format!("likelihood lower bound {lower} outside [{lo}, {hi})"));
            }
        }
        match (&self.seed_rule, &self.likelihood) {
            (SeedRule::MaxValue { t_max }, Likelihood::Uniform { .. }) => {
                if !(lo..=hi).contains(t_max) {
                    return bad(format!("t_max {t_max} outside bounds [{lo}, {hi}]"));
                }
            }
            (SeedRule::CausalPairs { pairs }, Likelihood::Causal { .. }) => {
                if pairs.is_empty() {
                    return bad("causal seed list is empty".into());
                }
                for &(w0, w1) in pairs {
                    CausalHypothesis::new(w0, w1)?;
                }
            }
            (SeedRule::HeadProbs { values }, Likelihood::Binomial { .. }) => {
                if values.is_empty() {
                    return bad("head-probability seed list is empty".into());
                }
                if let Some(p) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::InvalidProbability(*p));
                }
            }
            (rule, lik) => {
                return bad(format!(
                    "seed rule {} does not fit the {} likelihood",
                    rule.describe(),
                    lik.notation()
                ))
            }
        }
        Ok(())
    }

    /// Per-question answer shape.
    pub fn question_schema(&self) -> ResponseSchema {
        self.response_schema
    }

    /// Range an individual raw answer must fall in: counts out of 100 for
    /// probability tasks, the hypothesis bounds otherwise.
    pub fn response_bounds(&self) -> (f64, f64) {
        match self.hypothesis_kind {
            HypothesisKind::CausalPair | HypothesisKind::Proportion => (0.0, 100.0),
            HypothesisKind::Scalar | HypothesisKind::Year => self.hypothesis_bounds,
        }
    }

    /// Maps raw answers (in question order) to a hypothesis.
    ///
    /// Counts out of 100 become probabilities by division. For causal tasks
    /// the first count reads as `w0` and the second as `w1`: the second
    /// question asks about items in which the effect is not yet present
    /// (generative) or already present (preventive), which is the candidate
    /// cause's own strength.
    pub fn hypothesis_from_values(&self, values: &[f64]) -> Result<Hypothesis> {
        let (lo, hi) = self.response_bounds();
        if let Some(&v) = values.iter().find(|v| !(lo..=hi).contains(*v)) {
            return Err(Error::OutOfBounds { value: v, lo, hi });
        }
        match (self.hypothesis_kind, values) {
            (HypothesisKind::CausalPair, &[k_minus, k_plus]) => Ok(Hypothesis::Causal(CausalHypothesis::new(
                k_minus / 100.0,
                k_plus / 100.0,
            )?)),
            (HypothesisKind::Proportion, &[count]) => Ok(Hypothesis::Scalar(count / 100.0)),
            (HypothesisKind::Scalar | HypothesisKind::Year, &[v]) => Ok(Hypothesis::Scalar(v)),
            _ => Err(Error::InvalidInput(format!(
                "task `{}` cannot build a hypothesis from {} value(s)",
                self.name,
                values.len()
            ))),
        }
    }

    pub fn contains(&self, h: &Hypothesis) -> bool {
        let (lo, hi) = self.hypothesis_bounds;
        match (self.hypothesis_kind, h) {
            (HypothesisKind::CausalPair, Hypothesis::Causal(c)) => {
                (0.0..=1.0).contains(&c.w0) && (0.0..=1.0).contains(&c.w1)
            }
            (HypothesisKind::CausalPair, _) | (_, Hypothesis::Causal(_)) => false,
            (_, Hypothesis::Scalar(v)) => (lo..=hi).contains(v),
        }
    }

    /// Binning of a scalar hypothesis space (default 100 bins over the bounds).
    pub fn support(&self) -> Result<Support1D> {
        Support1D::new(self.hypothesis_bounds.0, self.hypothesis_bounds.1, DEFAULT_BINS)
    }

    pub fn is_causal(&self) -> bool {
        self.hypothesis_kind == HypothesisKind::CausalPair
    }

    /// Data for iteration 0 of chain `chain_index`, with its seed slot.
    pub fn initial_observation(&self, rng: &mut RandomStream, chain_index: usize) -> Result<(Observation, usize)> {
        let slot = self.seed_rule.seed_index(chain_index);
        let obs = match (&self.seed_rule, &self.likelihood) {
            (SeedRule::MaxValue { t_max }, lik @ Likelihood::Uniform { .. }) => {
                lik.sample(rng, &Hypothesis::Scalar(*t_max))?
            }
            (
                SeedRule::CausalPairs { pairs },
                Likelihood::Causal {
                    direction,
                    n_c_plus,
                    n_c_minus,
                },
            ) => {
                let (w0, w1) = pairs[slot];
                Observation::Causal(sample_causal_observation(
                    rng,
                    &CausalHypothesis::new(w0, w1)?,
                    *direction,
                    *n_c_plus,
                    *n_c_minus,
                )?)
            }
            (SeedRule::HeadProbs { values }, Likelihood::Binomial { trials }) => Observation::Coin {
                heads: sample_binomial(rng, *trials, values[slot])?,
                flips: *trials,
            },
            _ => {
                return Err(Error::Config(format!(
                    "task `{}`: seed rule does not fit its likelihood",
                    self.name
                )))
            }
        };
        Ok((obs, slot))
    }
}

/// Immutable, ordered collection of tasks.
#[derive(Debug, Clone)]
pub struct TaskRegistry {
    tasks: Vec<TaskSpec>,
}

impl TaskRegistry {
    /// Adds tasks, rejecting duplicate names.
    pub fn extend(&mut self, tasks: Vec<TaskSpec>) -> Result<()> {
        for t in tasks {
            t.validate()?;
            if self.get(&t.name).is_some() {
                return Err(Error::Config(format!("duplicate task name `{}`", t.name)));
            }
            self.tasks.push(t);
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<&TaskSpec> {
        self.get(name).ok_or_else(|| Error::UnknownTask(name.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaskSpec> {
        self.tasks.iter()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// Parses `[[task]]` tables from TOML text.
pub fn parse_task_file(text: &str) -> Result<Vec<TaskSpec>> {
    let file: TaskFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    for t in &file.task {
        t.validate()?;
    }
    Ok(file.task)
}

pub fn load_task_file(path: impl AsRef<Path>) -> Result<Vec<TaskSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_task_file(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// The sixteen builtin tasks.
pub fn builtin_tasks() -> TaskRegistry {
    let tasks = parse_task_file(BUILTIN_TASKS).expect("builtin task file is valid");
    TaskRegistry { tasks }
}
