use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TaskSpec;
use crate::error::{Error, Result};
use crate::likelihoods::{Likelihood, Observation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// A rendered prompt: one system message shared by one or more independent
/// user questions. Each question is asked in a fresh conversation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub questions: Vec<String>,
}

impl Prompt {
    /// `[system, user]` message lists, one per question.
    pub fn conversations(&self) -> Vec<Vec<Message>> {
        self.questions
            .iter()
            .map(|q| vec![Message::system(&self.system), Message::user(q)])
            .collect()
    }
}

/// Placeholder names a likelihood family's observations fill in.
pub fn placeholders_for(likelihood: &Likelihood) -> &'static [&'static str] {
    match likelihood {
        Likelihood::Causal { .. } => &["k_minus", "n_minus", "k_plus", "n_plus"],
        Likelihood::Binomial { .. } => &["heads", "tails", "flips"],
        Likelihood::Uniform { .. } => &["probe"],
    }
}

/// Placeholder values for an observation, formatted for a prompt.
///
/// Integer-valued probes print without decimals; continuous probes are
/// rounded to one decimal.
pub fn observation_values(likelihood: &Likelihood, d: &Observation) -> Result<BTreeMap<&'static str, String>> {
    let mut v = BTreeMap::new();
    match (likelihood, d) {
        (Likelihood::Causal { .. }, Observation::Causal(c)) => {
            v.insert("k_minus", c.k_minus.to_string());
            v.insert("n_minus", c.n_c_minus.to_string());
            v.insert("k_plus", c.k_plus.to_string());
            v.insert("n_plus", c.n_c_plus.to_string());
        }
        (Likelihood::Binomial { .. }, Observation::Coin { heads, flips }) if heads <= flips => {
            v.insert("heads", heads.to_string());
            v.insert("tails", (flips - heads).to_string());
            v.insert("flips", flips.to_string());
        }
        (Likelihood::Uniform { integer, .. }, Observation::Probe(x)) => {
            let text = if *integer {
                format!("{:.0}", x.round())
            } else {
                format!("{x:.1}")
            };
            v.insert("probe", text);
        }
        _ => {
            return Err(Error::Template(format!(
                "observation {d:?} cannot fill a {} prompt",
                likelihood.notation()
            )))
        }
    }
    Ok(v)
}

/// Names of the `{placeholder}`s in a template, in order of appearance.
pub fn template_placeholders(template: &str) -> Result<Vec<String>> {
    let mut names = Vec::new();
    substitute(template, |name| {
        names.push(name.to_owned());
        Ok(String::new())
    })?;
    Ok(names)
}

/// Replaces each `{name}` using `lookup`; `{{` and `}}` are literal braces.
pub fn substitute(template: &str, mut lookup: impl FnMut(&str) -> Result<String>) -> Result<String> {
    let mut out = String::with_capacity(template.len() + 16);
    let mut chars = template.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if matches!(chars.peek(), Some((_, '{'))) => {
                chars.next();
                out.push('{');
            }
            '}' if matches!(chars.peek(), Some((_, '}'))) => {
                chars.next();
                out.push('}');
            }
            '{' => {
                let rest = &template[i + 1..];
                let end = rest
                    .find('}')
                    .ok_or_else(|| Error::Template(format!("unclosed placeholder at byte {i}")))?;
                let name = &rest[..end];
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(Error::Template(format!("invalid placeholder `{{{name}}}`")));
                }
                out.push_str(&lookup(name)?);
                for _ in 0..=end {
                    chars.next();
                }
            }
            '}' => return Err(Error::Template(format!("unmatched `}}` at byte {i}"))),
            c => out.push(c),
        }
    }
    Ok(out)
}

/// Fills the task's templates with values from `d`.
pub fn render_prompt(spec: &TaskSpec, d: &Observation) -> Result<Prompt> {
    let values = observation_values(&spec.likelihood, d)?;
    let questions = spec
        .user_templates
        .iter()
        .map(|t| {
            substitute(t, |name| {
                values
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::Template(format!("task `{}` has no value for `{{{name}}}`", spec.name)))
            })
        })
        .collect::<Result<_>>()?;
    Ok(Prompt {
        system: spec.system_prompt.clone(),
        questions,
    })
}
