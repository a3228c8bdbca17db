//! Zero-shot and few-shot prompt rendering.
//!
//! A prompt has two parts. The *context* describes the task, lists every
//! category of the scheme with its definition and, in the few-shot setting,
//! one labelled example per class. The *instruction* asks for a single
//! category and embeds the feedback text verbatim.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, FeedbackRecord};
use crate::data;
use crate::scheme::Scheme;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("shot `{record_id}` has label `{label}`, which is not in scheme `{scheme}`")]
    ShotLabelUnknown {
        record_id: String,
        label: String,
        scheme: String,
    },
    #[error("shot `{0}` is the sample being classified")]
    ShotEqualsSample(String),
    #[error("sample `{0}` has empty text")]
    EmptySample(String),
    #[error("class `{class}` has {available} records, {required} needed for shots")]
    InsufficientClassSamples {
        class: String,
        available: usize,
        required: usize,
    },
    #[error("template error: {0}")]
    Template(String),
}

/// A labelled example embedded in the context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub record_id: String,
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub context: String,
    pub instruction: String,
    pub scheme_id: String,
    pub sample_record_id: String,
}

impl PromptSpec {
    /// Bytes that identify the prompt for caching.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.context.len() + self.instruction.len() + 1);
        out.extend_from_slice(self.context.as_bytes());
        out.push(0);
        out.extend_from_slice(self.instruction.as_bytes());
        out
    }
}

/// Prompt text templates with `{{name}}` placeholders.
///
/// `context` uses `{{category_block}}` and `{{shots_block}}`; `instruction`
/// uses `{{sample}}` and `{{category_names}}`; `shots` wraps the rendered
/// examples through `{{shot_entries}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub context: String,
    pub instruction: String,
    pub shots: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            context: data::CONTEXT_TEMPLATE.to_string(),
            instruction: data::INSTRUCTION_TEMPLATE.to_string(),
            shots: data::SHOTS_TEMPLATE.to_string(),
        }
    }
}

/// Single pass substitution; substituted values are never rescanned, so
/// feedback text containing `{{...}}` is embedded as-is.
fn render(template: &str, vars: &BTreeMap<&str, &str>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| PromptError::Template(format!("unclosed placeholder near `{}`", &rest[start..])))?;
        let name = after[..end].trim();
        let value = vars
            .get(name)
            .ok_or_else(|| PromptError::Template(format!("unknown placeholder `{name}`")))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

impl PromptTemplates {
    /// Reads `context.txt`, `instruction.txt` and `shots.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        Ok(PromptTemplates {
            context: fs::read_to_string(dir.join("context.txt"))?,
            instruction: fs::read_to_string(dir.join("instruction.txt"))?,
            shots: fs::read_to_string(dir.join("shots.txt"))?,
        })
    }

    pub fn build(&self, scheme: &Scheme, sample: &FeedbackRecord, shots: &[Shot]) -> Result<PromptSpec, PromptError> {
        if sample.text.trim().is_empty() {
            return Err(PromptError::EmptySample(sample.id.clone()));
        }
        let mut ordered: Vec<(usize, &Shot)> = Vec::with_capacity(shots.len());
        for shot in shots {
            if shot.record_id == sample.id {
                return Err(PromptError::ShotEqualsSample(shot.record_id.clone()));
            }
            let pos = scheme.position(&shot.label).ok_or_else(|| PromptError::ShotLabelUnknown {
                record_id: shot.record_id.clone(),
                label: shot.label.clone(),
                scheme: scheme.id().to_string(),
            })?;
            ordered.push((pos, shot));
        }
        // class order, stable within a class
        ordered.sort_by_key(|(pos, _)| *pos);

        let category_block = scheme
            .categories()
            .iter()
            .map(|c| format!("- {}: {}", c.name, c.definition.trim()))
            .collect::<Vec<_>>()
            .join("\n");
        let shots_block = if ordered.is_empty() {
            String::new()
        } else {
            let entries = ordered
                .iter()
                .map(|(pos, s)| format!("Feedback: \"\"\"{}\"\"\"\nCategory: {}", s.text, scheme.categories()[*pos].name))
                .collect::<Vec<_>>()
                .join("\n\n");
            render(&self.shots, &BTreeMap::from([("shot_entries", entries.as_str())]))?
        };
        let category_names = scheme.names().join(", ");

        let context = render(
            &self.context,
            &BTreeMap::from([("category_block", category_block.as_str()), ("shots_block", shots_block.as_str())]),
        )?;
        let instruction = render(
            &self.instruction,
            &BTreeMap::from([("sample", sample.text.as_str()), ("category_names", category_names.as_str())]),
        )?;
        Ok(PromptSpec {
            context: context.trim_end().to_string(),
            instruction: instruction.trim_end().to_string(),
            scheme_id: scheme.id().to_string(),
            sample_record_id: sample.id.clone(),
        })
    }
}

/// Renders a prompt with the shipped templates. An empty `shots` list gives
/// the zero-shot form.
pub fn build_prompt(scheme: &Scheme, sample: &FeedbackRecord, shots: &[Shot]) -> Result<PromptSpec, PromptError> {
    PromptTemplates::default().build(scheme, sample, shots)
}

/// Draws `per_class` shots per category of `scheme` and returns them with
/// the remaining records. Shots come out in class order.
pub fn select_shots(ds: &Dataset, scheme: &Scheme, per_class: usize, seed: u64) -> Result<(Vec<Shot>, Dataset), PromptError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shots = Vec::with_capacity(per_class * scheme.len());
    if per_class > 0 {
        for category in scheme.categories() {
            let members: Vec<&FeedbackRecord> = ds.iter().filter(|r| scheme.truth_label(r) == Some(category.name.as_str())).collect();
            if members.len() < per_class {
                return Err(PromptError::InsufficientClassSamples {
                    class: category.name.clone(),
                    available: members.len(),
                    required: per_class,
                });
            }
            for idx in rand::seq::index::sample(&mut rng, members.len(), per_class) {
                let r = members[idx];
                shots.push(Shot {
                    record_id: r.id.clone(),
                    text: r.text.clone(),
                    label: category.name.clone(),
                });
            }
        }
    }
    let taken: HashSet<&str> = shots.iter().map(|s| s.record_id.as_str()).collect();
    let residual = ds.filter(|r| !taken.contains(r.id.as_str()));
    Ok((shots, residual))
}
