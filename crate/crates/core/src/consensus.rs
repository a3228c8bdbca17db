//! High-confidence labels from unanimous agreement of every configured model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CoarseLabel, Dataset, FeedbackRecord, Provenance};
use crate::extraction::Prediction;
use crate::jsonl::{self, JsonlError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("model `{model_id}` has more than one prediction for record `{record_id}`")]
    DuplicateModelPrediction { record_id: String, model_id: String },
    #[error("predictions for more than one record passed as one group (`{0}` and `{1}`)")]
    MixedRecords(String, String),
    #[error("record `{record_id}`: label `{label}` is not a coarse category")]
    NonCoarseLabel { record_id: String, label: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub record_id: String,
    pub label: Option<CoarseLabel>,
    /// Required models whose `Ok` prediction carries the most common label.
    /// Equals the full required set exactly when `label` is present.
    pub agreeing_models: Vec<String>,
}

/// Label for one record when every model in `required_models` produced an
/// `Ok` prediction and all those labels coincide. Predictions from models
/// outside the required set are ignored.
pub fn unanimous_label(preds: &[&Prediction], required_models: &BTreeSet<String>) -> Result<ConsensusResult, ConsensusError> {
    let record_id = preds.first().map(|p| p.record_id.clone()).unwrap_or_default();
    let mut by_model: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in preds {
        if p.record_id != record_id {
            return Err(ConsensusError::MixedRecords(record_id, p.record_id.clone()));
        }
        if by_model.insert(&p.model_id, p).is_some() {
            return Err(ConsensusError::DuplicateModelPrediction {
                record_id,
                model_id: p.model_id.clone(),
            });
        }
    }

    // Ok labels of required models, in model-id order
    let mut votes: Vec<(&str, CoarseLabel)> = Vec::new();
    for model in required_models {
        let Some(p) = by_model.get(model.as_str()) else { continue };
        if !p.is_ok() {
            continue;
        }
        let name = p.label.as_deref().unwrap_or_default();
        let label = CoarseLabel::from_name(name).ok_or_else(|| ConsensusError::NonCoarseLabel {
            record_id: record_id.clone(),
            label: name.to_string(),
        })?;
        votes.push((model.as_str(), label));
    }

    let mut tally: BTreeMap<CoarseLabel, usize> = BTreeMap::new();
    for (_, l) in &votes {
        *tally.entry(*l).or_default() += 1;
    }
    // most votes; ties go to the earlier label in scheme order
    let modal = tally.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(l, _)| *l);
    let agreeing_models: Vec<String> = votes
        .iter()
        .filter(|(_, l)| Some(*l) == modal)
        .map(|(m, _)| m.to_string())
        .collect();
    let unanimous = !required_models.is_empty() && agreeing_models.len() == required_models.len();
    Ok(ConsensusResult {
        record_id,
        label: if unanimous { modal } else { None },
        agreeing_models,
    })
}

/// Groups predictions by record (first-appearance order) and applies
/// [`unanimous_label`] to each group.
pub fn consensus_results(preds: &[Prediction], required_models: &BTreeSet<String>) -> Result<Vec<ConsensusResult>, ConsensusError> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&Prediction>> = HashMap::new();
    for p in preds {
        groups
            .entry(&p.record_id)
            .or_insert_with(|| {
                order.push(&p.record_id);
                Vec::new()
            })
            .push(p);
    }
    order.iter().map(|id| unanimous_label(&groups[id], required_models)).collect()
}

/// The records of `universe` that received a unanimous label, re-tagged as
/// consensus-labeled (original label cleared, coarse label set). Also
/// returns the per-record results for every record that had predictions.
pub fn build_consensus_dataset(
    universe: &Dataset,
    preds: &[Prediction],
    required_models: &BTreeSet<String>,
) -> Result<(Dataset, Vec<ConsensusResult>), ConsensusError> {
    let results = consensus_results(preds, required_models)?;
    let labels: HashMap<&str, CoarseLabel> = results
        .iter()
        .filter_map(|r| r.label.map(|l| (r.record_id.as_str(), l)))
        .collect();
    let records: Vec<FeedbackRecord> = universe
        .iter()
        .filter_map(|r| {
            labels.get(r.id.as_str()).map(|label| FeedbackRecord {
                original_label: None,
                coarse_label: Some(*label),
                provenance: Provenance::LlmConsensus,
                ..r.clone()
            })
        })
        .collect();
    Ok((Dataset::from_unique(records), results))
}

/// Writes `consensus.jsonl` (record_id, label, agreeing_models).
pub fn write_consensus(path: &Path, results: &[ConsensusResult]) -> Result<(), JsonlError> {
    jsonl::write(path, results)
}
