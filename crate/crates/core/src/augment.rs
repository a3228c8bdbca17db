//! Training sets that add consensus-labeled records to human-labeled ones
//! at a fixed per-category ratio.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CoarseLabel, Dataset, FeedbackRecord, Provenance, TokenCleaner};
use crate::jsonl::{self, JsonlError};

/// Slack for `ratio * count` landing a hair below an integer.
const FLOOR_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AugmentError {
    #[error("ratio {0} outside (0, 1]")]
    InvalidRatio(String),
    #[error("pool has too few `{category}` records: {shortfall} short")]
    InsufficientPool { category: CoarseLabel, shortfall: usize },
    #[error("app-specific augmentation needs a target app")]
    MissingAppId,
    #[error("record `{0}` has no coarse label")]
    Unlabeled(String),
    #[error("pool record `{0}` is not consensus-labeled")]
    NotConsensus(String),
    #[error("record `{dataset_id}/{id}` appears in both the human set and the pool")]
    DuplicateRecord { dataset_id: String, id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    Random,
    AppSpecific,
}

impl FromStr for AugmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "random" => Ok(AugmentMode::Random),
            "app_specific" | "app" => Ok(AugmentMode::AppSpecific),
            _ => Err(format!("unknown augmentation mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedTrainingSet {
    pub human: Dataset,
    pub synthetic: Dataset,
    pub ratio: f64,
    pub mode: AugmentMode,
    pub target_app: Option<String>,
    pub seed: u64,
    /// Human records dropped because their text occurs in the truth set.
    pub human_removed: usize,
}

/// Synthetic records needed for a category with `human_count` records.
pub fn synthetic_count(ratio: f64, human_count: usize) -> usize {
    (ratio * human_count as f64 + FLOOR_EPSILON).floor() as usize
}

/// Draws `floor(ratio · |human_c|)` consensus records of each coarse
/// category `c` from `pool`, uniformly without replacement.
///
/// Records whose normalized text occurs in `truth_set` are removed from
/// both the human set and the pool first. In app-specific mode only pool
/// records of `target_app` are eligible.
pub fn sample_augmentation(
    human: &Dataset,
    pool: &Dataset,
    ratio: f64,
    mode: AugmentMode,
    target_app: Option<&str>,
    truth_set: &Dataset,
    seed: u64,
) -> Result<AugmentedTrainingSet, AugmentError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(AugmentError::InvalidRatio(ratio.to_string()));
    }
    if mode == AugmentMode::AppSpecific && target_app.is_none() {
        return Err(AugmentError::MissingAppId);
    }
    for r in human.iter().chain(pool.iter()) {
        if r.coarse_label.is_none() {
            return Err(AugmentError::Unlabeled(r.id.clone()));
        }
    }
    if let Some(r) = pool.iter().find(|r| r.provenance != Provenance::LlmConsensus) {
        return Err(AugmentError::NotConsensus(r.id.clone()));
    }

    let cleaner = TokenCleaner::default();
    let truth: HashSet<String> = truth_set.iter().map(|r| cleaner.normalize(&r.text)).collect();
    let kept_human = human.filter(|r| !truth.contains(&cleaner.normalize(&r.text)));
    let human_removed = human.len() - kept_human.len();

    let human_keys: HashSet<(&str, &str)> = kept_human.iter().map(|r| (r.dataset_id.as_str(), r.id.as_str())).collect();
    if let Some(r) = pool.iter().find(|r| human_keys.contains(&(r.dataset_id.as_str(), r.id.as_str()))) {
        return Err(AugmentError::DuplicateRecord {
            dataset_id: r.dataset_id.clone(),
            id: r.id.clone(),
        });
    }

    let eligible: Vec<&FeedbackRecord> = pool
        .iter()
        .filter(|r| mode == AugmentMode::Random || r.app_id.as_deref() == target_app)
        .filter(|r| !truth.contains(&cleaner.normalize(&r.text)))
        .collect();

    let human_counts = kept_human.coarse_counts();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut synthetic = Vec::new();
    for label in CoarseLabel::ALL {
        let need = synthetic_count(ratio, human_counts[label.index()]);
        let candidates: Vec<&FeedbackRecord> = eligible.iter().copied().filter(|r| r.coarse_label == Some(label)).collect();
        if candidates.len() < need {
            return Err(AugmentError::InsufficientPool {
                category: label,
                shortfall: need - candidates.len(),
            });
        }
        let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), need).into_vec();
        picked.sort_unstable();
        synthetic.extend(picked.into_iter().map(|i| candidates[i].clone()));
    }

    Ok(AugmentedTrainingSet {
        human: kept_human,
        synthetic: Dataset::from_unique(synthetic),
        ratio,
        mode,
        target_app: target_app.map(str::to_string),
        seed,
        human_removed,
    })
}

/// Human and synthetic records together, shuffled under the set's seed.
pub fn merge_training_set(aug: &AugmentedTrainingSet) -> Dataset {
    shuffled(aug.human.iter().chain(aug.synthetic.iter()).cloned().collect(), aug.seed)
}

/// Deterministic shuffle of `records`.
pub fn shuffled(mut records: Vec<FeedbackRecord>, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    Dataset::from_unique(records)
}

/// One line of `train.jsonl`, the file handed to the trainer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainRow {
    pub id: String,
    pub text: String,
    pub coarse_label: CoarseLabel,
    pub provenance: Provenance,
    pub dataset_id: String,
    pub app_id: Option<String>,
}

impl TryFrom<&FeedbackRecord> for TrainRow {
    type Error = AugmentError;

    fn try_from(r: &FeedbackRecord) -> Result<Self, Self::Error> {
        Ok(TrainRow {
            id: r.id.clone(),
            text: r.text.clone(),
            coarse_label: r.coarse_label.ok_or_else(|| AugmentError::Unlabeled(r.id.clone()))?,
            provenance: r.provenance,
            dataset_id: r.dataset_id.clone(),
            app_id: r.app_id.clone(),
        })
    }
}

pub fn train_rows(ds: &Dataset) -> Result<Vec<TrainRow>, AugmentError> {
    ds.iter().map(TrainRow::try_from).collect()
}

#[derive(Debug, Error)]
pub enum WriteTrainError {
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Io(#[from] JsonlError),
}

pub fn write_train_jsonl(path: &Path, ds: &Dataset) -> Result<usize, WriteTrainError> {
    let rows = train_rows(ds)?;
    jsonl::write(path, &rows)?;
    Ok(rows.len())
}
