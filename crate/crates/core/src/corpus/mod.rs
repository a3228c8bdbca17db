//! Feedback records and datasets: ingestion, the eligibility filter,
//! cross-dataset overlap removal and adaptation to the coarse scheme.

mod ingest;
mod mapping;
mod text;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest, DatasetMeta, InputFormat};
pub use mapping::{adapt_to_coarse, MappingTarget, SchemeMapping};
pub use text::{clean_tokens, is_eligible, normalize_text, TokenCleaner, DEFAULT_NON_INFORMATIVE};

use crate::jsonl;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: missing field `{field}`")]
    MissingField { field: String, line: u64 },
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("duplicate record id `{id}` in dataset `{dataset_id}`")]
    DuplicateId { dataset_id: String, id: String },
    #[error("cannot read `{}`: {source}", path.display())]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record `{record_id}`: label `{label}` is not in the mapping for `{dataset_id}`")]
    UnknownLabel {
        dataset_id: String,
        record_id: String,
        label: String,
    },
    #[error("record `{record_id}` has no original label to map")]
    Unlabeled { record_id: String },
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("no built-in mapping named `{0}`")]
    UnknownMapping(String),
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Where a piece of feedback was posted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    AppStore,
    Forum,
    X,
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "appstore" => Ok(Source::AppStore),
            "forum" => Ok(Source::Forum),
            "x" | "twitter" => Ok(Source::X),
            _ => Err(format!("unknown source `{s}` (expected app-store, forum or x)")),
        }
    }
}

/// The three-way scheme every dataset is projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoarseLabel {
    BugReport,
    FeatureRequest,
    Other,
}

impl CoarseLabel {
    pub const ALL: [CoarseLabel; 3] = [CoarseLabel::BugReport, CoarseLabel::FeatureRequest, CoarseLabel::Other];

    /// Category name as it appears in prompts and model answers.
    pub fn display_name(self) -> &'static str {
        match self {
            CoarseLabel::BugReport => "Bug Report",
            CoarseLabel::FeatureRequest => "Feature Request",
            CoarseLabel::Other => "Other",
        }
    }

    /// Accepts the display name or the variant name, ignoring case,
    /// spaces, hyphens and underscores.
    pub fn from_name(name: &str) -> Option<CoarseLabel> {
        let squashed: String = name
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        match squashed.as_str() {
            "bugreport" => Some(CoarseLabel::BugReport),
            "featurerequest" => Some(CoarseLabel::FeatureRequest),
            "other" => Some(CoarseLabel::Other),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for CoarseLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        CoarseLabel::from_name(s).ok_or_else(|| format!("unknown coarse label `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Human,
    LlmConsensus,
}

/// One piece of user feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub id: String,
    pub dataset_id: String,
    pub source: Source,
    #[serde(default)]
    pub app_id: Option<String>,
    pub text: String,
    #[serde(default)]
    pub original_label: Option<String>,
    #[serde(default)]
    pub coarse_label: Option<CoarseLabel>,
    pub provenance: Provenance,
}

impl FeedbackRecord {
    pub fn human(dataset_id: &str, source: Source, id: &str, text: &str) -> Self {
        FeedbackRecord {
            id: id.to_string(),
            dataset_id: dataset_id.to_string(),
            source,
            app_id: None,
            text: text.to_string(),
            original_label: None,
            coarse_label: None,
            provenance: Provenance::Human,
        }
    }

    pub fn with_original_label(mut self, label: &str) -> Self {
        self.original_label = Some(label.to_string());
        self
    }

    pub fn with_coarse_label(mut self, label: CoarseLabel) -> Self {
        self.coarse_label = Some(label);
        self
    }

    pub fn with_app(mut self, app_id: &str) -> Self {
        self.app_id = Some(app_id.to_string());
        self
    }

    pub fn normalized_text(&self) -> String {
        normalize_text(&self.text)
    }
}

/// An ordered collection of records, unique by `(dataset_id, id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    records: Vec<FeedbackRecord>,
}

impl Dataset {
    pub fn new(records: Vec<FeedbackRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert((r.dataset_id.as_str(), r.id.as_str())) {
                return Err(CorpusError::DuplicateId {
                    dataset_id: r.dataset_id.clone(),
                    id: r.id.clone(),
                });
            }
        }
        Ok(Dataset { records })
    }

    /// Builds a dataset from records already known to be unique, such as a
    /// filtered subset of an existing dataset.
    pub(crate) fn from_unique(records: Vec<FeedbackRecord>) -> Self {
        Dataset { records }
    }

    pub fn empty() -> Self {
        Dataset::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[FeedbackRecord] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FeedbackRecord> {
        self.records.iter()
    }

    pub fn into_records(self) -> Vec<FeedbackRecord> {
        self.records
    }

    pub fn get(&self, id: &str) -> Option<&FeedbackRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Keeps the records matching `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&FeedbackRecord) -> bool) -> Dataset {
        Dataset::from_unique(self.records.iter().filter(|r| keep(r)).cloned().collect())
    }

    /// Applies the eligibility filter; returns the retained records and the
    /// number removed.
    pub fn filter_eligible(&self, cleaner: &TokenCleaner) -> (Dataset, usize) {
        let kept = self.filter(|r| cleaner.is_eligible(&r.text));
        let removed = self.len() - kept.len();
        (kept, removed)
    }

    /// Number of records carrying each coarse label, in `CoarseLabel::ALL` order.
    pub fn coarse_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for label in self.records.iter().filter_map(|r| r.coarse_label) {
            counts[label.index()] += 1;
        }
        counts
    }

    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        Dataset::new(parts.iter().flat_map(|d| d.records.iter().cloned()).collect())
    }

    pub fn read_jsonl(path: &Path) -> Result<Dataset> {
        Dataset::new(jsonl::read(path)?)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        jsonl::write(path, &self.records)?;
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a FeedbackRecord;
    type IntoIter = std::slice::Iter<'a, FeedbackRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Removes from `primary` every record whose normalized text also occurs in
/// `reference`. Returns the survivors in their original order and the number
/// of removed records.
pub fn dedup_overlap(primary: &Dataset, reference: &Dataset) -> (Dataset, usize) {
    let cleaner = TokenCleaner::default();
    dedup_overlap_with(primary, reference, &cleaner)
}

pub fn dedup_overlap_with(primary: &Dataset, reference: &Dataset, cleaner: &TokenCleaner) -> (Dataset, usize) {
    let seen: HashSet<String> = reference.iter().map(|r| cleaner.normalize(&r.text)).collect();
    let kept = primary.filter(|r| !seen.contains(&cleaner.normalize(&r.text)));
    let removed = primary.len() - kept.len();
    (kept, removed)
}
