//! Deterministic stand-in for a chat-completion endpoint.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{BackendError, ChatBackend, ChatRequest};
use crate::scheme::Scheme;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MockError {
    #[error("fixture has no output for record `{0}`")]
    FixtureMiss(String),
    #[error("record `{0}` has no truth label for confusion sampling")]
    MissingTruth(String),
    #[error("truth label `{0}` is not a category of the scheme")]
    UnknownTruth(String),
    #[error("invalid mock behavior: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockMode {
    /// Fixed output text per record id.
    FixtureTable,
    /// Emitted class drawn from the truth class's row of a confusion matrix.
    SeededConfusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockBehavior {
    pub mode: MockMode,
    #[serde(default)]
    pub fixture: Option<BTreeMap<String, String>>,
    /// Row-stochastic, rows and columns in scheme category order.
    #[serde(default)]
    pub confusion: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
}

const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl MockBehavior {
    pub fn fixture(table: BTreeMap<String, String>) -> Self {
        MockBehavior {
            mode: MockMode::FixtureTable,
            fixture: Some(table),
            confusion: None,
            seed: 0,
        }
    }

    pub fn confusion(matrix: Vec<Vec<f64>>, seed: u64) -> Self {
        MockBehavior {
            mode: MockMode::SeededConfusion,
            fixture: None,
            confusion: Some(matrix),
            seed,
        }
    }

    /// `accuracy` on the diagonal, the remainder spread evenly over the
    /// other classes.
    pub fn uniform_errors(classes: usize, accuracy: f64, seed: u64) -> Self {
        let off = if classes > 1 { (1.0 - accuracy) / (classes - 1) as f64 } else { 0.0 };
        let matrix = (0..classes)
            .map(|i| (0..classes).map(|j| if i == j { accuracy } else { off }).collect())
            .collect();
        MockBehavior::confusion(matrix, seed)
    }

    /// Checks the mode/payload pairing and, for confusion mode, that the
    /// matrix is `classes`×`classes` with rows summing to one.
    pub fn validate(&self, classes: usize) -> Result<(), MockError> {
        match self.mode {
            MockMode::FixtureTable => {
                if self.fixture.is_none() || self.confusion.is_some() {
                    return Err(MockError::Invalid("fixture_table mode needs `fixture` and no `confusion`".into()));
                }
            }
            MockMode::SeededConfusion => {
                let m = match (&self.confusion, &self.fixture) {
                    (Some(m), None) => m,
                    _ => return Err(MockError::Invalid("seeded_confusion mode needs `confusion` and no `fixture`".into())),
                };
                if m.len() != classes {
                    return Err(MockError::Invalid(format!("confusion has {} rows, scheme has {classes} classes", m.len())));
                }
                for (i, row) in m.iter().enumerate() {
                    if row.len() != classes {
                        return Err(MockError::Invalid(format!("row {i} has {} entries", row.len())));
                    }
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                        return Err(MockError::Invalid(format!("row {i} has a negative or non-finite entry")));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        return Err(MockError::Invalid(format!("row {i} sums to {sum}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Seed of the draw stream for one (behavior seed, record, model) triple.
fn stream_seed(seed: u64, record_id: &str, model_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(record_id.as_bytes());
    h.update([0u8]);
    h.update(model_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Index drawn from a probability row given a uniform variate in [0, 1).
fn draw(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding: fall back to the last class with mass
    row.iter().rposition(|p| *p > 0.0).unwrap_or(row.len() - 1)
}

/// The mock's answer for one record.
pub fn mock_classify(
    behavior: &MockBehavior,
    scheme: &Scheme,
    truth_label: Option<&str>,
    record_id: &str,
    model_id: &str,
) -> Result<String, MockError> {
    match behavior.mode {
        MockMode::FixtureTable => behavior
            .fixture
            .as_ref()
            .and_then(|f| f.get(record_id))
            .cloned()
            .ok_or_else(|| MockError::FixtureMiss(record_id.to_string())),
        MockMode::SeededConfusion => {
            let matrix = behavior
                .confusion
                .as_ref()
                .ok_or_else(|| MockError::Invalid("no confusion matrix".into()))?;
            let truth = truth_label.ok_or_else(|| MockError::MissingTruth(record_id.to_string()))?;
            let row_idx = scheme.position(truth).ok_or_else(|| MockError::UnknownTruth(truth.to_string()))?;
            let row = matrix
                .get(row_idx)
                .ok_or_else(|| MockError::Invalid(format!("no confusion row for `{truth}`")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(behavior.seed, record_id, model_id));
            let emitted = draw(row, rng.gen::<f64>());
            let name = &scheme
                .categories()
                .get(emitted)
                .ok_or_else(|| MockError::Invalid("confusion row wider than scheme".into()))?
                .name;
            Ok(format!("Category: {name}"))
        }
    }
}

/// A backend answering from a [`MockBehavior`]. Truth labels, when needed,
/// are looked up by record id.
#[derive(Debug, Clone)]
pub struct MockBackend {
    behavior: MockBehavior,
    scheme: Scheme,
    truth: HashMap<String, String>,
}

impl MockBackend {
    pub fn new(behavior: MockBehavior, scheme: Scheme, truth: HashMap<String, String>) -> Result<Self, MockError> {
        behavior.validate(scheme.len())?;
        Ok(MockBackend { behavior, scheme, truth })
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        mock_classify(
            &self.behavior,
            &self.scheme,
            self.truth.get(request.record_id).map(String::as_str),
            request.record_id,
            request.model,
        )
        .map_err(BackendError::Mock)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matrix_echoes_truth() {
        let scheme = Scheme::coarse();
        let b = MockBehavior::uniform_errors(3, 1.0, 9);
        b.validate(3).unwrap();
        let out = mock_classify(&b, &scheme, Some("Bug Report"), "r1", "m").unwrap();
        assert_eq!(out, "Category: Bug Report");
    }

    #[test]
    fn fixture_lookup_and_miss() {
        let scheme = Scheme::coarse();
        let b = MockBehavior::fixture(BTreeMap::from([("r7".to_string(), "Bug Report".to_string())]));
        assert_eq!(mock_classify(&b, &scheme, None, "r7", "m").unwrap(), "Bug Report");
        assert_eq!(mock_classify(&b, &scheme, None, "r9", "m").unwrap_err(), MockError::FixtureMiss("r9".into()));
    }

    #[test]
    fn frequencies_follow_the_row() {
        let scheme = Scheme::coarse();
        let b = MockBehavior::confusion(vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]], 42);
        let mut counts = [0usize; 3];
        for i in 0..10_000 {
            let out = mock_classify(&b, &scheme, Some("Bug Report"), &format!("r{i}"), "model-a").unwrap();
            let name = out.strip_prefix("Category: ").unwrap();
            counts[scheme.position(name).unwrap()] += 1;
        }
        for (count, expected) in counts.iter().zip([0.8, 0.1, 0.1]) {
            let freq = *count as f64 / 10_000.0;
            assert!((freq - expected).abs() <= 0.02, "{counts:?}");
        }
    }

    #[test]
    fn streams_depend_on_model_and_seed() {
        let scheme = Scheme::coarse();
        let b = MockBehavior::uniform_errors(3, 1.0 / 3.0, 1);
        let answers = |model: &str, seed: u64| -> Vec<String> {
            let b = MockBehavior { seed, ..b.clone() };
            (0..50).map(|i| mock_classify(&b, &scheme, Some("Other"), &format!("r{i}"), model).unwrap()).collect()
        };
        assert_eq!(answers("a", 1), answers("a", 1));
        assert_ne!(answers("a", 1), answers("b", 1));
        assert_ne!(answers("a", 1), answers("a", 2));
    }

    #[test]
    fn validation() {
        assert!(MockBehavior::confusion(vec![vec![0.5, 0.4, 0.1]; 3], 0).validate(3).is_ok());
        assert!(MockBehavior::confusion(vec![vec![0.5, 0.4, 0.2]; 3], 0).validate(3).is_err());
        assert!(MockBehavior::confusion(vec![vec![1.0, 0.0]; 2], 0).validate(3).is_err());
        let mut both = MockBehavior::fixture(BTreeMap::new());
        both.confusion = Some(vec![]);
        assert!(both.validate(3).is_err());
    }

    #[test]
    fn confusion_mode_needs_truth() {
        let b = MockBehavior::uniform_errors(3, 0.8, 0);
        let scheme = Scheme::coarse();
        assert_eq!(mock_classify(&b, &scheme, None, "r", "m").unwrap_err(), MockError::MissingTruth("r".into()));
        assert!(matches!(mock_classify(&b, &scheme, Some("Praise"), "r", "m"), Err(MockError::UnknownTruth(_))));
    }

    #[test]
    fn draw_handles_rounding() {
        assert_eq!(draw(&[0.5, 0.5, 0.0], 0.9999999999), 1);
        assert_eq!(draw(&[0.3, 0.3, 0.3], 0.95), 2);
        assert_eq!(draw(&[1.0, 0.0, 0.0], 0.0), 0);
    }
}
