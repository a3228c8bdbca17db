//! Turns free-text model output into a structured prediction.
//!
//! Every alias of every category is searched for as a whole-word sequence
//! in the lowercased output. A match nested inside a longer match of a
//! different category is discarded, so "functional bug report" does not
//! also count as "bug report" when both belong to different categories.
//! One matched category gives `Ok`, several give `Ambiguous`, none gives
//! `ParseFailed`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError};
use crate::scheme::{alias_words, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParseStatus {
    Ok,
    Ambiguous,
    ParseFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub record_id: String,
    pub model_id: String,
    pub raw_output: String,
    pub label: Option<String>,
    pub status: ParseStatus,
}

impl Prediction {
    pub fn from_output(record_id: &str, model_id: &str, raw_output: &str, scheme: &Scheme) -> Self {
        let (label, status) = extract_label(raw_output, scheme);
        Prediction {
            record_id: record_id.to_string(),
            model_id: model_id.to_string(),
            raw_output: raw_output.to_string(),
            label,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ParseStatus::Ok
    }
}

struct Span {
    start: usize,
    end: usize,
    category: usize,
}

/// Returns the canonical category name (only when exactly one category
/// matched) and the parse status.
pub fn extract_label(raw_output: &str, scheme: &Scheme) -> (Option<String>, ParseStatus) {
    let words = alias_words(raw_output);
    let mut spans = Vec::new();
    for (ci, category) in scheme.categories().iter().enumerate() {
        for alias in &category.aliases {
            let needle = alias_words(alias);
            if needle.is_empty() || needle.len() > words.len() {
                continue;
            }
            for start in 0..=words.len() - needle.len() {
                if words[start..start + needle.len()] == needle[..] {
                    spans.push(Span {
                        start,
                        end: start + needle.len(),
                        category: ci,
                    });
                }
            }
        }
    }
    let matched: BTreeSet<usize> = spans
        .iter()
        .filter(|s| {
            !spans.iter().any(|o| {
                o.category != s.category && o.start <= s.start && s.end <= o.end && (o.end - o.start) > (s.end - s.start)
            })
        })
        .map(|s| s.category)
        .collect();
    match matched.len() {
        0 => (None, ParseStatus::ParseFailed),
        1 => {
            let ci = *matched.iter().next().expect("one element");
            (Some(scheme.categories()[ci].name.clone()), ParseStatus::Ok)
        }
        _ => (None, ParseStatus::Ambiguous),
    }
}

/// A prediction that needs a human decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub record_id: String,
    pub model_id: String,
    pub raw_output: String,
    pub status: ParseStatus,
}

/// The `Ambiguous` and `ParseFailed` predictions, in input order.
pub fn review_queue(preds: &[Prediction]) -> Vec<ReviewItem> {
    preds
        .iter()
        .filter(|p| !p.is_ok())
        .map(|p| ReviewItem {
            record_id: p.record_id.clone(),
            model_id: p.model_id.clone(),
            raw_output: p.raw_output.clone(),
            status: p.status,
        })
        .collect()
}

pub fn write_review_queue(path: &Path, preds: &[Prediction]) -> Result<usize, JsonlError> {
    let items = review_queue(preds);
    jsonl::write(path, &items)?;
    Ok(items.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coarse(raw: &str) -> (Option<String>, ParseStatus) {
        extract_label(raw, &Scheme::coarse())
    }

    #[test]
    fn documented_examples() {
        assert_eq!(coarse("Category: Bug Report"), (Some("Bug Report".into()), ParseStatus::Ok));
        assert_eq!(coarse("This could be a bug report or a feature request."), (None, ParseStatus::Ambiguous));
        assert_eq!(coarse("I am unable to determine this."), (None, ParseStatus::ParseFailed));
        assert_eq!(
            coarse("It's a bug \u{2014} the app crashes. Definitely a bug report."),
            (Some("Bug Report".into()), ParseStatus::Ok)
        );
    }

    #[test]
    fn debug_is_not_bug() {
        assert_eq!(coarse("Needs a debug session"), (None, ParseStatus::ParseFailed));
        assert_eq!(coarse("debugging. Category: Other"), (Some("Other".into()), ParseStatus::Ok));
    }

    #[test]
    fn nested_alias_of_other_category_is_ignored() {
        let ds4 = Scheme::builtin("DS4").unwrap();
        let (label, status) = extract_label("Suggestion for new feature", &ds4);
        assert_eq!((label.as_deref(), status), (Some("Suggestion for New Feature"), ParseStatus::Ok));
    }

    #[test]
    fn review_queue_keeps_non_ok() {
        let s = Scheme::coarse();
        let preds = vec![
            Prediction::from_output("a", "m", "Bug Report", &s),
            Prediction::from_output("b", "m", "no idea", &s),
            Prediction::from_output("c", "m", "bug or feature request", &s),
        ];
        let q = review_queue(&preds);
        assert_eq!(q.iter().map(|i| i.record_id.as_str()).collect::<Vec<_>>(), ["b", "c"]);
        assert_eq!(q[1].status, ParseStatus::Ambiguous);
    }

    proptest! {
        #[test]
        fn status_and_label_agree(raw in "[a-zA-Z ,.:]{0,60}") {
            let (label, status) = coarse(&raw);
            prop_assert_eq!(label.is_some(), status == ParseStatus::Ok);
        }

        #[test]
        fn casing_and_punctuation_do_not_matter(idx in 0usize..3, upper in any::<bool>(), punct in "[.,;:!?()\"' ]{0,4}") {
            let name = Scheme::coarse().names()[idx].clone();
            let cased = if upper { name.to_uppercase() } else { name.to_lowercase() };
            let raw = format!("{punct}{cased}{punct}");
            prop_assert_eq!(coarse(&raw), (Some(name), ParseStatus::Ok));
        }
    }
}
