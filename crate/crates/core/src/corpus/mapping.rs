use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{CoarseLabel, CorpusError, Dataset, FeedbackRecord, Result, Source};
use crate::data;

/// Where an original label lands in the coarse scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingTarget {
    Coarse(CoarseLabel),
    Unmapped,
}

impl MappingTarget {
    fn parse(s: &str) -> Option<MappingTarget> {
        if s.eq_ignore_ascii_case("unmapped") {
            Some(MappingTarget::Unmapped)
        } else {
            CoarseLabel::from_name(s).map(MappingTarget::Coarse)
        }
    }
}

/// Projection of one dataset's native label vocabulary onto the coarse scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMapping {
    pub dataset_id: String,
    pub source: Option<Source>,
    entries: Vec<(String, MappingTarget)>,
}

#[derive(Deserialize)]
struct MappingFile {
    dataset_id: String,
    #[serde(default)]
    source: Option<Source>,
    labels: toml::Table,
}

/// Lowercase with internal whitespace collapsed.
fn label_key(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl SchemeMapping {
    pub fn new(dataset_id: &str, entries: Vec<(String, MappingTarget)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (name, _) in &entries {
            if !seen.insert(label_key(name)) {
                return Err(CorpusError::InvalidMapping(format!(
                    "{dataset_id}: label `{name}` listed more than once"
                )));
            }
        }
        Ok(SchemeMapping {
            dataset_id: dataset_id.to_string(),
            source: None,
            entries,
        })
    }

    /// Parses the key-value mapping format:
    ///
    /// ```toml
    /// dataset_id = "DS1"
    /// source = "AppStore"
    ///
    /// [labels]
    /// "bug report" = "BugReport"
    /// "noise" = "Unmapped"
    /// ```
    pub fn parse(src: &str) -> Result<Self> {
        let file: MappingFile = toml::from_str(src).map_err(|e| CorpusError::InvalidMapping(e.to_string()))?;
        let mut entries = Vec::with_capacity(file.labels.len());
        for (name, value) in file.labels {
            let target = value
                .as_str()
                .and_then(MappingTarget::parse)
                .ok_or_else(|| CorpusError::InvalidMapping(format!("{}: bad target for `{name}`", file.dataset_id)))?;
            entries.push((name, target));
        }
        let mut mapping = SchemeMapping::new(&file.dataset_id, entries)?;
        mapping.source = file.source;
        Ok(mapping)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|source| CorpusError::UnreadableFile {
            path: path.to_path_buf(),
            source,
        })?;
        SchemeMapping::parse(&src)
    }

    /// One of the eight shipped mappings (`DS1` … `DS8`).
    pub fn builtin(dataset_id: &str) -> Result<Self> {
        let src = data::mapping_source(dataset_id).ok_or_else(|| CorpusError::UnknownMapping(dataset_id.to_string()))?;
        SchemeMapping::parse(src)
    }

    /// A built-in id or a path to a mapping file.
    pub fn resolve(id_or_path: &str) -> Result<Self> {
        if data::mapping_source(id_or_path).is_some() {
            SchemeMapping::builtin(id_or_path)
        } else if Path::new(id_or_path).is_file() {
            SchemeMapping::load(Path::new(id_or_path))
        } else {
            Err(CorpusError::UnknownMapping(id_or_path.to_string()))
        }
    }

    pub fn entries(&self) -> &[(String, MappingTarget)] {
        &self.entries
    }

    /// Case- and whitespace-insensitive lookup.
    pub fn target(&self, original_label: &str) -> Option<MappingTarget> {
        let key = label_key(original_label);
        self.entries.iter().find(|(name, _)| label_key(name) == key).map(|(_, t)| *t)
    }

    pub fn labels_for(&self, target: MappingTarget) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(move |(_, t)| *t == target).map(|(n, _)| n.as_str())
    }
}

/// Assigns each record its coarse label. Records whose original label is
/// unmapped are dropped; the second element counts them.
pub fn adapt_to_coarse(ds: &Dataset, mapping: &SchemeMapping) -> Result<(Dataset, usize)> {
    let mut kept: Vec<FeedbackRecord> = Vec::with_capacity(ds.len());
    let mut dropped = 0;
    for record in ds {
        let label = record.original_label.as_deref().ok_or_else(|| CorpusError::Unlabeled {
            record_id: record.id.clone(),
        })?;
        match mapping.target(label) {
            Some(MappingTarget::Coarse(coarse)) => kept.push(record.clone().with_coarse_label(coarse)),
            Some(MappingTarget::Unmapped) => dropped += 1,
            None => {
                return Err(CorpusError::UnknownLabel {
                    dataset_id: mapping.dataset_id.clone(),
                    record_id: record.id.clone(),
                    label: label.to_string(),
                })
            }
        }
    }
    Ok((Dataset::from_unique(kept), dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BUILTIN_DATASETS;
    use MappingTarget::*;

    fn ds(dataset_id: &str, labels: &[&str]) -> Dataset {
        Dataset::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| FeedbackRecord::human(dataset_id, Source::AppStore, &format!("r{i}"), "text").with_original_label(l))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn builtin_mappings_load_and_cover_both_targets() {
        for id in BUILTIN_DATASETS {
            let m = SchemeMapping::builtin(id).unwrap();
            assert_eq!(m.dataset_id, id);
            assert!(m.labels_for(Coarse(CoarseLabel::BugReport)).count() >= 1, "{id}");
            assert!(m.labels_for(Coarse(CoarseLabel::FeatureRequest)).count() >= 1, "{id}");
            assert!(m.source.is_some());
        }
    }

    #[test]
    fn documented_examples() {
        let cases = [
            ("DS1", "user request", CoarseLabel::FeatureRequest),
            ("DS5", "apparent bug", CoarseLabel::BugReport),
            ("DS8", "inquiry", CoarseLabel::FeatureRequest),
            ("DS1", "praise", CoarseLabel::Other),
        ];
        for (id, label, expected) in cases {
            let m = SchemeMapping::builtin(id).unwrap();
            assert_eq!(m.target(label), Some(Coarse(expected)), "{id}/{label}");
            let (out, dropped) = adapt_to_coarse(&ds(id, &[label]), &m).unwrap();
            assert_eq!(dropped, 0);
            assert_eq!(out.records()[0].coarse_label, Some(expected));
        }
    }

    #[test]
    fn lookup_ignores_case_and_spacing() {
        let m = SchemeMapping::builtin("DS8").unwrap();
        assert_eq!(m.target("Problem  Report"), Some(Coarse(CoarseLabel::BugReport)));
    }

    #[test]
    fn unmapped_records_are_dropped_and_counted() {
        let m = SchemeMapping::builtin("DS1").unwrap();
        let input = ds("DS1", &["bug report", "noise", "complaint", "praise"]);
        let (out, dropped) = adapt_to_coarse(&input, &m).unwrap();
        assert_eq!((out.len(), dropped), (2, 2));
        assert_eq!(input.len(), out.len() + dropped);
    }

    #[test]
    fn unknown_label_signals_stale_mapping() {
        let m = SchemeMapping::builtin("DS3").unwrap();
        let err = adapt_to_coarse(&ds("DS3", &["bug report", "rant"]), &m).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownLabel { ref label, .. } if label == "rant"));
    }

    #[test]
    fn unlabeled_record_is_an_error() {
        let m = SchemeMapping::builtin("DS3").unwrap();
        let d = Dataset::new(vec![FeedbackRecord::human("DS3", Source::AppStore, "x", "t")]).unwrap();
        assert!(matches!(adapt_to_coarse(&d, &m).unwrap_err(), CorpusError::Unlabeled { .. }));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let src = "dataset_id = \"Z\"\n[labels]\n\"Bug\" = \"BugReport\"\n\"bug\" = \"Other\"\n";
        assert!(matches!(SchemeMapping::parse(src).unwrap_err(), CorpusError::InvalidMapping(_)));
        let src = "dataset_id = \"Z\"\n[labels]\n\"bug\" = \"Crash\"\n";
        assert!(SchemeMapping::parse(src).is_err());
    }

    #[test]
    fn resolve_accepts_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("custom.toml");
        fs::write(&p, "dataset_id = \"C\"\n[labels]\n\"issue\" = \"BugReport\"\n\"idea\" = \"FeatureRequest\"\n").unwrap();
        let m = SchemeMapping::resolve(p.to_str().unwrap()).unwrap();
        assert_eq!(m.entries().len(), 2);
        assert!(matches!(SchemeMapping::resolve("DS9").unwrap_err(), CorpusError::UnknownMapping(_)));
    }
}
