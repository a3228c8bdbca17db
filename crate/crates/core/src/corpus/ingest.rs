use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CorpusError, Dataset, FeedbackRecord, Provenance, Result, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<InputFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(InputFormat::Csv),
            "jsonl" | "ndjson" => Some(InputFormat::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" => Ok(InputFormat::Jsonl),
            _ => Err(format!("unknown format `{s}` (expected csv or jsonl)")),
        }
    }
}

/// What the caller knows about a dataset file beyond its rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub dataset_id: String,
    pub source: Source,
}

struct RawRow {
    id: String,
    text: String,
    label: Option<String>,
    app_id: Option<String>,
}

/// Reads a csv (`id,text,label[,app_id]` header) or jsonl file into a
/// dataset of human-provenance records. Empty `label` / `app_id` values
/// become `None`; `id` and `text` are mandatory on every row.
pub fn ingest(path: &Path, format: InputFormat, meta: &DatasetMeta) -> Result<Dataset> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    let rows = match format {
        InputFormat::Csv => parse_csv(&raw)?,
        InputFormat::Jsonl => parse_jsonl(&raw)?,
    };

    let mut seen = std::collections::HashSet::with_capacity(rows.len());
    let mut records = Vec::with_capacity(rows.len());
    for row in rows {
        if !seen.insert(row.id.clone()) {
            return Err(CorpusError::DuplicateId {
                dataset_id: meta.dataset_id.clone(),
                id: row.id,
            });
        }
        records.push(FeedbackRecord {
            id: row.id,
            dataset_id: meta.dataset_id.clone(),
            source: meta.source,
            app_id: row.app_id,
            text: row.text,
            original_label: row.label,
            coarse_label: None,
            provenance: Provenance::Human,
        });
    }
    Ok(Dataset::from_unique(records))
}

fn non_empty(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

fn parse_csv(raw: &str) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(raw.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let id_col = column("id").ok_or_else(|| CorpusError::MissingField {
        field: "id".into(),
        line: 1,
    })?;
    let text_col = column("text").ok_or_else(|| CorpusError::MissingField {
        field: "text".into(),
        line: 1,
    })?;
    let label_col = column("label");
    let app_col = column("app_id");

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| CorpusError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let required = |col: usize, name: &str| {
            record
                .get(col)
                .and_then(non_empty)
                .ok_or_else(|| CorpusError::MissingField {
                    field: name.into(),
                    line,
                })
        };
        rows.push(RawRow {
            id: required(id_col, "id")?,
            text: record.get(text_col).map(str::to_string).filter(|t| !t.trim().is_empty()).ok_or_else(|| {
                CorpusError::MissingField {
                    field: "text".into(),
                    line,
                }
            })?,
            label: label_col.and_then(|c| record.get(c)).and_then(non_empty),
            app_id: app_col.and_then(|c| record.get(c)).and_then(non_empty),
        });
    }
    Ok(rows)
}

fn parse_jsonl(raw: &str) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    for (idx, text) in raw.lines().enumerate() {
        let line = idx as u64 + 1;
        if text.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(text).map_err(|e| CorpusError::MalformedRow {
            line,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| CorpusError::MalformedRow {
            line,
            message: "expected a JSON object".into(),
        })?;
        let scalar = |name: &str| -> Option<String> {
            match obj.get(name)? {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                _ => None,
            }
        };
        let missing = |field: &str| CorpusError::MissingField {
            field: field.into(),
            line,
        };
        let id = scalar("id").and_then(|s| non_empty(&s)).ok_or_else(|| missing("id"))?;
        let body = scalar("text").filter(|t| !t.trim().is_empty()).ok_or_else(|| missing("text"))?;
        rows.push(RawRow {
            id,
            text: body,
            label: scalar("label").and_then(|s| non_empty(&s)),
            app_id: scalar("app_id").and_then(|s| non_empty(&s)),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> DatasetMeta {
        DatasetMeta {
            dataset_id: "DS3".into(),
            source: Source::AppStore,
        }
    }

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.csv",
            "id,text,label\nr1,\"App crashes, always\",bug report\nr2,Please add themes,feature request\nr3,Fine,\n",
        );
        let ds = ingest(&p, InputFormat::Csv, &meta()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.records()[0].text, "App crashes, always");
        assert_eq!(ds.records()[1].original_label.as_deref(), Some("feature request"));
        assert_eq!(ds.records()[2].original_label, None);
        assert!(ds.iter().all(|r| r.dataset_id == "DS3" && r.provenance == Provenance::Human));
    }

    #[test]
    fn csv_optional_app_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "id,text,label,app_id\nr1,hello there world,praise,com.whatsapp\n");
        let ds = ingest(&p, InputFormat::Csv, &meta()).unwrap();
        assert_eq!(ds.records()[0].app_id.as_deref(), Some("com.whatsapp"));
    }

    #[test]
    fn csv_missing_text_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "id,text,label\nr1,fine text,other\nr2\n");
        match ingest(&p, InputFormat::Csv, &meta()).unwrap_err() {
            CorpusError::MissingField { field, line } => assert_eq!((field.as_str(), line), ("text", 3)),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn csv_missing_header_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "id,body\nr1,x\n");
        assert!(matches!(
            ingest(&p, InputFormat::Csv, &meta()).unwrap_err(),
            CorpusError::MissingField { ref field, line: 1 } if field == "text"
        ));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "id,text,label\nr1,one,other\nr1,two,other\n");
        assert!(matches!(
            ingest(&p, InputFormat::Csv, &meta()).unwrap_err(),
            CorpusError::DuplicateId { ref id, .. } if id == "r1"
        ));
    }

    #[test]
    fn jsonl_rows_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.jsonl",
            "{\"id\":1,\"text\":\"crash on save\",\"label\":\"bug report\"}\n\n{\"id\":\"r2\",\"text\":\"more\",\"label\":null,\"app_id\":\"dropbox\"}\n",
        );
        let ds = ingest(&p, InputFormat::Jsonl, &meta()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records()[0].id, "1");
        assert_eq!(ds.records()[1].app_id.as_deref(), Some("dropbox"));

        let p = write(&dir, "b.jsonl", "{\"id\":\"r1\",\"text\":\"ok\"}\n{\"id\":\"r2\"}\n");
        assert!(matches!(
            ingest(&p, InputFormat::Jsonl, &meta()).unwrap_err(),
            CorpusError::MissingField { ref field, line: 2 } if field == "text"
        ));
    }

    #[test]
    fn unreadable_file() {
        let err = ingest(Path::new("/nonexistent/x.csv"), InputFormat::Csv, &meta()).unwrap_err();
        assert!(matches!(err, CorpusError::UnreadableFile { .. }));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(InputFormat::from_path(Path::new("a/b.CSV")), Some(InputFormat::Csv));
        assert_eq!(InputFormat::from_path(Path::new("b.jsonl")), Some(InputFormat::Jsonl));
        assert_eq!(InputFormat::from_path(Path::new("b.txt")), None);
    }
}
