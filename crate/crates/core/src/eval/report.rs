use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Experimental conditions of the augmentation study, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    FineTuned,
    ZeroShot,
    ReviewAug,
    RandomAug,
    AppSpecificAug,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::FineTuned,
        Condition::ZeroShot,
        Condition::ReviewAug,
        Condition::RandomAug,
        Condition::AppSpecificAug,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Condition::FineTuned => "Fine-Tuned",
            Condition::ZeroShot => "Zero-Shot",
            Condition::ReviewAug => "Review-Aug",
            Condition::RandomAug => "Random-Aug",
            Condition::AppSpecificAug => "App-Specific-Aug",
        }
    }

    /// Short name usable in file paths.
    pub fn slug(self) -> &'static str {
        match self {
            Condition::FineTuned => "fine_tuned",
            Condition::ZeroShot => "zero_shot",
            Condition::ReviewAug => "review_aug",
            Condition::RandomAug => "random_aug",
            Condition::AppSpecificAug => "app_specific_aug",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Condition {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.display_name().eq_ignore_ascii_case(s) || c.slug() == s)
            .ok_or_else(|| EvalError::Parse(format!("unknown condition `{s}`")))
    }
}

/// One line of a report. `group` names the dataset or setting, `condition`
/// is free text so classification reports can list model ids there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub group: String,
    pub target_label: String,
    pub app: String,
    pub condition: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
        }
    }
}

const CSV_HEADER: [&str; 8] = ["group", "target_label", "app", "condition", "precision", "recall", "f1", "support"];

/// Renders rows in the given order. Markdown shows percentages with one
/// decimal; CSV keeps full precision.
pub fn emit_report(rows: &[MetricRow], format: ReportFormat) -> Result<String, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(match format {
        ReportFormat::Markdown => markdown(rows),
        ReportFormat::Csv => csv_text(rows),
    })
}

fn markdown(rows: &[MetricRow]) -> String {
    let mut out = String::from("| Group | Label | App | Condition | P | R | F1 | Support |\n|---|---|---|---|---:|---:|---:|---:|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {:.1} | {:.1} | {:.1} | {} |\n",
            r.group,
            r.target_label,
            r.app,
            r.condition,
            r.precision * 100.0,
            r.recall * 100.0,
            r.f1 * 100.0,
            r.support
        ));
    }
    out
}

fn csv_text(rows: &[MetricRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.target_label.clone(),
            r.app.clone(),
            r.condition.clone(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
            r.support.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn parse_csv_report(text: &str) -> Result<Vec<MetricRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| EvalError::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(EvalError::Parse("unexpected header".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| EvalError::Parse(format!("`{s}`: {e}")));
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| EvalError::Parse(e.to_string()))?;
        rows.push(MetricRow {
            group: rec[0].to_string(),
            target_label: rec[1].to_string(),
            app: rec[2].to_string(),
            condition: rec[3].to_string(),
            precision: num(&rec[4])?,
            recall: num(&rec[5])?,
            f1: num(&rec[6])?,
            support: rec[7].parse().map_err(|e| EvalError::Parse(format!("support: {e}")))?,
        });
    }
    Ok(rows)
}

/// Writes `<stem>.md` and `<stem>.csv` under `dir`.
pub fn write_report(dir: &Path, stem: &str, rows: &[MetricRow]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for format in [ReportFormat::Markdown, ReportFormat::Csv] {
        let text = emit_report(rows, format).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        fs::write(dir.join(format!("{stem}.{}", format.extension())), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(condition: &str, p: f64) -> MetricRow {
        MetricRow {
            group: "DS2-DS3".into(),
            target_label: "Bug Report".into(),
            app: "Dropbox".into(),
            condition: condition.into(),
            precision: p,
            recall: 1.0 / 3.0,
            f1: 0.1 + 0.2,
            support: 7,
        }
    }

    #[test]
    fn two_conditions_two_rows() {
        let rows = [row("Fine-Tuned", 0.5), row("Zero-Shot", 0.25)];
        let md = emit_report(&rows, ReportFormat::Markdown).unwrap();
        assert_eq!(md.lines().count(), 4);
        assert!(md.contains("| 50.0 | 33.3 | 30.0 | 7 |"));
        let csv = emit_report(&rows, ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![row("Zero-Shot", 2.0 / 3.0), row("with, comma", 4.0 / 7.0)];
        let back = parse_csv_report(&emit_report(&rows, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn empty_input() {
        assert_eq!(emit_report(&[], ReportFormat::Csv).unwrap_err(), EvalError::EmptyInput);
    }

    #[test]
    fn condition_names() {
        for c in Condition::ALL {
            assert_eq!(c.display_name().parse::<Condition>().unwrap(), c);
            assert_eq!(c.slug().parse::<Condition>().unwrap(), c);
        }
    }
}
