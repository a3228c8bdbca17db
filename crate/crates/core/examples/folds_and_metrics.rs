// Stratified folds, a confusion matrix and per-class scores.

use std::collections::HashMap;
use std::error::Error;

use feedback_consensus::eval::{class_prf, confusion, emit_report, macro_avg, make_folds, MetricRow, ReportFormat};
use feedback_consensus::extraction::{ParseStatus, Prediction};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let items: Vec<(String, String)> = (0..100).map(|i| (format!("r{i}"), if i < 60 { "Bug Report" } else { "Other" }.to_string())).collect();
    let plan = make_folds(items.iter().map(|(a, b)| (a.as_str(), b.as_str())), 5, 3)?;
    println!("fold sizes {:?}", plan.fold_sizes());

    let classes: Vec<String> = ["Bug Report", "Feature Request", "Other"].map(String::from).to_vec();
    let truth: HashMap<String, String> = items.iter().cloned().collect();
    let preds: Vec<Prediction> = items
        .iter()
        .enumerate()
        .map(|(i, (id, label))| Prediction {
            record_id: id.clone(),
            model_id: "m".into(),
            raw_output: String::new(),
            label: Some(if i % 10 == 0 { "Feature Request".to_string() } else { label.clone() }),
            status: ParseStatus::Ok,
        })
        .collect();
    let cm = confusion(&classes, &truth, &preds)?;
    let per_class = classes.iter().map(|c| class_prf(&cm, c)).collect::<Result<Vec<_>, _>>()?;
    let avg = macro_avg(&per_class)?;
    let rows: Vec<MetricRow> = per_class
        .iter()
        .map(|c| MetricRow {
            group: "demo".into(),
            target_label: c.class_name.clone(),
            app: "all".into(),
            condition: "m".into(),
            precision: c.precision,
            recall: c.recall,
            f1: c.f1,
            support: c.support,
        })
        .collect();
    print!("{}", emit_report(&rows, ReportFormat::Markdown)?);
    println!("macro F1 {:.3}", avg.f1);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
