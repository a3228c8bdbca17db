// Keep only the records all four models agree on.

use std::collections::BTreeSet;
use std::error::Error;

use feedback_consensus::consensus::build_consensus_dataset;
use feedback_consensus::corpus::{CoarseLabel, Dataset, FeedbackRecord, Source};
use feedback_consensus::extraction::Prediction;
use feedback_consensus::gateway::{mock_classify, MockBehavior};
use feedback_consensus::scheme::Scheme;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let scheme = Scheme::coarse();
    let models: Vec<String> = ["gpt", "llama", "flan", "mixtral"].map(String::from).to_vec();
    let mut records = Vec::new();
    let mut preds = Vec::new();
    for i in 0..2000 {
        let truth = CoarseLabel::ALL[i % 3];
        let id = format!("u{i}");
        records.push(FeedbackRecord::human("pool", Source::AppStore, &id, &format!("unlabeled review {i}")).with_coarse_label(truth));
        for (k, model) in models.iter().enumerate() {
            let behavior = MockBehavior::uniform_errors(3, 0.8, k as u64);
            let raw = mock_classify(&behavior, &scheme, Some(truth.display_name()), &id, model)?;
            preds.push(Prediction::from_output(&id, model, &raw, &scheme));
        }
    }
    let universe = Dataset::new(records)?;
    let required: BTreeSet<String> = models.iter().cloned().collect();
    let (agreed, _) = build_consensus_dataset(&universe, &preds, &required)?;
    let correct = agreed.iter().filter(|r| universe.get(&r.id).and_then(|u| u.coarse_label) == r.coarse_label).count();
    let precision = correct as f64 / agreed.len() as f64;
    println!("{} of {} records unanimous, precision {:.4}", agreed.len(), universe.len(), precision);
    assert!(precision > 0.99);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
