// Zero-shot and one-shot prompts for the coarse and a fine-grained scheme.

use std::error::Error;

use feedback_consensus::corpus::{CoarseLabel, Dataset, FeedbackRecord, Source};
use feedback_consensus::prompt::{build_prompt, select_shots};
use feedback_consensus::scheme::Scheme;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let coarse = Scheme::coarse();
    let sample = FeedbackRecord::human("DS3", Source::AppStore, "s1", "Search returns nothing since the update");
    let zero = build_prompt(&coarse, &sample, &[])?;
    println!("--- system ---\n{}\n--- user ---\n{}\n", zero.context, zero.instruction);

    let labeled = Dataset::new(vec![
        FeedbackRecord::human("DS3", Source::AppStore, "a", "App closes when I tap share").with_coarse_label(CoarseLabel::BugReport),
        FeedbackRecord::human("DS3", Source::AppStore, "b", "Could you add a sleep timer").with_coarse_label(CoarseLabel::FeatureRequest),
        FeedbackRecord::human("DS3", Source::AppStore, "c", "Best podcast app I have used").with_coarse_label(CoarseLabel::Other),
        sample.clone().with_coarse_label(CoarseLabel::BugReport),
    ])?;
    let (shots, remaining) = select_shots(&labeled, &coarse, 1, 7)?;
    let target = remaining.iter().find(|r| r.id == "s1").unwrap_or(&sample);
    let one = build_prompt(&coarse, target, &shots)?;
    println!("one-shot context has {} shots, {} records left to classify", shots.len(), remaining.len());
    assert!(one.context.contains("Examples:"));

    let fine = Scheme::builtin("DS1")?;
    let fine_prompt = build_prompt(&fine, &sample, &[])?;
    println!("DS1 categories: {}", fine.names().join(", "));
    assert!(fine_prompt.instruction.contains("Usage Scenario"));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
