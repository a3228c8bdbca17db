// Turn free-form model answers into category labels.

use std::error::Error;

use feedback_consensus::extraction::{extract_label, review_queue, Prediction};
use feedback_consensus::scheme::Scheme;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let scheme = Scheme::coarse();
    let outputs = [
        "Category: Bug Report",
        "This is clearly a **feature request**.",
        "It's a bug - the app crashes. Definitely a bug report.",
        "Could be a bug report or a feature request.",
        "I need to debug this further.",
        "Other",
    ];
    let mut preds = Vec::new();
    for (i, raw) in outputs.iter().enumerate() {
        let (label, status) = extract_label(raw, &scheme);
        println!("{raw:<58} -> {label:?} ({status:?})");
        preds.push(Prediction::from_output(&format!("r{i}"), "m", raw, &scheme));
    }
    let queue = review_queue(&preds);
    println!("{} outputs need manual review", queue.len());
    assert_eq!(queue.len(), 2);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
