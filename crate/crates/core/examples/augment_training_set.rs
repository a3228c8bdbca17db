// Add consensus-labeled records to a human-labeled set at ratio 0.3 and
// write the trainer's `train.jsonl`.

use std::error::Error;

use feedback_consensus::augment::{merge_training_set, sample_augmentation, write_train_jsonl, AugmentMode};
use feedback_consensus::corpus::{CoarseLabel, Dataset, Provenance, Source};
use feedback_consensus::synth::{generate, LabelGroup};

fn groups(counts: [usize; 3]) -> Vec<LabelGroup> {
    CoarseLabel::ALL.iter().zip(counts).map(|(l, n)| LabelGroup::new(l.display_name(), *l, n)).collect()
}

/// Generated records carry the coarse name as their original label.
fn with_coarse(ds: Dataset, provenance: Provenance) -> Result<Dataset, Box<dyn Error>> {
    let records = ds
        .into_records()
        .into_iter()
        .map(|mut r| {
            r.coarse_label = r.original_label.as_deref().and_then(CoarseLabel::from_name);
            r.provenance = provenance;
            r
        })
        .collect();
    Ok(Dataset::new(records)?)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let human = with_coarse(generate("DS3", Source::AppStore, &groups([100, 40, 200]), &[], 1, 1), Provenance::Human)?;
    let pool = with_coarse(generate("GP", Source::AppStore, &groups([40, 20, 70]), &["Maps", "Mail"], 2, 2), Provenance::LlmConsensus)?;

    let aug = sample_augmentation(&human, &pool, 0.3, AugmentMode::Random, None, &Dataset::empty(), 42)?;
    println!("human {:?} + synthetic {:?}", human.coarse_counts(), aug.synthetic.coarse_counts());
    assert_eq!(aug.synthetic.coarse_counts(), [30, 12, 60]);

    let dir = tempfile::tempdir()?;
    let rows = write_train_jsonl(&dir.path().join("train.jsonl"), &merge_training_set(&aug))?;
    println!("wrote {rows} rows");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
