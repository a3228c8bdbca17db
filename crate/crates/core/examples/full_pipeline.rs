// The whole protocol on a synthetic corpus with four mock models and the
// built-in naive Bayes trainer: classification, consensus, augmented
// training sets, cross-validated training and the condition report.

use std::error::Error;
use std::path::Path;

use feedback_consensus::manifest::RunManifest;
use feedback_consensus::pipeline::{run_all, Layout};
use feedback_consensus::synth::demo_workspace;
use feedback_consensus::trainer::NaiveBayesTrainer;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    run_in(dir.path())
}

pub fn run_in(dir: &Path) -> Result<(), Box<dyn Error>> {
    let manifest = RunManifest::load(&demo_workspace(dir)?)?;
    let out = dir.join("out");
    let layout = Layout::new(&out);
    let trainer = NaiveBayesTrainer::new(&out);
    let summary = run_all(&manifest, &layout, Some(&trainer))?;
    println!("{} metric rows", summary.rows.len());
    let report = std::fs::read_to_string(out.join("reports").join("demo-augment.md"))?;
    for line in report.lines().take(8) {
        println!("{line}");
    }
    Ok(())
}

/// With a directory argument the workspace and outputs are kept there.
#[allow(dead_code)]
fn main() {
    match std::env::args_os().nth(1) {
        Some(dir) => {
            std::fs::create_dir_all(&dir).unwrap();
            run_in(Path::new(&dir)).unwrap();
        }
        None => run_example().unwrap(),
    }
}
