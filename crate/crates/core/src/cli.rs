//! Command-line entry point. Exit codes: 0 success, 1 validation error,
//! 2 runtime error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::manifest::{RunManifest, SchemeChoice};
use crate::pipeline::{self, AugmentStage, Layout, PipelineError};
use crate::trainer::{trainer_for_command, Trainer};

#[derive(Debug, Parser)]
#[command(name = "feedback-consensus", version, about = "Classify user feedback with LLM ensembles and build augmented training sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest, filter and deduplicate datasets with their original labels.
    Ingest(Common),
    /// Ingest and project labels onto the coarse scheme.
    Adapt(Common),
    /// Select few-shot examples.
    Shots(Common),
    /// Classify datasets with every endpoint and score the predictions.
    Classify(Common),
    /// Unanimous-agreement labels from stored predictions.
    Consensus(Common),
    /// Write the per-condition training sets.
    Augment(Common),
    /// Write training sets and their fold plans.
    Folds(Common),
    /// Score stored predictions.
    Evaluate(Common),
    /// Render reports from metrics.jsonl.
    Report(Common),
    /// Every stage configured in the manifest.
    Run(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Ingest(c)
            | Command::Adapt(c)
            | Command::Shots(c)
            | Command::Classify(c)
            | Command::Consensus(c)
            | Command::Augment(c)
            | Command::Folds(c)
            | Command::Evaluate(c)
            | Command::Report(c)
            | Command::Run(c) => c,
        }
    }
}

fn trainer(m: &RunManifest, layout: &Layout) -> Option<Box<dyn Trainer>> {
    let spec = m.augmentation.as_ref()?.trainer.as_ref()?;
    trainer_for_command(&spec.command, layout.root()).ok()
}

fn execute(command: &Command) -> Result<Vec<String>, PipelineError> {
    let common = command.common();
    let mut m = RunManifest::load(&common.manifest)?;
    if let Some(seed) = common.seed {
        m.seed = seed;
    }
    std::fs::create_dir_all(&common.out_dir).map_err(pipeline::at("setup"))?;
    let layout = Layout::new(&common.out_dir);
    let mut lines = Vec::new();
    match command {
        Command::Ingest(_) | Command::Adapt(_) => {
            let choice = if matches!(command, Command::Ingest(_)) { SchemeChoice::Original } else { SchemeChoice::Coarse };
            for (id, ds) in pipeline::prepare(&m, &layout, choice)? {
                lines.push(format!("{id}: {} records -> {}", ds.len(), layout.dataset(choice, &id).display()));
            }
        }
        Command::Shots(_) => {
            for (id, shots) in pipeline::run_shots(&m, &layout)? {
                lines.push(format!("{id}: {} shots", shots.len()));
            }
        }
        Command::Classify(_) => {
            let s = pipeline::run_classify(&m, &layout)?;
            lines.push(format!(
                "classified {} datasets: {} backend calls, {} cache hits, {} metric rows",
                s.outcome.classified.len(),
                s.outcome.backend_calls,
                s.outcome.cache_hits,
                s.rows.len()
            ));
        }
        Command::Consensus(_) => {
            for (id, results) in pipeline::run_consensus(&m, &layout)? {
                let agreed = results.iter().filter(|r| r.label.is_some()).count();
                lines.push(format!("{id}: {agreed} of {} records unanimous", results.len()));
            }
        }
        Command::Augment(_) | Command::Folds(_) => {
            let stage = if matches!(command, Command::Augment(_)) { AugmentStage::Sets } else { AugmentStage::Folds };
            let s = pipeline::run_augment_train(&m, &layout, None, stage)?;
            lines.extend(s.train_files.iter().map(|p| p.display().to_string()));
        }
        Command::Evaluate(_) => {
            let rows = pipeline::run_evaluate(&m, &layout)?;
            lines.push(format!("{} metric rows", rows.len()));
        }
        Command::Report(_) => {
            let rows = pipeline::run_report(&m, &layout)?;
            lines.push(format!("{} rows -> {}", rows.len(), layout.reports().join(&m.run_id).display()));
        }
        Command::Run(_) => {
            let t = trainer(&m, &layout);
            let s = pipeline::run_all(&m, &layout, t.as_deref())?;
            lines.push(format!("{} metric rows", s.rows.len()));
            if let Some(a) = &s.augment {
                if !a.skipped.is_empty() {
                    lines.push(format!("trainer unavailable, skipped: {}", a.skipped.join(", ")));
                }
            }
        }
    }
    Ok(lines)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
