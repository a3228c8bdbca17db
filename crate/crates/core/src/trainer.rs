//! File contract with the external fine-tuning component.
//!
//! The trainer is a separate program invoked as
//! `<command> train --job <job.json>` and
//! `<command> predict --model <dir> --eval <eval.jsonl> --out <predictions.jsonl>`.
//! Training and evaluation files share the `train.jsonl` row layout.
//! Relative paths in jobs and arguments are resolved against the trainer's
//! working directory.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{write_train_jsonl, TrainRow, WriteTrainError};
use crate::corpus::{CoarseLabel, Dataset, TokenCleaner};
use crate::jsonl::{self, JsonlError};

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("trainer unavailable: {0}")]
    Unavailable(String),
    #[error("trainer `{step}` exited with {status}: {stderr}")]
    Failed { step: String, status: String, stderr: String },
    #[error("invalid train job: {0}")]
    InvalidJob(String),
    #[error("{path}: line {line}: {message}")]
    Schema { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Write(#[from] WriteTrainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    Balanced,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainJob {
    pub train_path: PathBuf,
    pub target_label: CoarseLabel,
    pub class_weighting: ClassWeighting,
    pub epochs: u32,
    pub learning_rate: f64,
    pub max_sequence_length: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl TrainJob {
    /// Job with the default hyperparameters (3 epochs, 2e-5, 128 tokens,
    /// balanced class weights).
    pub fn new(train_path: &Path, target_label: CoarseLabel, output_dir: &Path, seed: u64) -> Self {
        TrainJob {
            train_path: train_path.to_path_buf(),
            target_label,
            class_weighting: ClassWeighting::Balanced,
            epochs: 3,
            learning_rate: 2e-5,
            max_sequence_length: 128,
            seed,
            output_dir: output_dir.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<(), TrainerError> {
        if self.target_label == CoarseLabel::Other {
            return Err(TrainerError::InvalidJob("target label must be BugReport or FeatureRequest".into()));
        }
        if self.epochs == 0 {
            return Err(TrainerError::InvalidJob("epochs must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.max_sequence_length == 0 {
            return Err(TrainerError::InvalidJob("learning rate and sequence length must be positive".into()));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), TrainerError> {
        self.validate()?;
        let io_err = |source| TrainerError::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
        let text = serde_json::to_string_pretty(self).expect("job serializes");
        std::fs::write(path, text + "\n").map_err(io_err)
    }
}

/// One line of `predictions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerPrediction {
    pub record_id: String,
    pub predicted: bool,
    pub score: f64,
}

/// Evaluation file for the trainer; same layout as `train.jsonl`.
pub fn write_eval_jsonl(path: &Path, ds: &Dataset) -> Result<usize, TrainerError> {
    Ok(write_train_jsonl(path, ds)?)
}

/// Reads predictions and checks every score lies in [0, 1].
pub fn read_predictions(path: &Path) -> Result<Vec<TrainerPrediction>, TrainerError> {
    let rows: Vec<TrainerPrediction> = jsonl::read(path)?;
    for (i, r) in rows.iter().enumerate() {
        if !(0.0..=1.0).contains(&r.score) {
            return Err(TrainerError::Schema {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("score {} outside [0, 1]", r.score),
            });
        }
    }
    Ok(rows)
}

pub trait Trainer {
    fn train(&self, job: &TrainJob, job_path: &Path) -> Result<(), TrainerError>;
    fn predict(&self, model_dir: &Path, eval_path: &Path, out_path: &Path) -> Result<(), TrainerError>;
}

/// Runs the trainer as a child process. `command` is the program followed
/// by any leading arguments, e.g. `["python3", "-m", "trainer"]`.
#[derive(Debug, Clone)]
pub struct ProcessTrainer {
    command: Vec<String>,
    workdir: Option<PathBuf>,
}

impl ProcessTrainer {
    pub fn new(command: Vec<String>) -> Result<Self, TrainerError> {
        if command.is_empty() {
            return Err(TrainerError::Unavailable("no trainer command configured".into()));
        }
        Ok(ProcessTrainer { command, workdir: None })
    }

    pub fn in_dir(mut self, dir: &Path) -> Self {
        self.workdir = Some(dir.to_path_buf());
        self
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.workdir {
            Some(dir) => dir.join(p),
            None => p.to_path_buf(),
        }
    }

    fn run(&self, step: &str, args: &[&std::ffi::OsStr]) -> Result<(), TrainerError> {
        let mut cmd = Command::new(&self.command[0]);
        cmd.args(&self.command[1..]).arg(step).args(args);
        if let Some(dir) = &self.workdir {
            cmd.current_dir(dir);
        }
        let output = cmd
            .output()
            .map_err(|e| TrainerError::Unavailable(format!("cannot run `{}`: {e}", self.command[0])))?;
        if output.status.success() {
            Ok(())
        } else {
            Err(TrainerError::Failed {
                step: step.to_string(),
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            })
        }
    }
}

impl Trainer for ProcessTrainer {
    fn train(&self, job: &TrainJob, job_path: &Path) -> Result<(), TrainerError> {
        job.write(&self.resolve(job_path))?;
        self.run("train", &["--job".as_ref(), job_path.as_os_str()])
    }

    fn predict(&self, model_dir: &Path, eval_path: &Path, out_path: &Path) -> Result<(), TrainerError> {
        create_parent(&self.resolve(out_path))?;
        self.run(
            "predict",
            &[
                "--model".as_ref(),
                model_dir.as_os_str(),
                "--eval".as_ref(),
                eval_path.as_os_str(),
                "--out".as_ref(),
                out_path.as_os_str(),
            ],
        )
    }
}

fn create_parent(path: &Path) -> Result<(), TrainerError> {
    match path.parent() {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|source| TrainerError::Io { path: dir.to_path_buf(), source }),
        None => Ok(()),
    }
}

/// In-process multinomial naive Bayes over cleaned tokens, following the
/// same file contract. Meant for offline dry runs and tests, not as a
/// substitute for the fine-tuned encoder.
#[derive(Debug, Clone)]
pub struct NaiveBayesTrainer {
    workdir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct NaiveBayesModel {
    target_label: CoarseLabel,
    log_prior_ratio: f64,
    positive_total: u64,
    negative_total: u64,
    /// token → (positive count, negative count)
    counts: BTreeMap<String, (u64, u64)>,
}

impl NaiveBayesTrainer {
    pub fn new(workdir: &Path) -> Self {
        NaiveBayesTrainer { workdir: workdir.to_path_buf() }
    }

    fn model_path(&self, model_dir: &Path) -> PathBuf {
        self.workdir.join(model_dir).join("model.json")
    }
}

impl Trainer for NaiveBayesTrainer {
    fn train(&self, job: &TrainJob, job_path: &Path) -> Result<(), TrainerError> {
        job.write(&self.workdir.join(job_path))?;
        let rows: Vec<TrainRow> = jsonl::read(&self.workdir.join(&job.train_path))?;
        let cleaner = TokenCleaner::default();
        let mut model = NaiveBayesModel {
            target_label: job.target_label,
            log_prior_ratio: 0.0,
            positive_total: 0,
            negative_total: 0,
            counts: BTreeMap::new(),
        };
        let (mut pos_docs, mut neg_docs) = (0u64, 0u64);
        for row in &rows {
            let positive = row.coarse_label == job.target_label;
            if positive {
                pos_docs += 1;
            } else {
                neg_docs += 1;
            }
            for token in cleaner.clean(&row.text) {
                let entry = model.counts.entry(token).or_default();
                if positive {
                    entry.0 += 1;
                    model.positive_total += 1;
                } else {
                    entry.1 += 1;
                    model.negative_total += 1;
                }
            }
        }
        if pos_docs == 0 || neg_docs == 0 {
            return Err(TrainerError::InvalidJob("training file holds a single class".into()));
        }
        if job.class_weighting == ClassWeighting::None {
            model.log_prior_ratio = (pos_docs as f64).ln() - (neg_docs as f64).ln();
        }
        let path = self.model_path(&job.output_dir);
        create_parent(&path)?;
        let text = serde_json::to_string(&model).expect("model serializes");
        std::fs::write(&path, text).map_err(|source| TrainerError::Io { path, source })
    }

    fn predict(&self, model_dir: &Path, eval_path: &Path, out_path: &Path) -> Result<(), TrainerError> {
        let path = self.model_path(model_dir);
        let text = std::fs::read_to_string(&path).map_err(|source| TrainerError::Io { path: path.clone(), source })?;
        let model: NaiveBayesModel = serde_json::from_str(&text).map_err(|e| TrainerError::Schema {
            path: path.clone(),
            line: 1,
            message: e.to_string(),
        })?;
        let rows: Vec<TrainRow> = jsonl::read(&self.workdir.join(eval_path))?;
        let cleaner = TokenCleaner::default();
        let vocab = model.counts.len() as f64;
        let preds: Vec<TrainerPrediction> = rows
            .iter()
            .map(|row| {
                let mut log_odds = model.log_prior_ratio;
                for token in cleaner.clean(&row.text) {
                    let (p, n) = model.counts.get(&token).copied().unwrap_or_default();
                    log_odds += ((p as f64 + 1.0) / (model.positive_total as f64 + vocab)).ln();
                    log_odds -= ((n as f64 + 1.0) / (model.negative_total as f64 + vocab)).ln();
                }
                let score = 1.0 / (1.0 + (-log_odds).exp());
                TrainerPrediction {
                    record_id: row.id.clone(),
                    predicted: score >= 0.5,
                    score,
                }
            })
            .collect();
        let out = self.workdir.join(out_path);
        create_parent(&out)?;
        jsonl::write(&out, &preds)?;
        Ok(())
    }
}

/// Trainer named by a manifest command. `builtin:naive-bayes` selects
/// [`NaiveBayesTrainer`]; anything else runs as a child process.
pub fn trainer_for_command(command: &[String], workdir: &Path) -> Result<Box<dyn Trainer>, TrainerError> {
    match command {
        [only] if only == "builtin:naive-bayes" => Ok(Box::new(NaiveBayesTrainer::new(workdir))),
        _ => Ok(Box::new(ProcessTrainer::new(command.to_vec())?.in_dir(workdir))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_json_shape() {
        let job = TrainJob::new(Path::new("a/train.jsonl"), CoarseLabel::BugReport, Path::new("a/model"), 7);
        let v: serde_json::Value = serde_json::to_value(&job).unwrap();
        assert_eq!(v["target_label"], "BugReport");
        assert_eq!(v["class_weighting"], "balanced");
        assert_eq!(v["epochs"], 3);
        assert_eq!(v["max_sequence_length"], 128);
        assert_eq!(v["train_path"], "a/train.jsonl");
    }

    #[test]
    fn job_validation() {
        let mut job = TrainJob::new(Path::new("t"), CoarseLabel::Other, Path::new("o"), 0);
        assert!(matches!(job.validate(), Err(TrainerError::InvalidJob(_))));
        job.target_label = CoarseLabel::FeatureRequest;
        job.epochs = 0;
        assert!(matches!(job.validate(), Err(TrainerError::InvalidJob(_))));
        job.epochs = 1;
        job.validate().unwrap();
    }

    #[test]
    fn predictions_range_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("predictions.jsonl");
        std::fs::write(&p, "{\"record_id\":\"a\",\"predicted\":true,\"score\":0.9}\n{\"record_id\":\"b\",\"predicted\":false,\"score\":1.5}\n").unwrap();
        match read_predictions(&p) {
            Err(TrainerError::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, "").unwrap();
        assert!(read_predictions(&p).unwrap().is_empty());
    }

    fn rows(items: &[(&str, &str, CoarseLabel)]) -> Dataset {
        use crate::corpus::{FeedbackRecord, Source};
        Dataset::new(
            items
                .iter()
                .map(|(id, text, l)| FeedbackRecord::human("T", Source::AppStore, id, text).with_coarse_label(*l))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn naive_bayes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let train = rows(&[
            ("a", "app crashes when opening photos", CoarseLabel::BugReport),
            ("b", "crashes constantly after login screen", CoarseLabel::BugReport),
            ("c", "please add dark mode option", CoarseLabel::FeatureRequest),
            ("d", "love this wonderful app", CoarseLabel::Other),
        ]);
        write_train_jsonl(&dir.path().join("train.jsonl"), &train).unwrap();
        let eval = rows(&[("x", "it crashes on photos", CoarseLabel::BugReport), ("y", "add a dark option", CoarseLabel::FeatureRequest)]);
        write_eval_jsonl(&dir.path().join("eval.jsonl"), &eval).unwrap();

        let t = NaiveBayesTrainer::new(dir.path());
        let job = TrainJob::new(Path::new("train.jsonl"), CoarseLabel::BugReport, Path::new("model"), 1);
        t.train(&job, Path::new("job.json")).unwrap();
        t.predict(Path::new("model"), Path::new("eval.jsonl"), Path::new("out/p.jsonl")).unwrap();
        let preds = read_predictions(&dir.path().join("out/p.jsonl")).unwrap();
        assert_eq!(preds.iter().map(|p| (p.record_id.as_str(), p.predicted)).collect::<Vec<_>>(), [("x", true), ("y", false)]);
        assert!(dir.path().join("job.json").is_file());

        let single = rows(&[("a", "app crashes when opening", CoarseLabel::BugReport)]);
        write_train_jsonl(&dir.path().join("single.jsonl"), &single).unwrap();
        let job = TrainJob::new(Path::new("single.jsonl"), CoarseLabel::BugReport, Path::new("m2"), 1);
        assert!(matches!(t.train(&job, Path::new("j2.json")), Err(TrainerError::InvalidJob(_))));
    }

    #[test]
    fn missing_program_is_unavailable() {
        let t = ProcessTrainer::new(vec!["definitely-not-a-trainer-binary".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let job = TrainJob::new(&dir.path().join("t.jsonl"), CoarseLabel::BugReport, dir.path(), 1);
        assert!(matches!(t.train(&job, &dir.path().join("job.json")), Err(TrainerError::Unavailable(_))));
        assert!(matches!(ProcessTrainer::new(vec![]), Err(TrainerError::Unavailable(_))));
    }
}
