use std::path::{Path, PathBuf};

use crate::gateway::dir_name;
use crate::manifest::SchemeChoice;

/// Where every stage writes under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

/// Name of one classification configuration, e.g. `coarse-0shot`.
pub fn run_tag(choice: SchemeChoice, shots_per_class: usize) -> String {
    format!("{}-{shots_per_class}shot", choice.as_str())
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout { root: root.to_path_buf() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset(&self, choice: SchemeChoice, id: &str) -> PathBuf {
        self.root.join("datasets").join(choice.as_str()).join(format!("{}.jsonl", dir_name(id)))
    }

    pub fn dataset_summary(&self, choice: SchemeChoice) -> PathBuf {
        self.root.join("datasets").join(choice.as_str()).join("summary.json")
    }

    pub fn shots(&self, tag: &str, id: &str) -> PathBuf {
        self.root.join("shots").join(tag).join(format!("{}.json", dir_name(id)))
    }

    pub fn predictions(&self, tag: &str, id: &str, model: &str) -> PathBuf {
        self.root.join("predictions").join(tag).join(dir_name(id)).join(format!("{}.jsonl", dir_name(model)))
    }

    pub fn failures(&self, tag: &str, id: &str, model: &str) -> PathBuf {
        self.root.join("predictions").join(tag).join(dir_name(id)).join(format!("{}.errors.jsonl", dir_name(model)))
    }

    pub fn review_queue(&self, tag: &str, id: &str) -> PathBuf {
        self.root.join("predictions").join(tag).join(dir_name(id)).join("review_queue.jsonl")
    }

    pub fn consensus(&self, tag: &str, id: &str) -> PathBuf {
        self.root.join("consensus").join(tag).join(format!("{}.jsonl", dir_name(id)))
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn stage_metrics(&self, stem: &str) -> PathBuf {
        self.root.join("metrics").join(format!("{stem}.jsonl"))
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.jsonl")
    }

    pub fn default_cache(&self) -> PathBuf {
        self.root.join("cache")
    }

    /// Relative to the root, so trainer jobs do not embed the output
    /// location.
    pub fn eval_rel(&self, app: &str) -> PathBuf {
        Path::new("augment").join("eval").join(format!("{}.jsonl", dir_name(app)))
    }

    pub fn condition_rel(&self, setting: &str, condition_dir: &str) -> PathBuf {
        Path::new("augment").join(dir_name(setting)).join(condition_dir)
    }
}
