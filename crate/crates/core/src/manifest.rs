//! Run manifests: one TOML file describing datasets, endpoints, consensus
//! and augmentation for a whole experiment.
//!
//! Relative paths are resolved against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CoarseLabel, InputFormat, SchemeMapping, Source};
use crate::gateway::{EndpointConfig, MockBehavior, MockMode};
use crate::scheme::Scheme;
use crate::trainer::ClassWeighting;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse manifest {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    /// Each dataset's own categories.
    Original,
    #[default]
    Coarse,
}

impl SchemeChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeChoice::Original => "original",
            SchemeChoice::Coarse => "coarse",
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub id: String,
    pub path: PathBuf,
    /// `csv` or `jsonl`; inferred from the extension when absent.
    #[serde(default)]
    pub format: Option<InputFormat>,
    /// Falls back to the mapping's source.
    #[serde(default)]
    pub source: Option<Source>,
    /// Built-in mapping id or path to a mapping file. Datasets without one
    /// are treated as unlabeled.
    #[serde(default)]
    pub mapping: Option<String>,
    /// Category scheme used in `original` mode; defaults to `id`.
    #[serde(default)]
    pub scheme_id: Option<String>,
    #[serde(default = "yes")]
    pub classify: bool,
    #[serde(default = "yes")]
    pub filter_eligible: bool,
    /// Datasets whose texts are removed from this one.
    #[serde(default)]
    pub dedup_against: Vec<String>,
}

/// Mock backend settings. `accuracy` builds a uniform-error confusion
/// matrix sized to whichever scheme is in use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockSpec {
    pub mode: MockMode,
    #[serde(default)]
    pub fixture: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub confusion: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub accuracy: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl MockSpec {
    pub fn behavior(&self, classes: usize) -> MockBehavior {
        match (self.mode, self.accuracy) {
            (MockMode::SeededConfusion, Some(acc)) if self.confusion.is_none() => MockBehavior::uniform_errors(classes, acc, self.seed),
            _ => MockBehavior {
                mode: self.mode,
                fixture: self.fixture.clone(),
                confusion: self.confusion.clone(),
                seed: self.seed,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    #[serde(flatten)]
    pub config: EndpointConfig,
    #[serde(default)]
    pub mock: Option<MockSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingSpec {
    pub name: String,
    /// Primary human-labeled datasets.
    pub human: Vec<String>,
    /// Human-labeled dataset added in the Review-Aug condition.
    pub review_source: String,
}

fn default_ratio() -> f64 {
    0.3
}
fn default_folds() -> usize {
    5
}
fn default_targets() -> Vec<CoarseLabel> {
    vec![CoarseLabel::BugReport, CoarseLabel::FeatureRequest]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerSpec {
    /// Program and leading arguments. Elements naming an existing file
    /// relative to the manifest are made absolute.
    pub command: Vec<String>,
    #[serde(default)]
    pub epochs: Option<u32>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub max_sequence_length: Option<u32>,
    #[serde(default)]
    pub class_weighting: Option<ClassWeighting>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSpec {
    pub truth_dataset: String,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Apps of the truth dataset to evaluate on.
    pub target_apps: Vec<String>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_targets")]
    pub target_labels: Vec<CoarseLabel>,
    /// Datasets whose consensus-labeled records form the general pool.
    pub general_pool: Vec<String>,
    /// Datasets whose consensus-labeled records form the app-specific pool.
    pub app_pool: Vec<String>,
    /// Endpoint scored as the Zero-Shot condition; defaults to the first.
    #[serde(default)]
    pub zero_shot_model: Option<String>,
    pub settings: Vec<SettingSpec>,
    #[serde(default)]
    pub trainer: Option<TrainerSpec>,
}

impl AugmentationSpec {
    pub fn pool_datasets(&self) -> BTreeSet<&str> {
        self.general_pool.iter().chain(&self.app_pool).map(String::as_str).collect()
    }
}

fn default_run_id() -> String {
    "run".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default = "default_run_id")]
    pub run_id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeChoice,
    #[serde(default)]
    pub shots_per_class: usize,
    /// Directory with `definitions/` and `aliases/` overriding the
    /// built-in schemes.
    #[serde(default)]
    pub scheme_dir: Option<PathBuf>,
    /// Response cache; defaults to `<out-dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub endpoints: Vec<EndpointSpec>,
    #[serde(default)]
    pub consensus_required: Vec<String>,
    #[serde(default)]
    pub augmentation: Option<AugmentationSpec>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl RunManifest {
    /// Parses and validates; `base_dir` anchors relative paths.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ManifestError> {
        let mut m: RunManifest = toml::from_str(text).map_err(|e| ManifestError::Parse {
            path: base_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        m.base_dir = base_dir.to_path_buf();
        m.absolutize();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunManifest::parse(&text, &base).map_err(|e| match e {
            ManifestError::Parse { message, .. } => ManifestError::Parse { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn absolutize(&mut self) {
        for i in 0..self.datasets.len() {
            self.datasets[i].path = self.resolve(&self.datasets[i].path);
            if let Some(m) = self.datasets[i].mapping.clone() {
                let candidate = self.resolve(Path::new(&m));
                if crate::data::mapping_source(&m).is_none() && candidate.is_file() {
                    self.datasets[i].mapping = Some(candidate.to_string_lossy().into_owned());
                }
            }
        }
        self.scheme_dir = self.scheme_dir.as_deref().map(|p| self.resolve(p));
        self.cache_dir = self.cache_dir.as_deref().map(|p| self.resolve(p));
        let base = self.base_dir.clone();
        if let Some(t) = self.augmentation.as_mut().and_then(|a| a.trainer.as_mut()) {
            for part in &mut t.command {
                let candidate = base.join(&*part);
                if Path::new(part).is_relative() && part.contains('/') && candidate.is_file() {
                    *part = candidate.to_string_lossy().into_owned();
                }
            }
        }
    }

    pub fn dataset(&self, id: &str) -> Option<&DatasetSpec> {
        self.datasets.iter().find(|d| d.id == id)
    }

    pub fn endpoint_ids(&self) -> Vec<&str> {
        self.endpoints.iter().map(|e| e.config.model_id.as_str()).collect()
    }

    pub fn required_models(&self) -> BTreeSet<String> {
        self.consensus_required.iter().cloned().collect()
    }

    pub fn mapping(&self, spec: &DatasetSpec) -> Result<Option<SchemeMapping>, ManifestError> {
        spec.mapping
            .as_deref()
            .map(|m| SchemeMapping::resolve(m).map_err(|e| ManifestError::Invalid(format!("dataset `{}`: {e}", spec.id))))
            .transpose()
    }

    pub fn format(&self, spec: &DatasetSpec) -> Result<InputFormat, ManifestError> {
        spec.format
            .or_else(|| InputFormat::from_path(&spec.path))
            .ok_or_else(|| ManifestError::Invalid(format!("dataset `{}`: cannot infer format of {}", spec.id, spec.path.display())))
    }

    pub fn source(&self, spec: &DatasetSpec) -> Result<Source, ManifestError> {
        if let Some(s) = spec.source {
            return Ok(s);
        }
        self.mapping(spec)?
            .and_then(|m| m.source)
            .ok_or_else(|| ManifestError::Invalid(format!("dataset `{}`: no source given", spec.id)))
    }

    /// Scheme for classifying `spec` under `choice`.
    pub fn scheme_for(&self, spec: &DatasetSpec, choice: SchemeChoice) -> Result<Scheme, ManifestError> {
        let id = match choice {
            SchemeChoice::Coarse => crate::data::COARSE_SCHEME,
            SchemeChoice::Original => spec.scheme_id.as_deref().unwrap_or(&spec.id),
        };
        let scheme = match &self.scheme_dir {
            Some(dir) if dir.join("definitions").join(format!("{id}.toml")).is_file() => Scheme::load_dir(dir, id),
            _ => Scheme::builtin(id),
        };
        scheme.map_err(|e| ManifestError::Invalid(format!("dataset `{}`: {e}", spec.id)))
    }

    pub fn zero_shot_model(&self) -> Option<&str> {
        let aug = self.augmentation.as_ref()?;
        aug.zero_shot_model.as_deref().or_else(|| self.endpoints.first().map(|e| e.config.model_id.as_str()))
    }

    /// Checks everything that can be checked without reading datasets or
    /// contacting endpoints.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let invalid = |m: String| Err(ManifestError::Invalid(m));
        if self.shots_per_class > 1 {
            return invalid(format!("shots_per_class must be 0 or 1, got {}", self.shots_per_class));
        }
        if self.run_id.is_empty() || crate::gateway::dir_name(&self.run_id) != self.run_id {
            return invalid(format!("run_id `{}` must use only letters, digits, `.`, `-`, `_`", self.run_id));
        }
        if self.datasets.is_empty() {
            return invalid("no datasets".into());
        }
        let mut ids = BTreeSet::new();
        for d in &self.datasets {
            if !ids.insert(d.id.as_str()) {
                return invalid(format!("dataset `{}` listed twice", d.id));
            }
        }
        for d in &self.datasets {
            if !d.path.is_file() {
                return invalid(format!("dataset `{}`: no file at {}", d.id, d.path.display()));
            }
            self.format(d)?;
            self.source(d)?;
            for other in &d.dedup_against {
                if !ids.contains(other.as_str()) || other == &d.id {
                    return invalid(format!("dataset `{}`: bad dedup_against entry `{other}`", d.id));
                }
            }
            if d.classify && !self.endpoints.is_empty() {
                let scheme = self.scheme_for(d, self.scheme)?;
                self.check_mocks(&scheme)?;
            }
        }

        let mut models = BTreeSet::new();
        for e in &self.endpoints {
            e.config.validate().map_err(|err| ManifestError::Invalid(err.to_string()))?;
            if !models.insert(e.config.model_id.as_str()) {
                return invalid(format!("endpoint `{}` listed twice", e.config.model_id));
            }
            if e.mock.is_none() && e.config.base_url.is_empty() {
                return invalid(format!("endpoint `{}` needs a base_url or a mock", e.config.model_id));
            }
        }
        for m in &self.consensus_required {
            if !models.contains(m.as_str()) {
                return invalid(format!("consensus_required names unknown endpoint `{m}`"));
            }
        }
        if let Some(aug) = &self.augmentation {
            self.validate_augmentation(aug, &ids, &models)?;
        }
        Ok(())
    }

    fn check_mocks(&self, scheme: &Scheme) -> Result<(), ManifestError> {
        for e in &self.endpoints {
            if let Some(mock) = &e.mock {
                mock.behavior(scheme.len())
                    .validate(scheme.len())
                    .map_err(|err| ManifestError::Invalid(format!("endpoint `{}` on scheme `{}`: {err}", e.config.model_id, scheme.id())))?;
            }
        }
        Ok(())
    }

    fn validate_augmentation(&self, aug: &AugmentationSpec, ids: &BTreeSet<&str>, models: &BTreeSet<&str>) -> Result<(), ManifestError> {
        let invalid = |m: String| Err(ManifestError::Invalid(m));
        if !(aug.ratio > 0.0 && aug.ratio <= 1.0) {
            return invalid(format!("augmentation ratio {} outside (0, 1]", aug.ratio));
        }
        if aug.folds < 2 {
            return invalid(format!("augmentation folds must be at least 2, got {}", aug.folds));
        }
        if aug.target_apps.is_empty() || aug.target_apps.iter().any(|a| a.is_empty()) {
            return invalid("augmentation needs at least one target app".into());
        }
        if aug.target_labels.is_empty() || aug.target_labels.contains(&CoarseLabel::Other) {
            return invalid("target_labels must be a non-empty subset of BugReport, FeatureRequest".into());
        }
        if self.endpoints.is_empty() || self.consensus_required.is_empty() {
            return invalid("augmentation needs endpoints and consensus_required".into());
        }
        if let Some(z) = self.zero_shot_model() {
            if !models.contains(z) {
                return invalid(format!("zero_shot_model names unknown endpoint `{z}`"));
            }
        }
        let labeled = |id: &str, role: &str| -> Result<(), ManifestError> {
            match self.dataset(id) {
                None => Err(ManifestError::Invalid(format!("augmentation {role} `{id}` is not a dataset"))),
                Some(d) if d.mapping.is_none() => Err(ManifestError::Invalid(format!("augmentation {role} `{id}` needs a mapping"))),
                Some(d) => self.mapping(d).map(|_| ()),
            }
        };
        labeled(&aug.truth_dataset, "truth dataset")?;
        for pool in aug.pool_datasets() {
            if !ids.contains(pool) {
                return invalid(format!("augmentation pool `{pool}` is not a dataset"));
            }
        }
        if aug.general_pool.is_empty() || aug.app_pool.is_empty() {
            return invalid("augmentation needs general_pool and app_pool datasets".into());
        }
        if aug.settings.is_empty() {
            return invalid("augmentation needs at least one setting".into());
        }
        let mut names = BTreeSet::new();
        for s in &aug.settings {
            if !names.insert(s.name.as_str()) || crate::gateway::dir_name(&s.name) != s.name {
                return invalid(format!("setting name `{}` is duplicated or not path-safe", s.name));
            }
            if s.human.is_empty() {
                return invalid(format!("setting `{}` has no human datasets", s.name));
            }
            for h in &s.human {
                labeled(h, "human dataset")?;
            }
            labeled(&s.review_source, "review source")?;
        }
        self.check_mocks(&Scheme::coarse())?;
        if let Some(t) = &aug.trainer {
            if t.command.is_empty() {
                return invalid("trainer command is empty".into());
            }
        }
        Ok(())
    }
}
