use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use super::{at, classify_datasets, consensus_for, prepare, write_stage_report, Layout, PipelineError};
use crate::augment::{merge_training_set, sample_augmentation, shuffled, write_train_jsonl, AugmentMode};
use crate::corpus::{dedup_overlap, CoarseLabel, Dataset};
use crate::eval::{binary_metrics, make_folds_for, ClassMetrics, Condition, FoldPlan, MetricRow};
use crate::manifest::{AugmentationSpec, ManifestError, RunManifest, SchemeChoice};
use crate::trainer::{read_predictions, write_eval_jsonl, TrainJob, Trainer, TrainerError};

/// How far [`run_augment_train`] goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AugmentStage {
    /// Training files only.
    Sets,
    /// Training files and fold plans.
    Folds,
    /// Everything, including trainer runs and the condition report.
    Train,
}

#[derive(Debug, Default)]
pub struct AugmentSummary {
    pub rows: Vec<MetricRow>,
    /// `<setting>/<condition>[/<app>]` entries not trained because the
    /// trainer is unavailable.
    pub skipped: Vec<String>,
    /// Training files written, relative to the output directory.
    pub train_files: Vec<PathBuf>,
}

struct TrainingSet {
    condition: Condition,
    /// Set for app-specific augmentation.
    app: Option<String>,
    records: Dataset,
}

impl TrainingSet {
    fn dir_name(&self) -> String {
        match &self.app {
            Some(app) => format!("{}-{}", self.condition.slug(), crate::gateway::dir_name(app)),
            None => self.condition.slug().to_string(),
        }
    }

    fn label(&self, setting: &str) -> String {
        match &self.app {
            Some(app) => format!("{setting}/{}/{app}", self.condition),
            None => format!("{setting}/{}", self.condition),
        }
    }
}

fn labeled_concat(prepared: &BTreeMap<String, Dataset>, ids: &[String]) -> Result<Dataset, PipelineError> {
    let parts: Vec<Dataset> = ids.iter().map(|id| prepared[id].filter(|r| r.coarse_label.is_some())).collect();
    Dataset::concat(&parts.iter().collect::<Vec<_>>()).map_err(at("augment"))
}

#[allow(clippy::too_many_arguments)]
fn training_sets(
    m: &RunManifest,
    aug: &AugmentationSpec,
    prepared: &BTreeMap<String, Dataset>,
    human_ids: &[String],
    review_id: &str,
    truth: &Dataset,
    general: &Dataset,
    app_pool: &Dataset,
) -> Result<Vec<TrainingSet>, PipelineError> {
    let human = labeled_concat(prepared, human_ids)?;
    let (human_clean, _) = dedup_overlap(&human, truth);
    let (review_clean, _) = dedup_overlap(&labeled_concat(prepared, &[review_id.to_string()])?, truth);
    let mut sets = vec![
        TrainingSet {
            condition: Condition::FineTuned,
            app: None,
            records: shuffled(human_clean.records().to_vec(), m.seed),
        },
        TrainingSet {
            condition: Condition::ReviewAug,
            app: None,
            records: shuffled(human_clean.iter().chain(review_clean.iter()).cloned().collect(), m.seed),
        },
    ];
    let random = sample_augmentation(&human, general, aug.ratio, AugmentMode::Random, None, truth, m.seed).map_err(at("augment"))?;
    sets.push(TrainingSet {
        condition: Condition::RandomAug,
        app: None,
        records: merge_training_set(&random),
    });
    for app in &aug.target_apps {
        let specific = sample_augmentation(&human, app_pool, aug.ratio, AugmentMode::AppSpecific, Some(app), truth, m.seed).map_err(at("augment"))?;
        sets.push(TrainingSet {
            condition: Condition::AppSpecificAug,
            app: Some(app.clone()),
            records: merge_training_set(&specific),
        });
    }
    Ok(sets)
}

fn mean_metrics(name: &str, folds: &[ClassMetrics]) -> ClassMetrics {
    let n = folds.len() as f64;
    ClassMetrics {
        class_name: name.to_string(),
        precision: folds.iter().map(|c| c.precision).sum::<f64>() / n,
        recall: folds.iter().map(|c| c.recall).sum::<f64>() / n,
        f1: folds.iter().map(|c| c.f1).sum::<f64>() / n,
        support: folds.first().map_or(0, |c| c.support),
    }
}

fn row(setting: &str, label: CoarseLabel, app: &str, condition: Condition, c: &ClassMetrics) -> MetricRow {
    MetricRow {
        group: setting.to_string(),
        target_label: label.display_name().to_string(),
        app: app.to_string(),
        condition: condition.display_name().to_string(),
        precision: c.precision,
        recall: c.recall,
        f1: c.f1,
        support: c.support,
    }
}

/// Trains one model per fold and target label on `set`, scores each on the
/// truth records of the apps it is evaluated on, and averages over folds.
/// Returns (label, app) → averaged metrics.
#[allow(clippy::too_many_arguments)]
fn train_and_score(
    m: &RunManifest,
    aug: &AugmentationSpec,
    layout: &Layout,
    trainer: &dyn Trainer,
    set_dir: &Path,
    set: &TrainingSet,
    plan: &FoldPlan,
    eval_sets: &BTreeMap<String, Dataset>,
) -> Result<BTreeMap<(CoarseLabel, String), ClassMetrics>, TrainerError> {
    let apps: Vec<&String> = match &set.app {
        Some(app) => vec![app],
        None => aug.target_apps.iter().collect(),
    };
    let mut per_fold: BTreeMap<(CoarseLabel, String), Vec<ClassMetrics>> = BTreeMap::new();
    for fold in 0..plan.k {
        let fold_dir = set_dir.join(format!("fold{fold}"));
        let (fold_train, _) = plan.split(&set.records, fold);
        let train_rel = fold_dir.join("train.jsonl");
        write_train_jsonl(&layout.root().join(&train_rel), &fold_train)?;
        for label in &aug.target_labels {
            let label_dir = fold_dir.join(format!("{label:?}"));
            let mut job = TrainJob::new(&train_rel, *label, &label_dir.join("model"), m.seed);
            if let Some(t) = &aug.trainer {
                job.epochs = t.epochs.unwrap_or(job.epochs);
                job.learning_rate = t.learning_rate.unwrap_or(job.learning_rate);
                job.max_sequence_length = t.max_sequence_length.unwrap_or(job.max_sequence_length);
                job.class_weighting = t.class_weighting.unwrap_or(job.class_weighting);
            }
            trainer.train(&job, &label_dir.join("job.json"))?;
            for app in &apps {
                let out_rel = label_dir.join(format!("predictions-{}.jsonl", crate::gateway::dir_name(app)));
                trainer.predict(&job.output_dir, &layout.eval_rel(app), &out_rel)?;
                let preds = read_predictions(&layout.root().join(&out_rel))?;
                let truth: HashMap<&str, bool> = eval_sets[*app].iter().map(|r| (r.id.as_str(), r.coarse_label == Some(*label))).collect();
                let mut pairs = Vec::with_capacity(preds.len());
                for p in &preds {
                    let t = truth.get(p.record_id.as_str()).ok_or_else(|| TrainerError::Schema {
                        path: out_rel.clone(),
                        line: pairs.len() + 1,
                        message: format!("unknown record `{}`", p.record_id),
                    })?;
                    pairs.push((*t, p.predicted));
                }
                if pairs.len() != truth.len() {
                    return Err(TrainerError::Schema {
                        path: out_rel.clone(),
                        line: pairs.len(),
                        message: format!("{} predictions for {} records", pairs.len(), truth.len()),
                    });
                }
                per_fold.entry((*label, (*app).clone())).or_default().push(binary_metrics(label.display_name(), pairs));
            }
        }
    }
    Ok(per_fold.into_iter().map(|(k, v)| (k.clone(), mean_metrics(k.0.display_name(), &v))).collect())
}

/// Builds the per-condition training sets for every setting, plans folds,
/// runs the trainer and reports the five conditions per (setting, target
/// label, app). Zero-Shot rows come from the zero-shot model's predictions
/// on the truth dataset. Without a usable trainer the trained conditions
/// are listed in `skipped` and only Zero-Shot rows are reported.
pub fn run_augment_train(m: &RunManifest, layout: &Layout, trainer: Option<&dyn Trainer>, until: AugmentStage) -> Result<AugmentSummary, PipelineError> {
    let aug = m
        .augmentation
        .as_ref()
        .ok_or_else(|| ManifestError::Invalid("manifest has no [augmentation] section".into()))?;
    let prepared = prepare(m, layout, SchemeChoice::Coarse)?;

    let mut ids: Vec<&str> = vec![aug.truth_dataset.as_str()];
    ids.extend(aug.pool_datasets().into_iter().filter(|id| *id != aug.truth_dataset));
    let outcome = classify_datasets(m, layout, &prepared, &ids, SchemeChoice::Coarse, 0)?;
    if outcome.failures > 0 {
        return Err(PipelineError::Stage {
            stage: "classify",
            message: format!("{} requests failed; see predictions/{}/*/*.errors.jsonl", outcome.failures, outcome.tag),
        });
    }
    let mut pools = BTreeMap::new();
    for id in aug.pool_datasets() {
        pools.insert(id.to_string(), consensus_for(m, layout, &outcome, id)?.0);
    }
    let pool_of = |ids: &[String]| Dataset::concat(&ids.iter().map(|id| &pools[id.as_str()]).collect::<Vec<_>>()).map_err(at("augment"));
    let general = pool_of(&aug.general_pool)?;
    let app_pool = pool_of(&aug.app_pool)?;

    let truth = &prepared[&aug.truth_dataset];
    let mut eval_sets = BTreeMap::new();
    for app in &aug.target_apps {
        let subset = truth.filter(|r| r.app_id.as_deref() == Some(app.as_str()));
        if subset.is_empty() {
            return Err(PipelineError::Stage {
                stage: "augment",
                message: format!("truth dataset `{}` has no records for app `{app}`", aug.truth_dataset),
            });
        }
        write_eval_jsonl(&layout.root().join(layout.eval_rel(app)), &subset).map_err(at("augment"))?;
        eval_sets.insert(app.clone(), subset);
    }

    let zero_shot_model = m.zero_shot_model().expect("validated manifest has endpoints");
    let zero_shot: HashMap<&str, Option<&str>> = outcome.predictions[&aug.truth_dataset][zero_shot_model]
        .iter()
        .map(|p| (p.record_id.as_str(), if p.is_ok() { p.label.as_deref() } else { None }))
        .collect();

    let mut summary = AugmentSummary::default();
    let mut trainer_state: Result<&dyn Trainer, String> = trainer.ok_or_else(|| "no trainer configured".to_string());
    for setting in &aug.settings {
        let sets = training_sets(m, aug, &prepared, &setting.human, &setting.review_source, truth, &general, &app_pool)?;
        let mut scores: BTreeMap<(Condition, CoarseLabel, String), ClassMetrics> = BTreeMap::new();
        for set in &sets {
            let set_dir = layout.condition_rel(&setting.name, &set.dir_name());
            let train_rel = set_dir.join("train.jsonl");
            write_train_jsonl(&layout.root().join(&train_rel), &set.records).map_err(at("augment"))?;
            summary.train_files.push(train_rel);
            if until == AugmentStage::Sets {
                continue;
            }
            let plan = make_folds_for(&set.records, aug.folds, m.seed, |r| format!("{:?}", r.coarse_label)).map_err(at("folds"))?;
            let plan_text = serde_json::to_string_pretty(&plan).expect("plan serializes") + "\n";
            std::fs::write(layout.root().join(&set_dir).join("folds.json"), plan_text).map_err(at("folds"))?;
            if until == AugmentStage::Folds {
                continue;
            }
            let t = match trainer_state {
                Ok(t) => t,
                Err(_) => {
                    summary.skipped.push(set.label(&setting.name));
                    continue;
                }
            };
            match train_and_score(m, aug, layout, t, &set_dir, set, &plan, &eval_sets) {
                Ok(result) => {
                    for ((label, app), metrics) in result {
                        scores.insert((set.condition, label, app), metrics);
                    }
                }
                Err(TrainerError::Unavailable(reason)) => {
                    trainer_state = Err(reason);
                    summary.skipped.push(set.label(&setting.name));
                }
                Err(e) => return Err(at("train")(e)),
            }
        }
        if until < AugmentStage::Train {
            continue;
        }
        for label in &aug.target_labels {
            for app in &aug.target_apps {
                let zs = binary_metrics(
                    label.display_name(),
                    eval_sets[app]
                        .iter()
                        .map(|r| (r.coarse_label == Some(*label), zero_shot.get(r.id.as_str()).copied().flatten() == Some(label.display_name()))),
                );
                scores.insert((Condition::ZeroShot, *label, app.clone()), zs);
                for condition in Condition::ALL {
                    if let Some(c) = scores.get(&(condition, *label, app.clone())) {
                        summary.rows.push(row(&setting.name, *label, app, condition, c));
                    }
                }
            }
        }
    }
    if until == AugmentStage::Train {
        let stem = format!("{}-augment", m.run_id);
        write_stage_report(layout, &stem, &summary.rows)?;
        if !summary.skipped.is_empty() {
            let reason = trainer_state.err().unwrap_or_default();
            let note = format!("\nSkipped ({reason}): {}\n", summary.skipped.join(", "));
            let md = layout.reports().join(format!("{stem}.md"));
            let mut text = std::fs::read_to_string(&md).map_err(at("report"))?;
            text.push_str(&note);
            std::fs::write(&md, text).map_err(at("report"))?;
        }
    }
    Ok(summary)
}
