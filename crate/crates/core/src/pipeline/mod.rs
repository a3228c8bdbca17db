//! Manifest-driven stages: dataset preparation, classification, consensus,
//! evaluation and the augmentation study.

mod augmentation;
mod layout;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Display;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{build_consensus_dataset, write_consensus, ConsensusResult};
use crate::corpus::{adapt_to_coarse, dedup_overlap, ingest, Dataset, DatasetMeta, TokenCleaner};
use crate::eval::{class_prf, confusion, macro_avg, write_report, MetricRow};
use crate::extraction::{write_review_queue, ParseStatus, Prediction};
use crate::gateway::{Gateway, MockBackend, ResponseCache};
use crate::jsonl;
use crate::manifest::{DatasetSpec, EndpointSpec, ManifestError, RunManifest, SchemeChoice};
use crate::prompt::{build_prompt, select_shots, PromptSpec, Shot};
use crate::scheme::Scheme;

pub use augmentation::{run_augment_train, AugmentStage, AugmentSummary};
pub use layout::{run_tag, Layout};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    /// 1 for validation problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Manifest(_) => 1,
            PipelineError::Stage { .. } => 2,
        }
    }
}

pub(crate) fn at<E: Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepStats {
    pub ingested: usize,
    pub unmapped_dropped: usize,
    pub ineligible: usize,
    pub overlap_removed: usize,
    pub kept: usize,
}

/// Ingests every dataset, adapts labeled ones to the coarse scheme when
/// `choice` is coarse, filters ineligible texts and removes overlaps named
/// by `dedup_against`. Writes `datasets/<choice>/`.
pub fn prepare(m: &RunManifest, layout: &Layout, choice: SchemeChoice) -> Result<BTreeMap<String, Dataset>, PipelineError> {
    let cleaner = TokenCleaner::default();
    let mut filtered = BTreeMap::new();
    let mut stats: BTreeMap<String, PrepStats> = BTreeMap::new();
    for spec in &m.datasets {
        let meta = DatasetMeta {
            dataset_id: spec.id.clone(),
            source: m.source(spec)?,
        };
        let raw = ingest(&spec.path, m.format(spec)?, &meta).map_err(at("ingest"))?;
        let mut st = PrepStats {
            ingested: raw.len(),
            ..PrepStats::default()
        };
        let ds = match (choice, m.mapping(spec)?) {
            (SchemeChoice::Coarse, Some(mapping)) => {
                let (ds, dropped) = adapt_to_coarse(&raw, &mapping).map_err(at("adapt"))?;
                st.unmapped_dropped = dropped;
                ds
            }
            _ => raw,
        };
        let ds = if spec.filter_eligible {
            let (kept, removed) = ds.filter_eligible(&cleaner);
            st.ineligible = removed;
            kept
        } else {
            ds
        };
        filtered.insert(spec.id.clone(), ds);
        stats.insert(spec.id.clone(), st);
    }
    let mut out = BTreeMap::new();
    for spec in &m.datasets {
        let mut ds = filtered[&spec.id].clone();
        for other in &spec.dedup_against {
            let (kept, removed) = dedup_overlap(&ds, &filtered[other]);
            ds = kept;
            stats.get_mut(&spec.id).expect("stats per dataset").overlap_removed += removed;
        }
        stats.get_mut(&spec.id).expect("stats per dataset").kept = ds.len();
        ds.write_jsonl(&layout.dataset(choice, &spec.id)).map_err(at("ingest"))?;
        out.insert(spec.id.clone(), ds);
    }
    let summary = serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n";
    std::fs::write(layout.dataset_summary(choice), summary).map_err(at("ingest"))?;
    Ok(out)
}

/// Shots and the records left to classify for one dataset. Unlabeled
/// datasets always run zero-shot.
pub fn shots_for(m: &RunManifest, scheme: &Scheme, ds: &Dataset, shots_per_class: usize) -> Result<(Vec<Shot>, Dataset), PipelineError> {
    let labeled = ds.iter().any(|r| scheme.truth_label(r).is_some());
    if shots_per_class == 0 || !labeled {
        return Ok((Vec::new(), ds.clone()));
    }
    select_shots(ds, scheme, shots_per_class, m.seed).map_err(at("shots"))
}

pub fn write_shots(path: &Path, shots: &[Shot]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(at("shots"))?;
    }
    let text = serde_json::to_string_pretty(shots).expect("shots serialize") + "\n";
    std::fs::write(path, text).map_err(at("shots"))
}

/// Ground truth by record id, as scheme category names.
pub fn truth_map(scheme: &Scheme, ds: &Dataset) -> HashMap<String, String> {
    ds.iter()
        .filter_map(|r| scheme.truth_label(r).map(|l| (r.id.clone(), l.to_string())))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RequestFailure {
    record_id: String,
    model_id: String,
    error: String,
}

/// Everything one classification pass produced.
#[derive(Debug, Default)]
pub struct ClassifyOutcome {
    pub tag: String,
    /// dataset id → records that were classified (shots removed)
    pub classified: BTreeMap<String, Dataset>,
    /// dataset id → model id → predictions in record order
    pub predictions: BTreeMap<String, BTreeMap<String, Vec<Prediction>>>,
    pub failures: usize,
    pub backend_calls: u64,
    pub cache_hits: u64,
}

impl ClassifyOutcome {
    pub fn all_predictions(&self, dataset: &str) -> Vec<Prediction> {
        self.predictions.get(dataset).map(|by_model| by_model.values().flatten().cloned().collect()).unwrap_or_default()
    }
}

fn open_cache(m: &RunManifest, layout: &Layout) -> Result<Arc<ResponseCache>, PipelineError> {
    let dir = m.cache_dir.clone().unwrap_or_else(|| layout.default_cache());
    Ok(Arc::new(ResponseCache::open(dir).map_err(at("classify"))?))
}

fn mock_gateway(endpoint: &EndpointSpec, scheme: &Scheme, truth: HashMap<String, String>, cache: &Arc<ResponseCache>) -> Option<Result<Gateway, PipelineError>> {
    let mock = endpoint.mock.as_ref()?;
    Some((|| {
        let backend = MockBackend::new(mock.behavior(scheme.len()), scheme.clone(), truth).map_err(at("classify"))?;
        Gateway::new(endpoint.config.clone(), Arc::new(backend), Some(cache.clone())).map_err(at("classify"))
    })())
}

/// Builds prompts for `ids` under `choice` and submits them to every
/// endpoint. Predictions, failures and review queues are written before
/// returning; request failures are counted, not raised.
pub fn classify_datasets(
    m: &RunManifest,
    layout: &Layout,
    prepared: &BTreeMap<String, Dataset>,
    ids: &[&str],
    choice: SchemeChoice,
    shots_per_class: usize,
) -> Result<ClassifyOutcome, PipelineError> {
    let tag = run_tag(choice, shots_per_class);
    let cache = open_cache(m, layout)?;
    let mut http: HashMap<String, Arc<Gateway>> = HashMap::new();
    let mut outcome = ClassifyOutcome {
        tag: tag.clone(),
        ..ClassifyOutcome::default()
    };
    for id in ids {
        let spec = m.dataset(id).ok_or_else(|| ManifestError::Invalid(format!("unknown dataset `{id}`")))?;
        let scheme = m.scheme_for(spec, choice)?;
        let (shots, residual) = shots_for(m, &scheme, &prepared[*id], shots_per_class)?;
        if shots_per_class > 0 {
            write_shots(&layout.shots(&tag, id), &shots)?;
        }
        let prompts: Vec<PromptSpec> = residual
            .iter()
            .map(|r| build_prompt(&scheme, r, &shots))
            .collect::<Result<_, _>>()
            .map_err(at("prompt"))?;
        let truth = truth_map(&scheme, &residual);
        let mut all = Vec::new();
        for endpoint in &m.endpoints {
            let model = endpoint.config.model_id.as_str();
            let gateway = match mock_gateway(endpoint, &scheme, truth.clone(), &cache) {
                Some(g) => Arc::new(g?),
                None => match http.get(model) {
                    Some(g) => g.clone(),
                    None => {
                        let g = Arc::new(Gateway::http(endpoint.config.clone(), Some(cache.clone())).map_err(at("classify"))?);
                        http.insert(model.to_string(), g.clone());
                        g
                    }
                },
            };
            let (before_calls, before_hits) = (gateway.stats().backend_calls(), gateway.stats().cache_hits());
            let mut preds = Vec::new();
            let mut failures = Vec::new();
            if !prompts.is_empty() {
                let batch = gateway.run_batch(&prompts).map_err(at("classify"))?;
                for (record_id, result) in batch.items {
                    match result {
                        Ok(resp) => preds.push(Prediction::from_output(&record_id, model, &resp.output_text, &scheme)),
                        Err(e) => failures.push(RequestFailure {
                            record_id,
                            model_id: model.to_string(),
                            error: e.to_string(),
                        }),
                    }
                }
            }
            outcome.backend_calls += gateway.stats().backend_calls() - before_calls;
            outcome.cache_hits += gateway.stats().cache_hits() - before_hits;
            jsonl::write(&layout.predictions(&tag, id, model), &preds).map_err(at("classify"))?;
            let failure_path = layout.failures(&tag, id, model);
            if failures.is_empty() {
                let _ = std::fs::remove_file(&failure_path);
            } else {
                jsonl::write(&failure_path, &failures).map_err(at("classify"))?;
            }
            outcome.failures += failures.len();
            all.extend(preds.iter().cloned());
            outcome.predictions.entry(id.to_string()).or_default().insert(model.to_string(), preds);
        }
        write_review_queue(&layout.review_queue(&tag, id), &all).map_err(at("classify"))?;
        outcome.classified.insert(id.to_string(), residual);
    }
    Ok(outcome)
}

/// Unanimous-agreement dataset for one classified dataset; writes
/// `consensus/<tag>/<id>.jsonl`.
pub fn consensus_for(m: &RunManifest, layout: &Layout, outcome: &ClassifyOutcome, id: &str) -> Result<(Dataset, Vec<ConsensusResult>), PipelineError> {
    let preds = outcome.all_predictions(id);
    let (ds, results) = build_consensus_dataset(&outcome.classified[id], &preds, &m.required_models()).map_err(at("consensus"))?;
    write_consensus(&layout.consensus(&outcome.tag, id), &results).map_err(at("consensus"))?;
    Ok((ds, results))
}

fn scheme_rows(group: &str, condition: &str, scheme: &Scheme, truth: &HashMap<String, String>, preds: &[Prediction]) -> Result<Vec<MetricRow>, PipelineError> {
    let scored: Vec<Prediction> = preds.iter().filter(|p| truth.contains_key(&p.record_id)).cloned().collect();
    if scored.is_empty() {
        return Ok(Vec::new());
    }
    let cm = confusion(&scheme.names(), truth, &scored).map_err(at("evaluate"))?;
    let per_class = scheme.names().iter().map(|c| class_prf(&cm, c)).collect::<Result<Vec<_>, _>>().map_err(at("evaluate"))?;
    let avg = macro_avg(&per_class).map_err(at("evaluate"))?;
    let row = |label: &str, p: f64, r: f64, f1: f64, support: u64| MetricRow {
        group: group.to_string(),
        target_label: label.to_string(),
        app: "all".to_string(),
        condition: condition.to_string(),
        precision: p,
        recall: r,
        f1,
        support,
    };
    let mut rows: Vec<MetricRow> = per_class.iter().map(|c| row(&c.class_name, c.precision, c.recall, c.f1, c.support)).collect();
    rows.push(row("Macro", avg.precision, avg.recall, avg.f1, cm.total()));
    Ok(rows)
}

/// Per-class and macro scores of every model on every labeled dataset,
/// plus the consensus labels when the scheme is coarse.
pub fn evaluate_outcome(
    m: &RunManifest,
    outcome: &ClassifyOutcome,
    choice: SchemeChoice,
    consensus: &BTreeMap<String, Vec<ConsensusResult>>,
) -> Result<Vec<MetricRow>, PipelineError> {
    let mut rows = Vec::new();
    for (id, residual) in &outcome.classified {
        let spec = m.dataset(id).expect("classified datasets come from the manifest");
        let scheme = m.scheme_for(spec, choice)?;
        let truth = truth_map(&scheme, residual);
        if truth.is_empty() {
            continue;
        }
        for model in m.endpoint_ids() {
            let preds = outcome.predictions.get(id).and_then(|p| p.get(model)).map(Vec::as_slice).unwrap_or(&[]);
            rows.extend(scheme_rows(id, model, &scheme, &truth, preds)?);
        }
        if let Some(results) = consensus.get(id) {
            let preds: Vec<Prediction> = results
                .iter()
                .filter_map(|r| {
                    r.label.map(|l| Prediction {
                        record_id: r.record_id.clone(),
                        model_id: "consensus".into(),
                        raw_output: String::new(),
                        label: Some(l.display_name().to_string()),
                        status: ParseStatus::Ok,
                    })
                })
                .collect();
            rows.extend(scheme_rows(id, "Consensus", &scheme, &truth, &preds)?);
        }
    }
    Ok(rows)
}

fn classify_ids(m: &RunManifest) -> Vec<&str> {
    m.datasets.iter().filter(|d| d.classify).map(|d| d.id.as_str()).collect()
}

/// Writes `reports/<stem>.{md,csv}` and `metrics/<stem>.jsonl`.
pub fn write_stage_report(layout: &Layout, stem: &str, rows: &[MetricRow]) -> Result<(), PipelineError> {
    jsonl::write(&layout.stage_metrics(stem), rows).map_err(at("report"))?;
    if !rows.is_empty() {
        write_report(&layout.reports(), stem, rows).map_err(at("report"))?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct ClassifySummary {
    pub outcome: ClassifyOutcome,
    pub rows: Vec<MetricRow>,
}

/// Prepares, classifies every `classify = true` dataset with every
/// endpoint, builds consensus (coarse scheme only) and scores the results.
/// Request failures are persisted and then reported as a stage error.
pub fn run_classify(m: &RunManifest, layout: &Layout) -> Result<ClassifySummary, PipelineError> {
    if m.endpoints.is_empty() {
        return Err(ManifestError::Invalid("classification needs at least one endpoint".into()).into());
    }
    let prepared = prepare(m, layout, m.scheme)?;
    let ids = classify_ids(m);
    let outcome = classify_datasets(m, layout, &prepared, &ids, m.scheme, m.shots_per_class)?;
    let mut consensus = BTreeMap::new();
    if m.scheme == SchemeChoice::Coarse && !m.consensus_required.is_empty() {
        for id in &ids {
            consensus.insert(id.to_string(), consensus_for(m, layout, &outcome, id)?.1);
        }
    }
    let rows = evaluate_outcome(m, &outcome, m.scheme, &consensus)?;
    write_stage_report(layout, &format!("{}-classify", m.run_id), &rows)?;
    if outcome.failures > 0 {
        return Err(PipelineError::Stage {
            stage: "classify",
            message: format!("{} requests failed; see predictions/{}/*/*.errors.jsonl", outcome.failures, outcome.tag),
        });
    }
    Ok(ClassifySummary { outcome, rows })
}

/// Rebuilds a classification outcome from the prediction store without
/// contacting any endpoint.
pub fn load_outcome(m: &RunManifest, layout: &Layout, choice: SchemeChoice, shots_per_class: usize) -> Result<ClassifyOutcome, PipelineError> {
    let prepared = prepare(m, layout, choice)?;
    let tag = run_tag(choice, shots_per_class);
    let mut outcome = ClassifyOutcome {
        tag: tag.clone(),
        ..ClassifyOutcome::default()
    };
    for id in classify_ids(m) {
        let spec: &DatasetSpec = m.dataset(id).expect("listed dataset");
        let scheme = m.scheme_for(spec, choice)?;
        let (_, residual) = shots_for(m, &scheme, &prepared[id], shots_per_class)?;
        for model in m.endpoint_ids() {
            let path = layout.predictions(&tag, id, model);
            let preds: Vec<Prediction> = jsonl::read(&path).map_err(at("evaluate"))?;
            outcome.predictions.entry(id.to_string()).or_default().insert(model.to_string(), preds);
        }
        outcome.classified.insert(id.to_string(), residual);
    }
    Ok(outcome)
}

/// Consensus from stored predictions.
pub fn run_consensus(m: &RunManifest, layout: &Layout) -> Result<BTreeMap<String, Vec<ConsensusResult>>, PipelineError> {
    if m.scheme != SchemeChoice::Coarse || m.consensus_required.is_empty() {
        return Err(ManifestError::Invalid("consensus needs scheme = \"coarse\" and consensus_required".into()).into());
    }
    let outcome = load_outcome(m, layout, m.scheme, m.shots_per_class)?;
    let mut out = BTreeMap::new();
    for id in outcome.classified.keys() {
        out.insert(id.clone(), consensus_for(m, layout, &outcome, id)?.1);
    }
    Ok(out)
}

/// Scores stored predictions; same rows as [`run_classify`].
pub fn run_evaluate(m: &RunManifest, layout: &Layout) -> Result<Vec<MetricRow>, PipelineError> {
    let outcome = load_outcome(m, layout, m.scheme, m.shots_per_class)?;
    let mut consensus = BTreeMap::new();
    if m.scheme == SchemeChoice::Coarse && !m.consensus_required.is_empty() {
        let required: BTreeSet<String> = m.required_models();
        for id in outcome.classified.keys() {
            let (_, results) = build_consensus_dataset(&outcome.classified[id], &outcome.all_predictions(id), &required).map_err(at("consensus"))?;
            consensus.insert(id.clone(), results);
        }
    }
    let rows = evaluate_outcome(m, &outcome, m.scheme, &consensus)?;
    write_stage_report(layout, &format!("{}-classify", m.run_id), &rows)?;
    Ok(rows)
}

/// Writes the shots each dataset would use (one per class when the
/// manifest runs zero-shot).
pub fn run_shots(m: &RunManifest, layout: &Layout) -> Result<BTreeMap<String, Vec<Shot>>, PipelineError> {
    let prepared = prepare(m, layout, m.scheme)?;
    let per_class = m.shots_per_class.max(1);
    let tag = run_tag(m.scheme, per_class);
    let mut out = BTreeMap::new();
    for id in classify_ids(m) {
        let scheme = m.scheme_for(m.dataset(id).expect("listed dataset"), m.scheme)?;
        let (shots, _) = shots_for(m, &scheme, &prepared[id], per_class)?;
        write_shots(&layout.shots(&tag, id), &shots)?;
        out.insert(id.to_string(), shots);
    }
    Ok(out)
}

#[derive(Debug)]
pub struct RunSummary {
    pub classify: Option<ClassifySummary>,
    pub augment: Option<AugmentSummary>,
    pub rows: Vec<MetricRow>,
}

/// Classification (when any dataset is marked for it) followed by the
/// augmentation study (when configured). Writes `metrics.jsonl` and
/// `reports/<run_id>.{md,csv}` with every row.
pub fn run_all(m: &RunManifest, layout: &Layout, trainer: Option<&dyn crate::trainer::Trainer>) -> Result<RunSummary, PipelineError> {
    let classify = if classify_ids(m).is_empty() { None } else { Some(run_classify(m, layout)?) };
    let augment = match &m.augmentation {
        Some(_) => Some(run_augment_train(m, layout, trainer, AugmentStage::Train)?),
        None => None,
    };
    let mut rows = Vec::new();
    rows.extend(classify.iter().flat_map(|c| c.rows.iter().cloned()));
    rows.extend(augment.iter().flat_map(|a| a.rows.iter().cloned()));
    jsonl::write(&layout.metrics(), &rows).map_err(at("report"))?;
    if !rows.is_empty() {
        write_report(&layout.reports(), &m.run_id, &rows).map_err(at("report"))?;
    }
    Ok(RunSummary { classify, augment, rows })
}

/// Re-renders `reports/<run_id>.{md,csv}` from `metrics.jsonl`.
pub fn run_report(m: &RunManifest, layout: &Layout) -> Result<Vec<MetricRow>, PipelineError> {
    let rows: Vec<MetricRow> = jsonl::read(&layout.metrics()).map_err(at("report"))?;
    if rows.is_empty() {
        return Err(PipelineError::Stage {
            stage: "report",
            message: "metrics.jsonl holds no rows".into(),
        });
    }
    write_report(&layout.reports(), &m.run_id, &rows).map_err(at("report"))?;
    Ok(rows)
}
