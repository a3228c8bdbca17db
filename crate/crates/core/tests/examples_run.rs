#[allow(dead_code)]
mod augment_training_set {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/augment_training_set.rs"));
}

#[allow(dead_code)]
mod build_prompts {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/build_prompts.rs"));
}

#[allow(dead_code)]
mod consensus_labels {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/consensus_labels.rs"));
}

#[allow(dead_code)]
mod extract_labels {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/extract_labels.rs"));
}

#[allow(dead_code)]
mod folds_and_metrics {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/folds_and_metrics.rs"));
}

#[allow(dead_code)]
mod full_pipeline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/full_pipeline.rs"));
}

#[allow(dead_code)]
mod ingest_and_filter {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ingest_and_filter.rs"));
}

#[allow(dead_code)]
mod mock_gateway {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mock_gateway.rs"));
}

#[test]
fn augment_training_set_runs() {
    augment_training_set::run_example().unwrap();
}

#[test]
fn build_prompts_runs() {
    build_prompts::run_example().unwrap();
}

#[test]
fn consensus_labels_runs() {
    consensus_labels::run_example().unwrap();
}

#[test]
fn extract_labels_runs() {
    extract_labels::run_example().unwrap();
}

#[test]
fn folds_and_metrics_runs() {
    folds_and_metrics::run_example().unwrap();
}

#[test]
fn full_pipeline_runs() {
    full_pipeline::run_example().unwrap();
}

#[test]
fn ingest_and_filter_runs() {
    ingest_and_filter::run_example().unwrap();
}

#[test]
fn mock_gateway_runs() {
    mock_gateway::run_example().unwrap();
}
