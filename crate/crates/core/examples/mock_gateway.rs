// Batch requests through the gateway with a seeded mock model, then rerun
// the same batch and watch every answer come from the cache.

use std::collections::HashMap;
use std::error::Error;
use std::sync::Arc;

use feedback_consensus::corpus::{FeedbackRecord, Source};
use feedback_consensus::gateway::{EndpointConfig, Gateway, MockBackend, MockBehavior, ResponseCache};
use feedback_consensus::prompt::build_prompt;
use feedback_consensus::scheme::Scheme;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let scheme = Scheme::coarse();
    let names = scheme.names();
    let mut truth = HashMap::new();
    let mut prompts = Vec::new();
    for i in 0..40 {
        let id = format!("r{i}");
        let r = FeedbackRecord::human("X", Source::AppStore, &id, &format!("review number {i} about the sync feature"));
        truth.insert(id, names[i % 3].clone());
        prompts.push(build_prompt(&scheme, &r, &[])?);
    }

    let dir = tempfile::tempdir()?;
    let cache = Arc::new(ResponseCache::open(dir.path())?);
    let mut config = EndpointConfig::new("mock-llm");
    config.max_concurrency = 4;
    config.requests_per_minute = 10_000;
    let backend = MockBackend::new(MockBehavior::uniform_errors(3, 0.8, 11), scheme.clone(), truth)?;
    let gateway = Gateway::new(config, Arc::new(backend), Some(cache))?;

    let first = gateway.run_batch(&prompts)?;
    println!(
        "first pass: {} responses, {} backend calls, peak in flight {}",
        first.responses().count(),
        gateway.stats().backend_calls(),
        gateway.stats().peak_in_flight()
    );
    gateway.stats().reset();
    let second = gateway.run_batch(&prompts)?;
    println!("second pass: {} backend calls, {} cache hits", gateway.stats().backend_calls(), gateway.stats().cache_hits());
    assert_eq!(gateway.stats().backend_calls(), 0);
    assert!(second.responses().all(|r| r.from_cache));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
