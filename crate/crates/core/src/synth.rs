//! Synthetic labeled corpora and a ready-to-run demo workspace, for
//! examples, tests and dry runs without real data.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CoarseLabel, Dataset, FeedbackRecord, Source};

const BUG: &[&str] = &[
    "crashes", "freezes", "error", "broken", "fails", "stuck", "glitch", "bug", "unresponsive", "black screen", "logs me out", "cannot sync",
];
const FEATURE: &[&str] = &[
    "please add", "would love", "wish", "option", "support for", "dark mode", "export", "widget", "shortcut", "allow", "let me", "tablet layout",
];
const OTHER: &[&str] = &[
    "great", "love", "nice", "thanks", "awesome", "helpful", "favorite", "smooth", "recommend", "five stars", "daily", "simple",
];
const NOUNS: &[&str] = &["photos", "uploads", "chat", "folders", "feed", "backup", "notifications", "profile", "search", "settings"];
const SYLLABLES: &[&str] = &["ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu", "na", "pe", "ri", "so", "tu", "vy"];

fn vocab(label: CoarseLabel) -> &'static [&'static str] {
    match label {
        CoarseLabel::BugReport => BUG,
        CoarseLabel::FeatureRequest => FEATURE,
        CoarseLabel::Other => OTHER,
    }
}

/// Letters-only code for `n`; digits would be stripped by text cleaning.
fn code(mut n: usize) -> String {
    let mut out = String::new();
    for _ in 0..4 {
        out.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
    }
    out
}

/// One labeled group: original label name, its coarse category, and how
/// many records to generate per app.
#[derive(Debug, Clone)]
pub struct LabelGroup {
    pub original: String,
    pub coarse: CoarseLabel,
    pub per_app: usize,
}

impl LabelGroup {
    pub fn new(original: &str, coarse: CoarseLabel, per_app: usize) -> Self {
        LabelGroup {
            original: original.to_string(),
            coarse,
            per_app,
        }
    }
}

/// Records whose wording leans towards their coarse category, with some
/// cross-category noise. `salt` keeps texts distinct across datasets.
pub fn generate(dataset_id: &str, source: Source, groups: &[LabelGroup], apps: &[&str], salt: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let apps: Vec<Option<&str>> = if apps.is_empty() { vec![None] } else { apps.iter().map(|a| Some(*a)).collect() };
    let mut records = Vec::new();
    for group in groups {
        for app in &apps {
            for _ in 0..group.per_app {
                let n = records.len();
                let words = vocab(group.coarse);
                let mut parts = vec![*words.choose(&mut rng).expect("vocab"), *NOUNS.choose(&mut rng).expect("nouns"), *words.choose(&mut rng).expect("vocab")];
                if rng.gen_bool(0.15) {
                    let other = CoarseLabel::ALL[rng.gen_range(0..3)];
                    parts.push(vocab(other).choose(&mut rng).expect("vocab"));
                }
                let text = format!("{} {} {}", parts.join(" "), code(salt), code(n));
                let mut r = FeedbackRecord::human(dataset_id, source, &format!("{dataset_id}-{n}"), &text).with_original_label(&group.original);
                if let Some(app) = app {
                    r = r.with_app(app);
                }
                records.push(r);
            }
        }
    }
    Dataset::new(records).expect("generated ids are unique")
}

/// Writes `id,text,label,app_id` CSV.
pub fn write_csv(path: &Path, ds: &Dataset) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "text", "label", "app_id"])?;
    for r in ds {
        w.write_record([r.id.as_str(), &r.text, r.original_label.as_deref().unwrap_or(""), r.app_id.as_deref().unwrap_or("")])?;
    }
    w.flush()
}

pub const DEMO_APPS: [&str; 3] = ["Dropbox", "Pinterest", "WhatsApp"];

/// Writes a small six-dataset corpus and `manifest.toml` under `dir`:
/// DS1 as the app-tagged truth set, DS2-DS4 as human-labeled sets, and
/// general and app-specific pools, classified by four seeded mock models
/// and trained with the built-in naive Bayes trainer. Returns the manifest
/// path.
pub fn demo_workspace(dir: &Path) -> io::Result<PathBuf> {
    use CoarseLabel::*;
    let g = LabelGroup::new;
    let data = dir.join("data");
    let ds1 = generate(
        "DS1",
        Source::AppStore,
        &[g("bug report", BugReport, 12), g("user request", FeatureRequest, 8), g("praise", Other, 10), g("noise", Other, 2)],
        &DEMO_APPS,
        1,
        101,
    );
    write_csv(&data.join("ds1.csv"), &ds1)?;

    let mut ds2 = generate(
        "DS2",
        Source::AppStore,
        &[g("bug report", BugReport, 30), g("feature request", FeatureRequest, 12), g("user experience", Other, 20), g("rating", Other, 10)],
        &[],
        2,
        102,
    )
    .into_records();
    // a few reviews also present in the truth set
    for (r, t) in ds2.iter_mut().zip(ds1.iter()).take(3) {
        r.text = t.text.clone();
    }
    write_csv(&data.join("ds2.csv"), &Dataset::new(ds2).expect("unique ids"))?;

    let ds3 = generate(
        "DS3",
        Source::AppStore,
        &[g("bug report", BugReport, 40), g("feature request", FeatureRequest, 25), g("other", Other, 40)],
        &[],
        3,
        103,
    );
    write_csv(&data.join("ds3.csv"), &ds3)?;
    let ds4 = generate(
        "DS4",
        Source::AppStore,
        &[g("functional bug report", BugReport, 35), g("suggestion for new feature", FeatureRequest, 20), g("other", Other, 30)],
        &[],
        4,
        104,
    );
    write_csv(&data.join("ds4.csv"), &ds4)?;

    let pool_groups = |n| [g("bug report", BugReport, n), g("feature request", FeatureRequest, n), g("other", Other, n)];
    let general = generate("GP", Source::AppStore, &pool_groups(25), &["Notes", "Maps", "Music", "Mail"], 5, 105);
    write_csv(&data.join("general_pool.csv"), &general)?;
    let app_pool = generate("AP", Source::AppStore, &pool_groups(60), &DEMO_APPS, 6, 106);
    write_csv(&data.join("app_pool.csv"), &app_pool)?;

    let manifest = dir.join("manifest.toml");
    fs::write(&manifest, DEMO_MANIFEST)?;
    Ok(manifest)
}

const DEMO_MANIFEST: &str = r#"run_id = "demo"
seed = 7
scheme = "coarse"
shots_per_class = 0
consensus_required = ["model-a", "model-b", "model-c", "model-d"]

[[datasets]]
id = "DS1"
path = "data/ds1.csv"
mapping = "DS1"

[[datasets]]
id = "DS2"
path = "data/ds2.csv"
mapping = "DS2"
dedup_against = ["DS1"]

[[datasets]]
id = "DS3"
path = "data/ds3.csv"
mapping = "DS3"

[[datasets]]
id = "DS4"
path = "data/ds4.csv"
mapping = "DS4"

[[datasets]]
id = "GP"
path = "data/general_pool.csv"
mapping = "DS3"
classify = false

[[datasets]]
id = "AP"
path = "data/app_pool.csv"
mapping = "DS3"
classify = false

[[endpoints]]
model_id = "model-a"
requests_per_minute = 1000000
[endpoints.mock]
mode = "seeded_confusion"
accuracy = 0.9
seed = 1

[[endpoints]]
model_id = "model-b"
requests_per_minute = 1000000
[endpoints.mock]
mode = "seeded_confusion"
accuracy = 0.9
seed = 2

[[endpoints]]
model_id = "model-c"
requests_per_minute = 1000000
[endpoints.mock]
mode = "seeded_confusion"
accuracy = 0.85
seed = 3

[[endpoints]]
model_id = "model-d"
requests_per_minute = 1000000
[endpoints.mock]
mode = "seeded_confusion"
accuracy = 0.8
seed = 4

[augmentation]
truth_dataset = "DS1"
ratio = 0.3
target_apps = ["Dropbox", "Pinterest", "WhatsApp"]
folds = 5
general_pool = ["GP"]
app_pool = ["AP"]
zero_shot_model = "model-a"

[[augmentation.settings]]
name = "DS2-DS3"
human = ["DS2", "DS3"]
review_source = "DS4"

[[augmentation.settings]]
name = "DS2-DS4"
human = ["DS2", "DS4"]
review_source = "DS3"

[augmentation.trainer]
command = ["builtin:naive-bayes"]
"#;
