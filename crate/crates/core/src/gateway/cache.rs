use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// One stored completion. Contains nothing run-specific, so two runs that
/// issue the same prompts produce identical cache files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub model_id: String,
    pub prompt_hash: String,
    pub temperature: f64,
    pub output_text: String,
}

/// On-disk response store laid out as `<root>/<model_id>/<prompt_hash>.json`.
/// Entries are written once and never replaced.
#[derive(Debug)]
pub struct ResponseCache {
    root: PathBuf,
    write_lock: Mutex<()>,
}

pub(crate) fn dir_name(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

impl ResponseCache {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(ResponseCache {
            root,
            write_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_path(&self, model_id: &str, prompt_hash: &str) -> PathBuf {
        self.root.join(dir_name(model_id)).join(format!("{prompt_hash}.json"))
    }

    /// Unreadable or corrupt entries count as misses.
    pub fn get(&self, model_id: &str, prompt_hash: &str) -> Option<CachedResponse> {
        let raw = fs::read(self.entry_path(model_id, prompt_hash)).ok()?;
        serde_json::from_slice(&raw).ok()
    }

    pub fn put(&self, entry: &CachedResponse) -> std::io::Result<()> {
        let _guard = self.write_lock.lock().expect("cache lock");
        let path = self.entry_path(&entry.model_id, &entry.prompt_hash);
        if self.get(&entry.model_id, &entry.prompt_hash).is_some() {
            return Ok(());
        }
        let dir = path.parent().expect("entry has a parent");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".{}.tmp", entry.prompt_hash));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&serde_json::to_vec_pretty(entry).expect("serializable entry"))?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)
    }

    pub fn len(&self) -> usize {
        fs::read_dir(&self.root)
            .into_iter()
            .flatten()
            .flatten()
            .filter(|e| e.path().is_dir())
            .flat_map(|e| fs::read_dir(e.path()).into_iter().flatten().flatten())
            .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(hash: &str, text: &str) -> CachedResponse {
        CachedResponse {
            model_id: "org/model:v1".into(),
            prompt_hash: hash.into(),
            temperature: 0.0,
            output_text: text.into(),
        }
    }

    #[test]
    fn put_get_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        assert!(cache.get("org/model:v1", "abc").is_none());
        cache.put(&entry("abc", "Category: Other")).unwrap();
        assert_eq!(cache.get("org/model:v1", "abc").unwrap().output_text, "Category: Other");
        assert!(dir.path().join("org_model_v1/abc.json").is_file());
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn entries_are_never_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        cache.put(&entry("h", "first")).unwrap();
        cache.put(&entry("h", "second")).unwrap();
        assert_eq!(cache.get("org/model:v1", "h").unwrap().output_text, "first");
    }

    #[test]
    fn survives_reopen_and_ignores_corruption() {
        let dir = tempfile::tempdir().unwrap();
        ResponseCache::open(dir.path()).unwrap().put(&entry("h", "kept")).unwrap();
        let reopened = ResponseCache::open(dir.path()).unwrap();
        assert_eq!(reopened.get("org/model:v1", "h").unwrap().output_text, "kept");
        fs::write(reopened.entry_path("org/model:v1", "bad"), "{not json").unwrap();
        assert!(reopened.get("org/model:v1", "bad").is_none());
    }
}
