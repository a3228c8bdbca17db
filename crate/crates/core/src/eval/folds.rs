use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Dataset, FeedbackRecord};

/// Record key used in fold plans. Unique across datasets, so merged
/// training sets can be split too.
pub fn record_key(r: &FeedbackRecord) -> String {
    format!("{}/{}", r.dataset_id, r.id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, key: &str) -> Option<usize> {
        self.assignments.get(key).copied()
    }

    pub fn test_keys(&self, fold: usize) -> BTreeSet<&str> {
        self.assignments.iter().filter(|(_, f)| **f == fold).map(|(k, _)| k.as_str()).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for f in self.assignments.values() {
            sizes[*f] += 1;
        }
        sizes
    }

    /// (train, test) split of `ds` for one fold. Records absent from the
    /// plan go to neither side.
    pub fn split(&self, ds: &Dataset, fold: usize) -> (Dataset, Dataset) {
        let train = ds.filter(|r| self.fold_of(&record_key(r)).is_some_and(|f| f != fold));
        let test = ds.filter(|r| self.fold_of(&record_key(r)) == Some(fold));
        (train, test)
    }
}

/// Stratified k-fold plan over (key, class) pairs. Each class is shuffled
/// with the seeded RNG, classes are concatenated in sorted order, and the
/// i-th record of the concatenation goes to fold `i % k`.
pub fn make_folds<'a>(items: impl IntoIterator<Item = (&'a str, &'a str)>, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFoldCount(k));
    }
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for (key, class) in items {
        if !seen.insert(key) {
            return Err(EvalError::DuplicateRecord(key.to_string()));
        }
        by_class.entry(class).or_default().push(key);
    }
    if by_class.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    let mut i = 0usize;
    for (class, mut keys) in by_class {
        if keys.len() < k {
            return Err(EvalError::ClassTooSmall {
                class: class.to_string(),
                count: keys.len(),
                k,
            });
        }
        keys.shuffle(&mut rng);
        for key in keys {
            assignments.insert(key.to_string(), i % k);
            i += 1;
        }
    }
    Ok(FoldPlan { k, seed, assignments })
}

/// Folds stratified by `class_of`, keyed by [`record_key`].
pub fn make_folds_for(ds: &Dataset, k: usize, seed: u64, class_of: impl Fn(&FeedbackRecord) -> String) -> Result<FoldPlan, EvalError> {
    let pairs: Vec<(String, String)> = ds.iter().map(|r| (record_key(r), class_of(r))).collect();
    make_folds(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())), k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn items(counts: &[usize]) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (c, n) in counts.iter().enumerate() {
            for i in 0..*n {
                out.push((format!("c{c}-{i}"), format!("class{c}")));
            }
        }
        out
    }

    fn plan(items: &[(String, String)], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
        make_folds(items.iter().map(|(a, b)| (a.as_str(), b.as_str())), k, seed)
    }

    #[test]
    fn exact_stratification() {
        let it = items(&[60, 40]);
        let p = plan(&it, 5, 1).unwrap();
        assert_eq!(p.fold_sizes(), vec![20; 5]);
        for f in 0..5 {
            let keys = p.test_keys(f);
            assert_eq!(keys.iter().filter(|k| k.starts_with("c0")).count(), 12);
            assert_eq!(keys.iter().filter(|k| k.starts_with("c1")).count(), 8);
        }
    }

    #[test]
    fn small_class_rejected() {
        let err = plan(&items(&[10, 3]), 5, 1).unwrap_err();
        assert_eq!(
            err,
            EvalError::ClassTooSmall {
                class: "class1".into(),
                count: 3,
                k: 5
            }
        );
        assert_eq!(plan(&items(&[10]), 1, 1).unwrap_err(), EvalError::InvalidFoldCount(1));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let it = items(&[30, 20, 15]);
        assert_eq!(plan(&it, 5, 9).unwrap(), plan(&it, 5, 9).unwrap());
        assert_ne!(plan(&it, 5, 9).unwrap(), plan(&it, 5, 10).unwrap());
    }

    proptest! {
        #[test]
        fn partition_and_balance(counts in proptest::collection::vec(5usize..40, 1..4), seed in any::<u64>()) {
            let it = items(&counts);
            let p = plan(&it, 5, seed).unwrap();
            prop_assert_eq!(p.assignments.len(), it.len());
            let sizes = p.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for (c, n) in counts.iter().enumerate() {
                let prefix = format!("c{c}-");
                for f in 0..5 {
                    let got = p.test_keys(f).iter().filter(|k| k.starts_with(&prefix)).count() as f64;
                    prop_assert!((got - *n as f64 / 5.0).abs() < 1.0);
                }
            }
        }
    }
}
