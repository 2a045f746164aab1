use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset, Result, Task};

/// Fold index of every labeled document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Ids in fold `fold`, in id order.
    pub fn fold_ids(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

/// Stratified k-fold split of the documents labeled for `task`.
///
/// Each class is shuffled with a seeded PRNG and dealt round-robin into folds.
/// The deal position carries over from one class to the next so total fold
/// sizes also stay within one of each other.
pub fn stratified_folds(ds: &Dataset, task: Task, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(CorpusError::InvalidK(k));
    }
    let mut by_class: BTreeMap<u8, Vec<&str>> = BTreeMap::new();
    for (doc, label) in ds.labeled(task) {
        by_class.entry(label).or_default().push(doc.id.as_str());
    }
    for (&label, members) in &by_class {
        if members.len() < k {
            return Err(CorpusError::TooFewMembers {
                label,
                count: members.len(),
                k,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut next = 0usize;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for id in members.iter() {
            assignment.insert(id.to_string(), next);
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, assignment })
}
