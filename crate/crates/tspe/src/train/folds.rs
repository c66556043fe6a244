//! Stratified k-fold planning.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Disjoint fold index sets covering a dataset, class-balanced to within
/// one element per fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (f, idxs) in self.folds.iter().enumerate() {
            if f != fold {
                out.extend_from_slice(idxs);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Shuffle within each class, then deal round-robin so per-fold class
/// counts stay within one of the exact quota.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    let mut folds = vec![Vec::new(); k];
    for (class, tag) in [(true, "pos"), (false, "neg")] {
        let mut idxs: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if idxs.len() < k {
            return Err(Error::Infeasible(format!(
                "class {tag} has {} members, fewer than {k} folds",
                idxs.len()
            )));
        }
        Rng::child(seed, &format!("kfold.{tag}")).shuffle(&mut idxs);
        for (i, idx) in idxs.into_iter().enumerate() {
            folds[i % k].push(idx);
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(FoldPlan { folds })
}
