use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Labels after hiding a fraction of the positives.
#[derive(Debug, Clone, PartialEq)]
pub struct HideResult {
    pub y_hidden: Vec<bool>,
    /// Sorted indices whose positive label was zeroed.
    pub hidden_indices: Vec<usize>,
    pub gamma: f64,
}

/// Zeroes `round(gamma * positives)` uniformly chosen positive labels.
pub fn hide_labels(y: &[bool], gamma: f64, seed: u64) -> Result<HideResult> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!("gamma {gamma} outside [0, 1]")));
    }
    let positives: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    if positives.is_empty() {
        return Err(Error::NoKnownPositives);
    }
    let count = (gamma * positives.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hidden_indices: Vec<usize> = index::sample(&mut rng, positives.len(), count)
        .into_iter()
        .map(|k| positives[k])
        .collect();
    hidden_indices.sort_unstable();
    let mut y_hidden = y.to_vec();
    for &i in &hidden_indices {
        y_hidden[i] = false;
    }
    Ok(HideResult {
        y_hidden,
        hidden_indices,
        gamma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split of a binary label vector.
pub fn stratified_kfold(y: &[bool], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let pos = y.iter().filter(|&&v| v).count();
    let neg = y.len() - pos;
    if pos < k || neg < k {
        return Err(Error::ClassTooSmall { size: pos.min(neg), k });
    }
    let strata: Vec<usize> = y.iter().map(|&v| v as usize).collect();
    stratified_kfold_by(&strata, k, seed)
}

/// Stratified k-fold split over arbitrary strata labels.
///
/// Each stratum is shuffled and dealt round-robin, continuing where the
/// previous stratum stopped, so per-stratum and total fold sizes each differ
/// by at most one. Strata smaller than `k` are allowed here.
pub fn stratified_kfold_by(strata: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if strata.len() < k {
        return Err(Error::ClassTooSmall { size: strata.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_strata = strata.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
    for (i, &s) in strata.iter().enumerate() {
        members[s].push(i);
    }
    let mut fold_of = vec![0usize; strata.len()];
    let mut next = 0;
    for group in &mut members {
        group.shuffle(&mut rng);
        for &i in group.iter() {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..strata.len()).partition(|&i| fold_of[i] == f);
            Fold { train, test }
        })
        .collect())
}
