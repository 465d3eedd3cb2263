//! The training objective: rank agreement between per-property counts of the
//! top-percentile individuals and the population statistic, combined by
//! harmonic mean with recall on the disclosed positives.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::stats::{self, harmonic_mean, percentile_select, percentile_with};

/// Both objective components and their harmonic mean, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveValue {
    pub corr: f64,
    pub recall: f64,
    pub combined: f64,
}

impl ObjectiveValue {
    pub fn new(corr: f64, recall: f64) -> Self {
        ObjectiveValue {
            corr,
            recall,
            combined: harmonic_mean(corr, recall).expect("components are non-negative"),
        }
    }
}

/// Spearman of `pi` against `counts`, floored at 0; zero-variance counts score 0.
fn corr_from_counts(pi: &[f64], counts: &[f64]) -> f64 {
    match stats::spearman_rho(pi, counts) {
        Ok(rho) => rho.max(0.0),
        Err(_) => 0.0,
    }
}

/// Rank correlation between `pi` and the column sums of the `P` rows whose
/// distance lies in the `delta` percentile.
pub fn corr_term(pi: &[f64], p: &SparseMatrix, d: &[f64], delta: f64) -> Result<f64> {
    if p.n_rows() != d.len() || p.n_cols() != pi.len() {
        return Err(Error::DimensionMismatch(format!(
            "P is {}x{}, d has length {}, pi has length {}",
            p.n_rows(),
            p.n_cols(),
            d.len(),
            pi.len()
        )));
    }
    let sel = percentile_select(d, delta)?;
    let mut counts = vec![0.0; pi.len()];
    for &i in &sel.indices {
        for (k, v) in p.row(i).iter() {
            counts[k] += v;
        }
    }
    Ok(corr_from_counts(pi, &counts))
}

/// Fraction of disclosed positives whose distance lies in the `delta` percentile.
pub fn recall_term(y: &[bool], d: &[f64], delta: f64) -> Result<f64> {
    if y.len() != d.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} distances",
            y.len(),
            d.len()
        )));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 {
        return Err(Error::NoKnownPositives);
    }
    let sel = percentile_select(d, delta)?;
    let hits = sel.indices.iter().filter(|&&i| y[i]).count();
    Ok(hits as f64 / positives as f64)
}

/// Both components at distance vector `d`.
pub fn evaluate(pi: &[f64], p: &SparseMatrix, y: &[bool], d: &[f64], delta: f64) -> Result<ObjectiveValue> {
    let corr = corr_term(pi, p, d, delta)?;
    let recall = recall_term(y, d, delta)?;
    Ok(ObjectiveValue::new(corr, recall))
}

/// Prepared evaluator for repeated calls on one population.
///
/// Equivalent to [`evaluate`] for one-hot `P`, but keeps the per-row
/// property index and reuses its buffers.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pi: &'a [f64],
    property_of: &'a [usize],
    y: &'a [bool],
    positives: usize,
    delta: f64,
    scratch: Vec<f64>,
    counts: Vec<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(pi: &'a [f64], property_of: &'a [usize], y: &'a [bool], delta: f64) -> Result<Self> {
        if property_of.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} property rows for {} labels",
                property_of.len(),
                y.len()
            )));
        }
        if let Some(&k) = property_of.iter().find(|&&k| k >= pi.len()) {
            return Err(Error::DimensionMismatch(format!(
                "property index {k} for pi of length {}",
                pi.len()
            )));
        }
        let positives = y.iter().filter(|&&v| v).count();
        if positives == 0 {
            return Err(Error::NoKnownPositives);
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidConfig(format!("delta {delta} outside [0, 1]")));
        }
        Ok(Objective {
            pi,
            property_of,
            y,
            positives,
            delta,
            scratch: Vec::with_capacity(y.len()),
            counts: vec![0.0; pi.len()],
        })
    }

    pub fn evaluate(&mut self, d: &[f64]) -> ObjectiveValue {
        assert_eq!(d.len(), self.y.len(), "distance vector length");
        let threshold = percentile_with(d, self.delta, &mut self.scratch).expect("non-empty, valid delta");
        self.counts.iter_mut().for_each(|c| *c = 0.0);
        let mut hits = 0usize;
        for (i, &di) in d.iter().enumerate() {
            if di >= threshold {
                self.counts[self.property_of[i]] += 1.0;
                hits += self.y[i] as usize;
            }
        }
        let corr = corr_from_counts(self.pi, &self.counts);
        ObjectiveValue::new(corr, hits as f64 / self.positives as f64)
    }
}
