//! Statistical primitives: nearest-rank percentiles and percentile selection,
//! the harmonic mean, Spearman's rank correlation, the standardized-logistic
//! likelihood transform, and cosine-based similarity measures.

use std::cmp::Ordering;
use std::ops::Deref;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, SparseRow};

/// Slack on `alpha * n` so that e.g. `0.07 * 100` still yields rank 7.
const RANK_EPS: f64 = 1e-9;

/// 1-based nearest rank `max(1, ceil(alpha * n))`.
pub fn nearest_rank(n: usize, alpha: f64) -> usize {
    let rank = (alpha * n as f64 - RANK_EPS).ceil();
    (rank.max(1.0) as usize).min(n)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("percentile {alpha} outside [0, 1]")))
    }
}

/// The value of `r` at the `alpha` percentile (nearest rank, no interpolation).
pub fn percentile(r: &[f64], alpha: f64) -> Result<f64> {
    let mut scratch = Vec::new();
    percentile_with(r, alpha, &mut scratch)
}

/// [`percentile`] reusing a caller-owned buffer; O(n) by selection.
pub(crate) fn percentile_with(r: &[f64], alpha: f64, scratch: &mut Vec<f64>) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::EmptyInput("percentile"));
    }
    check_alpha(alpha)?;
    let k = nearest_rank(r.len(), alpha) - 1;
    scratch.clear();
    scratch.extend_from_slice(r);
    let (_, value, _) = scratch.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*value)
}

/// Indices whose value is at or above the percentile threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileSelection {
    pub indices: Vec<usize>,
    pub threshold: f64,
}

impl PercentileSelection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Membership mask over a population of size `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }
}

/// `{ i | r_i >= percentile(r, alpha) }`, ties at the threshold included.
pub fn percentile_select(r: &[f64], alpha: f64) -> Result<PercentileSelection> {
    let threshold = percentile(r, alpha)?;
    let indices = r
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(PercentileSelection { indices, threshold })
}

/// Elements of `s` whose matching `r` value is in the `alpha` percentile,
/// in index order.
pub fn select_by<T: Clone>(s: &[T], r: &[f64], alpha: f64) -> Result<Vec<T>> {
    if s.len() != r.len() {
        return Err(Error::DimensionMismatch(format!(
            "selecting {} elements by a key of length {}",
            s.len(),
            r.len()
        )));
    }
    let sel = percentile_select(r, alpha)?;
    Ok(sel.indices.iter().map(|&i| s[i].clone()).collect())
}

/// `2ab / (a + b)`, zero when both are zero.
pub fn harmonic_mean(a: f64, b: f64) -> Result<f64> {
    if a < 0.0 || b < 0.0 || a.is_nan() || b.is_nan() {
        return Err(Error::NegativeInput("harmonic_mean"));
    }
    Ok(if a + b == 0.0 { 0.0 } else { 2.0 * a * b / (a + b) })
}

/// 1-based ranks; tied values share the mean of their rank range.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64], what: &'static str) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance(what));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

fn check_pair(r: &[f64], s: &[f64]) -> Result<()> {
    if r.len() != s.len() {
        return Err(Error::DimensionMismatch(format!(
            "spearman inputs of length {} and {}",
            r.len(),
            s.len()
        )));
    }
    if r.len() < 2 {
        return Err(Error::EmptyInput("spearman needs at least 2 pairs"));
    }
    Ok(())
}

/// Spearman's coefficient alone (no significance), for hot loops.
pub fn spearman_rho(r: &[f64], s: &[f64]) -> Result<f64> {
    check_pair(r, s)?;
    pearson(&average_ranks(r), &average_ranks(s), "spearman")
}

/// Spearman coefficient with a two-sided p-value for `rho = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    pub p_value: f64,
}

/// Sample size from which the t approximation replaces exact permutation.
pub const SPEARMAN_EXACT_BELOW: usize = 10;

pub fn spearman(r: &[f64], s: &[f64]) -> Result<Spearman> {
    check_pair(r, s)?;
    let (rr, rs) = (average_ranks(r), average_ranks(s));
    let rho = pearson(&rr, &rs, "spearman")?;
    let n = r.len();
    let p_value = if n < SPEARMAN_EXACT_BELOW {
        permutation_p_value(&rr, &rs, rho)
    } else if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 8");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Spearman { rho, p_value })
}

/// Fraction of all orderings of `rs` whose |rho| reaches the observed one.
fn permutation_p_value(rr: &[f64], rs: &[f64], observed: f64) -> f64 {
    let target = observed.abs() - 1e-12;
    let mut perm = rs.to_vec();
    let n = perm.len();
    let mut hits = 0u64;
    let mut total = 0u64;
    let mut visit = |p: &[f64]| {
        total += 1;
        // permuted ranks keep their variance, so only a zero-variance input fails
        if pearson(rr, p, "").map(|v| v.abs() >= target).unwrap_or(false) {
            hits += 1;
        }
    };
    // Heap's algorithm
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

/// Per-individual membership likelihoods in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodVector(Vec<f64>);

impl LikelihoodVector {
    /// Wraps values already known to lie in `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            Ok(LikelihoodVector(values))
        } else {
            Err(Error::InvalidConfig("likelihoods must lie in [0, 1]".into()))
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LikelihoodVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Standardized logistic: `1 / (1 + exp(-(d_i - mean) / sd))` with the
/// population standard deviation. A constant input maps to 0.5 everywhere.
pub fn softmax_normalize(d: &[f64]) -> Result<LikelihoodVector> {
    if d.is_empty() {
        return Err(Error::EmptyInput("softmax_normalize"));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax_normalize"));
    }
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let l = if sd > 0.0 {
        d.iter().map(|v| 1.0 / (1.0 + (-(v - mean) / sd).exp())).collect()
    } else {
        vec![0.5; d.len()]
    };
    Ok(LikelihoodVector(l))
}

/// `u · v / (|u| |v|)`.
pub fn cosine_similarity(u: &SparseRow<'_>, v: &SparseRow<'_>) -> Result<f64> {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 {
        return Err(Error::ZeroNorm { row: 0 });
    }
    if nv == 0.0 {
        return Err(Error::ZeroNorm { row: 1 });
    }
    Ok((u.dot_sparse(v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Two-group silhouette values under cosine distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    /// One value per row, in row order.
    pub values: Vec<f64>,
    pub groups: Vec<bool>,
}

impl Silhouette {
    /// Values of one group, sorted descending (chart order).
    pub fn chart(&self, group: bool) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .values
            .iter()
            .zip(&self.groups)
            .filter(|(_, g)| **g == group)
            .map(|(v, _)| *v)
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// `s_i = (b_i - a_i) / max(a_i, b_i)` where `a_i` is the mean cosine distance
/// to the rest of the row's own group and `b_i` to the other group.
pub fn silhouette_values(rows: &SparseMatrix, groups: &[bool]) -> Result<Silhouette> {
    if groups.len() != rows.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} group labels for {} rows",
            groups.len(),
            rows.n_rows()
        )));
    }
    let ones = groups.iter().filter(|&&g| g).count();
    let zeros = groups.len() - ones;
    if zeros < 2 {
        return Err(Error::GroupTooSmall { group: 0 });
    }
    if ones < 2 {
        return Err(Error::GroupTooSmall { group: 1 });
    }
    let norms: Vec<f64> = rows.rows().map(|r| r.norm()).collect();
    if let Some(row) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroNorm { row });
    }
    let values = (0..rows.n_rows())
        .into_par_iter()
        .map(|i| {
            let ri = rows.row(i);
            let (mut own, mut other) = (0.0, 0.0);
            for j in (0..rows.n_rows()).filter(|&j| j != i) {
                let dist = 1.0 - ri.dot_sparse(&rows.row(j)) / (norms[i] * norms[j]);
                if groups[j] == groups[i] {
                    own += dist;
                } else {
                    other += dist;
                }
            }
            let (own_n, other_n) = if groups[i] { (ones, zeros) } else { (zeros, ones) };
            let a = own / (own_n - 1) as f64;
            let b = other / other_n as f64;
            silhouette_from(a, b)
        })
        .collect();
    Ok(Silhouette {
        values,
        groups: groups.to_vec(),
    })
}

/// `(b - a) / max(a, b)`, zero when both distances vanish.
pub fn silhouette_from(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m <= 0.0 {
        0.0
    } else {
        ((b - a) / m).clamp(-1.0, 1.0)
    }
}

/// Mean cosine similarity over all pairs with one row from `left` and one
/// from `right`; when both are the same set, over unordered distinct pairs.
pub fn mean_cosine(rows: &SparseMatrix, left: &[usize], right: &[usize]) -> Result<f64> {
    let same = left == right;
    let norm = |i: usize| {
        let n = rows.row(i).norm();
        if n == 0.0 {
            Err(Error::ZeroNorm { row: i })
        } else {
            Ok(n)
        }
    };
    let ln: Vec<f64> = left.iter().map(|&i| norm(i)).collect::<Result<_>>()?;
    let rn: Vec<f64> = right.iter().map(|&i| norm(i)).collect::<Result<_>>()?;
    let (sum, count) = left
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            let start = if same { a + 1 } else { 0 };
            let ri = rows.row(i);
            let mut s = 0.0;
            for b in start..right.len() {
                s += ri.dot_sparse(&rows.row(right[b])) / (ln[a] * rn[b]);
            }
            (s, right.len() - start)
        })
        .reduce(|| (0.0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    if count == 0 {
        return Err(Error::EmptyInput("mean_cosine needs at least one pair"));
    }
    Ok(sum / count as f64)
}

/// Total order used when ranking scores descending with index tie-break.
pub(crate) fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    order
}
