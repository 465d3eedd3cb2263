//! ROC and probabilistic ROC curves.
//!
//! Both curves come from the same sweep: individuals are visited by
//! descending score and every group of tied scores forms one threshold step.
//! A plain ROC gives each individual weight 1 as a positive or negative; the
//! probabilistic variant splits each individual into `l_i` positive mass and
//! `1 - l_i` negative mass. With binary `l` the two computations coincide
//! operation for operation.

use crate::error::{Error, Result};
use crate::stats::descending;

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcCurve {
    /// `(pfpr, ptpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub pauc: f64,
    /// Area obtained when ranking by the likelihoods themselves.
    pub optimal_pauc: f64,
}

/// Trapezoidal area under a polyline.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Cumulative `(negative mass, positive mass)` fractions at each threshold.
fn weighted_curve(scores: &[f64], pos: impl Fn(usize) -> f64, neg: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    let order = descending(scores);
    let mut steps = Vec::new();
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            tp += pos(order[k]);
            fp += neg(order[k]);
            k += 1;
        }
        steps.push((fp, tp));
    }
    let (total_fp, total_tp) = (fp, tp);
    let mut points = Vec::with_capacity(steps.len() + 1);
    points.push((0.0, 0.0));
    points.extend(steps.into_iter().map(|(f, t)| (f / total_fp, t / total_tp)));
    points
}

/// ROC curve of `scores` against binary `truth`; tied scores form a diagonal
/// step, so the area equals the Mann-Whitney statistic with half credit for ties.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    if pos == 0 || pos == truth.len() {
        return Err(Error::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("roc scores"));
    }
    let points = weighted_curve(
        scores,
        |i| if truth[i] { 1.0 } else { 0.0 },
        |i| if truth[i] { 0.0 } else { 1.0 },
    );
    let auc = trapezoid(&points);
    Ok(RocCurve { points, auc })
}

/// Probabilistic ROC of classifier outputs `c` against likelihoods `l`.
pub fn proc_curve(c: &[f64], l: &[f64]) -> Result<ProcCurve> {
    if c.len() != l.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} likelihoods",
            c.len(),
            l.len()
        )));
    }
    if c.iter().chain(l).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("proc inputs"));
    }
    if l.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidConfig("likelihoods must lie in [0, 1]".into()));
    }
    if l.iter().sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateLikelihoods("likelihoods sum to zero"));
    }
    if l.iter().map(|v| 1.0 - v).sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateLikelihoods("complements sum to zero"));
    }
    let points = weighted_curve(c, |i| l[i], |i| 1.0 - l[i]);
    let pauc = trapezoid(&points);
    let optimal_pauc = trapezoid(&weighted_curve(l, |i| l[i], |i| 1.0 - l[i]));
    Ok(ProcCurve {
        points,
        pauc,
        optimal_pauc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roc_examples() {
        let r = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        assert_eq!(roc_auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap().auc, 0.5);
        let s = [0.9, 0.4, 0.6, 0.1];
        assert_eq!(roc_auc(&s, &[true, false, true, false]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&s, &[false, true, false, true]).unwrap().auc, 0.0);
        assert!(matches!(roc_auc(&s, &[true; 4]), Err(Error::SingleClass)));
    }

    #[test]
    fn proc_examples() {
        let c = [0.2, 0.9, 0.5, 0.7, 0.1];
        let half = proc_curve(&c, &[0.5; 5]).unwrap();
        assert!((half.pauc - 0.5).abs() < 1e-12);
        assert!(half.points.iter().all(|(x, y)| (x - y).abs() < 1e-12));

        let l = [0.1, 0.8, 0.4, 0.6, 0.3];
        let own = proc_curve(&l, &l).unwrap();
        assert_eq!(own.pauc, own.optimal_pauc);
        assert!(own.optimal_pauc < 1.0);
        assert!(proc_curve(&c, &[0.0; 5]).is_err());
        assert!(proc_curve(&c, &[1.0; 5]).is_err());
    }

    #[test]
    fn proc_binary_matches_roc() {
        let c = [0.3, 0.3, 0.9, 0.1, 0.5, 0.5];
        let truth = [true, false, true, false, false, true];
        let l: Vec<f64> = truth.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
        let roc = roc_auc(&c, &truth).unwrap();
        let p = proc_curve(&c, &l).unwrap();
        assert_eq!(p.points, roc.points);
        assert_eq!(p.pauc, roc.auc);
    }
}
