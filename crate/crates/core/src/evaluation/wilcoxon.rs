//! Two-sided Wilcoxon signed-rank test for paired samples.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::average_ranks;

/// Largest number of nonzero differences handled by the exact null distribution.
pub const WILCOXON_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of the positive differences `a - b`.
    pub statistic: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub p_value: f64,
}

/// Zero differences are dropped; tied magnitudes share average ranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "paired samples of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("wilcoxon differences"));
    }
    let n = diffs.len();
    if n < 5 {
        return Err(Error::TooFewPairs(n));
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();

    let p_value = if n <= WILCOXON_EXACT_MAX {
        exact_p_value(&ranks, w_plus)
    } else {
        normal_p_value(&magnitudes, n, w_plus)
    };
    Ok(WilcoxonResult {
        statistic: w_plus,
        n,
        p_value,
    })
}

/// Enumerates the null distribution of `W+` over all 2^n sign patterns.
fn exact_p_value(ranks: &[f64], w_plus: f64) -> f64 {
    // average ranks are multiples of 1/2
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut ways = vec![0.0f64; max + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            ways[s] += ways[s - r];
        }
    }
    let total: f64 = ways.iter().sum();
    let observed = (w_plus * 2.0).round() as usize;
    let lower: f64 = ways[..=observed].iter().sum::<f64>() / total;
    let upper: f64 = ways[observed..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p_value(magnitudes: &[f64], n: usize, w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let mut j = k;
        while j < sorted.len() && sorted[j] == sorted[k] {
            j += 1;
        }
        let t = (j - k) as f64;
        tie_term += t * t * t - t;
        k = j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * normal.sf(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_samples_have_no_pairs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(wilcoxon_signed_rank(&a, &a), Err(Error::TooFewPairs(0))));
    }

    #[test]
    fn all_positive_shift_exact_tail() {
        let b: Vec<f64> = (0..8).map(|i| i as f64 * 0.37).collect();
        let a: Vec<f64> = b.iter().enumerate().map(|(i, v)| v + 100.0 + i as f64).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 36.0);
        assert!((r.p_value - 2.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        // brute force over sign patterns of the ranks
        let diffs = [1.0, -2.0, 2.0, 3.0, -3.0, 3.0, 4.0];
        let zeros = [0.0; 7];
        let r = wilcoxon_signed_rank(&diffs, &zeros).unwrap();
        let ranks = average_ranks(&diffs.iter().map(|d: &f64| d.abs()).collect::<Vec<_>>());
        let (mut lo, mut hi) = (0u32, 0u32);
        for mask in 0u32..(1 << 7) {
            let w: f64 = (0..7).filter(|b| mask >> b & 1 == 1).map(|b| ranks[b]).sum();
            lo += (w <= r.statistic + 1e-9) as u32;
            hi += (w >= r.statistic - 1e-9) as u32;
        }
        let want = (2.0 * lo.min(hi) as f64 / 128.0).min(1.0);
        assert!((r.p_value - want).abs() < 1e-12);
    }

    #[test]
    fn normal_approximation_is_sane() {
        let b = vec![0.0; 30];
        let a: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 465.0);
        assert!(r.p_value < 1e-5);
        let alt: Vec<f64> = (1..=30).map(|i| if i % 2 == 0 { i as f64 } else { -(i as f64) }).collect();
        assert!(wilcoxon_signed_rank(&alt, &b).unwrap().p_value > 0.5);
    }

    #[test]
    fn symmetric_noise_is_calibrated() {
        let mut rejections = 0;
        let runs = 400;
        for seed in 0..runs {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
            if wilcoxon_signed_rank(&a, &b).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / runs as f64;
        assert!((0.01..=0.09).contains(&rate), "{rate}");
    }
}
