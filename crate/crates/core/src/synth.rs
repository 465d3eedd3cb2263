//! Synthetic populations with known ground truth.
//!
//! Individuals are spread over `t` states with Zipf-like sizes
//! (`size_k ∝ (k + 1)^-state_skew`, apportioned exactly). Each state carries
//! a log-normal rate multiplier of spread `rate_spread`, and exactly
//! `round(n * positive_rate)` true positives are drawn without replacement
//! with weights proportional to their state's multiplier. Features are
//! Poisson counts with background rates `density * U(0.02, 0.15)`; the first
//! 30% of columns (at least one) run at `1 + signal` times that rate for
//! positives; `Z` works the same way with `z_signal`. Background columns of
//! both matrices are scaled by a per-individual log-normal activity level of
//! spread `activity_spread`. `pi` is the realized per-state positive rate
//! times `exp(pi_noise * N(0, 1))`.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::dataset::CohortDataset;
use crate::error::{Error, Result};
use crate::evaluation::{derive_seed, hide_labels};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    /// Post-event feature count (columns of `X`).
    pub m: usize,
    /// Pre-event feature count (columns of `Z`); 0 omits `Z`.
    pub q_z: usize,
    /// Number of states.
    pub t: usize,
    pub positive_rate: f64,
    /// Fraction of true positives left undisclosed.
    pub gamma: f64,
    pub signal: f64,
    pub z_signal: f64,
    pub pi_noise: f64,
    pub state_skew: f64,
    /// Standard deviation of the log per-state rate multiplier.
    pub rate_spread: f64,
    /// Log-scale spread of a per-individual activity level that multiplies
    /// the background rates of both `X` and `Z`.
    pub activity_spread: f64,
    /// Multiplier on the background feature rates (row density).
    pub density: f64,
    /// Give positives one extra feature no negative holds.
    pub exclusive_feature: bool,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n: 2000,
            m: 200,
            q_z: 100,
            t: 20,
            positive_rate: 0.05,
            gamma: 0.75,
            signal: 1.0,
            z_signal: 0.5,
            pi_noise: 0.0,
            state_skew: 0.5,
            rate_spread: 0.8,
            activity_spread: 0.0,
            density: 4.0,
            exclusive_feature: false,
            seed: 0,
        }
    }
}

pub const PRESETS: [&str; 4] = ["separable", "strong", "weak", "noise"];

/// Named configurations used by the acceptance suite and the CLI.
pub fn preset(name: &str) -> Result<GenConfig> {
    let base = GenConfig::default();
    match name {
        "separable" => Ok(GenConfig {
            n: 2000,
            m: 200,
            t: 20,
            positive_rate: 0.05,
            gamma: 0.75,
            signal: 1.0,
            state_skew: 0.0,
            rate_spread: 1.0,
            density: 1.0,
            exclusive_feature: true,
            ..base
        }),
        "strong" => Ok(GenConfig {
            n: 4000,
            m: 300,
            q_z: 150,
            t: 20,
            positive_rate: 0.1,
            gamma: 0.75,
            signal: 1.0,
            z_signal: 1.0,
            state_skew: 0.5,
            rate_spread: 0.8,
            ..base
        }),
        "weak" => Ok(GenConfig {
            n: 4000,
            m: 300,
            q_z: 150,
            t: 20,
            positive_rate: 0.1,
            signal: 0.5,
            z_signal: 0.3,
            ..base
        }),
        "noise" => Ok(GenConfig {
            n: 4000,
            m: 100,
            q_z: 50,
            t: 20,
            positive_rate: 0.1,
            signal: 0.0,
            z_signal: 0.0,
            density: 1.0,
            ..base
        }),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 || self.m == 0 || self.t == 0 {
            return bad("n, m and t must be positive".into());
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return bad(format!("positive rate {} outside (0, 1)", self.positive_rate));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        for (name, v) in [
            ("signal", self.signal),
            ("z_signal", self.z_signal),
            ("pi_noise", self.pi_noise),
            ("state_skew", self.state_skew),
            ("rate_spread", self.rate_spread),
            ("density", self.density),
            ("activity_spread", self.activity_spread),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.density == 0.0 {
            return bad("density must be positive".into());
        }
        let positives = self.n_positive();
        if positives == 0 || positives == self.n {
            return bad(format!("n * positive_rate gives {positives} positives out of {}", self.n));
        }
        Ok(())
    }

    /// Exact number of true positives generated.
    pub fn n_positive(&self) -> usize {
        (self.n as f64 * self.positive_rate).round() as usize
    }

    /// Number of columns driven by the class signal.
    pub fn signal_columns(cols: usize) -> usize {
        (cols * 3 / 10).max(1)
    }
}

/// Exact state sizes by largest-remainder apportionment of `n` over the
/// Zipf-like weights.
pub fn state_sizes(n: usize, t: usize, skew: f64) -> Vec<usize> {
    let weights: Vec<f64> = (0..t).map(|k| ((k + 1) as f64).powf(-skew)).collect();
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest: Vec<usize> = (0..t).collect();
    rest.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = n - sizes.iter().sum::<usize>();
    for &k in rest.iter().take(short) {
        sizes[k] += 1;
    }
    sizes
}

struct FeatureBlock {
    cols: usize,
    signal: f64,
    density: f64,
    exclusive: bool,
}

/// Poisson counts for one feature block; `activity[i]` scales individual
/// `i`'s background (non-signal) rates.
fn count_matrix(rng: &mut ChaCha8Rng, block: &FeatureBlock, positive: &[bool], activity: &[f64]) -> Result<SparseMatrix> {
    let cols = block.cols;
    let base: Vec<f64> = (0..cols).map(|_| block.density * rng.random_range(0.02..0.15)).collect();
    let boosted = GenConfig::signal_columns(cols);
    let offset = block.exclusive as usize;
    let poisson = |lambda: f64| Poisson::new(lambda).map_err(|e| Error::InvalidConfig(format!("feature rate {lambda}: {e}")));
    let extra = poisson(2.0)?;
    let mut rows = Vec::with_capacity(positive.len());
    for (&is_pos, &act) in positive.iter().zip(activity) {
        let mut row: Vec<(usize, f64)> = Vec::new();
        if block.exclusive && is_pos {
            row.push((0, 2.0 + extra.sample(rng)));
        }
        for (j, &b) in base.iter().enumerate() {
            let lambda = match (j < boosted, is_pos) {
                (true, true) => b * (1.0 + block.signal),
                (true, false) => b,
                (false, _) => b * act,
            };
            let v: f64 = poisson(lambda)?.sample(rng);
            if v > 0.0 {
                row.push((j + offset, v));
            }
        }
        if row.is_empty() {
            // every individual shows at least one background feature
            let j = rng.random_range(boosted.min(cols - 1)..cols);
            row.push((j + offset, 1.0));
        }
        rows.push(row);
    }
    SparseMatrix::from_rows(cols + offset, &rows)
}

/// Draws a dataset with ground truth from `cfg`.
pub fn generate(cfg: &GenConfig) -> Result<CohortDataset> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[100]));

    let sizes = state_sizes(n, cfg.t, cfg.state_skew);
    let mut property_of: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &s)| std::iter::repeat_n(k, s)).collect();
    property_of.shuffle(&mut rng);

    let multipliers: Vec<f64> = (0..cfg.t)
        .map(|_| (cfg.rate_spread * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    let chosen = index::sample_weighted(&mut rng, n, |i| multipliers[property_of[i]], cfg.n_positive())
        .map_err(|e| Error::InvalidConfig(format!("positive sampling failed: {e}")))?;
    let mut y_true = vec![false; n];
    for i in chosen {
        y_true[i] = true;
    }

    let mut activity_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[105]));
    let activity: Vec<f64> = (0..n)
        .map(|_| (cfg.activity_spread * activity_rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    let mut feature_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[101]));
    let x_block = FeatureBlock {
        cols: cfg.m,
        signal: cfg.signal,
        density: cfg.density,
        exclusive: cfg.exclusive_feature,
    };
    let x = count_matrix(&mut feature_rng, &x_block, &y_true, &activity)?;
    let z = if cfg.q_z > 0 {
        let mut z_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[102]));
        let z_block = FeatureBlock {
            cols: cfg.q_z,
            signal: cfg.z_signal,
            density: cfg.density,
            exclusive: false,
        };
        Some(count_matrix(&mut z_rng, &z_block, &y_true, &activity)?)
    } else {
        None
    };

    let mut positives = vec![0usize; cfg.t];
    for i in 0..n {
        positives[property_of[i]] += y_true[i] as usize;
    }
    let mut pi_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[103]));
    let pi: Vec<f64> = (0..cfg.t)
        .map(|k| {
            let rate = if sizes[k] == 0 {
                cfg.positive_rate * multipliers[k]
            } else {
                positives[k] as f64 / sizes[k] as f64
            };
            let noise: f64 = pi_rng.sample(StandardNormal);
            rate * (cfg.pi_noise * noise).exp()
        })
        .collect();

    let y = hide_labels(&y_true, cfg.gamma, derive_seed(cfg.seed, &[104]))?.y_hidden;
    let p_rows: Vec<Vec<(usize, f64)>> = property_of.iter().map(|&k| vec![(k, 1.0)]).collect();
    let p = SparseMatrix::from_rows(cfg.t, &p_rows)?;
    CohortDataset::new(x, z, y, p, pi, Some(y_true))
}
