//! The cohort hyperplane search.
//!
//! Starting from a seeded random unit hyperplane `w`, each iteration samples
//! one individual `x_i` uniformly (with replacement) and proposes the two
//! normalized candidates `(w + x_i)/|w + x_i|` and `(w - x_i)/|w - x_i|`. A
//! candidate replaces `w` only when it strictly improves the best objective
//! seen so far; `c+` wins when it also beats `c-`. The returned likelihoods are
//! the standardized-logistic transform of the final distances `X · w`.
//!
//! Distances are maintained incrementally: with `d = X · w` and `v = X · x_i`
//! (computed from the column-major copy of `X`, touching only the columns
//! where `x_i` is nonzero), the candidate distances are `(d ± v) / |w ± x_i|`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::CohortDataset;
use crate::error::{Error, Result};
use crate::objective::{self, Objective, ObjectiveValue};
use crate::sparse::SparseMatrix;
use crate::stats::{percentile_select, softmax_normalize, spearman_rho, LikelihoodVector};

/// Populations at least this large evaluate the two candidates concurrently.
const PARALLEL_CANDIDATES_FROM: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Number of iterations.
    pub eta: usize,
    /// Learning percentile, strictly between 0 and 1.
    pub delta: f64,
    pub seed: u64,
    /// Record the best objective every this many iterations.
    pub snapshot_every: Option<usize>,
}

impl TrainConfig {
    pub fn new(eta: usize, delta: f64, seed: u64) -> Self {
        TrainConfig {
            eta,
            delta,
            seed,
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::InvalidConfig("snapshot interval must be positive".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::new(30_000, 0.9, 0)
    }
}

/// A learned unit-norm hyperplane with the settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneModel {
    pub w: Vec<f64>,
    pub delta: f64,
    pub eta: usize,
    pub seed: u64,
    pub objective_final: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    /// `(iteration, objective)` at every accepted candidate; iterations are 1-based.
    pub accepted_steps: Vec<(usize, ObjectiveValue)>,
    /// `(iteration, best combined objective)` every `snapshot_every` iterations.
    pub snapshots: Vec<(usize, f64)>,
    /// Objective re-evaluated at the returned hyperplane.
    pub final_value: ObjectiveValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub model: HyperplaneModel,
    pub likelihoods: LikelihoodVector,
    pub trace: TrainTrace,
}

fn init_from(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            w.iter_mut().for_each(|v| *v /= norm);
            return w;
        }
    }
}

/// Seeded random unit vector of length `m` (the starting hyperplane).
pub fn init_hyperplane(m: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::EmptyInput("hyperplane needs at least one feature"));
    }
    Ok(init_from(&mut ChaCha8Rng::seed_from_u64(seed), m))
}

/// Runs the search on `ds` (features `X`, disclosed labels `y`).
pub fn train(ds: &CohortDataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let x = ds.x();
    let n = ds.n();
    if n == 0 {
        return Err(Error::EmptyInput("population"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if x.n_cols() == 0 {
        return Err(Error::EmptyInput("hyperplane needs at least one feature"));
    }
    let mut w = init_from(&mut rng, x.n_cols());

    let mut obj_plus = Objective::new(ds.pi(), ds.property_of(), ds.y(), cfg.delta)?;
    let mut obj_minus = obj_plus.clone();
    let columns = x.transpose();

    let mut d = x.mul_vec(&w)?;
    let mut v = vec![0.0; n];
    let mut d_plus = vec![0.0; n];
    let mut d_minus = vec![0.0; n];
    let mut best = 0.0;
    let mut w_sq: f64 = w.iter().map(|a| a * a).sum();
    let mut trace = TrainTrace::default();

    for iter in 1..=cfg.eta {
        let i = rng.random_range(0..n);
        let xi = x.row(i);
        let wx = xi.dot(&w);
        let xx = xi.squared_norm();
        let plus_sq = w_sq + 2.0 * wx + xx;
        let minus_sq = w_sq - 2.0 * wx + xx;

        v.iter_mut().for_each(|a| *a = 0.0);
        for (j, xij) in xi.iter() {
            let col = columns.row(j);
            for (r, xrj) in col.iter() {
                v[r] += xrj * xij;
            }
        }

        let plus_ok = plus_sq > 0.0;
        let minus_ok = minus_sq > 0.0;
        let (np, nm) = (plus_sq.sqrt(), minus_sq.sqrt());
        let mut eval_plus = || {
            plus_ok.then(|| {
                for ((o, a), b) in d_plus.iter_mut().zip(&d).zip(&v) {
                    *o = (a + b) / np;
                }
                obj_plus.evaluate(&d_plus)
            })
        };
        let mut eval_minus = || {
            minus_ok.then(|| {
                for ((o, a), b) in d_minus.iter_mut().zip(&d).zip(&v) {
                    *o = (a - b) / nm;
                }
                obj_minus.evaluate(&d_minus)
            })
        };
        let (o_plus, o_minus) = if n >= PARALLEL_CANDIDATES_FROM {
            rayon::join(eval_plus, eval_minus)
        } else {
            (eval_plus(), eval_minus())
        };

        let plus_score = o_plus.map(|o| o.combined);
        let minus_score = o_minus.map(|o| o.combined);
        let take_plus = match (plus_score, minus_score) {
            (Some(p), Some(m)) => p > m && p > best,
            (Some(p), None) => p > best,
            _ => false,
        };
        let accepted = if take_plus {
            Some((1.0, np, o_plus.unwrap()))
        } else if minus_score.is_some_and(|m| m > best) {
            Some((-1.0, nm, o_minus.unwrap()))
        } else {
            None
        };
        if let Some((sign, norm, value)) = accepted {
            for (j, xij) in xi.iter() {
                w[j] += sign * xij;
            }
            w.iter_mut().for_each(|a| *a /= norm);
            w_sq = w.iter().map(|a| a * a).sum();
            if sign > 0.0 {
                std::mem::swap(&mut d, &mut d_plus);
            } else {
                std::mem::swap(&mut d, &mut d_minus);
            }
            best = value.combined;
            trace.accepted_steps.push((iter, value));
        }
        if cfg.snapshot_every.is_some_and(|s| iter % s == 0) {
            trace.snapshots.push((iter, best));
        }
    }

    let d_final = x.mul_vec(&w)?;
    let final_value = objective::evaluate(ds.pi(), ds.p(), ds.y(), &d_final, cfg.delta)?;
    trace.final_value = final_value;
    let likelihoods = softmax_normalize(&d_final)?;
    Ok(TrainOutput {
        model: HyperplaneModel {
            w,
            delta: cfg.delta,
            eta: cfg.eta,
            seed: cfg.seed,
            objective_final: final_value.combined,
        },
        likelihoods,
        trace,
    })
}

/// Likelihoods for the rows of `x` under `model`.
pub fn score(model: &HyperplaneModel, x: &SparseMatrix) -> Result<LikelihoodVector> {
    softmax_normalize(&x.mul_vec(&model.w)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWeight {
    pub index: usize,
    pub name: Option<String>,
    pub weight: f64,
}

/// The `k` largest weights, descending; ties go to the lower index.
pub fn top_features(model: &HyperplaneModel, k: usize, names: Option<&[String]>) -> Vec<FeatureWeight> {
    let mut order: Vec<usize> = (0..model.w.len()).collect();
    order.sort_by(|&a, &b| model.w[b].total_cmp(&model.w[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|index| FeatureWeight {
            index,
            name: names.and_then(|n| n.get(index).cloned()),
            weight: model.w[index],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub seeds: Vec<u64>,
    /// Spearman correlation between the likelihoods of every two runs.
    pub pairwise_rho: Vec<Vec<f64>>,
    /// Mean Jaccard index of the top-percentile sets over unordered run pairs.
    pub agreement: f64,
}

impl StabilityReport {
    /// Smallest off-diagonal correlation.
    pub fn min_rho(&self) -> f64 {
        let r = &self.pairwise_rho;
        (0..r.len())
            .flat_map(|i| (i + 1..r.len()).map(move |j| r[i][j]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Expected Jaccard index of two independent uniformly random subsets each
/// holding a fraction `f` of the population (large-population limit).
pub fn random_subset_jaccard(f: f64) -> f64 {
    f / (2.0 - f)
}

/// Trains `n_runs` times with seeds `cfg.seed, cfg.seed + 1, ...`.
pub fn stability_report(ds: &CohortDataset, cfg: &TrainConfig, n_runs: usize) -> Result<StabilityReport> {
    if n_runs < 2 {
        return Err(Error::InvalidConfig("stability needs at least 2 runs".into()));
    }
    let seeds: Vec<u64> = (0..n_runs as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    stability_report_with_seeds(ds, cfg, &seeds)
}

/// Same as [`stability_report`] with explicit per-run seeds.
pub fn stability_report_with_seeds(ds: &CohortDataset, cfg: &TrainConfig, seeds: &[u64]) -> Result<StabilityReport> {
    if seeds.len() < 2 {
        return Err(Error::InvalidConfig("stability needs at least 2 runs".into()));
    }
    let runs: Vec<LikelihoodVector> = seeds
        .par_iter()
        .map(|&seed| train(ds, &TrainConfig { seed, ..*cfg }).map(|o| o.likelihoods))
        .collect::<Result<_>>()?;
    let tops: Vec<Vec<bool>> = runs
        .iter()
        .map(|l| percentile_select(l, cfg.delta).map(|s| s.mask(l.len())))
        .collect::<Result<_>>()?;

    let r = runs.len();
    let mut pairwise_rho = vec![vec![1.0; r]; r];
    let mut jaccard_sum = 0.0;
    for a in 0..r {
        for b in a + 1..r {
            let rho = spearman_rho(&runs[a], &runs[b]).unwrap_or(0.0);
            pairwise_rho[a][b] = rho;
            pairwise_rho[b][a] = rho;
            let inter = tops[a].iter().zip(&tops[b]).filter(|(x, y)| **x && **y).count();
            let union = tops[a].iter().zip(&tops[b]).filter(|(x, y)| **x || **y).count();
            jaccard_sum += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
        }
    }
    Ok(StabilityReport {
        seeds: seeds.to_vec(),
        pairwise_rho,
        agreement: jaccard_sum / (r * (r - 1) / 2) as f64,
    })
}

/// Text form: `m<TAB>delta<TAB>eta<TAB>seed<TAB>objective_final`, then
/// `index<TAB>weight` for every nonzero weight.
pub fn format_model(model: &HyperplaneModel) -> String {
    let mut s = format!(
        "{}\t{}\t{}\t{}\t{}\n",
        model.w.len(),
        model.delta,
        model.eta,
        model.seed,
        model.objective_final
    );
    for (i, w) in model.w.iter().enumerate().filter(|(_, w)| **w != 0.0) {
        writeln!(s, "{i}\t{w}").unwrap();
    }
    s
}

pub fn parse_model(text: &str, origin: &Path) -> Result<HyperplaneModel> {
    let malformed = |line: usize, message: String| Error::Malformed {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty model file".into()))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 5 {
        return Err(malformed(1, format!("expected 5 header fields, got {}", fields.len())));
    }
    let bad = |what: &str| malformed(1, format!("cannot parse {what}"));
    let m: usize = fields[0].parse().map_err(|_| bad("m"))?;
    let delta: f64 = fields[1].parse().map_err(|_| bad("delta"))?;
    let eta: usize = fields[2].parse().map_err(|_| bad("eta"))?;
    let seed: u64 = fields[3].parse().map_err(|_| bad("seed"))?;
    let objective_final: f64 = fields[4].parse().map_err(|_| bad("objective_final"))?;
    let mut w = vec![0.0; m];
    for (no, line) in lines {
        let (i, v) = line
            .split_once('\t')
            .ok_or_else(|| malformed(no + 1, "expected `index<TAB>weight`".into()))?;
        let i: usize = i.trim().parse().map_err(|_| malformed(no + 1, format!("bad index `{i}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| malformed(no + 1, format!("bad weight `{v}`")))?;
        if i >= m {
            return Err(malformed(no + 1, format!("index {i} outside {m} weights")));
        }
        w[i] = v;
    }
    Ok(HyperplaneModel {
        w,
        delta,
        eta,
        seed,
        objective_final,
    })
}

pub fn save_model(model: &HyperplaneModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HyperplaneModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile { path: path.to_path_buf() },
        _ => Error::Io(e),
    })?;
    parse_model(&text, path)
}
