//! End-to-end experimental protocols: the hiding/δ sweep with baseline
//! comparison, the pre-screening classifier (C1), the incidence correlation
//! curve (C2) and the SIU similarity analysis.

use rayon::prelude::*;

use super::report::{fmt_f64, Block, ExperimentReport};
use super::roc::{proc_curve, roc_auc, ProcCurve, RocCurve};
use super::split::{hide_labels, stratified_kfold_by, Fold};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::baselines::{augment_with_pi, train_logistic, train_perceptron, LinearClassifier, LogisticConfig};
use crate::dataset::CohortDataset;
use crate::error::{Error, Result};
use crate::sgd::{train, TrainConfig};
use crate::sparse::SparseMatrix;
use crate::stats::{descending, mean_cosine, percentile_select, silhouette_values, softmax_normalize, spearman, Silhouette};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for the task identified by `parts`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(base), |s, &p| splitmix(s ^ splitmix(p)))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Comparison learners fit on the disclosed labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Perceptron,
    PerceptronPi,
    Logistic,
    LogisticPi,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [
        Baseline::Perceptron,
        Baseline::PerceptronPi,
        Baseline::Logistic,
        Baseline::LogisticPi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Perceptron => "perceptron",
            Baseline::PerceptronPi => "perceptron+pi",
            Baseline::Logistic => "logistic",
            Baseline::LogisticPi => "logistic+pi",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub folds: usize,
    /// Independent hidings per gamma.
    pub repeats: usize,
    pub eta: usize,
    pub seed: u64,
    pub baseline_epochs: usize,
    pub logistic: LogisticConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gammas: vec![0.75],
            deltas: vec![0.8, 0.85, 0.9, 0.95],
            folds: 5,
            repeats: 1,
            eta: 30_000,
            seed: 0,
            baseline_epochs: 5,
            logistic: LogisticConfig::default(),
        }
    }
}

/// Held-out AUCs of one (gamma, repeat, fold) job.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAuc {
    pub gamma: usize,
    pub repeat: usize,
    pub fold: usize,
    /// One AUC per delta.
    pub proposed: Vec<f64>,
    /// Indexed like [`Baseline::ALL`].
    pub baselines: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub runs: Vec<FoldAuc>,
    /// `(gamma, delta, curve)` over the pooled test folds of the first repeat.
    pub roc: Vec<(usize, usize, RocCurve)>,
}

impl SweepResult {
    fn runs_for(&self, gamma: usize) -> impl Iterator<Item = &FoldAuc> {
        self.runs.iter().filter(move |r| r.gamma == gamma)
    }

    /// Per-fold AUCs of the proposed method, ordered by (repeat, fold).
    pub fn proposed_aucs(&self, gamma: usize, delta: usize) -> Vec<f64> {
        self.runs_for(gamma).map(|r| r.proposed[delta]).collect()
    }

    pub fn baseline_aucs(&self, gamma: usize, baseline: Baseline) -> Vec<f64> {
        self.runs_for(gamma).map(|r| r.baselines[baseline.index()]).collect()
    }

    pub fn mean_proposed(&self, gamma: usize, delta: usize) -> f64 {
        mean(&self.proposed_aucs(gamma, delta))
    }

    pub fn mean_baseline(&self, gamma: usize, baseline: Baseline) -> f64 {
        mean(&self.baseline_aucs(gamma, baseline))
    }

    /// Paired test of proposed against `baseline` across folds and repeats.
    pub fn wilcoxon(&self, gamma: usize, delta: usize, baseline: Baseline) -> Result<WilcoxonResult> {
        wilcoxon_signed_rank(&self.proposed_aucs(gamma, delta), &self.baseline_aucs(gamma, baseline))
    }

    /// Delta index with the highest mean AUC (first on ties).
    pub fn best_delta(&self, gamma: usize) -> usize {
        (0..self.deltas.len()).fold(0, |best, d| {
            if self.mean_proposed(gamma, d) > self.mean_proposed(gamma, best) {
                d
            } else {
                best
            }
        })
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut report = ExperimentReport::new("sweep");
        let mut auc = Block::new("auc", &["gamma", "delta", "method", "mean_auc", "sd_auc", "n"]);
        let mut folds = Block::new("folds", &["gamma", "delta", "repeat", "fold", "method", "auc"]);
        let mut tests = Block::new("wilcoxon", &["gamma", "delta", "baseline", "statistic", "n", "p_value"]);
        for (g, &gamma) in self.gammas.iter().enumerate() {
            for b in Baseline::ALL {
                let v = self.baseline_aucs(g, b);
                auc.push(vec![fmt_f64(gamma), "NA".into(), b.name().into(), fmt_f64(mean(&v)), fmt_f64(sd(&v)), v.len().to_string()]);
            }
            for (d, &delta) in self.deltas.iter().enumerate() {
                let v = self.proposed_aucs(g, d);
                auc.push(vec![fmt_f64(gamma), fmt_f64(delta), "proposed".into(), fmt_f64(mean(&v)), fmt_f64(sd(&v)), v.len().to_string()]);
                for b in Baseline::ALL {
                    let row = match self.wilcoxon(g, d, b) {
                        Ok(w) => vec![fmt_f64(w.statistic), w.n.to_string(), fmt_f64(w.p_value)],
                        Err(_) => vec!["NA".into(), "NA".into(), "NA".into()],
                    };
                    let mut full = vec![fmt_f64(gamma), fmt_f64(delta), b.name().into()];
                    full.extend(row);
                    tests.push(full);
                }
            }
            for r in self.runs_for(g) {
                let key = |delta: String, method: &str, v: f64| {
                    vec![fmt_f64(gamma), delta, r.repeat.to_string(), r.fold.to_string(), method.to_string(), fmt_f64(v)]
                };
                for (d, &delta) in self.deltas.iter().enumerate() {
                    folds.push(key(fmt_f64(delta), "proposed", r.proposed[d]));
                }
                for b in Baseline::ALL {
                    folds.push(key("NA".into(), b.name(), r.baselines[b.index()]));
                }
            }
            let best = self.best_delta(g);
            report.add_summary(format!("best_delta[gamma={gamma}]"), fmt_f64(self.deltas[best]));
            report.add_summary(format!("best_mean_auc[gamma={gamma}]"), fmt_f64(self.mean_proposed(g, best)));
        }
        let mut roc = Block::new("roc", &["gamma", "delta", "fpr", "tpr"]);
        for (g, d, curve) in &self.roc {
            for &(x, y) in &curve.points {
                roc.push(vec![fmt_f64(self.gammas[*g]), fmt_f64(self.deltas[*d]), fmt_f64(x), fmt_f64(y)]);
            }
        }
        report.blocks = vec![auc, tests, folds, roc];
        report
    }
}

struct JobOutput {
    fold: FoldAuc,
    /// Per delta: test-fold likelihoods with their evaluation truth.
    scored: Vec<(Vec<f64>, Vec<bool>)>,
}

/// The sweep over hiding fractions and learning percentiles.
///
/// For each gamma and repeat, `round(gamma * positives)` true positives are
/// hidden, then folds are stratified over negatives, hidden and disclosed
/// positives. Every method is fit on the training folds using the hidden
/// labels and evaluated on the test fold by AUC of hidden positives against
/// true negatives (all test positives when nothing was hidden).
pub fn sweep_experiment(ds: &CohortDataset, cfg: &SweepConfig) -> Result<SweepResult> {
    let y_true = ds.y_true().ok_or(Error::MissingComponent("true labels"))?;
    if cfg.gammas.is_empty() || cfg.deltas.is_empty() || cfg.repeats == 0 {
        return Err(Error::InvalidConfig("sweep needs gammas, deltas and at least one repeat".into()));
    }
    for &delta in &cfg.deltas {
        TrainConfig::new(cfg.eta, delta, 0).validate()?;
    }
    let augmented = augment_with_pi(ds.x(), ds.p(), ds.pi())?;

    let mut plans = Vec::new();
    for (g, &gamma) in cfg.gammas.iter().enumerate() {
        for repeat in 0..cfg.repeats {
            let hidden = hide_labels(y_true, gamma, derive_seed(cfg.seed, &[1, g as u64, repeat as u64]))?;
            let mut strata: Vec<usize> = y_true.iter().map(|&t| t as usize * 2).collect();
            for &i in &hidden.hidden_indices {
                strata[i] = 1;
            }
            let folds = stratified_kfold_by(&strata, cfg.folds, derive_seed(cfg.seed, &[2, g as u64, repeat as u64]))?;
            for (f, fold) in folds.into_iter().enumerate() {
                plans.push((g, repeat, f, fold, hidden.y_hidden.clone(), strata.clone()));
            }
        }
    }

    let outputs: Vec<JobOutput> = plans
        .par_iter()
        .map(|(g, repeat, f, fold, y_hidden, strata)| {
            let job_seed = derive_seed(cfg.seed, &[3, *g as u64, *repeat as u64, *f as u64]);
            run_sweep_job(ds, &augmented, cfg, fold, y_hidden, strata, job_seed).map(|(proposed, baselines, scored)| JobOutput {
                fold: FoldAuc {
                    gamma: *g,
                    repeat: *repeat,
                    fold: *f,
                    proposed,
                    baselines,
                },
                scored,
            })
        })
        .collect::<Result<_>>()?;

    let mut roc = Vec::new();
    for g in 0..cfg.gammas.len() {
        for d in 0..cfg.deltas.len() {
            let (mut scores, mut truth) = (Vec::new(), Vec::new());
            for o in outputs.iter().filter(|o| o.fold.gamma == g && o.fold.repeat == 0) {
                scores.extend_from_slice(&o.scored[d].0);
                truth.extend_from_slice(&o.scored[d].1);
            }
            roc.push((g, d, roc_auc(&scores, &truth)?));
        }
    }
    Ok(SweepResult {
        gammas: cfg.gammas.clone(),
        deltas: cfg.deltas.clone(),
        runs: outputs.into_iter().map(|o| o.fold).collect(),
        roc,
    })
}

type JobResult = (Vec<f64>, [f64; 4], Vec<(Vec<f64>, Vec<bool>)>);

fn run_sweep_job(
    ds: &CohortDataset,
    augmented: &SparseMatrix,
    cfg: &SweepConfig,
    fold: &Fold,
    y_hidden: &[bool],
    strata: &[usize],
    seed: u64,
) -> Result<JobResult> {
    let has_hidden = fold.test.iter().any(|&i| strata[i] == 1);
    let eval: Vec<usize> = fold
        .test
        .iter()
        .copied()
        .filter(|&i| strata[i] == 0 || strata[i] == 1 || (!has_hidden && strata[i] == 2))
        .collect();
    let truth: Vec<bool> = eval.iter().map(|&i| strata[i] != 0).collect();

    let y_train: Vec<bool> = fold.train.iter().map(|&i| y_hidden[i]).collect();
    let train_ds = ds.subset(&fold.train).with_labels(y_train.clone())?;
    let x_eval = ds.x().select_rows(&eval);

    let mut baselines = [0.0; 4];
    let a_train = augmented.select_rows(&fold.train);
    let a_eval = augmented.select_rows(&eval);
    let logistic = LogisticConfig {
        class_weights: LogisticConfig::balanced(&y_train),
        seed: derive_seed(seed, &[1]),
        ..cfg.logistic
    };
    for b in Baseline::ALL {
        let (xt, xe) = match b {
            Baseline::Perceptron | Baseline::Logistic => (train_ds.x(), &x_eval),
            Baseline::PerceptronPi | Baseline::LogisticPi => (&a_train, &a_eval),
        };
        let model: LinearClassifier = match b {
            Baseline::Perceptron | Baseline::PerceptronPi => {
                train_perceptron(xt, &y_train, cfg.baseline_epochs, derive_seed(seed, &[2]))?
            }
            Baseline::Logistic | Baseline::LogisticPi => train_logistic(xt, &y_train, &logistic)?,
        };
        baselines[b.index()] = roc_auc(&model.decision_function(xe)?, &truth)?.auc;
    }

    let mut proposed = Vec::with_capacity(cfg.deltas.len());
    let mut scored = Vec::with_capacity(cfg.deltas.len());
    for (d, &delta) in cfg.deltas.iter().enumerate() {
        let out = train(&train_ds, &TrainConfig::new(cfg.eta, delta, derive_seed(seed, &[4, d as u64])))?;
        let distances = x_eval.mul_vec(&out.model.w)?;
        proposed.push(roc_auc(&distances, &truth)?.auc);
        scored.push((softmax_normalize(&distances)?.into_inner(), truth.clone()));
    }
    Ok((proposed, baselines, scored))
}

/// Top-`theta` positives and the `3 * |positives|` lowest-likelihood negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSlices {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl TrainingSlices {
    /// `(index, label)` pairs, positives first.
    pub fn labeled(&self) -> Vec<(usize, bool)> {
        let pos = self.positives.iter().map(|&i| (i, true));
        pos.chain(self.negatives.iter().map(|&i| (i, false))).collect()
    }
}

/// Negative slice fraction `3 (1 - theta)` paired with positive slice `theta`.
pub fn lambda_for(theta: f64) -> f64 {
    3.0 * (1.0 - theta)
}

pub fn training_slices(l: &[f64], theta: f64) -> Result<TrainingSlices> {
    if !(theta > 0.75 && theta < 1.0) {
        return Err(Error::InvalidConfig(format!("theta {theta} outside (0.75, 1)")));
    }
    let positives = percentile_select(l, theta)?.indices;
    let want = 3 * positives.len();
    let available = l.len();
    if positives.len() + want > available {
        return Err(Error::SliceOverlap {
            positives: positives.len(),
            negatives: want,
            available,
        });
    }
    let order = descending(l);
    let mut negatives: Vec<usize> = order[available - want..].to_vec();
    let mut is_pos = vec![false; available];
    positives.iter().for_each(|&i| is_pos[i] = true);
    if negatives.iter().any(|&i| is_pos[i]) {
        return Err(Error::SliceOverlap {
            positives: positives.len(),
            negatives: want,
            available,
        });
    }
    negatives.sort_unstable();
    Ok(TrainingSlices { positives, negatives })
}

/// Fits a logistic model per fold on the labeled training rows and scores
/// that fold's test rows; returns out-of-fold margins for every row.
fn cross_fit(features: &SparseMatrix, labeled: &[(usize, bool)], folds: &[Fold], cfg: &LogisticConfig) -> Result<Vec<f64>> {
    let mut label = vec![None; features.n_rows()];
    for &(i, v) in labeled {
        label[i] = Some(v);
    }
    let parts: Vec<(Vec<usize>, Vec<f64>)> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let rows: Vec<usize> = fold.train.iter().copied().filter(|&i| label[i].is_some()).collect();
            let y: Vec<bool> = rows.iter().map(|&i| label[i].unwrap()).collect();
            let fold_cfg = LogisticConfig {
                class_weights: LogisticConfig::balanced(&y),
                seed: derive_seed(cfg.seed, &[f as u64]),
                ..*cfg
            };
            let model = train_logistic(&features.select_rows(&rows), &y, &fold_cfg)?;
            Ok((fold.test.clone(), model.decision_function(&features.select_rows(&fold.test))?))
        })
        .collect::<Result<_>>()?;
    let mut scores = vec![0.0; features.n_rows()];
    for (rows, s) in parts {
        for (i, v) in rows.into_iter().zip(s) {
            scores[i] = v;
        }
    }
    Ok(scores)
}

fn fit_all(features: &SparseMatrix, labeled: &[(usize, bool)], cfg: &LogisticConfig) -> Result<LinearClassifier> {
    let rows: Vec<usize> = labeled.iter().map(|p| p.0).collect();
    let y: Vec<bool> = labeled.iter().map(|p| p.1).collect();
    let cfg = LogisticConfig {
        class_weights: LogisticConfig::balanced(&y),
        ..*cfg
    };
    train_logistic(&features.select_rows(&rows), &y, &cfg)
}

/// Folds stratified jointly by disclosure and slice membership.
fn slice_folds(y: &[bool], slices: &TrainingSlices, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let mut strata: Vec<usize> = y.iter().map(|&v| v as usize * 3).collect();
    slices.positives.iter().for_each(|&i| strata[i] += 1);
    slices.negatives.iter().for_each(|&i| strata[i] += 2);
    stratified_kfold_by(&strata, k, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrescreenConfig {
    pub train: TrainConfig,
    pub folds: usize,
    pub logistic: LogisticConfig,
}

impl Default for PrescreenConfig {
    fn default() -> Self {
        PrescreenConfig {
            train: TrainConfig::default(),
            folds: 5,
            logistic: LogisticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrescreenResult {
    /// C1 fit on every labeled row.
    pub classifier: LinearClassifier,
    /// Out-of-fold C1 scores against the learned likelihoods.
    pub curve: ProcCurve,
    /// Same evaluation for a model trained on the disclosed labels of everyone.
    pub baseline: ProcCurve,
    pub likelihoods: Vec<f64>,
    pub slices: TrainingSlices,
    pub theta: f64,
}

/// Learns likelihoods from `X`, labels the top-`theta` slice positive and the
/// bottom `3 (1 - theta)` slice negative, and fits a logistic model on `Z`.
pub fn prescreen_pipeline(ds: &CohortDataset, theta: f64, cfg: &PrescreenConfig) -> Result<PrescreenResult> {
    let z = ds.z().ok_or(Error::MissingComponent("prefeatures (Z)"))?;
    let l = train(ds, &cfg.train)?.likelihoods.into_inner();
    let slices = training_slices(&l, theta)?;
    let folds = slice_folds(ds.y(), &slices, cfg.folds, derive_seed(cfg.train.seed, &[10]))?;

    let labeled = slices.labeled();
    let scores = cross_fit(z, &labeled, &folds, &cfg.logistic)?;
    let classifier = fit_all(z, &labeled, &cfg.logistic)?;
    let curve = proc_curve(&scores, &l)?;

    let baseline_labeled: Vec<(usize, bool)> = ds.y().iter().copied().enumerate().collect();
    let baseline_scores = cross_fit(z, &baseline_labeled, &folds, &cfg.logistic)?;
    let baseline = proc_curve(&baseline_scores, &l)?;

    Ok(PrescreenResult {
        classifier,
        curve,
        baseline,
        likelihoods: l,
        slices,
        theta,
    })
}

impl PrescreenResult {
    pub fn to_report(&self) -> ExperimentReport {
        let mut report = ExperimentReport::new("prescreen");
        for (name, curve) in [("proc", &self.curve), ("baseline_proc", &self.baseline)] {
            let mut b = Block::new(name, &["pfpr", "ptpr"]);
            for &(x, y) in &curve.points {
                b.push(vec![fmt_f64(x), fmt_f64(y)]);
            }
            report.blocks.push(b);
        }
        report.add_summary("theta", fmt_f64(self.theta));
        report.add_summary("lambda", fmt_f64(lambda_for(self.theta)));
        report.add_summary("positives", self.slices.positives.len());
        report.add_summary("negatives", self.slices.negatives.len());
        report.add_summary("pauc", fmt_f64(self.curve.pauc));
        report.add_summary("optimal_pauc", fmt_f64(self.curve.optimal_pauc));
        report.add_summary("baseline_pauc", fmt_f64(self.baseline.pauc));
        report
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceConfig {
    pub train: TrainConfig,
    pub theta: f64,
    pub folds: usize,
    pub logistic: LogisticConfig,
}

impl Default for IncidenceConfig {
    fn default() -> Self {
        IncidenceConfig {
            train: TrainConfig::new(30_000, 0.9, 0),
            theta: 0.95,
            folds: 5,
            logistic: LogisticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidencePoint {
    pub fraction: f64,
    pub rho: f64,
    pub p_value: f64,
    pub n_positive: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceCurve {
    pub points: Vec<IncidencePoint>,
    /// Properties held by nobody, left out of every correlation.
    pub excluded: Vec<usize>,
}

impl IncidenceCurve {
    /// The point with the highest correlation (first on ties).
    pub fn peak(&self) -> Option<&IncidencePoint> {
        self.points.iter().fold(None, |best: Option<&IncidencePoint>, p| match best {
            Some(b) if b.rho >= p.rho => Some(b),
            _ => Some(p),
        })
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut report = ExperimentReport::new("incidence");
        let mut b = Block::new("correlation", &["fraction", "rho", "p_value", "n_positive"]);
        for p in &self.points {
            b.push(vec![fmt_f64(p.fraction), fmt_f64(p.rho), fmt_f64(p.p_value), p.n_positive.to_string()]);
        }
        report.blocks.push(b);
        if let Some(p) = self.peak() {
            report.add_summary("peak_fraction", fmt_f64(p.fraction));
            report.add_summary("peak_rho", fmt_f64(p.rho));
            report.add_summary("peak_p_value", fmt_f64(p.p_value));
        }
        let excluded: Vec<String> = self.excluded.iter().map(|k| k.to_string()).collect();
        report.add_summary("excluded_properties", if excluded.is_empty() { "none".into() } else { excluded.join(",") });
        report
    }
}

/// Labels the top `round(f * n)` scores positive for each fraction `f` and
/// correlates per-property positive rates with `pi`. A constant rate vector
/// gives `rho = 0`, `p = 1`.
pub fn incidence_from_scores(scores: &[f64], property_of: &[usize], pi: &[f64], fractions: &[f64]) -> Result<IncidenceCurve> {
    if scores.len() != property_of.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} property rows",
            scores.len(),
            property_of.len()
        )));
    }
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::InvalidConfig(format!("fraction {f} outside [0, 1]")));
    }
    let mut sizes = vec![0usize; pi.len()];
    for &k in property_of {
        *sizes
            .get_mut(k)
            .ok_or_else(|| Error::DimensionMismatch(format!("property {k} for pi of length {}", pi.len())))? += 1;
    }
    let kept: Vec<usize> = (0..pi.len()).filter(|&k| sizes[k] > 0).collect();
    let excluded: Vec<usize> = (0..pi.len()).filter(|&k| sizes[k] == 0).collect();
    let pi_kept: Vec<f64> = kept.iter().map(|&k| pi[k]).collect();
    let order = descending(scores);
    let n = scores.len();
    let points = fractions
        .iter()
        .map(|&fraction| {
            let top = ((fraction * n as f64).round() as usize).min(n);
            let mut counts = vec![0usize; pi.len()];
            for &i in &order[..top] {
                counts[property_of[i]] += 1;
            }
            let rates: Vec<f64> = kept.iter().map(|&k| counts[k] as f64 / sizes[k] as f64).collect();
            let (rho, p_value) = match spearman(&pi_kept, &rates) {
                Ok(s) => (s.rho, s.p_value),
                Err(Error::ZeroVariance(_)) => (0.0, 1.0),
                Err(e) => return Err(e),
            };
            Ok(IncidencePoint {
                fraction,
                rho,
                p_value,
                n_positive: top,
            })
        })
        .collect::<Result<_>>()?;
    Ok(IncidenceCurve { points, excluded })
}

/// Learns likelihoods on `[X | Z]`, fits C2 on the top-`theta` and bottom
/// `3 (1 - theta)` slices under k-fold cross-fitting, and correlates the
/// per-property rate of top-scored users with `pi` at each fraction.
pub fn incidence_curve(ds: &CohortDataset, cfg: &IncidenceConfig, fractions: &[f64]) -> Result<IncidenceCurve> {
    let combined = ds.combined_features()?;
    let full = ds.with_features(combined)?;
    let l = train(&full, &cfg.train)?.likelihoods.into_inner();
    let slices = training_slices(&l, cfg.theta)?;
    let folds = slice_folds(ds.y(), &slices, cfg.folds, derive_seed(cfg.train.seed, &[20]))?;
    let logistic = LogisticConfig {
        seed: derive_seed(cfg.train.seed, &[21]),
        ..cfg.logistic
    };
    let scores = cross_fit(full.x(), &slices.labeled(), &folds, &logistic)?;
    incidence_from_scores(&scores, ds.property_of(), ds.pi(), fractions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityConfig {
    pub train: TrainConfig,
    /// Share of the population, by likelihood, from which non-SIUs are drawn.
    pub top_fraction: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            train: TrainConfig::new(30_000, 0.95, 0),
            top_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityResult {
    pub within_siu: f64,
    pub between: f64,
    pub within_non_siu: f64,
    /// Row indices of the compared individuals; SIUs first.
    pub members: Vec<usize>,
    /// Silhouette over `members`, group `true` for SIUs.
    pub silhouette: Silhouette,
}

impl SimilarityResult {
    pub fn n_siu(&self) -> usize {
        self.silhouette.groups.iter().filter(|&&g| g).count()
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut report = ExperimentReport::new("similarity");
        let mut table = Block::new("cosine", &["pair", "mean_cosine"]);
        table.push(vec!["siu-siu".into(), fmt_f64(self.within_siu)]);
        table.push(vec!["siu-nonsiu".into(), fmt_f64(self.between)]);
        table.push(vec!["nonsiu-nonsiu".into(), fmt_f64(self.within_non_siu)]);
        report.blocks.push(table);
        for (name, group) in [("silhouette_siu", true), ("silhouette_nonsiu", false)] {
            let mut b = Block::new(name, &["rank", "silhouette"]);
            for (k, v) in self.silhouette.chart(group).into_iter().enumerate() {
                b.push(vec![k.to_string(), fmt_f64(v)]);
            }
            report.blocks.push(b);
        }
        report.add_summary("siu", self.n_siu());
        report.add_summary("nonsiu", self.members.len() - self.n_siu());
        report
    }
}

/// Compares disclosed positives with the undisclosed individuals among the
/// top `top_fraction` of learned likelihoods, by cosine similarity of `X` rows.
pub fn similarity_report(ds: &CohortDataset, cfg: &SimilarityConfig) -> Result<SimilarityResult> {
    if !(cfg.top_fraction > 0.0 && cfg.top_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("top fraction {} outside (0, 1]", cfg.top_fraction)));
    }
    let l = train(ds, &cfg.train)?.likelihoods;
    let top = ((cfg.top_fraction * ds.n() as f64).round() as usize).min(ds.n());
    let siu: Vec<usize> = (0..ds.n()).filter(|&i| ds.y()[i]).collect();
    let mut non_siu: Vec<usize> = descending(&l)[..top].iter().copied().filter(|&i| !ds.y()[i]).collect();
    non_siu.sort_unstable();
    if siu.len() < 2 {
        return Err(Error::GroupTooSmall { group: 1 });
    }
    if non_siu.len() < 2 {
        return Err(Error::GroupTooSmall { group: 0 });
    }
    let x = ds.x();
    let within_siu = mean_cosine(x, &siu, &siu)?;
    let between = mean_cosine(x, &siu, &non_siu)?;
    let within_non_siu = mean_cosine(x, &non_siu, &non_siu)?;
    let members: Vec<usize> = siu.iter().chain(&non_siu).copied().collect();
    let groups: Vec<bool> = (0..members.len()).map(|k| k < siu.len()).collect();
    let silhouette = silhouette_values(&x.select_rows(&members), &groups)?;
    Ok(SimilarityResult {
        within_siu,
        between,
        within_non_siu,
        members,
        silhouette,
    })
}
