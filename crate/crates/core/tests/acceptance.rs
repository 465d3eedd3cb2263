//! Acceptance suite: eleven end-to-end criteria, one verdict line each.
//!
//! Run all with `cargo test --release --test acceptance`, or a subset by
//! number: `cargo test --release --test acceptance -- 4 10`.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cohortsgd_core::evaluation::{
    incidence_curve, prescreen_pipeline, proc_curve, roc_auc, similarity_report, sweep_experiment, Baseline,
    wilcoxon_signed_rank, IncidenceConfig, PrescreenConfig, SimilarityConfig, SweepConfig, SweepResult,
};
use cohortsgd_core::objective::{evaluate, recall_term};
use cohortsgd_core::sgd::{random_subset_jaccard, stability_report};
use cohortsgd_core::stats::{harmonic_mean, percentile_select, spearman_rho};
use cohortsgd_core::{generate, preset, train, CohortDataset, GenConfig, SparseMatrix, TrainConfig};

const SEEDS: u64 = 5;
const SWEEP_DELTAS: [f64; 7] = [0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99];
const SWEEP_ETA: usize = 5_000;
const ETA: usize = 30_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn strong(seed: u64) -> CohortDataset {
    generate(&GenConfig {
        seed,
        ..preset("strong").unwrap()
    })
    .unwrap()
}

// ---------------------------------------------------------------- criterion 1

fn oracle_select(r: &[f64], alpha: f64) -> Vec<usize> {
    let mut sorted = r.to_vec();
    sorted.sort_by(f64::total_cmp);
    let need = (alpha * r.len() as f64 - 1e-9).max(1.0);
    let threshold = sorted
        .iter()
        .copied()
        .find(|&v| r.iter().filter(|&&x| x <= v).count() as f64 >= need)
        .unwrap_or(sorted[sorted.len() - 1]);
    (0..r.len()).filter(|&i| r[i] >= threshold).collect()
}

fn percentile_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for case in 0..500 {
        let n = rng.random_range(1..=200);
        let r: Vec<f64> = if case % 3 == 0 {
            (0..n).map(|_| rng.random_range(0..6) as f64).collect()
        } else {
            (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect()
        };
        let alpha = if case % 2 == 0 {
            rng.random_range(0..=n) as f64 / n as f64
        } else {
            rng.random::<f64>()
        };
        if percentile_select(&r, alpha).unwrap().indices != oracle_select(&r, alpha) {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches} of 500 selections differ from the sort-and-filter oracle"))
}

// ---------------------------------------------------------------- criterion 2

fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

fn spearman_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 200 {
        let n = rng.random_range(3..=50);
        let levels = rng.random_range(2..=n.max(3));
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let (ra, rb) = (oracle_ranks(&a), oracle_ranks(&b));
        if ra.iter().all(|&x| x == ra[0]) || rb.iter().all(|&x| x == rb[0]) {
            continue;
        }
        let rho = spearman_rho(&a, &b).unwrap();
        worst = worst.max((rho - oracle_pearson(&ra, &rb)).abs());
        checked += 1;
    }
    let hand = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    verdict(
        worst <= 1e-12 && hand == 0.8,
        format!("max |rho - oracle| = {worst:.2e} over 200 tied pairs; n = 4 hand case = {hand}"),
    )
}

// ---------------------------------------------------------------- criterion 3

fn objective_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    for case in 0..100 {
        let n = rng.random_range(20..300);
        let t = rng.random_range(2..12);
        let property: Vec<usize> = (0..n).map(|_| rng.random_range(0..t)).collect();
        let triplets: Vec<(usize, usize, f64)> = property.iter().enumerate().map(|(i, &k)| (i, k, 1.0)).collect();
        let p = SparseMatrix::from_triplets(n, t, triplets).unwrap();
        let pi: Vec<f64> = (0..t).map(|_| rng.random::<f64>()).collect();
        let mut y: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.1).collect();
        y[rng.random_range(0..n)] = true;
        let d: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let delta = rng.random_range(0.5..0.99);

        let v = evaluate(&pi, &p, &y, &d, delta).unwrap();
        if v.combined != harmonic_mean(v.corr, v.recall).unwrap() {
            failures.push(format!("case {case}: combined is not the harmonic mean"));
        }
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let scaled: Vec<f64> = d.iter().map(|x| x * scale).collect();
        let w = evaluate(&pi, &p, &y, &scaled, delta).unwrap();
        if (w.combined - v.combined).abs() > 1e-12 {
            failures.push(format!("case {case}: scaling d by {scale} moved the objective"));
        }
        let mut last = f64::INFINITY;
        for k in 1..20 {
            let r = recall_term(&y, &d, k as f64 / 20.0).unwrap();
            if r > last {
                failures.push(format!("case {case}: recall rose between deltas"));
            }
            last = r;
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "100 instances: harmonic mean, scale invariance and recall monotonicity hold".to_string()
        } else {
            failures.join("; ")
        },
    )
}

// ---------------------------------------------------------------- criterion 4

fn separable_contract() -> Verdict {
    let ds = generate(&preset("separable").unwrap()).unwrap();
    let cfg = TrainConfig::new(2_000, 0.95, 0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train(&ds, &cfg).unwrap())
    };
    let out = run(1);
    let again = run(4);
    let deterministic = out.model.w == again.model.w && out.likelihoods == again.likelihoods;

    let truth = ds.y_true().unwrap();
    let hidden: Vec<usize> = (0..ds.n()).filter(|&i| !ds.y()[i]).collect();
    let scores: Vec<f64> = hidden.iter().map(|&i| out.likelihoods[i]).collect();
    let labels: Vec<bool> = hidden.iter().map(|&i| truth[i]).collect();
    let auc = roc_auc(&scores, &labels).unwrap().auc;
    let objective = out.trace.final_value.combined;
    let steps = &out.trace.accepted_steps;
    let increasing = steps.windows(2).all(|w| w[1].1.combined > w[0].1.combined);
    let norm = out.model.w.iter().map(|v| v * v).sum::<f64>().sqrt();
    verdict(
        objective >= 0.95 && (auc - 1.0).abs() <= 0.01 && increasing && (norm - 1.0).abs() <= 1e-9 && deterministic,
        format!(
            "objective {objective:.4}, hidden-positive AUC {auc:.5}, {} accepted steps strictly increasing: {increasing}, |w| - 1 = {:.1e}, same across 1 and 4 threads: {deterministic}",
            steps.len(),
            norm - 1.0
        ),
    )
}

// ------------------------------------------------------------ criteria 5 and 6

fn sweeps() -> Vec<SweepResult> {
    (0..SEEDS)
        .map(|seed| {
            let cfg = SweepConfig {
                deltas: SWEEP_DELTAS.to_vec(),
                eta: SWEEP_ETA,
                seed,
                ..Default::default()
            };
            sweep_experiment(&strong(seed), &cfg).unwrap()
        })
        .collect()
}

fn pooled_proposed(runs: &[SweepResult], delta: usize) -> Vec<f64> {
    runs.iter().flat_map(|r| r.proposed_aucs(0, delta)).collect()
}

fn pooled_baseline(runs: &[SweepResult], b: Baseline) -> Vec<f64> {
    runs.iter().flat_map(|r| r.baseline_aucs(0, b)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn baseline_comparison(runs: &[SweepResult]) -> Verdict {
    let rate = preset("strong").unwrap().positive_rate;
    let at = SWEEP_DELTAS.iter().position(|&d| (d - (1.0 - rate)).abs() < 1e-9).unwrap();
    let proposed = pooled_proposed(runs, at);
    let perceptron = pooled_baseline(runs, Baseline::Perceptron);
    let test = wilcoxon_signed_rank(&proposed, &perceptron).unwrap();
    let mp = mean(&proposed);
    let augmented: Vec<(Baseline, f64)> = [Baseline::PerceptronPi, Baseline::LogisticPi]
        .into_iter()
        .map(|b| (b, mean(&pooled_baseline(runs, b))))
        .collect();
    let not_rescued = augmented.iter().all(|(_, m)| *m < mp);
    let logistic = mean(&pooled_baseline(runs, Baseline::Logistic));
    verdict(
        mp > mean(&perceptron) && test.p_value < 0.05 && not_rescued,
        format!(
            "proposed {mp:.4} vs perceptron {:.4} (Wilcoxon p = {:.2e}, {} folds); perceptron+pi {:.4}, logistic {logistic:.4}, logistic+pi {:.4}",
            mean(&perceptron),
            test.p_value,
            proposed.len(),
            augmented[0].1,
            augmented[1].1
        ),
    )
}

fn sweep_shape(runs: &[SweepResult]) -> Verdict {
    let curve: Vec<f64> = (0..SWEEP_DELTAS.len()).map(|d| mean(&pooled_proposed(runs, d))).collect();
    let best = (0..curve.len()).fold(0, |b, d| if curve[d] > curve[b] { d } else { b });
    let target = 1.0 - preset("strong").unwrap().positive_rate;
    let largest_drop = curve.windows(2).map(|w| (w[0] - w[1]).abs()).fold(0.0, f64::max);
    let shape: Vec<String> = SWEEP_DELTAS.iter().zip(&curve).map(|(d, a)| format!("{d}:{a:.3}")).collect();
    verdict(
        (SWEEP_DELTAS[best] - target).abs() <= 0.05 + 1e-9 && largest_drop <= 0.15,
        format!(
            "peak at delta {} (target {target}), largest adjacent change {largest_drop:.3}; {}",
            SWEEP_DELTAS[best],
            shape.join(" ")
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn proc_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut binary_equal = 0;
    let mut cases = 0;
    while cases < 100 {
        let n = rng.random_range(2..120);
        let c: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 20.0).round() / 20.0).collect();
        let truth: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        if truth.iter().all(|&t| t == truth[0]) {
            continue;
        }
        let l: Vec<f64> = truth.iter().map(|&t| t as u8 as f64).collect();
        let p = proc_curve(&c, &l).unwrap();
        let r = roc_auc(&c, &truth).unwrap();
        if p.points == r.points && p.pauc.to_bits() == r.auc.to_bits() {
            binary_equal += 1;
        }
        cases += 1;
    }
    let mut dominated = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..100);
        let l: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let p = proc_curve(&c, &l).unwrap();
        if p.optimal_pauc >= p.pauc - 1e-12 {
            dominated += 1;
        }
    }
    let mut worst_constant = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..100);
        let c: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        worst_constant = worst_constant.max((proc_curve(&c, &vec![0.5; n]).unwrap().pauc - 0.5).abs());
    }
    verdict(
        binary_equal == 100 && dominated == 1000 && worst_constant <= 1e-12,
        format!(
            "binary pROC == ROC in {binary_equal}/100; optimal dominates in {dominated}/1000; constant-l max |pauc - 0.5| = {worst_constant:.1e}"
        ),
    )
}

// ---------------------------------------------------------------- criterion 8

fn prescreen() -> Verdict {
    let mut wins = [0; 2];
    let mut lambda_ok = true;
    let mut rows = Vec::new();
    for seed in 0..SEEDS {
        let ds = strong(seed);
        for (k, theta) in [0.99, 0.95].into_iter().enumerate() {
            let cfg = PrescreenConfig {
                train: TrainConfig::new(ETA, 0.9, seed),
                ..Default::default()
            };
            let r = prescreen_pipeline(&ds, theta, &cfg).unwrap();
            lambda_ok &= r.slices.negatives.len() == 3 * r.slices.positives.len();
            if r.curve.pauc > r.baseline.pauc {
                wins[k] += 1;
            }
            rows.push(format!("{seed}/{theta}: {:.4} vs {:.4}", r.curve.pauc, r.baseline.pauc));
        }
    }
    verdict(
        wins.iter().all(|&w| w >= 4) && lambda_ok,
        format!(
            "pipeline beats SIU-only baseline in {}/5 (theta 0.99) and {}/5 (theta 0.95) seeds; 3x negatives: {lambda_ok}; {}",
            wins[0],
            wins[1],
            rows.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn incidence() -> Verdict {
    let fractions: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    let mut good = 0;
    let mut rows = Vec::new();
    for seed in 0..SEEDS {
        let gen = GenConfig {
            seed,
            pi_noise: 0.2,
            ..preset("strong").unwrap()
        };
        let ds = generate(&gen).unwrap();
        let cfg = IncidenceConfig {
            train: TrainConfig::new(ETA, 0.9, seed),
            ..Default::default()
        };
        let curve = incidence_curve(&ds, &cfg, &fractions).unwrap();
        let peak = *curve.peak().unwrap();
        let last = curve.points.last().unwrap();
        let ok = peak.p_value < 0.05 && (peak.fraction - gen.positive_rate).abs() <= 0.15 + 1e-9 && last.rho < peak.rho;
        good += ok as usize;
        rows.push(format!(
            "seed {seed}: peak rho {:.3} at {} (p {:.1e}), rho {:.3} at {}",
            peak.rho, peak.fraction, peak.p_value, last.rho, last.fraction
        ));
    }
    verdict(good >= 3, format!("{good}/5 seeds peak significantly near the positive rate; {}", rows.join("; ")))
}

// --------------------------------------------------------------- criterion 10

fn stability() -> Verdict {
    let delta = 0.9;
    let s = stability_report(&strong(0), &TrainConfig::new(ETA, delta, 0), 10).unwrap();
    let noise = generate(&preset("noise").unwrap()).unwrap();
    let z = stability_report(&noise, &TrainConfig::new(ETA, delta, 0), 10).unwrap();
    let expected = random_subset_jaccard(1.0 - delta);
    verdict(
        s.min_rho() >= 0.8 && s.agreement >= 0.6 && (z.agreement - expected).abs() <= 0.1,
        format!(
            "strong: min pairwise rho {:.4}, agreement {:.4}; noise: agreement {:.4} vs random {expected:.4}",
            s.min_rho(),
            s.agreement,
            z.agreement
        ),
    )
}

// --------------------------------------------------------------- criterion 11

fn similarity() -> Verdict {
    let cfg = SimilarityConfig {
        train: TrainConfig::new(ETA, 0.95, 0),
        top_fraction: 0.1,
    };
    let r = similarity_report(&strong(0), &cfg).unwrap();
    let values = &r.silhouette.values;
    let mixed = values.iter().any(|&v| v > 0.0) && values.iter().any(|&v| v < 0.0);
    verdict(
        r.within_siu >= r.between && r.between >= r.within_non_siu && mixed,
        format!(
            "within-SIU {:.4} >= between {:.4} >= within-nonSIU {:.4}; silhouette has both signs: {mixed} ({} SIU, {} non-SIU)",
            r.within_siu,
            r.between,
            r.within_non_siu,
            r.n_siu(),
            r.members.len() - r.n_siu()
        ),
    )
}

// ---------------------------------------------------------------------- driver

struct Criterion {
    id: usize,
    name: &'static str,
    /// Wall-clock limit, where one is stated.
    budget: Option<u64>,
}

const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "percentile selection matches oracle", budget: Some(5) },
    Criterion { id: 2, name: "spearman matches oracle", budget: None },
    Criterion { id: 3, name: "objective invariants", budget: Some(10) },
    Criterion { id: 4, name: "hyperplane search on separable preset", budget: Some(60) },
    Criterion { id: 5, name: "proposed beats baselines", budget: Some(600) },
    Criterion { id: 6, name: "learning-percentile sweep shape", budget: Some(600) },
    Criterion { id: 7, name: "probabilistic ROC properties", budget: None },
    Criterion { id: 8, name: "pre-screening classifier", budget: Some(600) },
    Criterion { id: 9, name: "incidence correlation curve", budget: Some(600) },
    Criterion { id: 10, name: "stability across seeds", budget: Some(900) },
    Criterion { id: 11, name: "similarity ordering", budget: None },
];

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |id: usize| wanted.is_empty() || wanted.contains(&id);
    let mut shared: Option<(Vec<SweepResult>, Duration)> = None;
    let mut failed = Vec::new();

    for c in CRITERIA.iter().filter(|c| selected(c.id)) {
        let start = Instant::now();
        let reused = match (c.id, &shared) {
            (5 | 6, Some(s)) => s.1,
            _ => Duration::ZERO,
        };
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| match c.id {
            1 => percentile_oracle(),
            2 => spearman_oracle(),
            3 => objective_invariants(),
            4 => separable_contract(),
            5 | 6 => {
                let runs = &shared
                    .get_or_insert_with(|| {
                        let t = Instant::now();
                        let runs = sweeps();
                        (runs, t.elapsed())
                    })
                    .0;
                if c.id == 5 {
                    baseline_comparison(runs)
                } else {
                    sweep_shape(runs)
                }
            }
            7 => proc_properties(),
            8 => prescreen(),
            9 => incidence(),
            10 => stability(),
            11 => similarity(),
            _ => unreachable!(),
        }));
        let elapsed = start.elapsed() + reused;
        let within_budget = c.budget.is_none_or(|b| elapsed.as_secs_f64() <= b as f64);
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && within_budget, v.detail),
            Err(e) => (
                false,
                format!(
                    "panicked: {}",
                    e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied()).unwrap_or("?")
                ),
            ),
        };
        let budget = c.budget.map_or(String::new(), |b| format!(" of {b}s"));
        println!(
            "criterion {:>2} {} [{}] {:.1}s{budget}: {detail}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
