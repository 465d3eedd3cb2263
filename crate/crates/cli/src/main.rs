//! `cohortsgd`: generate populations, train hyperplanes and run the
//! evaluation protocols, writing TSV reports.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cohortsgd_core::evaluation::{
    fmt_f64, incidence_curve, prescreen_pipeline, similarity_report, sweep_experiment, Block, ExperimentReport,
    IncidenceConfig, PrescreenConfig, SimilarityConfig, SweepConfig,
};
use cohortsgd_core::sgd::{load_model, random_subset_jaccard, save_model, score, stability_report};
use cohortsgd_core::{generate, load_dataset, preset, save_dataset, train, CohortDataset, GenConfig, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "cohortsgd", version, about = "Cohort identification from disclosed members and population rates")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "COHORTSGD_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic population.
    Synth(SynthArgs),
    /// Learn a hyperplane and write model, likelihoods and trace.
    Train(TrainArgs),
    /// Score a dataset with a saved model.
    Score(ScoreArgs),
    /// Hiding and learning-percentile sweep against baselines.
    Sweep(SweepArgs),
    /// Pre-screening classifier on pre-event features.
    Prescreen(PrescreenArgs),
    /// Correlation of predicted incidence with the population statistic.
    Incidence(IncidenceArgs),
    /// Agreement between runs with different seeds.
    Stability(StabilityArgs),
    /// Cosine similarity of disclosed members and top-ranked individuals.
    Similarity(SimilarityArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Named configuration to start from.
    #[arg(long, default_value = "strong")]
    preset: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    q_z: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    positive_rate: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    signal: Option<f64>,
    #[arg(long)]
    z_signal: Option<f64>,
    #[arg(long)]
    pi_noise: Option<f64>,
    #[arg(long)]
    state_skew: Option<f64>,
}

#[derive(Debug, Args)]
struct DataArg {
    /// Dataset manifest.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value_t = 0.9)]
    delta: f64,
    #[arg(long, default_value_t = 30_000)]
    eta: usize,
    /// Model path (default: <out>/model.tsv).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, value_delimiter = ',', default_value = "0.75")]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.85,0.9,0.95")]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 30_000)]
    eta: usize,
}

#[derive(Debug, Args)]
struct PrescreenArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value_t = 0.95)]
    theta: f64,
    #[arg(long, default_value_t = 0.9)]
    delta: f64,
    #[arg(long, default_value_t = 30_000)]
    eta: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Debug, Args)]
struct IncidenceArgs {
    #[command(flatten)]
    data: DataArg,
    /// Fractions of the population labelled positive.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    theta: f64,
    #[arg(long, default_value_t = 0.9)]
    delta: f64,
    #[arg(long, default_value_t = 30_000)]
    eta: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0.9)]
    delta: f64,
    #[arg(long, default_value_t = 30_000)]
    eta: usize,
}

#[derive(Debug, Args)]
struct SimilarityArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value_t = 0.95)]
    delta: f64,
    #[arg(long, default_value_t = 30_000)]
    eta: usize,
    /// Share of the population, by likelihood, searched for non-disclosed members.
    #[arg(long, default_value_t = 0.1)]
    top_fraction: f64,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err("--threads must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let out = cli.out.as_path();
    let seed = cli.seed;
    match cli.command {
        Command::Synth(a) => synth(a, seed, out),
        Command::Train(a) => train_cmd(a, seed, out),
        Command::Score(a) => score_cmd(a),
        Command::Sweep(a) => {
            let ds = load(&a.data)?;
            let cfg = SweepConfig {
                gammas: a.gammas,
                deltas: a.deltas,
                folds: a.folds,
                repeats: a.repeats,
                eta: a.eta,
                seed,
                ..Default::default()
            };
            write_report(&sweep_experiment(&ds, &cfg)?.to_report(), out, "sweep.tsv")
        }
        Command::Prescreen(a) => {
            let ds = load(&a.data)?;
            let cfg = PrescreenConfig {
                train: TrainConfig::new(a.eta, a.delta, seed),
                folds: a.folds,
                ..Default::default()
            };
            write_report(&prescreen_pipeline(&ds, a.theta, &cfg)?.to_report(), out, "prescreen.tsv")
        }
        Command::Incidence(a) => {
            let ds = load(&a.data)?;
            let cfg = IncidenceConfig {
                train: TrainConfig::new(a.eta, a.delta, seed),
                theta: a.theta,
                folds: a.folds,
                ..Default::default()
            };
            write_report(&incidence_curve(&ds, &cfg, &a.fractions)?.to_report(), out, "incidence.tsv")
        }
        Command::Stability(a) => stability(a, seed, out),
        Command::Similarity(a) => {
            let ds = load(&a.data)?;
            let cfg = SimilarityConfig {
                train: TrainConfig::new(a.eta, a.delta, seed),
                top_fraction: a.top_fraction,
            };
            write_report(&similarity_report(&ds, &cfg)?.to_report(), out, "similarity.tsv")
        }
    }
}

fn load(data: &DataArg) -> CliResult<CohortDataset> {
    Ok(load_dataset(&data.data)?)
}

fn write_report(report: &ExperimentReport, out: &Path, file: &str) -> CliResult<()> {
    fs::create_dir_all(out)?;
    let path = out.join(file);
    report.write_tsv(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn synth(a: SynthArgs, seed: u64, out: &Path) -> CliResult<()> {
    let base = preset(&a.preset)?;
    let cfg = GenConfig {
        n: a.n.unwrap_or(base.n),
        m: a.m.unwrap_or(base.m),
        q_z: a.q_z.unwrap_or(base.q_z),
        t: a.t.unwrap_or(base.t),
        positive_rate: a.positive_rate.unwrap_or(base.positive_rate),
        gamma: a.gamma.unwrap_or(base.gamma),
        signal: a.signal.unwrap_or(base.signal),
        z_signal: a.z_signal.unwrap_or(base.z_signal),
        pi_noise: a.pi_noise.unwrap_or(base.pi_noise),
        state_skew: a.state_skew.unwrap_or(base.state_skew),
        seed,
        ..base
    };
    let ds = generate(&cfg)?;
    let manifest = save_dataset(&ds, out)?;
    let positives = ds.y_true().map_or(0, |t| t.iter().filter(|&&v| v).count());
    println!("manifest\t{}", manifest.display());
    println!("n\t{}", ds.n());
    println!("positives\t{positives}");
    println!("disclosed\t{}", ds.n_disclosed());
    println!("states\t{}", ds.n_properties());
    Ok(())
}

fn train_cmd(a: TrainArgs, seed: u64, out: &Path) -> CliResult<()> {
    let ds = load(&a.data)?;
    let result = train(&ds, &TrainConfig::new(a.eta, a.delta, seed))?;
    fs::create_dir_all(out)?;
    let model_path = a.model.unwrap_or_else(|| out.join("model.tsv"));
    save_model(&result.model, &model_path)?;
    fs::write(out.join("likelihoods.tsv"), likelihood_tsv(&result.likelihoods))?;
    let mut trace = String::from("iteration\tcorr\trecall\tcombined\n");
    for (it, v) in &result.trace.accepted_steps {
        writeln!(trace, "{it}\t{}\t{}\t{}", fmt_f64(v.corr), fmt_f64(v.recall), fmt_f64(v.combined))?;
    }
    fs::write(out.join("trace.tsv"), trace)?;
    let v = result.trace.final_value;
    println!("objective\t{}\tcorr\t{}\trecall\t{}", fmt_f64(v.combined), fmt_f64(v.corr), fmt_f64(v.recall));
    Ok(())
}

fn likelihood_tsv(l: &[f64]) -> String {
    let mut s = String::with_capacity(l.len() * 24);
    for (i, v) in l.iter().enumerate() {
        writeln!(s, "{i}\t{}", fmt_f64(*v)).unwrap();
    }
    s
}

fn score_cmd(a: ScoreArgs) -> CliResult<()> {
    let ds = load(&a.data)?;
    let model = load_model(&a.model)?;
    print!("{}", likelihood_tsv(&score(&model, ds.x())?));
    Ok(())
}

fn stability(a: StabilityArgs, seed: u64, out: &Path) -> CliResult<()> {
    let ds = load(&a.data)?;
    let r = stability_report(&ds, &TrainConfig::new(a.eta, a.delta, seed), a.runs)?;
    let mut report = ExperimentReport::new("stability");
    let mut pairs = Block::new("pairwise_rho", &["run_a", "run_b", "seed_a", "seed_b", "rho"]);
    for i in 0..r.seeds.len() {
        for j in i + 1..r.seeds.len() {
            pairs.push(vec![
                i.to_string(),
                j.to_string(),
                r.seeds[i].to_string(),
                r.seeds[j].to_string(),
                fmt_f64(r.pairwise_rho[i][j]),
            ]);
        }
    }
    report.blocks.push(pairs);
    report.add_summary("runs", r.seeds.len());
    report.add_summary("min_rho", fmt_f64(r.min_rho()));
    report.add_summary("agreement", fmt_f64(r.agreement));
    report.add_summary("random_agreement", fmt_f64(random_subset_jaccard(1.0 - a.delta)));
    write_report(&report, out, "stability.tsv")
}
