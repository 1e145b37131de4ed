//! Command-line benchmark harness. Exit codes: 0 success, 2 configuration or
//! input errors, 3 when every run in a sweep failed, 1 anything else.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gai_bench::config::{apply_kv, load_config_file, ExperimentConfig};
use gai_bench::{emit, runner, BenchResult};

#[derive(Parser)]
#[command(
    name = "gai-bench",
    version,
    about = "Benchmark harness for threshold bandit identification policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write runs.csv, aggregate.csv and series/.
    Run(Box<RunArgs>),
    /// Average per-run series across replications into per-figure CSV files.
    EmitPlots(EmitPlotsArgs),
    /// List the built-in dataset presets.
    Presets,
}

/// Every flag mirrors a config-file key; flags win over the file, the file
/// wins over defaults.
#[derive(Args, Debug)]
struct RunArgs {
    /// Config file of `key = value` lines (# comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset preset name, or `csv` to load a ratings file.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    csv_path: Option<PathBuf>,
    #[arg(long)]
    item_column: Option<String>,
    #[arg(long)]
    rating_column: Option<String>,
    #[arg(long)]
    threshold_percentile: Option<f64>,
    #[arg(long)]
    max_arms: Option<usize>,
    /// Comma-separated algorithm labels.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Training epochs for dgai-offline.
    #[arg(long)]
    epochs: Option<u64>,
    /// Replications per algorithm.
    #[arg(long = "reps")]
    repetitions: Option<u64>,
    /// Base seed; replication r runs with seed base + r.
    #[arg(long = "seed")]
    base_seed: Option<u64>,
    /// Scale factor on preset arm count and horizon.
    #[arg(long)]
    scale: Option<f64>,
    /// Output directory (default: $GAI_BENCH_OUT, then ./bench-out).
    #[arg(long = "out")]
    output_dir: Option<PathBuf>,
    /// Record full per-round policies (small horizons only).
    #[arg(long)]
    emit_policy_log: bool,
    /// Worker threads; 0 uses the library default.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Policy-mass confidence level when it should differ from delta.
    #[arg(long)]
    delta_policy: Option<f64>,
    #[arg(long)]
    mean_low: Option<f64>,
    #[arg(long)]
    mean_high: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    #[arg(long)]
    sharpness: Option<f64>,
    #[arg(long)]
    batch_size: Option<u64>,
    /// Initial identification-width scale.
    #[arg(long)]
    alpha: Option<f64>,
    /// Initial sampling-width scale.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    resample_prob: Option<f64>,
    /// APT-G selects the smallest index instead of the largest.
    #[arg(long)]
    apt_argmin: bool,
    /// LUCB-G multiplies the round into its bonus's log argument.
    #[arg(long)]
    lucb_round_factor: bool,
}

#[derive(Args, Debug)]
struct EmitPlotsArgs {
    /// Experiment output directory (default: $GAI_BENCH_OUT, then ./bench-out).
    #[arg(long = "out")]
    output_dir: Option<PathBuf>,
    /// Trailing moving-average window; affects only the figure files.
    #[arg(long)]
    smooth: Option<usize>,
}

fn build_config(args: &RunArgs) -> BenchResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        load_config_file(&mut cfg, path)?;
    }
    if let Some(v) = &args.dataset {
        cfg.dataset = v.clone();
    }
    if let Some(v) = &args.csv_path {
        cfg.csv_path = Some(v.clone());
    }
    if let Some(v) = &args.item_column {
        cfg.item_column = v.clone();
    }
    if let Some(v) = &args.rating_column {
        cfg.rating_column = v.clone();
    }
    if let Some(v) = args.threshold_percentile {
        cfg.threshold_percentile = v;
    }
    if let Some(v) = args.max_arms {
        cfg.max_arms = Some(v);
    }
    if let Some(v) = &args.algorithms {
        apply_kv(&mut cfg, "algorithms", v, "--algorithms")?;
    }
    if let Some(v) = args.horizon {
        cfg.horizon = Some(v);
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.repetitions {
        cfg.repetitions = v;
    }
    if let Some(v) = args.base_seed {
        cfg.base_seed = v;
    }
    if let Some(v) = args.scale {
        cfg.scale = v;
    }
    if let Some(v) = &args.output_dir {
        cfg.output_dir = Some(v.clone());
    }
    if args.emit_policy_log {
        cfg.emit_policy_log = true;
    }
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.delta_policy {
        cfg.delta_policy = Some(v);
    }
    if let Some(v) = args.mean_low {
        cfg.mean_low = v;
    }
    if let Some(v) = args.mean_high {
        cfg.mean_high = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.eta1 {
        cfg.eta1 = v;
    }
    if let Some(v) = args.eta2 {
        cfg.eta2 = v;
    }
    if let Some(v) = args.sharpness {
        cfg.sharpness = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.resample_prob {
        cfg.resample_prob = v;
    }
    if args.apt_argmin {
        cfg.apt_argmin = true;
    }
    if args.lucb_round_factor {
        cfg.lucb_round_factor = true;
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> BenchResult<()> {
    let cfg = build_config(args)?;
    let out_dir = cfg.resolved_output_dir();
    let summary = runner::execute(&cfg)?;
    println!(
        "wrote {} runs ({} failed) to {}",
        summary.succeeded + summary.failed,
        summary.failed,
        out_dir.display()
    );
    Ok(())
}

fn emit_plots(args: &EmitPlotsArgs) -> BenchResult<()> {
    let out_dir = args.output_dir.clone().unwrap_or_else(|| {
        match std::env::var("GAI_BENCH_OUT") {
            Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => PathBuf::from("bench-out"),
        }
    });
    let written = emit::emit_plots(&out_dir, args.smooth)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn presets() {
    println!("name,arms,horizon,threshold");
    for p in gai_core::datasets::PRESETS {
        println!("{},{},{},{}", p.name, p.arms, p.horizon, p.threshold);
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::EmitPlots(args) => emit_plots(args),
        Command::Presets => {
            presets();
            Ok(())
        }
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
