//! Experiment execution: builds the bandit instance, fans replications out
//! over algorithms and seeds, and reduces each trace to benchmark metrics.

use std::path::{Path, PathBuf};

use gai_core::algorithms::{
    run_gai_episode, run_gai_episode_with, union_identification_radius, Algorithm, AlgorithmSpec,
    EpisodeOptions,
};
use gai_core::datasets::{generated_instance, load_ratings_csv, preset, scaled_preset, PRESETS};
use gai_core::exec::map_seeds_with_jobs;
use gai_core::metrics::{cumulative_reward, exploit_score};
use gai_core::model::BanditInstance;
use gai_core::trace::{EpochLogEntry, RunTrace};
use gai_core::training::offline_train;

use crate::config::ExperimentConfig;
use crate::{emit, BenchError, BenchResult};

/// Labels accepted in the `algorithms` list.
pub const ALGORITHM_LABELS: [&str; 10] = [
    "hdoc",
    "lucb-g",
    "apt-g",
    "tt-ts",
    "softucb-g",
    "dgai",
    "dgai-online",
    "dgai-offline",
    "ucb",
    "dgai-mab",
];

/// Target number of points per round-indexed series; longer runs are thinned.
const SERIES_POINTS: u64 = 1000;

/// One point of a per-run series: `metric` at round/epoch `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub metric: &'static str,
    pub x: u64,
    pub value: f64,
}

/// Reduced outcome of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub exploit_score: f64,
    pub cumulative_reward: f64,
    /// Stop round, censored at the horizon when identification never finished.
    pub tau_stop: u64,
    pub n_good_output: usize,
    pub n_false_good: usize,
    pub series: Vec<SeriesPoint>,
    pub policy_log: Option<Vec<Vec<f64>>>,
}

/// One (algorithm, replication) cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub algorithm: String,
    pub dataset: String,
    pub seed: u64,
    pub horizon: u64,
    pub outcome: Result<RunMetrics, String>,
}

/// Per-algorithm summary over successful replications. Stats are `None` when
/// every replication failed.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: String,
    pub dataset: String,
    pub succeeded: u64,
    pub failed: u64,
    pub exploit_mean: Option<f64>,
    pub exploit_sd: Option<f64>,
    pub cum_reward_mean: Option<f64>,
    pub cum_reward_sd: Option<f64>,
    pub tau_stop_mean: Option<f64>,
    pub tau_stop_sd: Option<f64>,
    pub n_good_mean: Option<f64>,
    pub false_good_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSummary {
    pub succeeded: usize,
    pub failed: usize,
}

/// Resolved experiment inputs shared by every run.
pub struct Bench {
    pub instance: BanditInstance,
    pub horizon: u64,
}

#[derive(Debug, Clone, Copy)]
enum Work {
    Episode(AlgorithmSpec),
    /// Train scales offline, then score a deployment episode at the trained
    /// values so the metrics row is comparable with the fixed baselines.
    OfflineTrain(AlgorithmSpec),
}

fn config_err(e: gai_core::Error) -> BenchError {
    BenchError::Config(e.to_string())
}

/// Materializes the dataset: a preset (scaled, synthetic means) or a ratings
/// CSV. The horizon override always wins; `csv` has no default horizon.
pub fn build_bench(cfg: &ExperimentConfig) -> BenchResult<Bench> {
    let (instance, preset_horizon) = if cfg.dataset == "csv" {
        let path = cfg.csv_path.as_ref().expect("validated: csv_path present");
        let instance = load_ratings_csv(path, &cfg.ratings_spec()).map_err(config_err)?;
        (instance, None)
    } else {
        let Some(p) = preset(&cfg.dataset) else {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            return Err(BenchError::Config(format!(
                "unknown dataset {:?}; expected one of {} or csv",
                cfg.dataset,
                names.join(", ")
            )));
        };
        let p = scaled_preset(p, cfg.scale).map_err(config_err)?;
        let instance =
            generated_instance(&p, cfg.mean_low, cfg.mean_high, cfg.base_seed).map_err(config_err)?;
        (instance, Some(p.horizon))
    };
    let horizon = cfg
        .horizon
        .or(preset_horizon)
        .expect("validated: csv requires horizon");
    if horizon < instance.arms() as u64 {
        return Err(BenchError::Config(format!(
            "horizon {} is shorter than the warm-up over {} arms",
            horizon,
            instance.arms()
        )));
    }
    Ok(Bench { instance, horizon })
}

fn build_work(cfg: &ExperimentConfig, label: &str) -> BenchResult<Work> {
    let algorithm = match label {
        "hdoc" => Algorithm::Hdoc,
        "lucb-g" => Algorithm::LucbG { round_factor: cfg.lucb_round_factor },
        "apt-g" => Algorithm::AptG { argmin: cfg.apt_argmin },
        "tt-ts" => Algorithm::TtTs { resample_prob: cfg.resample_prob },
        "softucb-g" => Algorithm::SoftUcbG,
        "dgai" | "dgai-offline" => Algorithm::Dgai,
        "dgai-online" => Algorithm::DgaiOnline,
        "ucb" => Algorithm::Ucb,
        "dgai-mab" => Algorithm::DgaiMab,
        _ => {
            return Err(BenchError::Config(format!(
                "unknown algorithm {:?}; expected one of {}",
                label,
                ALGORITHM_LABELS.join(", ")
            )));
        }
    };
    let mut spec = AlgorithmSpec::new(algorithm, cfg.delta);
    spec.delta_policy = cfg.delta_policy;
    spec.params = cfg.params();
    spec.validate().map_err(config_err)?;
    Ok(if label == "dgai-offline" { Work::OfflineTrain(spec) } else { Work::Episode(spec) })
}

/// Runs the whole sweep and writes `runs.csv`, `aggregate.csv` and the series
/// files under the configured output directory. Individual run failures are
/// recorded, not fatal; only a sweep with zero successes is an error (after
/// the outputs, including the failure log, are written).
pub fn execute(cfg: &ExperimentConfig) -> BenchResult<ExperimentSummary> {
    cfg.validate()?;
    let bench = build_bench(cfg)?;
    let mut works = Vec::with_capacity(cfg.algorithms.len());
    for label in &cfg.algorithms {
        works.push((label.as_str(), build_work(cfg, label)?));
    }

    struct Task<'a> {
        label: &'a str,
        work: Work,
        rep: u64,
        seed: u64,
    }
    let mut tasks = Vec::with_capacity(works.len() * cfg.repetitions as usize);
    for (label, work) in &works {
        for rep in 0..cfg.repetitions {
            tasks.push(Task { label, work: *work, rep, seed: cfg.base_seed + rep });
        }
    }

    let ids: Vec<u64> = (0..tasks.len() as u64).collect();
    let outcomes = map_seeds_with_jobs(&ids, cfg.jobs, |i| {
        let task = &tasks[i as usize];
        run_one(&task.work, &bench, cfg, task.seed)
    })
    .map_err(config_err)?;

    let records: Vec<RunRecord> = tasks
        .iter()
        .zip(outcomes)
        .map(|(task, outcome)| RunRecord {
            run_id: format!("{}-r{}", task.label, task.rep),
            algorithm: task.label.to_string(),
            dataset: cfg.dataset.clone(),
            seed: task.seed,
            horizon: bench.horizon,
            outcome,
        })
        .collect();

    let succeeded = records.iter().filter(|r| r.outcome.is_ok()).count();
    let failed = records.len() - succeeded;
    write_outputs(&cfg.resolved_output_dir(), &records)?;
    if succeeded == 0 {
        return Err(BenchError::AllRunsFailed);
    }
    Ok(ExperimentSummary { succeeded, failed })
}

fn run_one(
    work: &Work,
    bench: &Bench,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<RunMetrics, String> {
    match work {
        Work::Episode(spec) => {
            let options = EpisodeOptions {
                log_policy: cfg.emit_policy_log && emits_params(spec.algorithm),
            };
            let trace = run_gai_episode_with(spec, &bench.instance, bench.horizon, seed, &options)
                .map_err(|e| e.to_string())?;
            Ok(metrics_from_trace(trace, bench, spec))
        }
        Work::OfflineTrain(spec) => {
            let outcome = offline_train(spec, &bench.instance, bench.horizon, cfg.epochs, seed)
                .map_err(|e| e.to_string())?;
            let mut deploy = *spec;
            deploy.params = outcome.params;
            let trace = run_gai_episode(&deploy, &bench.instance, bench.horizon, seed)
                .map_err(|e| e.to_string())?;
            let mut metrics = metrics_from_trace(trace, bench, &deploy);
            let mut series = epoch_series(&outcome.epochs);
            series.append(&mut metrics.series);
            metrics.series = series;
            Ok(metrics)
        }
    }
}

fn metrics_from_trace(trace: RunTrace, bench: &Bench, spec: &AlgorithmSpec) -> RunMetrics {
    let instance = &bench.instance;
    let goods: Vec<(usize, u64)> = trace.ledger.good_outputs().collect();
    let n_false_good = goods.iter().filter(|(arm, _)| !instance.is_good(*arm)).count();
    RunMetrics {
        exploit_score: exploit_score(&trace, instance),
        cumulative_reward: cumulative_reward(&trace),
        tau_stop: trace.stop_round_censored().0,
        n_good_output: goods.len(),
        n_false_good,
        series: round_series(&trace, instance, spec),
        policy_log: trace.policy_log,
    }
}

/// Which confidence width to chart for an algorithm.
#[derive(Debug, Clone, Copy)]
enum RadiusKind {
    /// Union confidence bound at the current pull count.
    Union { delta: f64 },
    /// Trained scale times the one-hot feature norm.
    Scaled,
    None,
}

fn radius_kind(spec: &AlgorithmSpec) -> RadiusKind {
    match spec.algorithm {
        Algorithm::Hdoc
        | Algorithm::LucbG { .. }
        | Algorithm::AptG { .. }
        | Algorithm::TtTs { .. }
        | Algorithm::SoftUcbG => RadiusKind::Union { delta: spec.delta },
        Algorithm::Dgai | Algorithm::DgaiOnline | Algorithm::DgaiMab => RadiusKind::Scaled,
        Algorithm::Ucb => RadiusKind::None,
    }
}

/// Whether the algorithm drives the softmax index policy, i.e. has meaningful
/// `(alpha, beta)` values worth charting.
fn emits_params(algorithm: Algorithm) -> bool {
    matches!(
        algorithm,
        Algorithm::SoftUcbG | Algorithm::Dgai | Algorithm::DgaiOnline | Algorithm::DgaiMab
    )
}

/// Round-indexed series from one trace: running cumulative reward, running
/// exploitation score, the best arm's confidence radius, and — for index
/// policies — the parameter trajectory. Round series are thinned to at most
/// `SERIES_POINTS` samples plus the final round.
fn round_series(trace: &RunTrace, instance: &BanditInstance, spec: &AlgorithmSpec) -> Vec<SeriesPoint> {
    let stride = (trace.horizon / SERIES_POINTS).max(1);
    let best = instance.best_arm();
    let threshold = instance.threshold();
    let arms = instance.arms();
    let radius = radius_kind(spec);

    // Exploitation events in chronological order: each good output contributes
    // its remaining-horizon margin from its decision round on.
    let good_events: Vec<(u64, f64)> = trace
        .ledger
        .good_outputs()
        .map(|(arm, round)| {
            (round, (trace.horizon - round) as f64 * (instance.mean(arm) - threshold))
        })
        .collect();

    let last_round = trace.pulls.last().map_or(0, |p| p.round);
    let mut out = Vec::new();
    let mut cum = 0.0;
    let mut exploit = 0.0;
    let mut n_best: u64 = 0;
    let mut gi = 0;
    let mut pi = 0;
    let mut alpha = spec.params.alpha;
    for p in &trace.pulls {
        cum += p.reward;
        if p.arm as usize == best {
            n_best += 1;
        }
        while pi < trace.param_log.len() && trace.param_log[pi].step <= p.round {
            alpha = trace.param_log[pi].alpha;
            pi += 1;
        }
        while gi < good_events.len() && good_events[gi].0 <= p.round {
            exploit += good_events[gi].1;
            gi += 1;
        }
        if p.round % stride == 0 || p.round == last_round {
            out.push(SeriesPoint { metric: "cum_reward", x: p.round, value: cum });
            out.push(SeriesPoint { metric: "exploit", x: p.round, value: exploit });
            if n_best > 0 {
                match radius {
                    RadiusKind::Union { delta } => out.push(SeriesPoint {
                        metric: "radius_best",
                        x: p.round,
                        value: union_identification_radius(arms, n_best, delta),
                    }),
                    RadiusKind::Scaled if instance.is_one_hot() => out.push(SeriesPoint {
                        metric: "radius_best",
                        x: p.round,
                        value: alpha / ((n_best + 1) as f64).sqrt(),
                    }),
                    _ => {}
                }
            }
        }
    }
    if emits_params(spec.algorithm) {
        for e in &trace.param_log {
            out.push(SeriesPoint { metric: "alpha", x: e.step, value: e.alpha });
            out.push(SeriesPoint { metric: "beta", x: e.step, value: e.beta });
        }
    }
    out
}

/// Epoch-indexed series from an offline training log.
fn epoch_series(entries: &[EpochLogEntry]) -> Vec<SeriesPoint> {
    let mut out = Vec::with_capacity(entries.len() * 4);
    for e in entries {
        out.push(SeriesPoint { metric: "epoch_alpha", x: e.epoch, value: e.alpha });
        out.push(SeriesPoint { metric: "epoch_beta", x: e.epoch, value: e.beta });
        out.push(SeriesPoint { metric: "epoch_exploit", x: e.epoch, value: e.exploit_score });
        out.push(SeriesPoint {
            metric: "epoch_cum_reward",
            x: e.epoch,
            value: e.cumulative_reward,
        });
    }
    out
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(sd))
}

/// Groups records by (algorithm, dataset) in first-seen order and summarizes
/// the successful replications of each group.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut seen: Vec<(&str, &str)> = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        let key = (r.algorithm.as_str(), r.dataset.as_str());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let group: Vec<&RunRecord> = records
            .iter()
            .filter(|g| g.algorithm == r.algorithm && g.dataset == r.dataset)
            .collect();
        let ok: Vec<&RunMetrics> = group.iter().filter_map(|g| g.outcome.as_ref().ok()).collect();
        let failed = (group.len() - ok.len()) as u64;
        let exploit: Vec<f64> = ok.iter().map(|m| m.exploit_score).collect();
        let cum: Vec<f64> = ok.iter().map(|m| m.cumulative_reward).collect();
        let tau: Vec<f64> = ok.iter().map(|m| m.tau_stop as f64).collect();
        let n_good: Vec<f64> = ok.iter().map(|m| m.n_good_output as f64).collect();
        let (exploit_mean, exploit_sd) = mean_sd(&exploit);
        let (cum_reward_mean, cum_reward_sd) = mean_sd(&cum);
        let (tau_stop_mean, tau_stop_sd) = mean_sd(&tau);
        let (n_good_mean, _) = mean_sd(&n_good);
        let false_good_rate = if ok.is_empty() {
            None
        } else {
            Some(ok.iter().filter(|m| m.n_false_good > 0).count() as f64 / ok.len() as f64)
        };
        rows.push(AggregateRow {
            algorithm: r.algorithm.clone(),
            dataset: r.dataset.clone(),
            succeeded: ok.len() as u64,
            failed,
            exploit_mean,
            exploit_sd,
            cum_reward_mean,
            cum_reward_sd,
            tau_stop_mean,
            tau_stop_sd,
            n_good_mean,
            false_good_rate,
        });
    }
    rows
}

/// Writes every output file for a finished sweep. The series and policy
/// directories are cleared first so stale files from a previous configuration
/// cannot leak into later aggregation.
fn write_outputs(out_dir: &Path, records: &[RunRecord]) -> BenchResult<()> {
    let series_dir = out_dir.join("series");
    let policy_dir = out_dir.join("policy");
    for dir in [&series_dir, &policy_dir] {
        if dir.exists() {
            std::fs::remove_dir_all(dir)?;
        }
    }
    std::fs::create_dir_all(&series_dir)?;

    emit::write_runs_csv(&out_dir.join("runs.csv"), records)?;
    emit::write_aggregate_csv(&out_dir.join("aggregate.csv"), &aggregate(records))?;

    let mut failures = String::new();
    for r in records {
        match &r.outcome {
            Ok(m) => {
                emit::write_series_csv(
                    &series_dir.join(format!("{}.csv", r.run_id)),
                    &r.algorithm,
                    &m.series,
                )?;
                if let Some(log) = &m.policy_log {
                    std::fs::create_dir_all(&policy_dir)?;
                    emit::write_policy_csv(&policy_dir.join(format!("{}.csv", r.run_id)), log)?;
                }
            }
            Err(e) => {
                failures.push_str(&format!("{}: {}\n", r.run_id, e));
            }
        }
    }
    let failures_path = out_dir.join("failures.log");
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path)?;
        }
    } else {
        std::fs::write(&failures_path, failures)?;
    }
    Ok(())
}

/// Paths an experiment writes, for callers that want to read them back.
pub fn output_paths(out_dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (out_dir.join("runs.csv"), out_dir.join("aggregate.csv"), out_dir.join("series"))
}
