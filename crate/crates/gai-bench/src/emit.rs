//! CSV emission. All files are plain comma-separated text written in one
//! deterministic pass: identical experiments produce byte-identical outputs.
//! Floats carry nine significant digits in scientific notation (`sig9`), which
//! round-trips every value the harness produces while keeping files diffable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::runner::{AggregateRow, RunRecord, SeriesPoint};
use crate::{BenchError, BenchResult};

pub const RUNS_HEADER: &str =
    "run_id,algorithm,dataset,seed,T,exploit_score,cum_reward,tau_stop,n_good_output,n_false_good";
pub const AGGREGATE_HEADER: &str = "algorithm,dataset,succeeded,failed,exploit_mean,exploit_sd,\
cum_reward_mean,cum_reward_sd,tau_stop_mean,tau_stop_sd,n_good_mean,false_good_rate";
pub const SERIES_HEADER: &str = "algorithm,metric,epoch_or_round,value";

/// Nine significant digits, exact zero printed as `0`.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.8e}")
    }
}

fn sig9_opt(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

/// One row per run; failed runs keep their identity columns and leave every
/// metric cell empty.
pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> BenchResult<()> {
    let mut s = String::with_capacity(64 * (records.len() + 2));
    s.push_str(RUNS_HEADER);
    s.push('\n');
    for r in records {
        match &r.outcome {
            Ok(m) => writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.run_id,
                r.algorithm,
                r.dataset,
                r.seed,
                r.horizon,
                sig9(m.exploit_score),
                sig9(m.cumulative_reward),
                m.tau_stop,
                m.n_good_output,
                m.n_false_good
            ),
            Err(_) => writeln!(
                s,
                "{},{},{},{},{},,,,,",
                r.run_id, r.algorithm, r.dataset, r.seed, r.horizon
            ),
        }
        .expect("writing to a String cannot fail");
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> BenchResult<()> {
    let mut s = String::with_capacity(128 * (rows.len() + 2));
    s.push_str(AGGREGATE_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.dataset,
            r.succeeded,
            r.failed,
            sig9_opt(r.exploit_mean),
            sig9_opt(r.exploit_sd),
            sig9_opt(r.cum_reward_mean),
            sig9_opt(r.cum_reward_sd),
            sig9_opt(r.tau_stop_mean),
            sig9_opt(r.tau_stop_sd),
            sig9_opt(r.n_good_mean),
            sig9_opt(r.false_good_rate)
        )
        .expect("writing to a String cannot fail");
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn write_series_csv(path: &Path, algorithm: &str, series: &[SeriesPoint]) -> BenchResult<()> {
    let mut s = String::with_capacity(32 * (series.len() + 2));
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for p in series {
        writeln!(s, "{},{},{},{}", algorithm, p.metric, p.x, sig9(p.value))
            .expect("writing to a String cannot fail");
    }
    fs::write(path, s)?;
    Ok(())
}

/// Raw per-round policy dump, long format. Opt-in and only sensible for small
/// horizons: one row per (policy round, arm).
pub fn write_policy_csv(path: &Path, log: &[Vec<f64>]) -> BenchResult<()> {
    let mut s = String::from("entry,arm,probability\n");
    for (entry, policy) in log.iter().enumerate() {
        for (arm, prob) in policy.iter().enumerate() {
            writeln!(s, "{entry},{arm},{}", sig9(*prob)).expect("writing to a String cannot fail");
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Which figure file a series metric belongs to.
const FIGURES: [(&str, &[&str]); 4] = [
    ("fig1_exploit.csv", &["exploit", "epoch_exploit"]),
    ("fig2_params.csv", &["alpha", "beta", "epoch_alpha", "epoch_beta"]),
    ("fig3_radius.csv", &["radius_best"]),
    ("fig4_cumreward.csv", &["cum_reward", "epoch_cum_reward"]),
];

/// Reads every per-run series file under `out_dir/series`, averages each
/// (algorithm, metric, x) across replications, optionally smooths with a
/// trailing moving average of `smooth` points, and writes one CSV per figure.
/// Returns the written paths. Smoothing only affects the figure files.
pub fn emit_plots(out_dir: &Path, smooth: Option<usize>) -> BenchResult<Vec<PathBuf>> {
    let series_dir = out_dir.join("series");
    let entries = fs::read_dir(&series_dir).map_err(|e| {
        BenchError::Config(format!(
            "cannot read series directory {}: {e}; run an experiment first",
            series_dir.display()
        ))
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(BenchError::Config(format!(
            "no series files in {}",
            series_dir.display()
        )));
    }

    let mut acc: BTreeMap<(String, String, u64), (f64, u64)> = BTreeMap::new();
    for file in &files {
        read_series_file(file, &mut acc)?;
    }

    // Mean across replications, grouped per curve with x ascending (the
    // BTreeMap key order is exactly (algorithm, metric, x)).
    let mut curves: BTreeMap<(String, String), Vec<(u64, f64)>> = BTreeMap::new();
    for ((algorithm, metric, x), (sum, n)) in acc {
        curves.entry((algorithm, metric)).or_default().push((x, sum / n as f64));
    }
    let window = smooth.unwrap_or(1).max(1);
    if window > 1 {
        for points in curves.values_mut() {
            trailing_mean(points, window);
        }
    }

    let mut written = Vec::with_capacity(FIGURES.len());
    for (name, metrics) in FIGURES {
        let mut s = String::from(SERIES_HEADER);
        s.push('\n');
        for ((algorithm, metric), points) in &curves {
            if !metrics.contains(&metric.as_str()) {
                continue;
            }
            for (x, value) in points {
                writeln!(s, "{algorithm},{metric},{x},{}", sig9(*value))
                    .expect("writing to a String cannot fail");
            }
        }
        let path = out_dir.join(name);
        fs::write(&path, s)?;
        written.push(path);
    }
    Ok(written)
}

fn read_series_file(
    path: &Path,
    acc: &mut BTreeMap<(String, String, u64), (f64, u64)>,
) -> BenchResult<()> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == SERIES_HEADER => {}
        other => {
            return Err(BenchError::Config(format!(
                "{}: expected series header {SERIES_HEADER:?}, got {other:?}",
                path.display()
            )));
        }
    }
    for (idx, line) in lines.enumerate() {
        let mut fields = line.splitn(4, ',');
        let (Some(algorithm), Some(metric), Some(x), Some(value)) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(BenchError::Config(format!(
                "{}:{}: malformed series row {line:?}",
                path.display(),
                idx + 2
            )));
        };
        let parse = |what: &str, v: Option<Result<f64, std::num::ParseFloatError>>| match v {
            Some(Ok(n)) => Ok(n),
            _ => Err(BenchError::Config(format!(
                "{}:{}: bad {what} in {line:?}",
                path.display(),
                idx + 2
            ))),
        };
        let x: u64 = match x.parse() {
            Ok(n) => n,
            Err(_) => {
                return Err(BenchError::Config(format!(
                    "{}:{}: bad round in {line:?}",
                    path.display(),
                    idx + 2
                )));
            }
        };
        let value = parse("value", Some(value.parse()))?;
        let slot = acc.entry((algorithm.to_string(), metric.to_string(), x)).or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
    }
    Ok(())
}

/// In-place trailing moving average over points already sorted by x.
fn trailing_mean(points: &mut [(u64, f64)], window: usize) {
    let values: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut running = 0.0;
    for i in 0..values.len() {
        running += values[i];
        if i >= window {
            running -= values[i - window];
        }
        points[i].1 = running / ((i + 1).min(window)) as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(-0.0), "0");
        assert_eq!(sig9(1.0), "1.00000000e0");
        assert_eq!(sig9(-0.25), "-2.50000000e-1");
        assert_eq!(sig9(1234.5), "1.23450000e3");
        // Round-trips through parse.
        let v = 0.27569734238004695;
        assert_eq!(sig9(v).parse::<f64>().unwrap(), 0.275697342);
    }

    #[test]
    fn trailing_mean_matches_hand_values() {
        let mut points = vec![(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0)];
        trailing_mean(&mut points, 2);
        assert_eq!(points, vec![(1, 1.0), (2, 1.5), (3, 2.5), (4, 3.5)]);
    }

    #[test]
    fn plot_emission_averages_replications() {
        let dir = tempfile::tempdir().unwrap();
        let series = dir.path().join("series");
        std::fs::create_dir_all(&series).unwrap();
        std::fs::write(
            series.join("a-r0.csv"),
            "algorithm,metric,epoch_or_round,value\na,exploit,10,1.00000000e0\na,exploit,20,3.00000000e0\n",
        )
        .unwrap();
        std::fs::write(
            series.join("a-r1.csv"),
            "algorithm,metric,epoch_or_round,value\na,exploit,10,3.00000000e0\na,exploit,20,5.00000000e0\n",
        )
        .unwrap();
        let written = emit_plots(dir.path(), None).unwrap();
        assert_eq!(written.len(), 4);
        let fig1 = std::fs::read_to_string(dir.path().join("fig1_exploit.csv")).unwrap();
        assert_eq!(
            fig1,
            "algorithm,metric,epoch_or_round,value\na,exploit,10,2.00000000e0\na,exploit,20,4.00000000e0\n"
        );
        // No exploit-family rows beyond fig1; other figures stay header-only.
        let fig3 = std::fs::read_to_string(dir.path().join("fig3_radius.csv")).unwrap();
        assert_eq!(fig3, "algorithm,metric,epoch_or_round,value\n");
    }

    #[test]
    fn plot_emission_rejects_malformed_series() {
        let dir = tempfile::tempdir().unwrap();
        let series = dir.path().join("series");
        std::fs::create_dir_all(&series).unwrap();
        std::fs::write(series.join("bad.csv"), "wrong,header\n").unwrap();
        let err = emit_plots(dir.path(), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
