//! Experiment configuration: defaults, flat `key = value` config files, and
//! the merge order defaults < file < command line.

use std::path::{Path, PathBuf};

use gai_core::datasets::RatingsSpec;
use gai_core::training::TrainableParams;

use crate::{BenchError, BenchResult};

/// Fully resolved experiment description. Every knob the harness exposes is a
/// field here; the CLI and config files are just two ways of filling it in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Preset name (`synth-small`, ...) or `csv` for a ratings file.
    pub dataset: String,
    pub csv_path: Option<PathBuf>,
    pub item_column: String,
    pub rating_column: String,
    pub threshold_percentile: f64,
    pub max_arms: Option<usize>,
    /// Algorithm labels, run in order. See `runner::ALGORITHM_LABELS`.
    pub algorithms: Vec<String>,
    /// Overrides the preset horizon when set; required for `csv` datasets.
    pub horizon: Option<u64>,
    /// Training epochs for `dgai-offline`.
    pub epochs: u64,
    pub repetitions: u64,
    pub base_seed: u64,
    /// Multiplier applied to preset arm count and horizon (1 = as published).
    pub scale: f64,
    /// Output directory; falls back to `$GAI_BENCH_OUT`, then `bench-out`.
    pub output_dir: Option<PathBuf>,
    pub emit_policy_log: bool,
    /// Worker threads for replications; 0 picks the library default.
    pub jobs: usize,
    /// Error rate for identification bounds.
    pub delta: f64,
    /// Exploration floor for the softmax policy; defaults to `delta`.
    pub delta_policy: Option<f64>,
    /// Mean band for synthetic instances.
    pub mean_low: f64,
    pub mean_high: f64,
    pub learning_rate: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub sharpness: f64,
    pub batch_size: u64,
    /// Initial confidence-width scales.
    pub alpha: f64,
    pub beta: f64,
    pub resample_prob: f64,
    pub apt_argmin: bool,
    pub lucb_round_factor: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = TrainableParams::default();
        Self {
            dataset: "synth-small".to_string(),
            csv_path: None,
            item_column: "item".to_string(),
            rating_column: "rating".to_string(),
            threshold_percentile: 95.0,
            max_arms: None,
            algorithms: vec![
                "hdoc".to_string(),
                "lucb-g".to_string(),
                "apt-g".to_string(),
                "tt-ts".to_string(),
                "softucb-g".to_string(),
                "dgai".to_string(),
                "dgai-online".to_string(),
                "dgai-offline".to_string(),
            ],
            horizon: None,
            epochs: 50,
            repetitions: 10,
            base_seed: 0,
            scale: 1.0,
            output_dir: None,
            emit_policy_log: false,
            jobs: 0,
            delta: 0.1,
            delta_policy: None,
            mean_low: 0.35,
            mean_high: 0.65,
            learning_rate: params.learning_rate,
            eta1: params.eta1,
            eta2: params.eta2,
            sharpness: params.sharpness,
            batch_size: params.batch_size,
            alpha: params.alpha,
            beta: params.beta,
            resample_prob: 0.5,
            apt_argmin: false,
            lucb_round_factor: false,
        }
    }
}

impl ExperimentConfig {
    /// Training parameters assembled from the tuning fields.
    pub fn params(&self) -> TrainableParams {
        TrainableParams {
            alpha: self.alpha,
            beta: self.beta,
            learning_rate: self.learning_rate,
            eta1: self.eta1,
            eta2: self.eta2,
            sharpness: self.sharpness,
            batch_size: self.batch_size,
        }
    }

    /// Column mapping for `csv` datasets.
    pub fn ratings_spec(&self) -> RatingsSpec {
        RatingsSpec {
            item_column: self.item_column.clone(),
            rating_column: self.rating_column.clone(),
            threshold_percentile: self.threshold_percentile,
            max_arms: self.max_arms,
        }
    }

    /// Output directory after applying the fallback chain.
    pub fn resolved_output_dir(&self) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        if let Ok(env_dir) = std::env::var("GAI_BENCH_OUT") {
            if !env_dir.is_empty() {
                return PathBuf::from(env_dir);
            }
        }
        PathBuf::from("bench-out")
    }

    /// Harness-level sanity checks that do not need the instance yet.
    pub fn validate(&self) -> BenchResult<()> {
        if self.repetitions == 0 {
            return Err(BenchError::Config("repetitions must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("algorithms list is empty".into()));
        }
        if self.epochs == 0 {
            return Err(BenchError::Config("epochs must be at least 1".into()));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(BenchError::Config(format!(
                "scale must be a positive number, got {}",
                self.scale
            )));
        }
        if !(self.mean_low.is_finite() && self.mean_high.is_finite()) || self.mean_low > self.mean_high
        {
            return Err(BenchError::Config(format!(
                "mean band [{}, {}] is not a valid interval",
                self.mean_low, self.mean_high
            )));
        }
        if self.dataset == "csv" {
            if self.csv_path.is_none() {
                return Err(BenchError::Config(
                    "dataset csv requires csv_path (--csv-path)".into(),
                ));
            }
            if self.horizon.is_none() {
                return Err(BenchError::Config(
                    "dataset csv requires an explicit horizon".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Applies one `key = value` pair. `origin` names the source (file:line or
/// flag) for error messages. Unknown keys are rejected rather than ignored so
/// typos in config files fail loudly.
pub fn apply_kv(cfg: &mut ExperimentConfig, key: &str, value: &str, origin: &str) -> BenchResult<()> {
    fn parse<T: std::str::FromStr>(key: &str, value: &str, origin: &str) -> BenchResult<T>
    where
        T::Err: std::fmt::Display,
    {
        value.parse::<T>().map_err(|e| {
            BenchError::Config(format!("{origin}: invalid value {value:?} for {key}: {e}"))
        })
    }

    match key {
        "dataset" => cfg.dataset = value.to_string(),
        "csv_path" => cfg.csv_path = Some(PathBuf::from(value)),
        "item_column" => cfg.item_column = value.to_string(),
        "rating_column" => cfg.rating_column = value.to_string(),
        "threshold_percentile" => cfg.threshold_percentile = parse(key, value, origin)?,
        "max_arms" => cfg.max_arms = Some(parse(key, value, origin)?),
        "algorithms" => {
            cfg.algorithms = value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
        }
        "horizon" => cfg.horizon = Some(parse(key, value, origin)?),
        "epochs" => cfg.epochs = parse(key, value, origin)?,
        "repetitions" => cfg.repetitions = parse(key, value, origin)?,
        "base_seed" => cfg.base_seed = parse(key, value, origin)?,
        "scale" => cfg.scale = parse(key, value, origin)?,
        "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
        "emit_policy_log" => cfg.emit_policy_log = parse(key, value, origin)?,
        "jobs" => cfg.jobs = parse(key, value, origin)?,
        "delta" => cfg.delta = parse(key, value, origin)?,
        "delta_policy" => cfg.delta_policy = Some(parse(key, value, origin)?),
        "mean_low" => cfg.mean_low = parse(key, value, origin)?,
        "mean_high" => cfg.mean_high = parse(key, value, origin)?,
        "learning_rate" => cfg.learning_rate = parse(key, value, origin)?,
        "eta1" => cfg.eta1 = parse(key, value, origin)?,
        "eta2" => cfg.eta2 = parse(key, value, origin)?,
        "sharpness" => cfg.sharpness = parse(key, value, origin)?,
        "batch_size" => cfg.batch_size = parse(key, value, origin)?,
        "alpha" => cfg.alpha = parse(key, value, origin)?,
        "beta" => cfg.beta = parse(key, value, origin)?,
        "resample_prob" => cfg.resample_prob = parse(key, value, origin)?,
        "apt_argmin" => cfg.apt_argmin = parse(key, value, origin)?,
        "lucb_round_factor" => cfg.lucb_round_factor = parse(key, value, origin)?,
        _ => {
            return Err(BenchError::Config(format!("{origin}: unknown key {key:?}")));
        }
    }
    Ok(())
}

/// Loads a flat config file: one `key = value` per line, `#` comments, blank
/// lines ignored.
pub fn load_config_file(cfg: &mut ExperimentConfig, path: &Path) -> BenchResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        BenchError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let origin = format!("{}:{}", path.display(), idx + 1);
        let Some((key, value)) = line.split_once('=') else {
            return Err(BenchError::Config(format!(
                "{origin}: expected key = value, got {line:?}"
            )));
        };
        apply_kv(cfg, key.trim(), value.trim(), &origin)?;
    }
    Ok(())
}
