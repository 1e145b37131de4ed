//! Benchmark dataset presets and the ratings-file loader.
//!
//! Presets pin the arm count, horizon and threshold of the standard
//! benchmark configurations; synthetic instances draw their means uniformly
//! from a caller-chosen band. Real data comes in as a ratings CSV (or a
//! binary click log — same shape) and is turned into a Bernoulli instance by
//! min-max rescaling item means into [0, 1].

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{BanditInstance, RewardLaw};

/// A named benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetPreset {
    pub name: &'static str,
    pub arms: usize,
    pub horizon: u64,
    pub threshold: f64,
}

/// The standard benchmark table.
pub const PRESETS: [DatasetPreset; 4] = [
    DatasetPreset { name: "synth-small", arms: 50, horizon: 1_000_000, threshold: 0.5 },
    DatasetPreset { name: "synth-large", arms: 1000, horizon: 1_000_000, threshold: 0.5 },
    DatasetPreset { name: "movielens-like", arms: 9527, horizon: 100_000, threshold: 0.071 },
    DatasetPreset { name: "openbandit-like", arms: 80, horizon: 107, threshold: 0.005 },
];

pub fn preset(name: &str) -> Option<&'static DatasetPreset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Shrink or grow a preset. `scale == 1` returns the preset unchanged; any
/// other scale rounds the arm count (floored at 2) and the horizon (floored
/// at 10 pulls per arm).
pub fn scaled_preset(preset: &DatasetPreset, scale: f64) -> Result<DatasetPreset> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    if scale == 1.0 {
        return Ok(*preset);
    }
    let arms = ((preset.arms as f64 * scale).round() as usize).max(2);
    let horizon = ((preset.horizon as f64 * scale).round() as u64).max(10 * arms as u64);
    Ok(DatasetPreset { arms, horizon, ..*preset })
}

/// Materialize a synthetic Bernoulli instance for a preset, with means drawn
/// uniformly from `[mean_low, mean_high]`.
pub fn generated_instance(
    preset: &DatasetPreset,
    mean_low: f64,
    mean_high: f64,
    seed: u64,
) -> Result<BanditInstance> {
    BanditInstance::synthetic_uniform(
        preset.arms,
        mean_low,
        mean_high,
        preset.threshold,
        RewardLaw::Bernoulli,
        seed,
    )
}

/// How to read a ratings (or click-log) CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsSpec {
    pub item_column: String,
    pub rating_column: String,
    /// Threshold percentile over the rescaled item means, nearest-rank.
    pub threshold_percentile: f64,
    /// Keep only the first `max_arms` distinct items in file order.
    pub max_arms: Option<usize>,
}

impl Default for RatingsSpec {
    fn default() -> Self {
        Self {
            item_column: "item".into(),
            rating_column: "rating".into(),
            threshold_percentile: 95.0,
            max_arms: None,
        }
    }
}

/// Build a Bernoulli instance from a ratings CSV with a header row.
///
/// Item means are averaged in file order, min-max rescaled by the observed
/// rating range (a binary click log passes through unchanged), and the
/// threshold is the nearest-rank percentile of the rescaled means. Parse
/// problems report the 1-based line they came from.
pub fn load_ratings_csv(path: impl AsRef<Path>, spec: &RatingsSpec) -> Result<BanditInstance> {
    if !(0.0..=100.0).contains(&spec.threshold_percentile) {
        return Err(Error::InvalidConfig(format!(
            "threshold_percentile must lie in [0, 100], got {}",
            spec.threshold_percentile
        )));
    }
    if spec.max_arms == Some(0) {
        return Err(Error::InvalidConfig("max_arms must be at least 1".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| csv_error(1, e))?;

    let headers = reader.headers().map_err(|e| csv_error(1, e))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::CsvLoad {
            line: 1,
            message: format!("missing column {name:?}; header has {:?}", headers),
        })
    };
    let item_idx = column(&spec.item_column)?;
    let rating_idx = column(&spec.rating_column)?;

    let mut order: Vec<String> = Vec::new();
    let mut slots: HashMap<String, usize> = HashMap::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut rating_min = f64::INFINITY;
    let mut rating_max = f64::NEG_INFINITY;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_error(line, e)
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let item = record.get(item_idx).ok_or_else(|| Error::CsvLoad {
            line,
            message: "row too short for the item column".into(),
        })?;
        let raw = record.get(rating_idx).ok_or_else(|| Error::CsvLoad {
            line,
            message: "row too short for the rating column".into(),
        })?;
        let rating: f64 = raw.parse().map_err(|_| Error::CsvLoad {
            line,
            message: format!("rating {raw:?} is not a number"),
        })?;
        if !rating.is_finite() {
            return Err(Error::CsvLoad { line, message: format!("rating {rating} is not finite") });
        }
        rating_min = rating_min.min(rating);
        rating_max = rating_max.max(rating);
        let slot = *slots.entry(item.to_string()).or_insert_with(|| {
            order.push(item.to_string());
            sums.push(0.0);
            counts.push(0);
            order.len() - 1
        });
        sums[slot] += rating;
        counts[slot] += 1;
    }

    if order.is_empty() {
        return Err(Error::CsvLoad { line: 1, message: "no data rows".into() });
    }
    let keep = spec.max_arms.map_or(order.len(), |m| m.min(order.len()));
    let range = rating_max - rating_min;
    if range == 0.0 {
        return Err(Error::InvalidInstance(
            "all ratings share one value; the observed range cannot be rescaled".into(),
        ));
    }
    let means: Vec<f64> = (0..keep)
        .map(|i| ((sums[i] / counts[i] as f64) - rating_min) / range)
        .collect();

    let mut sorted = means.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite means"));
    let n = sorted.len();
    let rank = ((spec.threshold_percentile / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    let threshold = sorted[rank - 1];

    BanditInstance::from_means(means, threshold, RewardLaw::Bernoulli)
}

fn csv_error(line: u64, e: impl std::fmt::Display) -> Error {
    Error::CsvLoad { line, message: e.to_string() }
}
