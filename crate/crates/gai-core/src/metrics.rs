//! Episode scoring: exploitation value, reward, identification error rates
//! and stopping statistics.

use crate::error::{Error, Result};
use crate::model::BanditInstance;
use crate::trace::RunTrace;

/// Value of acting on the good-arm outputs: each arm output as good at round
/// `t` contributes `(horizon - t) * (mean - threshold)` — the margin it would
/// earn if exploited for the remaining rounds. Arms wrongly output as good
/// contribute their negative margin; arms never output contribute nothing.
pub fn exploit_score(trace: &RunTrace, instance: &BanditInstance) -> f64 {
    let xi = instance.threshold();
    trace
        .ledger
        .good_outputs()
        .map(|(arm, round)| {
            let remaining = trace.horizon.saturating_sub(round) as f64;
            remaining * (instance.mean(arm) - xi)
        })
        .sum()
}

/// Sum of observed rewards over the episode.
pub fn cumulative_reward(trace: &RunTrace) -> f64 {
    trace.pulls.iter().map(|p| p.reward).sum()
}

/// Error rates in the sense of the `(lambda, delta)` guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacError {
    /// Fraction of episodes that failed to output `lambda` genuinely good
    /// arms first — either a bad arm slipped into the first `lambda` outputs
    /// or fewer than `lambda` good outputs were produced. `None` when the
    /// instance has fewer than `lambda` good arms.
    pub bad_as_good_rate: Option<f64>,
    /// Fraction of episodes that output `lambda` or more arms as good even
    /// though the instance has fewer than `lambda` good arms. `None` when the
    /// instance has at least `lambda` good arms.
    pub overcount_rate: Option<f64>,
}

/// Judge a batch of episodes against the instance at level `lambda`.
pub fn pac_error(
    traces: &[RunTrace],
    instance: &BanditInstance,
    lambda: usize,
) -> Result<PacError> {
    if lambda == 0 {
        return Err(Error::InvalidConfig("lambda must be at least 1".into()));
    }
    if traces.is_empty() {
        return Err(Error::InvalidConfig("no traces to score".into()));
    }
    let good_arms = instance.good_set().len();
    let n = traces.len() as f64;
    if good_arms >= lambda {
        let failures = traces
            .iter()
            .filter(|t| {
                let goods: Vec<usize> =
                    t.ledger.good_outputs().map(|(arm, _)| arm).collect();
                goods.len() < lambda
                    || goods[..lambda].iter().any(|&a| !instance.is_good(a))
            })
            .count();
        Ok(PacError { bad_as_good_rate: Some(failures as f64 / n), overcount_rate: None })
    } else {
        let overcounts = traces
            .iter()
            .filter(|t| t.ledger.good_outputs().count() >= lambda)
            .count();
        Ok(PacError { bad_as_good_rate: None, overcount_rate: Some(overcounts as f64 / n) })
    }
}

/// Fraction of episodes where any arm output as good is not truly good.
pub fn false_good_rate(traces: &[RunTrace], instance: &BanditInstance) -> f64 {
    if traces.is_empty() {
        return 0.0;
    }
    let bad = traces
        .iter()
        .filter(|t| t.ledger.good_outputs().any(|(arm, _)| !instance.is_good(arm)))
        .count();
    bad as f64 / traces.len() as f64
}

/// Count, mean, median and max of a set of rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSummary {
    /// Episodes contributing to the summary.
    pub count: usize,
    pub mean: f64,
    /// Median; the average of the middle two for even counts.
    pub median: f64,
    pub max: u64,
}

fn summarize(mut rounds: Vec<u64>) -> Option<RoundSummary> {
    if rounds.is_empty() {
        return None;
    }
    rounds.sort_unstable();
    let count = rounds.len();
    let mean = rounds.iter().map(|&r| r as f64).sum::<f64>() / count as f64;
    let median = if count % 2 == 1 {
        rounds[count / 2] as f64
    } else {
        (rounds[count / 2 - 1] as f64 + rounds[count / 2] as f64) / 2.0
    };
    Some(RoundSummary { count, mean, median, max: rounds[count - 1] })
}

/// Stopping behaviour over a batch of episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingStats {
    /// `tau_lambda[l - 1]` summarizes the round of the `l`-th good output over
    /// the episodes that produced at least `l` good outputs; `None` when no
    /// episode did.
    pub tau_lambda: Vec<Option<RoundSummary>>,
    /// Full stopping round, horizon-censored episodes counted at the horizon.
    pub tau_stop: RoundSummary,
    /// Episodes that never fully stopped.
    pub censored: usize,
}

pub fn stopping_stats(traces: &[RunTrace]) -> Result<StoppingStats> {
    if traces.is_empty() {
        return Err(Error::InvalidConfig("no traces to score".into()));
    }
    let max_goods = traces
        .iter()
        .map(|t| t.ledger.good_outputs().count())
        .max()
        .unwrap_or(0);
    let mut tau_lambda = Vec::with_capacity(max_goods);
    for l in 1..=max_goods {
        let rounds: Vec<u64> = traces
            .iter()
            .filter_map(|t| t.ledger.good_outputs().map(|(_, r)| r).nth(l - 1))
            .collect();
        tau_lambda.push(summarize(rounds));
    }
    let mut censored = 0usize;
    let stops: Vec<u64> = traces
        .iter()
        .map(|t| {
            let (round, was_censored) = t.stop_round_censored();
            censored += was_censored as usize;
            round
        })
        .collect();
    let tau_stop = summarize(stops).expect("non-empty by construction");
    Ok(StoppingStats { tau_lambda, tau_stop, censored })
}
