//! The identification loop and the arm-selection strategies that drive it.
//!
//! Every episode follows the same shape: pull each arm once so all estimates
//! are defined, then repeatedly select an arm, observe a reward, and check the
//! pulled arm against the identification rule. Evaluation episodes remove
//! decided arms from the sampling pool and stop when none remain; training
//! trajectories record decisions without removing anyone, so the policy keeps
//! producing gradients over the full horizon.
//!
//! Selection strategies:
//! - upper-confidence scores over empirical means (`Hdoc`, `LucbG`, `Ucb`),
//! - the thresholding index (`AptG`),
//! - top-two Thompson sampling on Beta posteriors (`TtTs`),
//! - the softmax policy over the differentiable confidence index (`SoftUcbG`,
//!   `Dgai`, `DgaiOnline`), optionally soft-screened by the identification
//!   indicator (`DgaiMab`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::index::{coldness, compute_index, sample_arm, IndexSnapshot};
use crate::model::{BanditInstance, LinearState};
use crate::trace::{ParamLogEntry, PullRecord, RunTrace};
use crate::training::{
    combined_policy, OnlineObjective, OnlineTrainer, TrainableParams, TrajectoryBuffer,
};

/// Give up steering toward a distinct challenger after this many redraws.
pub const TT_TS_MAX_RESAMPLES: usize = 100;

/// Arm-selection strategy of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    /// Empirical mean plus a log-round exploration bonus; union-bound
    /// identification.
    Hdoc,
    /// Empirical mean plus the union confidence bonus itself; `round_factor`
    /// additionally multiplies the round into the log argument.
    LucbG { round_factor: bool },
    /// Thresholding index `mean + sqrt(pulls) * |threshold - mean|`. The
    /// largest index is pulled by default; `argmin` selects the smallest
    /// (the least-settled arm) instead.
    AptG { argmin: bool },
    /// Top-two Thompson sampling on Beta posteriors derived from pull counts.
    TtTs { resample_prob: f64 },
    /// Softmax index policy whose sampling scale is trained online; union
    /// identification.
    SoftUcbG,
    /// Softmax index policy and radius identification at fixed scales.
    Dgai,
    /// As `Dgai` with both scales trained online. Decisions are recorded but
    /// arms stay in the pool, so training signal never dries up.
    DgaiOnline,
    /// Plain UCB reward maximization; no identification.
    Ucb,
    /// Soft-screened index policy for reward maximization above a threshold,
    /// trained online; no identification.
    DgaiMab,
}

/// How decisions are made for the pulled arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IdentifyRule {
    /// No decisions at all.
    None,
    /// Union confidence interval around the empirical mean.
    Union,
    /// `alpha`-scaled feature norm around the ridge estimate.
    Radius,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Hdoc => "hdoc",
            Algorithm::LucbG { .. } => "lucb-g",
            Algorithm::AptG { .. } => "apt-g",
            Algorithm::TtTs { .. } => "tt-ts",
            Algorithm::SoftUcbG => "softucb-g",
            Algorithm::Dgai => "dgai",
            Algorithm::DgaiOnline => "dgai-online",
            Algorithm::Ucb => "ucb",
            Algorithm::DgaiMab => "dgai-mab",
        }
    }

    /// Whether decided arms leave the sampling pool.
    pub fn removes_on_decision(&self) -> bool {
        matches!(
            self,
            Algorithm::Hdoc
                | Algorithm::LucbG { .. }
                | Algorithm::AptG { .. }
                | Algorithm::TtTs { .. }
                | Algorithm::SoftUcbG
                | Algorithm::Dgai
        )
    }

    fn identify_rule(&self) -> IdentifyRule {
        match self {
            Algorithm::Hdoc
            | Algorithm::LucbG { .. }
            | Algorithm::AptG { .. }
            | Algorithm::TtTs { .. }
            | Algorithm::SoftUcbG => IdentifyRule::Union,
            Algorithm::Dgai | Algorithm::DgaiOnline => IdentifyRule::Radius,
            Algorithm::Ucb | Algorithm::DgaiMab => IdentifyRule::None,
        }
    }

    fn online_objective(&self) -> Option<OnlineObjective> {
        match self {
            Algorithm::SoftUcbG => Some(OnlineObjective::Sampling),
            Algorithm::DgaiOnline => Some(OnlineObjective::SamplingAndIdentification),
            Algorithm::DgaiMab => Some(OnlineObjective::Combined),
            _ => None,
        }
    }

    fn uses_index_policy(&self) -> bool {
        matches!(
            self,
            Algorithm::SoftUcbG | Algorithm::Dgai | Algorithm::DgaiOnline | Algorithm::DgaiMab
        )
    }
}

/// Everything an episode needs besides the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    /// Identification confidence level.
    pub delta: f64,
    /// Confidence level of the softmax policy-mass guarantee; defaults to
    /// `delta`. Concentrated sampling wants this near 1 even when the
    /// identification level is small.
    pub delta_policy: Option<f64>,
    pub params: TrainableParams,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm, delta: f64) -> Self {
        Self { algorithm, delta, delta_policy: None, params: TrainableParams::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if let Some(dp) = self.delta_policy {
            if !(dp > 0.0 && dp < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "delta_policy must lie in (0, 1), got {dp}"
                )));
            }
        }
        if let Algorithm::TtTs { resample_prob } = self.algorithm {
            if !(0.0..=1.0).contains(&resample_prob) {
                return Err(Error::InvalidConfig(format!(
                    "resample_prob must lie in [0, 1], got {resample_prob}"
                )));
            }
        }
        self.params.validate()
    }
}

/// Exploration bonus `sqrt(ln(round) / (2 * pulls))`.
pub fn hdoc_bonus(round: u64, pulls: u64) -> f64 {
    debug_assert!(round >= 1 && pulls >= 1);
    ((round as f64).ln() / (2.0 * pulls as f64)).sqrt()
}

/// Union confidence bonus `sqrt(ln(4 * arms * pulls^2 [* round] / delta) /
/// (2 * pulls))`, with the log argument clamped non-negative.
pub fn lucbg_bonus(arms: usize, pulls: u64, delta: f64, round_factor: Option<u64>) -> f64 {
    debug_assert!(pulls >= 1);
    let n = pulls as f64;
    let mut arg = 4.0 * arms as f64 * n * n / delta;
    if let Some(t) = round_factor {
        arg *= t as f64;
    }
    (arg.ln().max(0.0) / (2.0 * n)).sqrt()
}

/// Identification radius shared by the union-bound baselines: the round-free
/// union confidence bonus.
pub fn union_identification_radius(arms: usize, pulls: u64, delta: f64) -> f64 {
    lucbg_bonus(arms, pulls, delta, None)
}

/// Thresholding index: grows with evidence that the arm sits away from the
/// threshold on either side.
pub fn aptg_index(mean: f64, pulls: u64, threshold: f64) -> f64 {
    (pulls as f64).sqrt() * (threshold - mean).abs() + mean
}

/// Two-sided decision: `Some(true)` when the lower bound clears the threshold,
/// `Some(false)` when the upper bound falls short, `None` while undecided.
/// A zero radius always decides.
pub fn radius_decision(mean: f64, radius: f64, threshold: f64) -> Option<bool> {
    if mean - radius >= threshold {
        Some(true)
    } else if mean + radius < threshold {
        Some(false)
    } else {
        None
    }
}

/// Top-two Thompson draw over Beta posteriors given as `(a, b)` shape pairs.
/// Keeps the first draw's champion with probability `resample_prob`, otherwise
/// redraws until a distinct challenger wins, falling back to the runner-up of
/// the final draw after [`TT_TS_MAX_RESAMPLES`] attempts.
pub fn tt_ts_select(
    shapes: &[(f64, f64)],
    resample_prob: f64,
    rng: &mut impl Rng,
) -> usize {
    assert!(!shapes.is_empty(), "empty posterior set");
    if shapes.len() == 1 {
        return 0;
    }
    let mut theta = vec![0.0; shapes.len()];
    draw_posteriors(shapes, &mut theta, rng);
    let champion = argmax(&theta);
    if rng.random::<f64>() < resample_prob {
        return champion;
    }
    for _ in 0..TT_TS_MAX_RESAMPLES {
        draw_posteriors(shapes, &mut theta, rng);
        let challenger = argmax(&theta);
        if challenger != champion {
            return challenger;
        }
    }
    runner_up(&theta, champion)
}

fn draw_posteriors(shapes: &[(f64, f64)], theta: &mut [f64], rng: &mut impl Rng) {
    for (t, &(a, b)) in theta.iter_mut().zip(shapes) {
        let dist = rand_distr::Beta::new(a, b).expect("positive shape parameters");
        *t = dist.sample(rng);
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

fn runner_up(values: &[f64], exclude: usize) -> usize {
    let mut best = None;
    for (i, &v) in values.iter().enumerate() {
        if i == exclude {
            continue;
        }
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.expect("at least two posteriors").0
}

/// Largest (or smallest) score over a pool of arm ids; ties keep the earliest.
fn extremal_in<F: FnMut(usize) -> f64>(pool: &[usize], mut score: F, minimize: bool) -> usize {
    debug_assert!(!pool.is_empty());
    let mut best = pool[0];
    let mut best_score = score(best);
    for &arm in &pool[1..] {
        let s = score(arm);
        if (minimize && s < best_score) || (!minimize && s > best_score) {
            best_score = s;
            best = arm;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeOptions {
    /// Record the full per-round policy (index strategies only). Costly:
    /// one vector of length `arms` per round.
    pub log_policy: bool,
}

#[allow(clippy::derivable_impls)]
impl Default for EpisodeOptions {
    fn default() -> Self {
        Self { log_policy: false }
    }
}

/// Run one evaluation episode.
pub fn run_gai_episode(
    spec: &AlgorithmSpec,
    instance: &BanditInstance,
    horizon: u64,
    seed: u64,
) -> Result<RunTrace> {
    run_gai_episode_with(spec, instance, horizon, seed, &EpisodeOptions::default())
}

/// Run one evaluation episode with explicit options.
pub fn run_gai_episode_with(
    spec: &AlgorithmSpec,
    instance: &BanditInstance,
    horizon: u64,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<RunTrace> {
    let (trace, _) = run_episode_inner(spec, instance, horizon, seed, options, false)?;
    Ok(trace)
}

/// Run one full-horizon training trajectory: decisions are recorded but arms
/// stay in the pool, and every policy round's estimates land in the returned
/// buffer. Requires an index-policy strategy.
pub fn run_training_trajectory(
    spec: &AlgorithmSpec,
    instance: &BanditInstance,
    horizon: u64,
    seed: u64,
) -> Result<(RunTrace, TrajectoryBuffer)> {
    if !spec.algorithm.uses_index_policy() {
        return Err(Error::InvalidConfig(format!(
            "{} does not drive an index policy, nothing to record",
            spec.algorithm.label()
        )));
    }
    let (trace, buffer) = run_episode_inner(spec, instance, horizon, seed, &EpisodeOptions::default(), true)?;
    Ok((trace, buffer.expect("training mode records a buffer")))
}

fn run_episode_inner(
    spec: &AlgorithmSpec,
    instance: &BanditInstance,
    horizon: u64,
    seed: u64,
    options: &EpisodeOptions,
    training: bool,
) -> Result<(RunTrace, Option<TrajectoryBuffer>)> {
    spec.validate()?;
    let k = instance.arms();
    if horizon < k as u64 {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} cannot cover one pull of each of {k} arms"
        )));
    }
    let alg = spec.algorithm;
    let removal = !training && alg.removes_on_decision();
    let delta_policy = spec.delta_policy.unwrap_or(spec.delta);
    let threshold = instance.threshold();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = LinearState::new(k);
    let mut trace = RunTrace::new(k, horizon, removal);
    if options.log_policy && alg.uses_index_policy() {
        trace.policy_log = Some(Vec::new());
    }
    let mut buffer = if training { Some(TrajectoryBuffer::new(k)) } else { None };
    let mut trainer = if training {
        None
    } else {
        alg.online_objective().map(|objective| {
            OnlineTrainer::new(objective, spec.params, horizon, threshold, k)
        })
    };

    let mut alpha = spec.params.alpha;
    let mut beta = spec.params.beta;
    trace.param_log.push(ParamLogEntry { step: 0, alpha, beta });

    let mut pool: Vec<usize> = Vec::with_capacity(k);
    let mut pool_means = vec![0.0; k];
    let mut pool_norms = vec![0.0; k];

    let mut t: u64 = 0;
    // Warm-up: every estimate is defined from here on.
    for arm in 0..k {
        t += 1;
        pull_arm(instance, &mut state, &mut trace, &mut rng, arm, t);
        identify_pulled(spec, instance, &state, &mut trace, arm, t, alpha)?;
    }

    while t < horizon {
        if removal && trace.ledger.active_count() == 0 {
            break;
        }
        pool.clear();
        if removal {
            pool.extend((0..k).filter(|&a| trace.ledger.is_active(a)));
        } else {
            pool.extend(0..k);
        }
        let round = t + 1;

        // Select an arm; index strategies also report the pool size and the
        // policy temperature they used so training can see the same round.
        let mut policy_round: Option<(usize, f64)> = None;
        let picked = match alg {
            Algorithm::Hdoc | Algorithm::Ucb => extremal_in(
                &pool,
                |a| {
                    let m = state.empirical_mean(a).expect("pulled in warm-up");
                    m + hdoc_bonus(round, state.pull_count(a))
                },
                false,
            ),
            Algorithm::LucbG { round_factor } => extremal_in(
                &pool,
                |a| {
                    let m = state.empirical_mean(a).expect("pulled in warm-up");
                    m + lucbg_bonus(
                        k,
                        state.pull_count(a),
                        spec.delta,
                        round_factor.then_some(round),
                    )
                },
                false,
            ),
            Algorithm::AptG { argmin } => extremal_in(
                &pool,
                |a| {
                    let m = state.empirical_mean(a).expect("pulled in warm-up");
                    aptg_index(m, state.pull_count(a), threshold)
                },
                argmin,
            ),
            Algorithm::TtTs { resample_prob } => {
                let shapes: Vec<(f64, f64)> = pool
                    .iter()
                    .map(|&a| {
                        let n = state.pull_count(a) as f64;
                        // clamp protects Gaussian rewards fed as pseudo-counts
                        let wins = state.reward_sum(a).clamp(0.0, n);
                        (1.0 + wins, 1.0 + (n - wins))
                    })
                    .collect();
                pool[tt_ts_select(&shapes, resample_prob, &mut rng)]
            }
            Algorithm::SoftUcbG | Algorithm::Dgai | Algorithm::DgaiOnline => {
                let len = fill_ridge(instance, &state, &pool, &mut pool_means, &mut pool_norms)?;
                let snap = IndexSnapshot::build(
                    &pool_means[..len],
                    &pool_norms[..len],
                    beta,
                    delta_policy,
                );
                let local = sample_arm(&snap.policy, &mut rng);
                log_policy(&mut trace, &pool, &snap.policy, k);
                policy_round = Some((len, snap.coldness));
                pool[local]
            }
            Algorithm::DgaiMab => {
                let len = fill_ridge(instance, &state, &pool, &mut pool_means, &mut pool_norms)?;
                let snap = compute_index(&pool_means[..len], &pool_norms[..len], beta);
                let gamma = coldness(&snap.scores, delta_policy);
                let policy = combined_policy(
                    &snap.scores,
                    &snap.radii,
                    &pool_means[..len],
                    gamma,
                    alpha,
                    spec.params.sharpness,
                    threshold,
                );
                let local = sample_arm(&policy, &mut rng);
                log_policy(&mut trace, &pool, &policy, k);
                policy_round = Some((len, gamma));
                pool[local]
            }
        };

        t = round;
        pull_arm(instance, &mut state, &mut trace, &mut rng, picked, t);
        identify_pulled(spec, instance, &state, &mut trace, picked, t, alpha)?;

        if let Some((len, gamma)) = policy_round {
            if let Some(tr) = trainer.as_mut() {
                tr.observe_round(&pool_means[..len], &pool_norms[..len], gamma);
                if t % spec.params.batch_size == 0 {
                    let (a, b) = tr.step(t)?;
                    alpha = a;
                    beta = b;
                    trace.param_log.push(ParamLogEntry { step: t, alpha, beta });
                }
            }
            if let Some(buf) = buffer.as_mut() {
                debug_assert_eq!(len, k, "training trajectories keep the full pool");
                buf.push_round(&pool_means[..len], &pool_norms[..len], gamma);
            }
        }
    }

    debug_assert!(trace.validate().is_ok());
    Ok((trace, buffer))
}

fn pull_arm(
    instance: &BanditInstance,
    state: &mut LinearState,
    trace: &mut RunTrace,
    rng: &mut ChaCha8Rng,
    arm: usize,
    round: u64,
) {
    let reward = instance.sample_reward(arm, rng);
    if instance.is_one_hot() {
        state.observe_unit(arm, reward);
    } else {
        let x = instance.features().vector(arm);
        state.observe(&x, arm, reward);
    }
    trace.pulls.push(PullRecord { round, arm: arm as u32, reward });
}

/// Check the pulled arm against the identification rule; first crossing wins.
fn identify_pulled(
    spec: &AlgorithmSpec,
    instance: &BanditInstance,
    state: &LinearState,
    trace: &mut RunTrace,
    arm: usize,
    round: u64,
    alpha: f64,
) -> Result<()> {
    if !trace.ledger.is_active(arm) {
        return Ok(());
    }
    let threshold = instance.threshold();
    let decision = match spec.algorithm.identify_rule() {
        IdentifyRule::None => None,
        IdentifyRule::Union => {
            let mean = state.empirical_mean(arm).expect("just pulled");
            let radius =
                union_identification_radius(instance.arms(), state.pull_count(arm), spec.delta);
            radius_decision(mean, radius, threshold)
        }
        IdentifyRule::Radius => {
            let (mean, norm) = arm_ridge(instance, state, arm)?;
            radius_decision(mean, alpha * norm, threshold)
        }
    };
    if let Some(good) = decision {
        trace.ledger.decide(arm, round, good);
    }
    Ok(())
}

fn arm_ridge(
    instance: &BanditInstance,
    state: &LinearState,
    arm: usize,
) -> Result<(f64, f64)> {
    if instance.is_one_hot() {
        Ok((state.ridge_mean_unit(arm), state.feature_norm_unit(arm)))
    } else {
        let x = instance.features().vector(arm);
        Ok((state.ridge_mean(&x)?, state.feature_norm(&x)?))
    }
}

fn fill_ridge(
    instance: &BanditInstance,
    state: &LinearState,
    pool: &[usize],
    means: &mut [f64],
    norms: &mut [f64],
) -> Result<usize> {
    for (slot, &arm) in pool.iter().enumerate() {
        let (m, u) = arm_ridge(instance, state, arm)?;
        means[slot] = m;
        norms[slot] = u;
    }
    Ok(pool.len())
}

fn log_policy(trace: &mut RunTrace, pool: &[usize], policy: &[f64], arms: usize) {
    if let Some(log) = trace.policy_log.as_mut() {
        let mut row = vec![0.0; arms];
        for (&arm, &p) in pool.iter().zip(policy) {
            row[arm] = p;
        }
        log.push(row);
    }
}
