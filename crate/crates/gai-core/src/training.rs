//! Gradient training of the two confidence scales.
//!
//! `beta` scales the sampling index radii; `alpha` scales the identification
//! radius. Both are trained by gradient ascent on reward-style objectives
//! evaluated over recorded trajectories:
//!
//! - the sampling objective scores the expected true reward of the softmax
//!   policy, recomputed from stored estimates at the candidate `beta`, minus a
//!   penalty on rounds where `beta` times the stored radius fails to cover the
//!   estimation error;
//! - the identification objective scores a soft indicator of "decided good"
//!   times the estimated margin, minus the same style of penalty on rounds
//!   where `alpha` times the radius fails to cover the error;
//! - the combined objective scores expected reward under a policy whose
//!   logits are the index scores soft-screened by the identification
//!   indicator, for the thresholded best-arm setting.
//!
//! Offline training replays full-horizon trajectories against the true means.
//! Online training substitutes the running estimates for the unknown means and
//! follows a bootstrapped return: realized per-round terms so far plus the
//! latest term extrapolated over the remaining rounds, normalized by the
//! horizon. Policy temperatures are stored in the buffer and treated as
//! constants under differentiation.

use crate::error::{Error, Result};
use crate::index::softmax_policy;
use crate::model::BanditInstance;
use crate::trace::{EpochLogEntry, RunTrace};

/// Training aborts when a scale passes this magnitude.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Hyperparameters and current values of the trainable scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainableParams {
    /// Identification radius scale, kept non-negative.
    pub alpha: f64,
    /// Sampling index radius scale, kept non-negative.
    pub beta: f64,
    pub learning_rate: f64,
    /// Linear penalty weight.
    pub eta1: f64,
    /// Absolute-value penalty weight.
    pub eta2: f64,
    /// Sigmoid sharpness of the soft identification indicator.
    pub sharpness: f64,
    /// Rounds between online updates.
    pub batch_size: u64,
}

impl Default for TrainableParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            learning_rate: 1e-1,
            eta1: 1e-3,
            eta2: 1e-3,
            sharpness: 100.0,
            batch_size: 128,
        }
    }
}

impl TrainableParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("learning_rate", self.learning_rate),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("sharpness", self.sharpness),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.sharpness == 0.0 {
            return Err(Error::InvalidConfig("sharpness must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn sigmoid_slope(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s)
}

/// Sign with the subgradient convention `sgn(0) = 0`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-round estimates recorded for training: ridge means, feature norms and
/// the policy temperature of every policy-driven round, over the full arm set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBuffer {
    arms: usize,
    means: Vec<f64>,
    norms: Vec<f64>,
    gammas: Vec<f64>,
}

impl TrajectoryBuffer {
    pub fn new(arms: usize) -> Self {
        assert!(arms > 0, "empty arm set");
        Self { arms, means: Vec::new(), norms: Vec::new(), gammas: Vec::new() }
    }

    pub fn push_round(&mut self, means: &[f64], norms: &[f64], gamma: f64) {
        assert_eq!(means.len(), self.arms, "means length mismatch");
        assert_eq!(norms.len(), self.arms, "norms length mismatch");
        self.means.extend_from_slice(means);
        self.norms.extend_from_slice(norms);
        self.gammas.push(gamma);
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn rounds(&self) -> usize {
        self.gammas.len()
    }

    pub fn means_at(&self, round: usize) -> &[f64] {
        &self.means[round * self.arms..(round + 1) * self.arms]
    }

    pub fn norms_at(&self, round: usize) -> &[f64] {
        &self.norms[round * self.arms..(round + 1) * self.arms]
    }

    pub fn gamma_at(&self, round: usize) -> f64 {
        self.gammas[round]
    }
}

/// Which objective to evaluate or differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Sampling,
    Identification,
    Combined,
}

/// Partial derivatives with respect to the two scales. Objectives that do not
/// read a scale report a zero component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grad {
    pub alpha: f64,
    pub beta: f64,
}

/// Anchor arm: largest lower bound `means[i] - norms[i]`, lowest index on ties.
fn anchor_of(means: &[f64], norms: &[f64]) -> usize {
    let mut best = 0;
    let mut best_lcb = means[0] - norms[0];
    for i in 1..means.len() {
        let lcb = means[i] - norms[i];
        if lcb > best_lcb {
            best_lcb = lcb;
            best = i;
        }
    }
    best
}

/// Scratch space shared across round evaluations.
struct Scratch {
    phi: Vec<f64>,
    scores: Vec<f64>,
    policy: Vec<f64>,
    screen: Vec<f64>,
}

impl Scratch {
    fn new(arms: usize) -> Self {
        Self {
            phi: vec![0.0; arms],
            scores: vec![0.0; arms],
            policy: vec![0.0; arms],
            screen: vec![0.0; arms],
        }
    }

    /// Fill phi/scores for the round and the softmax of `gamma * scores`.
    fn fill_index_policy(&mut self, means: &[f64], norms: &[f64], gamma: f64, beta: f64) {
        let anchor = anchor_of(means, norms);
        for i in 0..means.len() {
            self.phi[i] = norms[i] + norms[anchor];
            self.scores[i] = beta * self.phi[i] - (means[anchor] - means[i]);
        }
        softmax_into(&self.scores, gamma, &mut self.policy);
    }
}

fn softmax_into(scores: &[f64], gamma: f64, out: &mut [f64]) {
    let max_logit = scores
        .iter()
        .map(|s| gamma * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (gamma * s - max_logit).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

// Per-round objective terms. `targets` carries the reward weights and the
// centers of the coverage penalties: the true means offline, the recorded
// estimates online (which zeroes the error term of the penalties).

fn sampling_round_value(
    scratch: &mut Scratch,
    means: &[f64],
    norms: &[f64],
    gamma: f64,
    beta: f64,
    eta1: f64,
    eta2: f64,
    targets: &[f64],
) -> f64 {
    scratch.fill_index_policy(means, norms, gamma, beta);
    let mut value = 0.0;
    for i in 0..means.len() {
        value += scratch.policy[i] * targets[i];
        let c = (targets[i] - means[i]).abs() - beta * norms[i];
        value -= eta1 * c + eta2 * c.abs();
    }
    value
}

fn sampling_round_grad(
    scratch: &mut Scratch,
    means: &[f64],
    norms: &[f64],
    gamma: f64,
    beta: f64,
    eta1: f64,
    eta2: f64,
    targets: &[f64],
) -> f64 {
    scratch.fill_index_policy(means, norms, gamma, beta);
    let (mut e_w, mut e_phi, mut e_wphi) = (0.0, 0.0, 0.0);
    let mut grad = 0.0;
    for i in 0..means.len() {
        let p = scratch.policy[i];
        e_w += p * targets[i];
        e_phi += p * scratch.phi[i];
        e_wphi += p * targets[i] * scratch.phi[i];
        let c = (targets[i] - means[i]).abs() - beta * norms[i];
        grad += (eta1 + eta2 * sgn(c)) * norms[i];
    }
    grad + gamma * (e_wphi - e_w * e_phi)
}

fn identification_round_value(
    means: &[f64],
    norms: &[f64],
    alpha: f64,
    eta1: f64,
    eta2: f64,
    sharpness: f64,
    threshold: f64,
    targets: &[f64],
) -> f64 {
    let mut value = 0.0;
    for i in 0..means.len() {
        let z = (means[i] - alpha * norms[i] - threshold) * sharpness;
        value += sigmoid(z) * (means[i] - threshold);
        let e = (targets[i] - means[i]).abs() - alpha * norms[i];
        value -= eta1 * e + eta2 * e.abs();
    }
    value
}

fn identification_round_grad(
    means: &[f64],
    norms: &[f64],
    alpha: f64,
    eta1: f64,
    eta2: f64,
    sharpness: f64,
    threshold: f64,
    targets: &[f64],
) -> f64 {
    let mut grad = 0.0;
    for i in 0..means.len() {
        let z = (means[i] - alpha * norms[i] - threshold) * sharpness;
        grad -= sigmoid_slope(z) * sharpness * norms[i] * (means[i] - threshold);
        let e = (targets[i] - means[i]).abs() - alpha * norms[i];
        grad += (eta1 + eta2 * sgn(e)) * norms[i];
    }
    grad
}

fn combined_round_value(
    scratch: &mut Scratch,
    means: &[f64],
    norms: &[f64],
    gamma: f64,
    alpha: f64,
    beta: f64,
    sharpness: f64,
    threshold: f64,
    targets: &[f64],
) -> f64 {
    fill_combined_policy(scratch, means, norms, gamma, alpha, beta, sharpness, threshold);
    scratch
        .policy
        .iter()
        .zip(targets)
        .map(|(p, w)| p * w)
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn combined_round_grads(
    scratch: &mut Scratch,
    means: &[f64],
    norms: &[f64],
    gamma: f64,
    alpha: f64,
    beta: f64,
    sharpness: f64,
    threshold: f64,
    targets: &[f64],
) -> (f64, f64) {
    fill_combined_policy(scratch, means, norms, gamma, alpha, beta, sharpness, threshold);
    let k = means.len();
    let (mut e_w, mut e_da, mut e_db, mut e_wda, mut e_wdb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..k {
        let p = scratch.policy[i];
        let z = (means[i] - alpha * norms[i] - threshold) * sharpness;
        let dl_beta = gamma * scratch.phi[i] * scratch.screen[i];
        let dl_alpha = -gamma * scratch.scores[i] * sigmoid_slope(z) * sharpness * norms[i];
        e_w += p * targets[i];
        e_da += p * dl_alpha;
        e_db += p * dl_beta;
        e_wda += p * targets[i] * dl_alpha;
        e_wdb += p * targets[i] * dl_beta;
    }
    (e_wda - e_w * e_da, e_wdb - e_w * e_db)
}

fn fill_combined_policy(
    scratch: &mut Scratch,
    means: &[f64],
    norms: &[f64],
    gamma: f64,
    alpha: f64,
    beta: f64,
    sharpness: f64,
    threshold: f64,
) {
    let anchor = anchor_of(means, norms);
    for i in 0..means.len() {
        scratch.phi[i] = norms[i] + norms[anchor];
        scratch.scores[i] = beta * scratch.phi[i] - (means[anchor] - means[i]);
        scratch.screen[i] = sigmoid((means[i] - alpha * norms[i] - threshold) * sharpness);
    }
    // logits are gamma * score * screen; reuse the policy slot
    for i in 0..means.len() {
        scratch.policy[i] = gamma * scratch.scores[i] * scratch.screen[i];
    }
    let logits = scratch.policy.clone();
    softmax_into(&logits, 1.0, &mut scratch.policy);
}

/// Policy over arms whose logits are the index scores scaled by the coldness
/// and soft-screened by the identification indicator. With every indicator
/// saturated at 1 this is exactly the plain softmax policy.
pub fn combined_policy(
    scores: &[f64],
    radii: &[f64],
    means: &[f64],
    gamma: f64,
    alpha: f64,
    sharpness: f64,
    threshold: f64,
) -> Vec<f64> {
    assert_eq!(scores.len(), means.len(), "scores/means length mismatch");
    assert_eq!(scores.len(), radii.len(), "scores/radii length mismatch");
    let logits: Vec<f64> = (0..scores.len())
        .map(|i| {
            gamma * scores[i] * sigmoid((means[i] - alpha * radii[i] - threshold) * sharpness)
        })
        .collect();
    softmax_policy(&logits, 1.0)
}

/// Objective value over a recorded buffer against the instance's true means.
pub fn objective_value(
    objective: Objective,
    buffer: &TrajectoryBuffer,
    instance: &BanditInstance,
    params: &TrainableParams,
) -> f64 {
    assert_eq!(buffer.arms(), instance.arms(), "buffer/instance arm mismatch");
    let mut scratch = Scratch::new(buffer.arms());
    let targets = instance.means();
    let xi = instance.threshold();
    let mut total = 0.0;
    for r in 0..buffer.rounds() {
        let (m, u, g) = (buffer.means_at(r), buffer.norms_at(r), buffer.gamma_at(r));
        total += match objective {
            Objective::Sampling => sampling_round_value(
                &mut scratch, m, u, g, params.beta, params.eta1, params.eta2, targets,
            ),
            Objective::Identification => identification_round_value(
                m, u, params.alpha, params.eta1, params.eta2, params.sharpness, xi, targets,
            ),
            Objective::Combined => combined_round_value(
                &mut scratch, m, u, g, params.alpha, params.beta, params.sharpness, xi, targets,
            ),
        };
    }
    total
}

/// Analytic gradient of [`objective_value`] in the two scales. Temperatures
/// are constants; the absolute values use `sgn(0) = 0` at their kinks.
pub fn objective_gradient(
    objective: Objective,
    buffer: &TrajectoryBuffer,
    instance: &BanditInstance,
    params: &TrainableParams,
) -> Grad {
    assert_eq!(buffer.arms(), instance.arms(), "buffer/instance arm mismatch");
    let mut scratch = Scratch::new(buffer.arms());
    let targets = instance.means();
    let xi = instance.threshold();
    let mut grad = Grad { alpha: 0.0, beta: 0.0 };
    for r in 0..buffer.rounds() {
        let (m, u, g) = (buffer.means_at(r), buffer.norms_at(r), buffer.gamma_at(r));
        match objective {
            Objective::Sampling => {
                grad.beta += sampling_round_grad(
                    &mut scratch, m, u, g, params.beta, params.eta1, params.eta2, targets,
                );
            }
            Objective::Identification => {
                grad.alpha += identification_round_grad(
                    m, u, params.alpha, params.eta1, params.eta2, params.sharpness, xi, targets,
                );
            }
            Objective::Combined => {
                let (ga, gb) = combined_round_grads(
                    &mut scratch, m, u, g, params.alpha, params.beta, params.sharpness, xi,
                    targets,
                );
                grad.alpha += ga;
                grad.beta += gb;
            }
        }
    }
    grad
}

/// Bootstrapped return over per-round terms: realized terms through round `t`
/// plus the round-`t` term extrapolated over the remaining horizon, normalized
/// by the horizon. At `t = horizon` this is exactly the per-round average.
pub fn bootstrapped_objective(round_terms: &[f64], t: usize, horizon: u64) -> f64 {
    assert!(t >= 1 && t <= round_terms.len(), "t out of recorded range");
    assert!(horizon as usize >= t, "horizon below t");
    let hist: f64 = round_terms[..t].iter().sum();
    (hist + (horizon - t as u64) as f64 * round_terms[t - 1]) / horizon as f64
}

/// What an online trainer updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnlineObjective {
    /// `beta` only, from the sampling objective.
    Sampling,
    /// `beta` from the sampling objective, `alpha` from the identification
    /// objective.
    SamplingAndIdentification,
    /// Both scales jointly from the combined objective.
    Combined,
}

/// Incremental gradient ascent against the bootstrapped return. Per-round
/// gradient terms are evaluated at the parameters in force when the round was
/// played and accumulated; a step combines the accumulated history with the
/// latest round extrapolated to the horizon. Memory is O(1) in the horizon.
#[derive(Debug, Clone)]
pub struct OnlineTrainer {
    objective: OnlineObjective,
    params: TrainableParams,
    horizon: u64,
    threshold: f64,
    acc_alpha: f64,
    acc_beta: f64,
    last_alpha: f64,
    last_beta: f64,
    scratch: Scratch,
}

impl std::fmt::Debug for Scratch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scratch").finish_non_exhaustive()
    }
}

impl Clone for Scratch {
    fn clone(&self) -> Self {
        Scratch::new(self.phi.len())
    }
}

impl OnlineTrainer {
    pub fn new(
        objective: OnlineObjective,
        params: TrainableParams,
        horizon: u64,
        threshold: f64,
        arms: usize,
    ) -> Self {
        Self {
            objective,
            params,
            horizon,
            threshold,
            acc_alpha: 0.0,
            acc_beta: 0.0,
            last_alpha: 0.0,
            last_beta: 0.0,
            scratch: Scratch::new(arms),
        }
    }

    pub fn params(&self) -> &TrainableParams {
        &self.params
    }

    /// Record one policy round. The slices cover the arms the policy saw;
    /// the recorded estimates stand in for the unknown true means.
    pub fn observe_round(&mut self, means: &[f64], norms: &[f64], gamma: f64) {
        if self.scratch.phi.len() < means.len() {
            self.scratch = Scratch::new(means.len());
        }
        let p = &self.params;
        let (ga, gb) = match self.objective {
            OnlineObjective::Sampling => (
                0.0,
                sampling_round_grad(
                    &mut self.scratch, means, norms, gamma, p.beta, p.eta1, p.eta2, means,
                ),
            ),
            OnlineObjective::SamplingAndIdentification => (
                identification_round_grad(
                    means, norms, p.alpha, p.eta1, p.eta2, p.sharpness, self.threshold, means,
                ),
                sampling_round_grad(
                    &mut self.scratch, means, norms, gamma, p.beta, p.eta1, p.eta2, means,
                ),
            ),
            OnlineObjective::Combined => combined_round_grads(
                &mut self.scratch,
                means,
                norms,
                gamma,
                p.alpha,
                p.beta,
                p.sharpness,
                self.threshold,
                means,
            ),
        };
        self.acc_alpha += ga;
        self.acc_beta += gb;
        self.last_alpha = ga;
        self.last_beta = gb;
    }

    /// Gradient step at global round `t`. Returns the updated scales.
    pub fn step(&mut self, t: u64) -> Result<(f64, f64)> {
        assert!(t >= 1 && t <= self.horizon, "round outside horizon");
        let scale = 1.0 / self.horizon as f64;
        let remaining = (self.horizon - t) as f64;
        let g_alpha = (self.acc_alpha + remaining * self.last_alpha) * scale;
        let g_beta = (self.acc_beta + remaining * self.last_beta) * scale;
        if self.updates_alpha() {
            self.params.alpha =
                step_scale("alpha", self.params.alpha, self.params.learning_rate * g_alpha)?;
        }
        self.params.beta =
            step_scale("beta", self.params.beta, self.params.learning_rate * g_beta)?;
        Ok((self.params.alpha, self.params.beta))
    }

    fn updates_alpha(&self) -> bool {
        !matches!(self.objective, OnlineObjective::Sampling)
    }
}

/// Apply one projected step; error out on divergence.
fn step_scale(name: &'static str, value: f64, delta: f64) -> Result<f64> {
    let next = (value + delta).max(0.0);
    if !next.is_finite() || next > DIVERGENCE_BOUND {
        return Err(Error::Diverged { name, value: next, bound: DIVERGENCE_BOUND });
    }
    Ok(next)
}

/// Result of offline training: final scales, the per-epoch log and the last
/// epoch's trace.
#[derive(Debug, Clone)]
pub struct OfflineOutcome {
    pub params: TrainableParams,
    pub epochs: Vec<EpochLogEntry>,
    pub trace: RunTrace,
}

/// Train `(alpha, beta)` over full-horizon trajectories. Every epoch replays
/// the identical seed, so with a zero learning rate each epoch reproduces the
/// same trace; parameter movement is the only source of change between epochs.
/// Epoch trajectories keep sampling decided arms (decisions are recorded, not
/// enforced), which keeps the buffer full length for the gradients.
pub fn offline_train(
    spec: &crate::algorithms::AlgorithmSpec,
    instance: &BanditInstance,
    horizon: u64,
    epochs: u64,
    seed: u64,
) -> Result<OfflineOutcome> {
    if epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }
    spec.validate()?;
    let mut params = spec.params;
    let mut log = Vec::with_capacity(epochs as usize);
    let mut last: Option<(RunTrace, TrajectoryBuffer)> = None;
    for epoch in 1..=epochs {
        let mut epoch_spec = spec.clone();
        epoch_spec.algorithm = crate::algorithms::Algorithm::Dgai;
        epoch_spec.params = params;
        let (trace, buffer) =
            crate::algorithms::run_training_trajectory(&epoch_spec, instance, horizon, seed)?;
        let exploit = crate::metrics::exploit_score(&trace, instance);
        let cumulative = crate::metrics::cumulative_reward(&trace);
        let g_sampling = objective_gradient(Objective::Sampling, &buffer, instance, &params);
        let g_ident = objective_gradient(Objective::Identification, &buffer, instance, &params);
        // Per-round mean keeps the step size horizon-independent, matching the
        // horizon normalization of the online return.
        let norm = 1.0 / buffer.rounds().max(1) as f64;
        params.beta = step_scale(
            "beta",
            params.beta,
            params.learning_rate * g_sampling.beta * norm,
        )?;
        params.alpha = step_scale(
            "alpha",
            params.alpha,
            params.learning_rate * g_ident.alpha * norm,
        )?;
        log.push(EpochLogEntry {
            epoch,
            alpha: params.alpha,
            beta: params.beta,
            exploit_score: exploit,
            cumulative_reward: cumulative,
        });
        last = Some((trace, buffer));
    }
    let (trace, _) = last.expect("at least one epoch ran");
    Ok(OfflineOutcome { params, epochs: log, trace })
}
