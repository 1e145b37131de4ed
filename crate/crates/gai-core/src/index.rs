//! Differentiable confidence index and the softmax sampling policy built on it.
//!
//! For arm estimates `means` with confidence radii `radii`, the anchor arm is
//! the one with the largest lower bound `means[i] - radii[i]`. Each arm gets a
//! score `S_i = beta * (radii[i] + radii[anchor]) - (means[anchor] - means[i])`;
//! a negative score certifies the arm sub-optimal whenever the radii scaled by
//! `beta` really do cover the estimation error. The coldness turns the scores
//! into a softmax whose mass on non-negative scores is at least `delta`.

use rand::Rng;

/// Floor for the largest non-negative score before it divides the coldness.
pub const SCORE_SCALE_FLOOR: f64 = 1e-12;

/// Scores and policy for one round over a fixed arm ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSnapshot {
    /// Confidence radii as supplied by the caller (unscaled geometry).
    pub radii: Vec<f64>,
    /// Arm with the largest lower confidence bound; ties pick the lowest index.
    pub anchor: usize,
    /// Estimated gap to the anchor, `means[anchor] - means[i]`.
    pub gaps: Vec<f64>,
    /// Radius sums `radii[i] + radii[anchor]`.
    pub phi: Vec<f64>,
    /// Scores `beta * phi[i] - gaps[i]`.
    pub scores: Vec<f64>,
    /// Arms with strictly negative score.
    pub suboptimal_count: usize,
    /// Largest non-negative score, 0 when every score is negative.
    pub score_scale: f64,
    pub coldness: f64,
    pub policy: Vec<f64>,
}

impl IndexSnapshot {
    /// Build scores, coldness and policy in one pass.
    pub fn build(means: &[f64], radii: &[f64], beta: f64, delta: f64) -> Self {
        let core = compute_index(means, radii, beta);
        let gamma = coldness(&core.scores, delta);
        let policy = softmax_policy(&core.scores, gamma);
        Self { coldness: gamma, policy, ..core }
    }
}

/// Score every arm against the best-lower-bound anchor.
///
/// `beta` must be non-negative so the anchor's own score
/// `2 * beta * radii[anchor]` stays non-negative.
pub fn compute_index(means: &[f64], radii: &[f64], beta: f64) -> IndexSnapshot {
    assert_eq!(means.len(), radii.len(), "means/radii length mismatch");
    assert!(!means.is_empty(), "empty arm set");
    debug_assert!(beta >= 0.0, "negative confidence scale");
    let mut anchor = 0;
    let mut best = means[0] - radii[0];
    for i in 1..means.len() {
        let lcb = means[i] - radii[i];
        if lcb > best {
            best = lcb;
            anchor = i;
        }
    }
    let gaps: Vec<f64> = means.iter().map(|m| means[anchor] - m).collect();
    let phi: Vec<f64> = radii.iter().map(|r| r + radii[anchor]).collect();
    let scores: Vec<f64> = phi
        .iter()
        .zip(&gaps)
        .map(|(p, g)| beta * p - g)
        .collect();
    let suboptimal_count = scores.iter().filter(|s| **s < 0.0).count();
    let score_scale = scores.iter().copied().filter(|s| *s >= 0.0).fold(0.0, f64::max);
    IndexSnapshot {
        radii: radii.to_vec(),
        anchor,
        gaps,
        phi,
        scores,
        suboptimal_count,
        score_scale,
        coldness: 0.0,
        policy: Vec::new(),
    }
}

/// Inverse temperature `log(delta * L / (1 - delta)) / score_scale` with
/// `L = max(#negative scores, 1)`, clamped to be non-negative.
///
/// At this coldness the softmax over the scores puts mass at least `delta` on
/// the arms with non-negative score; near `delta = 1` sub-optimal arms are
/// selected with vanishing probability.
///
/// The scale is the largest positive score. With `beta = 0` every score is
/// non-positive and that scale degenerates, so the separation to the
/// least-negative score takes its place: `L * exp(-gamma * |s|) <= (1-delta)/delta`
/// yields the same mass bound from the negative side. Flat scores make every
/// coldness equivalent (softmax is uniform regardless), so that case returns 0
/// and keeps the gradient factors that carry `gamma` finite.
pub fn coldness(scores: &[f64], delta: f64) -> f64 {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let suboptimal = scores.iter().filter(|s| **s < 0.0).count().max(1) as f64;
    let positive = scores
        .iter()
        .copied()
        .filter(|s| *s >= 0.0)
        .fold(0.0, f64::max);
    let scale = if positive > SCORE_SCALE_FLOOR {
        positive
    } else {
        let nearest = scores
            .iter()
            .copied()
            .filter(|s| *s < 0.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if nearest.is_finite() && -nearest > SCORE_SCALE_FLOOR {
            -nearest
        } else {
            return 0.0;
        }
    };
    let gamma = (delta * suboptimal / (1.0 - delta)).ln() / scale;
    gamma.max(0.0)
}

/// Softmax of `coldness * scores`, stabilized by max subtraction.
pub fn softmax_policy(scores: &[f64], coldness: f64) -> Vec<f64> {
    assert!(!scores.is_empty(), "empty score vector");
    assert!(coldness >= 0.0, "coldness must be non-negative");
    let max_logit = scores
        .iter()
        .map(|s| coldness * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores
        .iter()
        .map(|s| (coldness * s - max_logit).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Draw an index from a probability vector. The caller guarantees entries are
/// non-negative and sum to 1 up to rounding; float dust lands on the last
/// positive entry.
pub fn sample_arm(policy: &[f64], rng: &mut impl Rng) -> usize {
    assert!(!policy.is_empty(), "empty policy");
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in policy.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}
