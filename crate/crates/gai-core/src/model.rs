//! Bandit instances and the sufficient statistics every algorithm shares.
//!
//! An instance fixes true arm means, a reward law, a goodness threshold and
//! per-arm feature vectors. `LinearState` tracks the regularized least-squares
//! view of the data (Gram matrix initialized to the identity) next to the raw
//! per-arm counts and sums, so index-based and empirical-mean algorithms can
//! run off one state object.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky};

/// Reward distribution attached to every arm of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardLaw {
    /// Rewards in {0, 1} with the arm mean as success probability.
    Bernoulli,
    /// Gaussian with shared standard deviation; `sigma = 0` is deterministic.
    Gaussian { sigma: f64 },
}

/// Per-arm feature vectors. The simulated instances are all one-hot
/// (independent arms); dense vectors exist for direct library use.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmFeatures {
    OneHot { dim: usize },
    Dense { vectors: Vec<Vec<f64>> },
}

impl ArmFeatures {
    pub fn dim(&self) -> usize {
        match self {
            ArmFeatures::OneHot { dim } => *dim,
            ArmFeatures::Dense { vectors } => vectors.first().map_or(0, Vec::len),
        }
    }

    /// Materialize the feature vector of one arm.
    pub fn vector(&self, arm: usize) -> Vec<f64> {
        match self {
            ArmFeatures::OneHot { dim } => {
                let mut v = vec![0.0; *dim];
                v[arm] = 1.0;
                v
            }
            ArmFeatures::Dense { vectors } => vectors[arm].clone(),
        }
    }
}

/// A fixed arm set with known means, used to drive simulations and to score
/// traces against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    means: Vec<f64>,
    threshold: f64,
    law: RewardLaw,
    features: ArmFeatures,
}

impl BanditInstance {
    /// Instance from explicit means with one-hot features.
    pub fn from_means(means: Vec<f64>, threshold: f64, law: RewardLaw) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidInstance("arm set is empty".into()));
        }
        if !means.iter().all(|m| m.is_finite()) || !threshold.is_finite() {
            return Err(Error::InvalidInstance("non-finite mean or threshold".into()));
        }
        if let RewardLaw::Bernoulli = law {
            if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
                return Err(Error::InvalidInstance(
                    "Bernoulli law requires means in [0, 1]".into(),
                ));
            }
        }
        if let RewardLaw::Gaussian { sigma } = law {
            if !(sigma >= 0.0) {
                return Err(Error::InvalidInstance("Gaussian sigma must be >= 0".into()));
            }
        }
        let dim = means.len();
        Ok(Self { means, threshold, law, features: ArmFeatures::OneHot { dim } })
    }

    /// Instance with caller-provided dense features (testing and direct use).
    pub fn with_dense_features(
        means: Vec<f64>,
        threshold: f64,
        law: RewardLaw,
        vectors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut inst = Self::from_means(means, threshold, law)?;
        if vectors.len() != inst.means.len() {
            return Err(Error::InvalidInstance("one feature vector per arm required".into()));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInstance("feature vectors must share a nonzero length".into()));
        }
        inst.features = ArmFeatures::Dense { vectors };
        Ok(inst)
    }

    /// K arms with means drawn uniformly from `[low, high]`, one-hot features.
    /// Deterministic in `seed`.
    pub fn synthetic_uniform(
        arms: usize,
        low: f64,
        high: f64,
        threshold: f64,
        law: RewardLaw,
        seed: u64,
    ) -> Result<Self> {
        if arms == 0 {
            return Err(Error::InvalidInstance("arm count must be positive".into()));
        }
        if !(low <= high) {
            return Err(Error::InvalidInstance(format!(
                "mean bounds out of order: [{low}, {high}]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let means: Vec<f64> = (0..arms)
            .map(|_| low + (high - low) * rng.random::<f64>())
            .collect();
        Self::from_means(means, threshold, law)
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn law(&self) -> RewardLaw {
        self.law
    }

    pub fn features(&self) -> &ArmFeatures {
        &self.features
    }

    pub fn is_one_hot(&self) -> bool {
        matches!(self.features, ArmFeatures::OneHot { .. })
    }

    /// Arms whose true mean reaches the threshold.
    pub fn good_set(&self) -> Vec<usize> {
        (0..self.arms()).filter(|&i| self.is_good(i)).collect()
    }

    pub fn is_good(&self, arm: usize) -> bool {
        self.means[arm] >= self.threshold
    }

    /// Index of the largest true mean (lowest index on ties).
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for i in 1..self.means.len() {
            if self.means[i] > self.means[best] {
                best = i;
            }
        }
        best
    }

    /// Draw one reward for `arm`. Panics on an out-of-range arm index.
    pub fn sample_reward(&self, arm: usize, rng: &mut impl Rng) -> f64 {
        assert!(arm < self.means.len(), "arm index {arm} out of range");
        let mean = self.means[arm];
        match self.law {
            RewardLaw::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            // Scaling a standard normal keeps sigma = 0 exact.
            RewardLaw::Gaussian { sigma } => {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                mean + sigma * z
            }
        }
    }
}

/// One observed pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSample {
    pub round: u64,
    pub arm: usize,
    pub value: f64,
}

/// Regularized least-squares statistics plus raw per-arm aggregates.
///
/// The Gram matrix starts at the identity, so every estimate is defined from
/// round zero. While all observed features stay one-hot the Gram matrix is
/// diagonal and estimates use O(1) closed forms; any dense feature switches the
/// state to full matrix solves.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearState {
    dim: usize,
    gram: Vec<f64>,
    response: Vec<f64>,
    pull_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    round: u64,
    diagonal: bool,
}

impl LinearState {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        let mut gram = vec![0.0; dim * dim];
        for i in 0..dim {
            gram[i * dim + i] = 1.0;
        }
        Self {
            dim,
            gram,
            response: vec![0.0; dim],
            pull_counts: vec![0; dim],
            reward_sums: vec![0.0; dim],
            round: 0,
            diagonal: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn pull_count(&self, arm: usize) -> u64 {
        self.pull_counts[arm]
    }

    pub fn reward_sum(&self, arm: usize) -> f64 {
        self.reward_sums[arm]
    }

    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Record a pull of `arm` observed through its one-hot feature.
    pub fn observe_unit(&mut self, arm: usize, reward: f64) {
        assert!(arm < self.dim, "arm index {arm} out of range");
        self.gram[arm * self.dim + arm] += 1.0;
        self.response[arm] += reward;
        self.pull_counts[arm] += 1;
        self.reward_sums[arm] += reward;
        self.round += 1;
    }

    /// Record a pull of `arm` observed through an arbitrary feature vector.
    pub fn observe(&mut self, feature: &[f64], arm: usize, reward: f64) {
        assert_eq!(feature.len(), self.dim, "feature length mismatch");
        assert!(arm < self.dim, "arm index {arm} out of range");
        let mut nonzero = 0usize;
        let mut unit_at_arm = false;
        for (i, &x) in feature.iter().enumerate() {
            if x != 0.0 {
                nonzero += 1;
                unit_at_arm = i == arm && x == 1.0;
            }
        }
        if nonzero == 1 && unit_at_arm {
            self.observe_unit(arm, reward);
            return;
        }
        self.diagonal = false;
        for i in 0..self.dim {
            if feature[i] == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                self.gram[i * self.dim + j] += feature[i] * feature[j];
            }
            self.response[i] += feature[i] * reward;
        }
        self.pull_counts[arm] += 1;
        self.reward_sums[arm] += reward;
        self.round += 1;
    }

    /// Regularized mean estimate `x^T V^{-1} b` for a one-hot arm.
    /// Closed form `sum / (count + 1)` while the Gram matrix is diagonal.
    pub fn ridge_mean_unit(&self, arm: usize) -> f64 {
        assert!(arm < self.dim, "arm index {arm} out of range");
        if self.diagonal {
            self.response[arm] / self.gram[arm * self.dim + arm]
        } else {
            self.dense_ridge_mean(&one_hot(self.dim, arm))
                .expect("gram matrix stays positive definite under rank-one updates")
        }
    }

    /// Confidence geometry `sqrt(x^T V^{-1} x)` for a one-hot arm.
    /// Closed form `1 / sqrt(count + 1)` while the Gram matrix is diagonal.
    pub fn feature_norm_unit(&self, arm: usize) -> f64 {
        assert!(arm < self.dim, "arm index {arm} out of range");
        if self.diagonal {
            (1.0 / self.gram[arm * self.dim + arm]).sqrt()
        } else {
            self.dense_feature_norm(&one_hot(self.dim, arm))
                .expect("gram matrix stays positive definite under rank-one updates")
        }
    }

    /// Regularized mean estimate for an arbitrary direction, always via the
    /// full matrix solve.
    pub fn dense_ridge_mean(&self, x: &[f64]) -> Result<f64> {
        let ch = Cholesky::factor(&self.gram, self.dim)?;
        Ok(dot(x, &ch.solve(&self.response)))
    }

    /// Confidence geometry for an arbitrary direction via the full solve.
    pub fn dense_feature_norm(&self, x: &[f64]) -> Result<f64> {
        let ch = Cholesky::factor(&self.gram, self.dim)?;
        Ok(ch.inv_quad_form(x).sqrt())
    }

    /// Ridge mean for an arbitrary direction, using the diagonal shortcut
    /// when the direction is one-hot and the Gram matrix is diagonal.
    pub fn ridge_mean(&self, x: &[f64]) -> Result<f64> {
        if let Some(arm) = self.unit_index(x) {
            Ok(self.ridge_mean_unit(arm))
        } else {
            self.dense_ridge_mean(x)
        }
    }

    /// Feature norm for an arbitrary direction, shortcut as in `ridge_mean`.
    pub fn feature_norm(&self, x: &[f64]) -> Result<f64> {
        if let Some(arm) = self.unit_index(x) {
            Ok(self.feature_norm_unit(arm))
        } else {
            self.dense_feature_norm(x)
        }
    }

    /// Raw empirical mean; undefined before the first pull.
    pub fn empirical_mean(&self, arm: usize) -> Result<f64> {
        assert!(arm < self.dim, "arm index {arm} out of range");
        if self.pull_counts[arm] == 0 {
            return Err(Error::UndefinedStatistic { arm });
        }
        Ok(self.reward_sums[arm] / self.pull_counts[arm] as f64)
    }

    fn unit_index(&self, x: &[f64]) -> Option<usize> {
        if !self.diagonal {
            return None;
        }
        let mut unit = None;
        for (i, &v) in x.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            if v != 1.0 || unit.is_some() {
                return None;
            }
            unit = Some(i);
        }
        unit
    }
}

fn one_hot(dim: usize, arm: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[arm] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn seeded(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn synthetic_is_deterministic_and_in_band() {
        let a = BanditInstance::synthetic_uniform(50, 0.2, 0.8, 0.5, RewardLaw::Bernoulli, 7).unwrap();
        let b = BanditInstance::synthetic_uniform(50, 0.2, 0.8, 0.5, RewardLaw::Bernoulli, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.means().iter().all(|m| (0.2..=0.8).contains(m)));
        let c = BanditInstance::synthetic_uniform(50, 0.2, 0.8, 0.5, RewardLaw::Bernoulli, 8).unwrap();
        assert_ne!(a.means(), c.means());
    }

    #[test]
    fn synthetic_band_from_reordered_bounds() {
        let inst =
            BanditInstance::synthetic_uniform(50, 0.49975, 0.5005, 0.5, RewardLaw::Bernoulli, 3)
                .unwrap();
        assert!(inst.means().iter().all(|m| (0.49975..=0.5005).contains(m)));
        assert!(
            BanditInstance::synthetic_uniform(50, 0.5005, 0.49975, 0.5, RewardLaw::Bernoulli, 3)
                .is_err()
        );
    }

    #[test]
    fn single_arm_instance_is_fine() {
        let inst = BanditInstance::synthetic_uniform(1, 0.3, 0.3, 0.5, RewardLaw::Bernoulli, 0).unwrap();
        assert_eq!(inst.arms(), 1);
        assert_eq!(inst.mean(0), 0.3);
        assert!(inst.good_set().is_empty());
    }

    #[test]
    fn bernoulli_rejects_out_of_range_means() {
        assert!(BanditInstance::from_means(vec![0.5, 1.2], 0.5, RewardLaw::Bernoulli).is_err());
        assert!(BanditInstance::from_means(vec![-0.1], 0.5, RewardLaw::Bernoulli).is_err());
        assert!(BanditInstance::from_means(vec![-0.1, 1.2], 0.5, RewardLaw::Gaussian { sigma: 1.0 }).is_ok());
    }

    #[test]
    fn reward_extremes_are_exact() {
        let inst = BanditInstance::from_means(vec![1.0, 0.0], 0.5, RewardLaw::Bernoulli).unwrap();
        let mut rng = seeded(1);
        for _ in 0..100 {
            assert_eq!(inst.sample_reward(0, &mut rng), 1.0);
            assert_eq!(inst.sample_reward(1, &mut rng), 0.0);
        }
    }

    #[test]
    fn bernoulli_frequency_matches_mean() {
        let inst = BanditInstance::from_means(vec![0.5], 0.5, RewardLaw::Bernoulli).unwrap();
        let mut rng = seeded(42);
        let n = 10_000;
        let mean = (0..n).map(|_| inst.sample_reward(0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "sample mean {mean}");
    }

    #[test]
    fn zero_sigma_gaussian_is_deterministic() {
        let inst = BanditInstance::from_means(vec![0.9], 0.5, RewardLaw::Gaussian { sigma: 0.0 }).unwrap();
        let mut rng = seeded(5);
        for _ in 0..10 {
            assert_eq!(inst.sample_reward(0, &mut rng), 0.9);
        }
    }

    #[test]
    fn observe_unit_updates_gram_and_response() {
        let mut st = LinearState::new(3);
        st.observe_unit(0, 1.0);
        assert_eq!(st.gram()[0], 2.0);
        assert_eq!(st.response()[0], 1.0);
        st.observe_unit(0, 0.0);
        assert_eq!(st.gram()[0], 3.0);
        assert_eq!(st.response()[0], 1.0);
        st.observe_unit(1, 1.0);
        assert_eq!(st.gram()[0], 3.0);
        assert_eq!(st.gram()[4], 2.0);
        assert_eq!(st.round(), 3);
        assert_eq!(st.pull_count(0), 2);
    }

    #[test]
    fn ridge_mean_closed_forms() {
        let mut st = LinearState::new(2);
        assert_eq!(st.ridge_mean_unit(0), 0.0);
        st.observe_unit(0, 1.0);
        st.observe_unit(0, 0.0);
        assert_relative_eq!(st.ridge_mean_unit(0), 1.0 / 3.0);
        let mut st = LinearState::new(1);
        for _ in 0..3 {
            st.observe_unit(0, 1.0);
        }
        assert_relative_eq!(st.ridge_mean_unit(0), 0.75);
    }

    #[test]
    fn feature_norm_closed_forms() {
        let mut st = LinearState::new(2);
        assert_eq!(st.feature_norm_unit(0), 1.0);
        for _ in 0..3 {
            st.observe_unit(0, 1.0);
        }
        assert_relative_eq!(st.feature_norm_unit(0), 0.5);
        assert_eq!(st.feature_norm_unit(1), 1.0);
    }

    #[test]
    fn empirical_mean_cases() {
        let mut st = LinearState::new(1);
        assert!(matches!(
            st.empirical_mean(0),
            Err(Error::UndefinedStatistic { arm: 0 })
        ));
        st.observe_unit(0, 1.0);
        assert_eq!(st.empirical_mean(0).unwrap(), 1.0);
        st.observe_unit(0, 0.0);
        assert_eq!(st.empirical_mean(0).unwrap(), 0.5);
        for r in [1.0, 0.0, 1.0] {
            st.observe_unit(0, r);
        }
        assert_relative_eq!(st.empirical_mean(0).unwrap(), 0.6);
    }

    #[test]
    fn dense_features_switch_off_diagonal_path() {
        let mut st = LinearState::new(2);
        st.observe(&[1.0, 1.0], 0, 1.0);
        // V = [[2,1],[1,2]], b = [1,1] -> V^{-1} b = [1/3, 1/3]
        assert_relative_eq!(st.dense_ridge_mean(&[1.0, 0.0]).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(st.ridge_mean(&[1.0, 0.0]).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    proptest! {
        // Closed-form and matrix-path estimates agree to solver precision on
        // one-hot histories.
        #[test]
        fn one_hot_paths_agree(seed in 0u64..1000, pulls in 1usize..60, dim in 1usize..6) {
            let mut rng = seeded(seed);
            let mut st = LinearState::new(dim);
            for _ in 0..pulls {
                let arm = rng.random_range(0..dim);
                let reward = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
                st.observe_unit(arm, reward);
            }
            for arm in 0..dim {
                let x: Vec<f64> = (0..dim).map(|i| if i == arm { 1.0 } else { 0.0 }).collect();
                let closed_mean = st.response()[arm] / (st.pull_count(arm) as f64 + 1.0);
                let closed_norm = 1.0 / (st.pull_count(arm) as f64 + 1.0).sqrt();
                prop_assert!((st.dense_ridge_mean(&x).unwrap() - closed_mean).abs() <= 1e-12);
                prop_assert!((st.dense_feature_norm(&x).unwrap() - closed_norm).abs() <= 1e-12);
                prop_assert_eq!(st.ridge_mean_unit(arm), closed_mean);
            }
        }

        // More data never widens the confidence geometry.
        #[test]
        fn feature_norm_never_increases(seed in 0u64..1000, pulls in 1usize..80) {
            let mut rng = seeded(seed);
            let dim = 3;
            let mut st = LinearState::new(dim);
            let mut norms: Vec<f64> = (0..dim).map(|a| st.feature_norm_unit(a)).collect();
            for _ in 0..pulls {
                let arm = rng.random_range(0..dim);
                st.observe_unit(arm, rng.random::<f64>());
                for a in 0..dim {
                    let now = st.feature_norm_unit(a);
                    prop_assert!(now <= norms[a] + 1e-15);
                    norms[a] = now;
                }
            }
        }

        // Round counter equals total pulls; Gram stays factorable.
        #[test]
        fn state_accounting_holds(seed in 0u64..200, pulls in 0usize..40) {
            let mut rng = seeded(seed);
            let dim = 4;
            let mut st = LinearState::new(dim);
            for _ in 0..pulls {
                st.observe_unit(rng.random_range(0..dim), rng.random::<f64>());
            }
            prop_assert_eq!(st.round(), pulls as u64);
            prop_assert_eq!((0..dim).map(|a| st.pull_count(a)).sum::<u64>(), pulls as u64);
            prop_assert!(Cholesky::factor(st.gram(), dim).is_ok());
        }
    }
}
