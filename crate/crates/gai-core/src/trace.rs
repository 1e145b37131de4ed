//! Episode records: what was pulled, what was decided, and when.

use crate::error::{Error, Result};

/// Identification status of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmStatus {
    Active,
    Good { round: u64 },
    Bad { round: u64 },
}

impl ArmStatus {
    pub fn is_decided(&self) -> bool {
        !matches!(self, ArmStatus::Active)
    }

    pub fn decision_round(&self) -> Option<u64> {
        match self {
            ArmStatus::Active => None,
            ArmStatus::Good { round } | ArmStatus::Bad { round } => Some(*round),
        }
    }
}

/// First identification event per arm, in output order. A decided arm never
/// changes status.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationLedger {
    statuses: Vec<ArmStatus>,
    /// (arm, round, is_good) in the order decisions were made.
    outputs: Vec<(usize, u64, bool)>,
    /// Round after which no arm remained active; `None` when the horizon cut
    /// the episode off first.
    stop_round: Option<u64>,
}

impl IdentificationLedger {
    pub fn new(arms: usize) -> Self {
        Self {
            statuses: vec![ArmStatus::Active; arms],
            outputs: Vec::new(),
            stop_round: None,
        }
    }

    pub fn arms(&self) -> usize {
        self.statuses.len()
    }

    pub fn status(&self, arm: usize) -> ArmStatus {
        self.statuses[arm]
    }

    pub fn is_active(&self, arm: usize) -> bool {
        !self.statuses[arm].is_decided()
    }

    pub fn active_count(&self) -> usize {
        self.statuses.iter().filter(|s| !s.is_decided()).count()
    }

    /// Record a decision. Panics if the arm was already decided; callers gate
    /// on `is_active`.
    pub fn decide(&mut self, arm: usize, round: u64, good: bool) {
        assert!(
            self.is_active(arm),
            "arm {arm} already decided; decisions are final"
        );
        self.statuses[arm] = if good {
            ArmStatus::Good { round }
        } else {
            ArmStatus::Bad { round }
        };
        self.outputs.push((arm, round, good));
        if self.active_count() == 0 {
            self.stop_round = Some(round);
        }
    }

    /// Decisions in the order they were made: (arm, round, is_good).
    pub fn outputs(&self) -> &[(usize, u64, bool)] {
        &self.outputs
    }

    /// Arms output as good, in output order.
    pub fn good_outputs(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.outputs
            .iter()
            .filter(|(_, _, good)| *good)
            .map(|(arm, round, _)| (*arm, *round))
    }

    pub fn stop_round(&self) -> Option<u64> {
        self.stop_round
    }
}

/// One pull, compactly stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullRecord {
    pub round: u64,
    pub arm: u32,
    pub reward: f64,
}

/// Parameter values in force after a training update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamLogEntry {
    /// Round (online) or epoch (offline) the values took effect.
    pub step: u64,
    pub alpha: f64,
    pub beta: f64,
}

/// Per-epoch summary emitted by offline training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLogEntry {
    pub epoch: u64,
    pub alpha: f64,
    pub beta: f64,
    pub exploit_score: f64,
    pub cumulative_reward: f64,
}

/// Complete record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub horizon: u64,
    pub pulls: Vec<PullRecord>,
    pub ledger: IdentificationLedger,
    /// Whether decided arms were removed from the sampling pool. Training
    /// trajectories keep sampling decided arms; evaluation episodes do not.
    pub removes_on_decision: bool,
    /// Per-round policy over all arms, present only when explicitly requested.
    pub policy_log: Option<Vec<Vec<f64>>>,
    /// Parameter values after each online update; a single entry for fixed
    /// parameters.
    pub param_log: Vec<ParamLogEntry>,
}

impl RunTrace {
    pub fn new(arms: usize, horizon: u64, removes_on_decision: bool) -> Self {
        Self {
            horizon,
            pulls: Vec::new(),
            ledger: IdentificationLedger::new(arms),
            removes_on_decision,
            policy_log: None,
            param_log: Vec::new(),
        }
    }

    pub fn rounds_played(&self) -> u64 {
        self.pulls.len() as u64
    }

    /// Stop round with horizon censoring: `(round, censored)`.
    pub fn stop_round_censored(&self) -> (u64, bool) {
        match self.ledger.stop_round() {
            Some(r) => (r, false),
            None => (self.horizon, true),
        }
    }

    /// Internal consistency: pulls are contiguous rounds from 1, and when
    /// removal is in force no decided arm is pulled after its decision round.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.pulls.iter().enumerate() {
            if p.round != i as u64 + 1 {
                return Err(Error::Numerical(format!(
                    "pull {} recorded at round {}",
                    i, p.round
                )));
            }
            if (p.arm as usize) >= self.ledger.arms() {
                return Err(Error::Numerical(format!("pull of unknown arm {}", p.arm)));
            }
        }
        if self.removes_on_decision {
            for p in &self.pulls {
                if let Some(dr) = self.ledger.status(p.arm as usize).decision_round() {
                    if p.round > dr {
                        return Err(Error::Numerical(format!(
                            "arm {} pulled at round {} after decision at round {}",
                            p.arm, p.round, dr
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
