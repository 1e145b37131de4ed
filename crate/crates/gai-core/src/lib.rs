//! Good-arm identification bandits.
//!
//! The problem: given K arms with unknown means and a threshold, identify
//! every arm whose mean reaches the threshold, as early as possible, without
//! mislabeling. This crate provides:
//!
//! - simulated instances and the shared sufficient statistics ([`model`]),
//! - a differentiable confidence index with a softmax sampling policy whose
//!   temperature is set so sub-optimal arms get vanishing mass ([`index`]),
//! - the episode engine with classic baselines: HDoC, LUCB-G, APT-G,
//!   top-two Thompson sampling, SoftUCB-G ([`algorithms`]),
//! - gradient training of the confidence scales used for sampling (`beta`)
//!   and identification (`alpha`), offline over epochs or online in a single
//!   run, plus a thresholded best-arm variant ([`training`]),
//! - dataset presets, scaling, and a ratings-CSV loader ([`datasets`]),
//! - trace scoring: exploit score, cumulative reward, PAC error rates,
//!   stopping times ([`metrics`]).
//!
//! Simulations are deterministic given a seed, on any platform with IEEE
//! f64 arithmetic. Replication sweeps run in parallel when the `parallel`
//! feature (default) is enabled; results are identical either way.

pub mod algorithms;
pub mod datasets;
pub mod error;
pub mod exec;
pub mod index;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod trace;
pub mod training;

pub use error::{Error, Result};
