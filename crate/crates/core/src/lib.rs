//! Pure-exploration bandit algorithms over a streamed sequence of arms.
//!
//! Arms arrive one at a time through a [`StreamSession`], which only lets the
//! caller sample the arm under its cursor and counts every pass over the
//! stream. On top of that access model the crate provides:
//!
//! - [`eps_bai`]: single-pass ε-best-arm identification that stores one arm's
//!   statistics;
//! - [`eps_kai`]: single-pass ε-top-k identification;
//! - [`id_bai`]: multi-pass exact best-arm identification whose pull count
//!   adapts to the instance's gaps;
//! - [`oracles`] and [`harness`]: ground-truth checks and seeded Monte Carlo
//!   trials, with [`acceptance`] bundling the end-to-end checks.

pub mod acceptance;
pub mod eps_bai;
pub mod eps_kai;
pub mod error;
pub mod harness;
pub mod id_bai;
pub mod oracles;
pub mod schedules;
pub mod stream;

pub use eps_bai::{restricted_eps_bai, run_eps_bai, EpsBai, EpsBaiOutcome, EpsBaiState};
pub use eps_kai::{run_eps_kai, EpsKai, EpsKaiOutcome, TopKState};
pub use error::{BanditError, Result};
pub use harness::{generate_instance, run_trials, Algo, AlgoParams, InstanceSpec, TrialConfig};
pub use id_bai::{run_id_bai, IdBai, IdBaiConfig, IdBaiOutcome};
pub use schedules::{budget_s, draw_alpha, threshold_tau, AlphaRule, ScheduleParams};
pub use stream::{ArmId, ArmSet, BanditInstance, RewardDistribution, StreamSession};
