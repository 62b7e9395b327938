//! Multi-pass exact best-arm identification with gap-dependent sample
//! complexity.
//!
//! Round `r` works at accuracy `ε_r = 2^{-r}/4` and confidence
//! `δ_r = δ/(40 r²)` and spends at most three passes over the stream:
//!
//! 1. an ε-best-arm pass restricted to the survivors picks a reference arm;
//! 2. a seek pass returns to that arm and samples it to form the estimate `I_r`;
//! 3. an elimination pass drops every survivor whose estimate falls below
//!    `I_r − ε_r`. While the round budget `B_r` is positive, arms are sampled in
//!    growing batches and dropped as soon as they fall behind; once the budget
//!    is spent, each remaining arm gets a single fixed-size batch.
//!
//! Rounds repeat until one survivor is left.

use serde::{Deserialize, Serialize};

use crate::eps_bai::EpsBai;
use crate::error::{BanditError, Result};
use crate::schedules::{ceil_count, ScheduleParams, DEFAULT_CONSTANT};
use crate::stream::{ArmId, ArmSet, StreamSession};

pub const DEFAULT_MAX_ROUNDS: u32 = 60;

/// Which log factor sizes the elimination batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchRule {
    /// Batches use `ln(40/δ_r)`; `h` only enters the per-arm stopping guard.
    #[default]
    FixedLog,
    /// Batches use `ln(40 h²/δ_r)`.
    GrowingLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdBaiConfig {
    pub delta: f64,
    pub constant: f64,
    pub batch_rule: BatchRule,
    pub max_rounds: u32,
}

impl IdBaiConfig {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_constant(delta, DEFAULT_CONSTANT)
    }

    pub fn with_constant(delta: f64, constant: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(BanditError::InvalidParams(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if !constant.is_finite() || constant < DEFAULT_CONSTANT {
            return Err(BanditError::InvalidParams(format!(
                "constant C must be finite and at least {DEFAULT_CONSTANT}, got {constant}"
            )));
        }
        Ok(IdBaiConfig {
            delta,
            constant,
            batch_rule: BatchRule::FixedLog,
            max_rounds: DEFAULT_MAX_ROUNDS,
        })
    }

    pub fn round_epsilon(round: u32) -> f64 {
        2f64.powi(-(round as i32)) / 4.0
    }

    pub fn round_delta(&self, round: u32) -> f64 {
        let r = round as f64;
        self.delta / (40.0 * r * r)
    }
}

/// What happened to one non-reference arm in an elimination pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTest {
    pub arm: ArmId,
    pub budgeted: bool,
    /// Total pulls issued to this arm this round.
    pub pulls: u64,
    pub batches: u32,
    pub estimate: f64,
    pub eliminated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdBaiRound {
    pub round: u32,
    pub eps: f64,
    pub delta: f64,
    pub survivors_before: Vec<ArmId>,
    pub candidate: ArmId,
    /// `I_r`, the reference estimate.
    pub reference_mean: f64,
    pub reference_pulls: u64,
    pub initial_budget: i128,
    pub final_budget: i128,
    /// Elimination counter after the round.
    pub h: u64,
    pub tests: Vec<ArmTest>,
    pub passes: u64,
}

impl IdBaiRound {
    pub fn eliminated(&self) -> impl Iterator<Item = ArmId> + '_ {
        self.tests.iter().filter(|t| t.eliminated).map(|t| t.arm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdBaiOutcome {
    pub best: ArmId,
    pub rounds: Vec<IdBaiRound>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdBai {
    pub config: IdBaiConfig,
}

impl IdBai {
    pub fn new(config: IdBaiConfig) -> Self {
        IdBai { config }
    }

    pub fn run(&self, session: &mut StreamSession<'_>) -> Result<IdBaiOutcome> {
        let n = session.instance().len();
        if n == 0 {
            return Err(BanditError::InvalidInput("instance has no arms".into()));
        }
        let mut survivors = ArmSet::full(n);
        let mut rounds = Vec::new();
        let mut round = 1u32;
        while survivors.len() > 1 {
            if round > self.config.max_rounds {
                return Err(BanditError::RoundCapExceeded(self.config.max_rounds));
            }
            let record = self.run_round(session, &mut survivors, round)?;
            rounds.push(record);
            round += 1;
        }
        let best = survivors.iter().next().expect("one survivor");
        Ok(IdBaiOutcome { best, rounds })
    }

    fn run_round(
        &self,
        session: &mut StreamSession<'_>,
        survivors: &mut ArmSet,
        round: u32,
    ) -> Result<IdBaiRound> {
        let passes_at_start = session.pass_count();
        let eps = IdBaiConfig::round_epsilon(round);
        let delta = self.config.round_delta(round);
        let inv_eps2 = 1.0 / (eps * eps);
        let survivors_before: Vec<ArmId> = survivors.iter().collect();

        let sub = ScheduleParams::new(eps, delta, 1, self.config.constant)?;
        let candidate = EpsBai::new(sub)
            .with_trace(false)
            .run_restricted(session, survivors)?
            .best;

        session.seek(candidate)?;
        let reference_pulls = ceil_count(2.0 * inv_eps2 * (1.0 / delta).ln());
        let reference_mean = session.sample_mean(reference_pulls)?.mean;
        let bar = reference_mean - eps;

        let log40 = (40.0 / delta).ln();
        let initial_budget =
            ceil_count(6.0 * survivors.len() as f64 * inv_eps2 * log40) as i128;
        let mut budget = initial_budget;
        let mut h: u64 = 1;
        let mut tests = Vec::new();

        let mut cursor = session.begin_pass();
        while let Some(id) = cursor {
            if id != candidate && survivors.contains(id) {
                let test = if budget > 0 {
                    let mut pulls = 0u64;
                    let mut batches = 0u32;
                    let mut estimate = f64::NAN;
                    let mut eliminated = false;
                    let mut level = 1i32;
                    loop {
                        let hf = h as f64;
                        let guard = 2.0 * inv_eps2 * (40.0 * hf * hf / delta).ln();
                        if pulls as f64 > guard {
                            break;
                        }
                        let log = match self.config.batch_rule {
                            BatchRule::FixedLog => log40,
                            BatchRule::GrowingLog => (40.0 * hf * hf / delta).ln(),
                        };
                        let batch = ceil_count(2f64.powi(level) * inv_eps2 * log);
                        session.sample_mean(batch)?;
                        budget -= batch as i128;
                        pulls = pulls.saturating_add(batch);
                        batches += 1;
                        estimate = session.running_mean().ok_or(BanditError::NoCurrentArm)?;
                        if estimate < bar {
                            eliminated = true;
                            h += 1;
                            break;
                        }
                        level += 1;
                    }
                    ArmTest {
                        arm: id,
                        budgeted: true,
                        pulls,
                        batches,
                        estimate,
                        eliminated,
                    }
                } else {
                    let log = match self.config.batch_rule {
                        BatchRule::FixedLog => log40,
                        BatchRule::GrowingLog => {
                            let hf = h as f64;
                            (40.0 * hf * hf / delta).ln()
                        }
                    };
                    let batch = ceil_count(2.0 * inv_eps2 * log);
                    let estimate = session.sample_mean(batch)?.mean;
                    ArmTest {
                        arm: id,
                        budgeted: false,
                        pulls: batch,
                        batches: 1,
                        estimate,
                        eliminated: estimate < bar,
                    }
                };
                tests.push(test);
            }
            cursor = session.advance();
        }
        for t in tests.iter().filter(|t| t.eliminated) {
            survivors.remove(t.arm);
        }

        Ok(IdBaiRound {
            round,
            eps,
            delta,
            survivors_before,
            candidate,
            reference_mean,
            reference_pulls,
            initial_budget,
            final_budget: budget,
            h,
            tests,
            passes: session.pass_count() - passes_at_start,
        })
    }
}

/// Runs exact best-arm identification with default constants.
pub fn run_id_bai(session: &mut StreamSession<'_>, delta: f64, constant: f64) -> Result<ArmId> {
    let config = IdBaiConfig::with_constant(delta, constant)?;
    Ok(IdBai::new(config).run(session)?.best)
}
