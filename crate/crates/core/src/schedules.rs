//! Pull schedules and the randomized comparison margin.
//!
//! All logarithms are natural. Fractional pull counts are rounded up.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};

pub const DEFAULT_CONSTANT: f64 = 100.0;

/// Validated `(ε, δ, k, C)` for the single-pass schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    epsilon: f64,
    delta: f64,
    k: usize,
    constant: f64,
}

impl ScheduleParams {
    pub fn new(epsilon: f64, delta: f64, k: usize, constant: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(BanditError::InvalidParams(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(BanditError::InvalidParams(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if k == 0 {
            return Err(BanditError::InvalidParams("k must be at least 1".into()));
        }
        if !constant.is_finite() || constant < DEFAULT_CONSTANT {
            return Err(BanditError::InvalidParams(format!(
                "constant C must be finite and at least {DEFAULT_CONSTANT}, got {constant}"
            )));
        }
        Ok(ScheduleParams {
            epsilon,
            delta,
            k,
            constant,
        })
    }

    /// `k = 1`, `C = 100`.
    pub fn best_arm(epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(epsilon, delta, 1, DEFAULT_CONSTANT)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn with_k(self, k: usize) -> Result<Self> {
        Self::new(self.epsilon, self.delta, k, self.constant)
    }

    /// Cumulative pull count `s_ℓ = ⌈(16/ε²)·ln(C·k/δ)·2^ℓ⌉`, with `s_0 = 0`.
    pub fn budget(&self, round: u32) -> u64 {
        if round == 0 {
            return 0;
        }
        let log = (self.constant * self.k as f64 / self.delta).ln();
        // (16/ε²)·L is scaled by an exact power of two, so `budget(1)` and the
        // unrounded `threshold(1)` are the same float.
        let raw = (16.0 / (self.epsilon * self.epsilon)) * log * 2f64.powi(round as i32);
        ceil_count(raw)
    }

    /// Replacement threshold `τ_j = ⌈(32/ε²)·ln(C·k·j²/δ)⌉`.
    pub fn threshold(&self, beat_count: u64) -> u64 {
        let j = beat_count.max(1) as f64;
        let log = (self.constant * self.k as f64 * (j * j) / self.delta).ln();
        ceil_count((32.0 / (self.epsilon * self.epsilon)) * log)
    }
}

/// Rounds a fractional pull count up, saturating at `u64::MAX`.
pub(crate) fn ceil_count(raw: f64) -> u64 {
    raw.ceil() as u64
}

pub fn budget_s(round: u32, params: &ScheduleParams) -> u64 {
    params.budget(round)
}

pub fn threshold_tau(beat_count: u64, params: &ScheduleParams) -> u64 {
    params.threshold(beat_count)
}

/// Probability that the margin is `ε/4` given beat count `j`: `1/(ln j + 1)`.
pub fn quarter_margin_probability(beat_count: u64) -> f64 {
    1.0 / ((beat_count.max(1) as f64).ln() + 1.0)
}

/// Draws the comparison margin: `ε/4` with probability `1/(ln j + 1)`, otherwise `ε/2`.
/// Consumes exactly one uniform draw.
pub fn draw_alpha<R: Rng + ?Sized>(beat_count: u64, epsilon: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if u < quarter_margin_probability(beat_count) {
        epsilon / 4.0
    } else {
        epsilon / 2.0
    }
}

/// How the comparison margin is chosen for each arriving arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRule {
    #[default]
    Randomized,
    /// Always `ε/2`; an ablation. Still consumes one draw so traces stay aligned.
    FixedHalf,
    /// Always `ε/4`; an ablation.
    FixedQuarter,
}

impl AlphaRule {
    pub fn draw<R: Rng + ?Sized>(self, beat_count: u64, epsilon: f64, rng: &mut R) -> f64 {
        let alpha = draw_alpha(beat_count, epsilon, rng);
        match self {
            AlphaRule::Randomized => alpha,
            AlphaRule::FixedHalf => epsilon / 2.0,
            AlphaRule::FixedQuarter => epsilon / 4.0,
        }
    }
}
