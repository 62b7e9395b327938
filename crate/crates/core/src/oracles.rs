//! Ground-truth verdicts, a uniform-sampling comparator, and closed-form
//! normalizers for sample counts. Verdicts only ever look at analytic means.

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::schedules::ceil_count;
use crate::stream::{ArmId, BanditInstance, StreamSession};

/// Absorbs float noise when a gap sits exactly on ε.
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    EpsBest,
    EpsTopK,
    ExactBest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialVerdict {
    pub correct: bool,
    pub returned_ids: Vec<ArmId>,
    pub criterion: Criterion,
}

fn mean_of(instance: &BanditInstance, id: ArmId) -> Result<f64> {
    instance
        .arm(id)
        .map(|a| a.dist.mean())
        .ok_or(BanditError::UnknownArm(id))
}

/// `μ* − μ_returned ≤ ε`.
pub fn check_eps_best(instance: &BanditInstance, returned: ArmId, eps: f64) -> Result<bool> {
    let best = instance
        .mu_star()
        .ok_or_else(|| BanditError::InvalidInstance("instance has no arms".into()))?;
    Ok(best - mean_of(instance, returned)? <= eps + BOUNDARY_SLACK)
}

/// Every returned arm has mean at least `μ*(k) − ε`.
pub fn check_eps_topk(
    instance: &BanditInstance,
    returned: &[ArmId],
    k: usize,
    eps: f64,
) -> Result<bool> {
    if returned.len() != k {
        return Err(BanditError::InvalidInput(format!(
            "expected {k} arms, got {}",
            returned.len()
        )));
    }
    let mut sorted = returned.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(BanditError::InvalidInput("duplicate arm ids".into()));
    }
    let pivot = instance
        .mu_star_k(k)
        .ok_or_else(|| BanditError::InvalidInstance(format!("fewer than {k} arms")))?;
    for &id in returned {
        if mean_of(instance, id)? < pivot - eps - BOUNDARY_SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The returned arm is the unique best arm.
pub fn check_exact_best(instance: &BanditInstance, returned: ArmId) -> Result<bool> {
    if !instance.has_unique_best() {
        return Err(BanditError::InvalidInstance("best arm is not unique".into()));
    }
    mean_of(instance, returned)?;
    Ok(instance.best_arm() == Some(returned))
}

/// Samples every arm `⌈(2/ε²)·ln(2n/δ)⌉` times in one pass and returns the
/// empirical argmax (ties to the lower id).
pub fn uniform_baseline(session: &mut StreamSession<'_>, eps: f64, delta: f64) -> Result<ArmId> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(BanditError::InvalidParams(format!(
            "need eps, delta in (0, 1), got {eps}, {delta}"
        )));
    }
    if session.pass_count() != 0 {
        return Err(BanditError::StaleSession(session.pass_count()));
    }
    let n = session.instance().len();
    if n == 0 {
        return Err(BanditError::InvalidInput("instance has no arms".into()));
    }
    let per_arm = uniform_pulls_per_arm(n, eps, delta);
    let mut best: Option<(ArmId, f64)> = None;
    let mut cursor = session.begin_pass();
    while let Some(id) = cursor {
        let m = session.sample_mean(per_arm)?.mean;
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((id, m));
        }
        cursor = session.advance();
    }
    Ok(best.expect("non-empty").0)
}

pub fn uniform_pulls_per_arm(n: usize, eps: f64, delta: f64) -> u64 {
    ceil_count((2.0 / (eps * eps)) * (2.0 * n as f64 / delta).ln())
}

/// `(n/ε²)·ln(k/δ)`: normalizer for worst-case pull counts.
pub fn worst_case_bound(n: usize, eps: f64, delta: f64, k: usize) -> f64 {
    n as f64 / (eps * eps) * (k as f64 / delta).ln()
}

/// `Σ_{i≥2} Δ_i^{-2} · ln(max(2, (1/δ)·ln(max(2, 1/Δ_i))))`: normalizer for
/// gap-dependent pull counts.
pub fn instance_bound(instance: &BanditInstance, delta: f64) -> Result<f64> {
    let gaps = instance.gaps(1);
    match gaps.first() {
        None => return Err(BanditError::InvalidInstance("need at least two arms".into())),
        Some(&d2) if d2 <= 0.0 => {
            return Err(BanditError::InvalidInstance("best arm is not unique".into()))
        }
        _ => {}
    }
    Ok(gaps.iter().map(|&g| gap_term(g, delta)).sum())
}

fn gap_term(gap: f64, delta: f64) -> f64 {
    let inner = (1.0 / gap).max(2.0).ln();
    (inner / delta).max(2.0).ln() / (gap * gap)
}
