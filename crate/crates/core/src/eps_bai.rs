//! Single-pass ε-best-arm identification with single-arm memory.
//!
//! The algorithm keeps one stored candidate (its id and estimated mean) plus a
//! beat counter `j`. Each arriving arm draws a margin `α` and is sampled in
//! doubling rounds until it either falls below `μ̂_candidate + α` (it is
//! discarded and `j` grows) or clears the margin at a round whose cumulative
//! pull count exceeds `τ_j` (it replaces the candidate and `j` resets).
//! Stored arms are never pulled again.

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::schedules::{AlphaRule, ScheduleParams};
use crate::stream::{ArmId, ArmSet, StreamSession};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsBaiState {
    pub candidate: ArmId,
    pub candidate_mean: f64,
    pub beat_count: u64,
}

/// One candidate change, recorded for invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    pub arm: ArmId,
    pub mean: f64,
    pub previous: ArmId,
    pub previous_mean: f64,
    pub alpha: f64,
    /// Round ℓ at which the replacement fired.
    pub round: u32,
    /// Beat count j of the outgoing candidate.
    pub beat_count: u64,
    /// Cumulative pulls `s_ℓ` of the arriving arm at that round.
    pub budget: u64,
    /// `τ_j` the budget had to exceed.
    pub threshold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsBaiOutcome {
    pub best: ArmId,
    pub state: EpsBaiState,
    pub replacements: Vec<Replacement>,
}

/// How an arriving arm fared against the stored reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Challenge {
    Won {
        mean: f64,
        round: u32,
        budget: u64,
        threshold: u64,
    },
    Lost {
        mean: f64,
    },
}

/// Samples the arm under the cursor in doubling rounds and compares its running
/// mean with `reference + alpha`.
pub(crate) fn challenge(
    session: &mut StreamSession<'_>,
    params: &ScheduleParams,
    reference: f64,
    alpha: f64,
    beat_count: u64,
) -> Result<Challenge> {
    let threshold = params.threshold(beat_count);
    let bar = reference + alpha;
    let mut round = 1u32;
    loop {
        let budget = params.budget(round);
        let batch = budget - params.budget(round - 1);
        if batch == 0 {
            return Err(BanditError::InvalidParams(
                "pull schedule overflowed u64".into(),
            ));
        }
        session.sample_mean(batch)?;
        let mean = session.running_mean().ok_or(BanditError::NoCurrentArm)?;
        if mean >= bar && budget > threshold {
            return Ok(Challenge::Won {
                mean,
                round,
                budget,
                threshold,
            });
        } else if mean < bar {
            return Ok(Challenge::Lost { mean });
        }
        round += 1;
    }
}

/// Configured ε-best-arm runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsBai {
    pub params: ScheduleParams,
    pub alpha_rule: AlphaRule,
    /// Keep the replacement history in the outcome.
    pub trace: bool,
}

impl EpsBai {
    pub fn new(params: ScheduleParams) -> Self {
        EpsBai {
            params,
            alpha_rule: AlphaRule::Randomized,
            trace: true,
        }
    }

    pub fn with_alpha_rule(mut self, rule: AlphaRule) -> Self {
        self.alpha_rule = rule;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    /// Runs over the whole stream. The session must be fresh.
    pub fn run(&self, session: &mut StreamSession<'_>) -> Result<EpsBaiOutcome> {
        if session.pass_count() != 0 {
            return Err(BanditError::StaleSession(session.pass_count()));
        }
        if session.instance().is_empty() {
            return Err(BanditError::InvalidInput("instance has no arms".into()));
        }
        self.run_filtered(session, |_| true)
    }

    /// Runs one new pass that only looks at `survivors`; other arms are
    /// skipped without being pulled.
    pub fn run_restricted(
        &self,
        session: &mut StreamSession<'_>,
        survivors: &ArmSet,
    ) -> Result<EpsBaiOutcome> {
        if survivors.is_empty() {
            return Err(BanditError::InvalidInput("survivor set is empty".into()));
        }
        if survivors.universe() != session.instance().len() {
            return Err(BanditError::InvalidInput(format!(
                "survivor set covers {} arms but the instance has {}",
                survivors.universe(),
                session.instance().len()
            )));
        }
        self.run_filtered(session, |id| survivors.contains(id))
    }

    fn run_filtered(
        &self,
        session: &mut StreamSession<'_>,
        keep: impl Fn(ArmId) -> bool,
    ) -> Result<EpsBaiOutcome> {
        let params = &self.params;
        let mut cursor = session.begin_pass();
        while let Some(id) = cursor {
            if keep(id) {
                break;
            }
            cursor = session.advance();
        }
        let first = cursor.ok_or_else(|| BanditError::InvalidInput("no eligible arm".into()))?;
        let init = session.sample_mean(params.budget(1))?;
        let mut state = EpsBaiState {
            candidate: first,
            candidate_mean: init.mean,
            beat_count: 1,
        };
        let mut replacements = Vec::new();

        while let Some(id) = session.advance() {
            if !keep(id) {
                continue;
            }
            let alpha = self
                .alpha_rule
                .draw(state.beat_count, params.epsilon(), session.rng());
            match challenge(session, params, state.candidate_mean, alpha, state.beat_count)? {
                Challenge::Won {
                    mean,
                    round,
                    budget,
                    threshold,
                } => {
                    if self.trace {
                        replacements.push(Replacement {
                            arm: id,
                            mean,
                            previous: state.candidate,
                            previous_mean: state.candidate_mean,
                            alpha,
                            round,
                            beat_count: state.beat_count,
                            budget,
                            threshold,
                        });
                    }
                    state = EpsBaiState {
                        candidate: id,
                        candidate_mean: mean,
                        beat_count: 1,
                    };
                }
                Challenge::Lost { .. } => state.beat_count += 1,
            }
        }

        Ok(EpsBaiOutcome {
            best: state.candidate,
            state,
            replacements,
        })
    }
}

/// Runs ε-best-arm identification (k is forced to 1) and returns the chosen arm.
pub fn run_eps_bai(session: &mut StreamSession<'_>, params: &ScheduleParams) -> Result<ArmId> {
    let params = params.with_k(1)?;
    Ok(EpsBai::new(params).run(session)?.best)
}

/// One pass of ε-best-arm identification over `survivors` only.
pub fn restricted_eps_bai(
    session: &mut StreamSession<'_>,
    survivors: &ArmSet,
    eps: f64,
    delta: f64,
    constant: f64,
) -> Result<ArmId> {
    let params = ScheduleParams::new(eps, delta, 1, constant)?;
    Ok(EpsBai::new(params).run_restricted(session, survivors)?.best)
}
