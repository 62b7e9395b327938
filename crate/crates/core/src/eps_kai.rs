//! Single-pass ε-top-k identification.
//!
//! The first k arms seed a set of k `(id, estimated mean)` pairs. Every later
//! arm challenges the set's minimum entry exactly as in the ε-best-arm pass;
//! on a win the minimum entry is evicted and the newcomer takes its place.
//! Only the arm under the cursor is ever sampled.

use serde::{Deserialize, Serialize};

use crate::eps_bai::{challenge, Challenge};
use crate::error::{BanditError, Result};
use crate::schedules::{AlphaRule, ScheduleParams};
use crate::stream::{ArmId, StreamSession};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopKEntry {
    pub arm: ArmId,
    pub mean: f64,
}

/// The k stored statistics plus the shared beat counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKState {
    entries: Vec<TopKEntry>,
    min_entry: usize,
    beat_count: u64,
}

impl TopKState {
    fn new(entries: Vec<TopKEntry>) -> Self {
        let mut state = TopKState {
            entries,
            min_entry: 0,
            beat_count: 1,
        };
        state.recompute_min();
        state
    }

    /// Argmin of the estimated means; ties go to the lower arm id.
    fn recompute_min(&mut self) {
        self.min_entry = self
            .entries
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.mean.total_cmp(&b.mean).then(a.arm.cmp(&b.arm)))
            .map(|(i, _)| i)
            .unwrap_or(0);
    }

    pub fn entries(&self) -> &[TopKEntry] {
        &self.entries
    }

    pub fn min(&self) -> TopKEntry {
        self.entries[self.min_entry]
    }

    pub fn beat_count(&self) -> u64 {
        self.beat_count
    }

    /// Swaps the minimum entry for `incoming` and returns the evicted entry.
    fn replace_min(&mut self, incoming: TopKEntry) -> TopKEntry {
        let evicted = std::mem::replace(&mut self.entries[self.min_entry], incoming);
        self.recompute_min();
        self.beat_count = 1;
        evicted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eviction {
    pub evicted: TopKEntry,
    pub inserted: TopKEntry,
    /// Set contents just before the swap.
    pub before: Vec<TopKEntry>,
    pub alpha: f64,
    pub round: u32,
    pub beat_count: u64,
    pub budget: u64,
    pub threshold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsKaiOutcome {
    /// Returned ids in stream order.
    pub arms: Vec<ArmId>,
    pub state: TopKState,
    pub evictions: Vec<Eviction>,
    /// Estimated mean of the set minimum after each insertion, counting the
    /// k seeding insertions (entries before the k-th are the partial minima).
    pub min_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsKai {
    pub params: ScheduleParams,
    pub alpha_rule: AlphaRule,
    pub trace: bool,
}

impl EpsKai {
    /// `params.k()` is the number of arms to return.
    pub fn new(params: ScheduleParams) -> Self {
        EpsKai {
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

    pub fn run(&self, session: &mut StreamSession<'_>) -> Result<EpsKaiOutcome> {
        let params = &self.params;
        let k = params.k();
        let n = session.instance().len();
        if session.pass_count() != 0 {
            return Err(BanditError::StaleSession(session.pass_count()));
        }
        if n < k {
            return Err(BanditError::InvalidInput(format!(
                "instance has {n} arms but k = {k}"
            )));
        }

        let mut seeds = Vec::with_capacity(k);
        let mut min_history = Vec::new();
        let mut cursor = session.begin_pass();
        while let Some(id) = cursor {
            let batch = session.sample_mean(params.budget(1))?;
            seeds.push(TopKEntry {
                arm: id,
                mean: batch.mean,
            });
            if self.trace {
                let m = seeds.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min);
                min_history.push(m);
            }
            if seeds.len() == k {
                break;
            }
            cursor = session.advance();
        }
        let mut state = TopKState::new(seeds);
        let mut evictions = Vec::new();

        while let Some(id) = session.advance() {
            let alpha = self
                .alpha_rule
                .draw(state.beat_count, params.epsilon(), session.rng());
            let reference = state.min().mean;
            match challenge(session, params, reference, alpha, state.beat_count)? {
                Challenge::Won {
                    mean,
                    round,
                    budget,
                    threshold,
                } => {
                    let before = self.trace.then(|| state.entries.clone());
                    let beat_count = state.beat_count;
                    let inserted = TopKEntry { arm: id, mean };
                    let evicted = state.replace_min(inserted);
                    if let Some(before) = before {
                        evictions.push(Eviction {
                            evicted,
                            inserted,
                            before,
                            alpha,
                            round,
                            beat_count,
                            budget,
                            threshold,
                        });
                        min_history.push(state.min().mean);
                    }
                }
                Challenge::Lost { .. } => state.beat_count += 1,
            }
        }

        let mut arms: Vec<ArmId> = state.entries.iter().map(|e| e.arm).collect();
        arms.sort();
        Ok(EpsKaiOutcome {
            arms,
            state,
            evictions,
            min_history,
        })
    }
}

/// Runs ε-top-k identification and returns the k chosen ids in stream order.
pub fn run_eps_kai(
    session: &mut StreamSession<'_>,
    k: usize,
    params: &ScheduleParams,
) -> Result<Vec<ArmId>> {
    let params = params.with_k(k)?;
    Ok(EpsKai::new(params).run(session)?.arms)
}

/// A violated eviction invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceViolation {
    EvictedNotMinimum { eviction: usize },
    InsufficientMargin { eviction: usize },
    SlowGrowth { insertion: usize },
    WrongSize { size: usize },
}

/// Checks the recorded trace: each eviction removed a minimum entry, the
/// newcomer cleared it by at least `ε/4`, and the set minimum after `t + k`
/// insertions is at least `ε/4` above the minimum after `t` (for `t ≥ k`).
pub fn check_trace(outcome: &EpsKaiOutcome, epsilon: f64, k: usize) -> Vec<TraceViolation> {
    let mut violations = Vec::new();
    let quarter = epsilon / 4.0;
    if outcome.state.entries.len() != k {
        violations.push(TraceViolation::WrongSize {
            size: outcome.state.entries.len(),
        });
    }
    for (i, ev) in outcome.evictions.iter().enumerate() {
        if ev.before.len() != k || ev.before.iter().any(|e| e.mean < ev.evicted.mean) {
            violations.push(TraceViolation::EvictedNotMinimum { eviction: i });
        }
        if ev.inserted.mean < ev.evicted.mean + quarter || ev.alpha < quarter {
            violations.push(TraceViolation::InsufficientMargin { eviction: i });
        }
    }
    // min_history[t - 1] is the minimum after the t-th insertion.
    let h = &outcome.min_history;
    for t in k..=h.len() {
        if t + k > h.len() {
            break;
        }
        if h[t + k - 1] < h[t - 1] + quarter {
            violations.push(TraceViolation::SlowGrowth { insertion: t });
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eps_bai::EpsBai;
    use crate::stream::BanditInstance;

    fn params(k: usize) -> ScheduleParams {
        ScheduleParams::new(0.4, 0.01, k, 100.0).unwrap()
    }

    #[test]
    fn n_equals_k_returns_everything() {
        let inst = BanditInstance::deterministic(&[0.3, 0.2, 0.8]).unwrap();
        let mut s = StreamSession::new(&inst, 0);
        let ids = run_eps_kai(&mut s, 3, &params(1)).unwrap();
        assert_eq!(ids, vec![ArmId(1), ArmId(2), ArmId(3)]);
        assert_eq!(s.total_pulls(), 3 * params(3).budget(1));
        assert_eq!(s.pass_count(), 1);
    }

    #[test]
    fn k_one_matches_best_arm_trace() {
        let inst = BanditInstance::deterministic(&[0.1, 0.9]).unwrap();
        let mut a = StreamSession::new(&inst, 4);
        let mut b = StreamSession::new(&inst, 4);
        let kai = EpsKai::new(params(1)).run(&mut a).unwrap();
        let bai = EpsBai::new(params(1)).run(&mut b).unwrap();
        assert_eq!(kai.arms, vec![bai.best]);
        assert_eq!(kai.evictions.len(), bai.replacements.len());
        let (e, r) = (&kai.evictions[0], &bai.replacements[0]);
        assert_eq!((e.round, e.budget, e.threshold), (r.round, r.budget, r.threshold));
        assert_eq!(e.inserted.arm, r.arm);
        assert_eq!(a.pull_log(), b.pull_log());
    }

    #[test]
    fn three_arm_step_through() {
        let inst = BanditInstance::deterministic(&[0.2, 0.1, 0.9]).unwrap();
        let mut s = StreamSession::new(&inst, 0);
        let out = EpsKai::new(params(2)).run(&mut s).unwrap();
        assert_eq!(out.arms, vec![ArmId(1), ArmId(3)]);
        assert_eq!(out.evictions.len(), 1);
        let ev = &out.evictions[0];
        assert_eq!(ev.evicted.arm, ArmId(2));
        assert_eq!((ev.round, ev.budget, ev.threshold, ev.alpha), (2, 3962, 1981, 0.1));
        assert_eq!(s.per_arm_pulls().unwrap(), vec![1981, 1981, 3962]);
        assert!(check_trace(&out, 0.4, 2).is_empty());
    }

    #[test]
    fn argmin_ties_prefer_lower_id() {
        let state = TopKState::new(vec![
            TopKEntry { arm: ArmId(4), mean: 0.2 },
            TopKEntry { arm: ArmId(2), mean: 0.2 },
            TopKEntry { arm: ArmId(3), mean: 0.5 },
        ]);
        assert_eq!(state.min().arm, ArmId(2));
    }

    #[test]
    fn errors() {
        let inst = BanditInstance::deterministic(&[0.3, 0.2]).unwrap();
        let mut s = StreamSession::new(&inst, 0);
        assert!(matches!(run_eps_kai(&mut s, 3, &params(1)), Err(BanditError::InvalidInput(_))));
        let mut s = StreamSession::new(&inst, 0);
        assert!(matches!(run_eps_kai(&mut s, 0, &params(1)), Err(BanditError::InvalidParams(_))));
    }

    #[test]
    fn trace_checker_flags_bad_growth() {
        let mut out = EpsKaiOutcome {
            arms: vec![ArmId(1)],
            state: TopKState::new(vec![TopKEntry { arm: ArmId(1), mean: 0.5 }]),
            evictions: vec![],
            min_history: vec![0.5, 0.52],
        };
        assert_eq!(check_trace(&out, 0.4, 1), vec![TraceViolation::SlowGrowth { insertion: 1 }]);
        out.min_history = vec![0.5, 0.6];
        assert!(check_trace(&out, 0.4, 1).is_empty());
    }
}
