//! Bandit instances and the streamed access window over them.
//!
//! A [`StreamSession`] is the only way algorithms reach rewards. It exposes a
//! cursor that walks the arms in order: samples can be drawn from the arm under
//! the cursor and nowhere else, the cursor only moves forward within a pass,
//! and going back to the start costs a new pass. Every batch of pulls is
//! appended to an audit log so the access pattern can be verified afterwards.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};

/// 1-based position of an arm in the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(index: usize) -> Self {
        ArmId(index + 1)
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arm {}", self.0)
    }
}

/// Reward distribution supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardDistribution {
    Bernoulli { p: f64 },
    Deterministic { value: f64 },
    ScaledBeta { a: f64, b: f64 },
}

impl RewardDistribution {
    pub fn bernoulli(p: f64) -> Result<Self> {
        let d = RewardDistribution::Bernoulli { p };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        let d = RewardDistribution::Deterministic { value };
        d.validate()?;
        Ok(d)
    }

    pub fn scaled_beta(a: f64, b: f64) -> Result<Self> {
        let d = RewardDistribution::ScaledBeta { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        match *self {
            RewardDistribution::Bernoulli { p } if !unit(p) => Err(BanditError::InvalidInstance(
                format!("bernoulli probability {p} outside [0, 1]"),
            )),
            RewardDistribution::Deterministic { value } if !unit(value) => {
                Err(BanditError::InvalidInstance(format!(
                    "deterministic reward {value} outside [0, 1]"
                )))
            }
            RewardDistribution::ScaledBeta { a, b } if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() => {
                Err(BanditError::InvalidInstance(format!(
                    "beta shapes ({a}, {b}) must be positive and finite"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Exact analytic mean.
    pub fn mean(&self) -> f64 {
        match *self {
            RewardDistribution::Bernoulli { p } => p,
            RewardDistribution::Deterministic { value } => value,
            RewardDistribution::ScaledBeta { a, b } => a / (a + b),
        }
    }

    /// Draws a single reward.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_sum(rng, 1)
    }

    /// Sum of `count` i.i.d. rewards.
    ///
    /// Bernoulli batches are drawn as one binomial variate, which has exactly
    /// the distribution of the sum of the individual pulls.
    pub fn sample_sum<R: Rng + ?Sized>(&self, rng: &mut R, count: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        match *self {
            RewardDistribution::Bernoulli { p } => {
                let binomial = Binomial::new(count, p).expect("validated probability");
                binomial.sample(rng) as f64
            }
            RewardDistribution::Deterministic { value } => value * count as f64,
            RewardDistribution::ScaledBeta { a, b } => {
                let beta = Beta::new(a, b).expect("validated shapes");
                (0..count).map(|_| beta.sample(rng)).sum()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub id: ArmId,
    pub dist: RewardDistribution,
}

/// Ordered list of arms. Ground truth (means, gaps) always comes from here,
/// never from samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    arms: Vec<ArmSpec>,
}

impl BanditInstance {
    pub fn new(dists: Vec<RewardDistribution>) -> Result<Self> {
        for d in &dists {
            d.validate()?;
        }
        let arms = dists
            .into_iter()
            .enumerate()
            .map(|(i, dist)| ArmSpec {
                id: ArmId::from_index(i),
                dist,
            })
            .collect();
        Ok(BanditInstance { arms })
    }

    pub fn bernoulli(means: &[f64]) -> Result<Self> {
        Self::new(
            means
                .iter()
                .map(|&p| RewardDistribution::bernoulli(p))
                .collect::<Result<_>>()?,
        )
    }

    pub fn deterministic(means: &[f64]) -> Result<Self> {
        Self::new(
            means
                .iter()
                .map(|&v| RewardDistribution::deterministic(v))
                .collect::<Result<_>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn arm(&self, id: ArmId) -> Option<&ArmSpec> {
        if id.0 == 0 {
            return None;
        }
        self.arms.get(id.index())
    }

    pub fn contains(&self, id: ArmId) -> bool {
        self.arm(id).is_some()
    }

    /// Analytic mean of `id`. Panics on an id outside the instance.
    pub fn mean(&self, id: ArmId) -> f64 {
        self.arms[id.index()].dist.mean()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.dist.mean()).collect()
    }

    fn sorted_means_desc(&self) -> Vec<f64> {
        let mut m = self.means();
        m.sort_by(|a, b| b.total_cmp(a));
        m
    }

    pub fn mu_star(&self) -> Option<f64> {
        self.mu_star_k(1)
    }

    /// The k-th largest mean (1-based).
    pub fn mu_star_k(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        self.sorted_means_desc().get(k - 1).copied()
    }

    /// Gaps `Δ_i = μ*(k) − μ_(i)` for every rank `i > k`, in rank order.
    pub fn gaps(&self, k: usize) -> Vec<f64> {
        let sorted = self.sorted_means_desc();
        if k == 0 || k > sorted.len() {
            return Vec::new();
        }
        let pivot = sorted[k - 1];
        sorted[k..].iter().map(|m| pivot - m).collect()
    }

    /// Lowest-id arm attaining the maximum mean.
    pub fn best_arm(&self) -> Option<ArmId> {
        let mut best: Option<(ArmId, f64)> = None;
        for arm in &self.arms {
            let m = arm.dist.mean();
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((arm.id, m));
            }
        }
        best.map(|(id, _)| id)
    }

    pub fn has_unique_best(&self) -> bool {
        match self.gaps(1).first() {
            Some(&d2) => d2 > 0.0,
            None => !self.is_empty(),
        }
    }
}

/// Membership set over the arms of one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmSet {
    members: Vec<bool>,
    len: usize,
}

impl ArmSet {
    pub fn full(n: usize) -> Self {
        ArmSet {
            members: vec![true; n],
            len: n,
        }
    }

    pub fn empty(n: usize) -> Self {
        ArmSet {
            members: vec![false; n],
            len: 0,
        }
    }

    pub fn from_ids(n: usize, ids: &[ArmId]) -> Self {
        let mut set = Self::empty(n);
        for &id in ids {
            set.insert(id);
        }
        set
    }

    /// Number of arms in the underlying instance.
    pub fn universe(&self) -> usize {
        self.members.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, id: ArmId) -> bool {
        id.0 >= 1 && self.members.get(id.index()).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, id: ArmId) -> bool {
        match self.members.get_mut(id.index()) {
            Some(slot) if !*slot => {
                *slot = true;
                self.len += 1;
                true
            }
            _ => false,
        }
    }

    pub fn remove(&mut self, id: ArmId) -> bool {
        if id.0 == 0 {
            return false;
        }
        match self.members.get_mut(id.index()) {
            Some(slot) if *slot => {
                *slot = false;
                self.len -= 1;
                true
            }
            _ => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ArmId> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| ArmId::from_index(i))
    }
}

/// One batch of pulls, as recorded in the audit log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRecord {
    pub pass: u64,
    pub arm: ArmId,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMean {
    pub mean: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    /// Keep the per-batch pull log. Large sweeps may turn it off.
    pub audit: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { audit: true }
    }
}

/// Result of checking a pull log against the streaming access model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessAudit {
    pub passes: u64,
    /// Arm ids are non-decreasing within every pass, so each arm's pulls in a
    /// pass form a single contiguous block.
    pub in_order: bool,
    pub logged_pulls: u64,
    pub total_pulls: u64,
}

impl AccessAudit {
    pub fn is_clean(&self) -> bool {
        self.in_order && self.logged_pulls == self.total_pulls
    }
}

/// Checks that arm ids never decrease inside a pass and pass labels never go
/// backwards.
pub fn log_is_in_order(log: &[PullRecord]) -> bool {
    log.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        b.pass > a.pass || (b.pass == a.pass && b.arm >= a.arm)
    })
}

/// Sequential access window over a [`BanditInstance`].
///
/// Owns the only random generator of a trial: reward draws and any
/// randomness the algorithm itself needs come from [`StreamSession::rng`].
#[derive(Debug, Clone)]
pub struct StreamSession<'a> {
    instance: &'a BanditInstance,
    cursor: Option<usize>,
    pass_count: u64,
    pull_log: Option<Vec<PullRecord>>,
    total_pulls: u64,
    acc_sum: f64,
    acc_count: u64,
    rng: ChaCha8Rng,
}

impl<'a> StreamSession<'a> {
    pub fn new(instance: &'a BanditInstance, seed: u64) -> Self {
        Self::with_config(instance, seed, SessionConfig::default())
    }

    pub fn with_config(instance: &'a BanditInstance, seed: u64, config: SessionConfig) -> Self {
        StreamSession {
            instance,
            cursor: None,
            pass_count: 0,
            pull_log: config.audit.then(Vec::new),
            total_pulls: 0,
            acc_sum: 0.0,
            acc_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn instance(&self) -> &'a BanditInstance {
        self.instance
    }

    pub fn cursor(&self) -> Option<ArmId> {
        self.cursor.map(ArmId::from_index)
    }

    pub fn pass_count(&self) -> u64 {
        self.pass_count
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }

    /// The audit log, or `None` when auditing was disabled.
    pub fn pull_log(&self) -> Option<&[PullRecord]> {
        self.pull_log.as_deref()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Pulls the arm under the cursor `count` times and returns the batch mean.
    /// The batch is also folded into the running accumulator for this arm.
    pub fn sample_mean(&mut self, count: u64) -> Result<BatchMean> {
        let idx = self.cursor.ok_or(BanditError::NoCurrentArm)?;
        if count == 0 {
            return Err(BanditError::InvalidParams(
                "pull count must be at least 1".into(),
            ));
        }
        let arm = &self.instance.arms[idx];
        let sum = arm.dist.sample_sum(&mut self.rng, count);
        self.acc_sum += sum;
        self.acc_count = self.acc_count.saturating_add(count);
        self.total_pulls = self.total_pulls.saturating_add(count);
        if let Some(log) = self.pull_log.as_mut() {
            log.push(PullRecord {
                pass: self.pass_count,
                arm: arm.id,
                count,
            });
        }
        Ok(BatchMean {
            mean: sum / count as f64,
            count,
        })
    }

    /// Mean over every sample of the current arm since the cursor arrived.
    pub fn running_mean(&self) -> Option<f64> {
        (self.acc_count > 0).then(|| self.acc_sum / self.acc_count as f64)
    }

    pub fn running_count(&self) -> u64 {
        self.acc_count
    }

    fn clear_accumulator(&mut self) {
        self.acc_sum = 0.0;
        self.acc_count = 0;
    }

    /// Moves to the next arm. Returns `None` at (and past) the end of the stream.
    pub fn advance(&mut self) -> Option<ArmId> {
        self.clear_accumulator();
        self.cursor = match self.cursor {
            Some(i) if i + 1 < self.instance.len() => Some(i + 1),
            _ => None,
        };
        self.cursor()
    }

    /// Starts a new pass with the cursor on the first arm.
    pub fn begin_pass(&mut self) -> Option<ArmId> {
        self.clear_accumulator();
        self.pass_count += 1;
        self.cursor = (!self.instance.is_empty()).then_some(0);
        self.cursor()
    }

    /// Moves forward to `target` without pulling, starting a new pass first if
    /// `target` is already behind the cursor (or the stream is exhausted).
    pub fn seek(&mut self, target: ArmId) -> Result<ArmId> {
        if !self.instance.contains(target) {
            return Err(BanditError::UnknownArm(target));
        }
        let t = target.index();
        match self.cursor {
            Some(c) if c == t => return Ok(target),
            Some(c) if c < t => {}
            _ => {
                self.begin_pass();
            }
        }
        while self.cursor != Some(t) {
            self.advance();
        }
        Ok(target)
    }

    pub fn audit(&self) -> Option<AccessAudit> {
        let log = self.pull_log.as_ref()?;
        Some(AccessAudit {
            passes: self.pass_count,
            in_order: log_is_in_order(log),
            logged_pulls: log.iter().map(|r| r.count).fold(0u64, u64::saturating_add),
            total_pulls: self.total_pulls,
        })
    }

    /// Total pulls per arm (indexed by arm position), from the audit log.
    pub fn per_arm_pulls(&self) -> Option<Vec<u64>> {
        let log = self.pull_log.as_ref()?;
        let mut totals = vec![0u64; self.instance.len()];
        for r in log {
            let slot = &mut totals[r.arm.index()];
            *slot = slot.saturating_add(r.count);
        }
        Some(totals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(means: &[f64]) -> BanditInstance {
        BanditInstance::deterministic(means).unwrap()
    }

    #[test]
    fn deterministic_batch_mean() {
        let inst = det(&[0.3]);
        let mut s = StreamSession::new(&inst, 1);
        s.begin_pass();
        let b = s.sample_mean(5).unwrap();
        assert_eq!(b.mean, 0.3);
        assert_eq!(b.count, 5);
        assert_eq!(s.total_pulls(), 5);
    }

    #[test]
    fn degenerate_bernoulli() {
        let inst = BanditInstance::bernoulli(&[1.0]).unwrap();
        let mut s = StreamSession::new(&inst, 9);
        s.begin_pass();
        assert_eq!(s.sample_mean(7).unwrap().mean, 1.0);
    }

    #[test]
    fn pulling_without_a_current_arm_fails() {
        let inst = det(&[0.5]);
        let mut s = StreamSession::new(&inst, 0);
        assert_eq!(s.sample_mean(1), Err(BanditError::NoCurrentArm));
        s.begin_pass();
        s.advance();
        assert_eq!(s.sample_mean(1), Err(BanditError::NoCurrentArm));
        assert_eq!(s.total_pulls(), 0);
    }

    #[test]
    fn zero_count_is_rejected() {
        let inst = det(&[0.5]);
        let mut s = StreamSession::new(&inst, 0);
        s.begin_pass();
        assert!(matches!(s.sample_mean(0), Err(BanditError::InvalidParams(_))));
    }

    #[test]
    fn advance_walks_then_sticks_at_end() {
        let inst = det(&[0.1, 0.2]);
        let mut s = StreamSession::new(&inst, 0);
        assert_eq!(s.begin_pass(), Some(ArmId(1)));
        assert_eq!(s.advance(), Some(ArmId(2)));
        assert_eq!(s.advance(), None);

        let one = det(&[0.1]);
        let mut s = StreamSession::new(&one, 0);
        s.begin_pass();
        assert_eq!(s.advance(), None);
        assert_eq!(s.advance(), None);
    }

    #[test]
    fn begin_pass_counts_and_labels() {
        let inst = det(&[0.1, 0.2]);
        let mut s = StreamSession::new(&inst, 0);
        assert_eq!(s.pass_count(), 0);
        assert_eq!(s.begin_pass(), Some(ArmId(1)));
        assert_eq!(s.pass_count(), 1);
        s.sample_mean(2).unwrap();
        s.advance();
        s.sample_mean(2).unwrap();
        s.advance();
        assert_eq!(s.begin_pass(), Some(ArmId(1)));
        assert_eq!(s.pass_count(), 2);
        s.sample_mean(3).unwrap();
        let passes: Vec<u64> = s.pull_log().unwrap().iter().map(|r| r.pass).collect();
        assert_eq!(passes, vec![1, 1, 2]);
    }

    #[test]
    fn seek_forward_backward_and_noop() {
        let inst = det(&[0.1; 8]);
        let mut s = StreamSession::new(&inst, 0);
        s.seek(ArmId(3)).unwrap();
        assert_eq!(s.pass_count(), 1);
        assert_eq!(s.seek(ArmId(7)).unwrap(), ArmId(7));
        assert_eq!(s.pass_count(), 1);
        assert_eq!(s.seek(ArmId(3)).unwrap(), ArmId(3));
        assert_eq!(s.pass_count(), 2);
        assert_eq!(s.seek(ArmId(3)).unwrap(), ArmId(3));
        assert_eq!(s.pass_count(), 2);
        assert_eq!(s.total_pulls(), 0);
        assert_eq!(s.seek(ArmId(9)), Err(BanditError::UnknownArm(ArmId(9))));
    }

    #[test]
    fn accumulator_is_keyed_to_cursor_arm() {
        let inst = det(&[0.25, 0.75]);
        let mut s = StreamSession::new(&inst, 0);
        s.begin_pass();
        s.sample_mean(4).unwrap();
        s.sample_mean(4).unwrap();
        assert_eq!(s.running_count(), 8);
        assert_eq!(s.running_mean(), Some(0.25));
        s.advance();
        assert_eq!(s.running_mean(), None);
        s.sample_mean(2).unwrap();
        assert_eq!(s.running_mean(), Some(0.75));
    }

    #[test]
    fn instance_ground_truth() {
        let inst = det(&[0.5, 0.9, 0.7, 0.9]);
        assert_eq!(inst.mu_star(), Some(0.9));
        assert_eq!(inst.mu_star_k(3), Some(0.7));
        assert_eq!(inst.best_arm(), Some(ArmId(2)));
        assert!(!inst.has_unique_best());
        let inst = det(&[0.5, 0.9, 0.7]);
        assert!(inst.has_unique_best());
        let g = inst.gaps(1);
        assert!((g[0] - 0.2).abs() < 1e-12 && (g[1] - 0.4).abs() < 1e-12);
        assert_eq!(inst.gaps(3), Vec::<f64>::new());
    }

    #[test]
    fn distribution_validation_and_means() {
        assert!(RewardDistribution::bernoulli(1.2).is_err());
        assert!(RewardDistribution::deterministic(-0.1).is_err());
        assert!(RewardDistribution::scaled_beta(0.0, 1.0).is_err());
        let b = RewardDistribution::scaled_beta(2.0, 6.0).unwrap();
        assert_eq!(b.mean(), 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = b.sample(&mut rng);
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn disabled_audit_still_counts() {
        let inst = det(&[0.5]);
        let mut s = StreamSession::with_config(&inst, 0, SessionConfig { audit: false });
        s.begin_pass();
        s.sample_mean(10).unwrap();
        assert_eq!(s.total_pulls(), 10);
        assert!(s.pull_log().is_none());
        assert!(s.audit().is_none());
    }
}
