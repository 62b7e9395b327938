//! Instance generation and seeded Monte Carlo trials.
//!
//! Trial `i` of a run always uses seed `base_seed + i` (wrapping), so any
//! single trial can be replayed on its own and results do not depend on how
//! many worker threads executed the run. Aggregation walks trials in index
//! order.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eps_bai::{EpsBai, EpsBaiOutcome};
use crate::eps_kai::{EpsKai, EpsKaiOutcome};
use crate::error::{BanditError, Result};
use crate::id_bai::{BatchRule, IdBai, IdBaiConfig, IdBaiOutcome};
use crate::oracles::{
    check_eps_best, check_eps_topk, check_exact_best, instance_bound, uniform_baseline,
    worst_case_bound, Criterion, TrialVerdict,
};
use crate::schedules::{AlphaRule, ScheduleParams, DEFAULT_CONSTANT};
use crate::stream::{ArmId, BanditInstance, SessionConfig, StreamSession};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    /// `k` arms at `top`, the rest at `top − gap`.
    OneGap { top: f64, gap: f64, k: usize },
    /// Evenly spaced means from `lo` to `hi`.
    Linear { lo: f64, hi: f64 },
    Explicit { means: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Order {
    /// Means increase along the stream; the best arm arrives last.
    Ascending,
    /// The best arm arrives first.
    Descending,
    Random { seed: u64 },
    AsGiven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    Bernoulli,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub profile: Profile,
    pub order: Order,
    pub distribution: DistKind,
}

impl InstanceSpec {
    pub fn explicit(means: Vec<f64>, order: Order, distribution: DistKind) -> Self {
        InstanceSpec {
            n: means.len(),
            profile: Profile::Explicit { means },
            order,
            distribution,
        }
    }
}

/// Builds the instance described by `spec`. Deterministic in `spec`.
pub fn generate_instance(spec: &InstanceSpec) -> Result<BanditInstance> {
    let n = spec.n;
    let mut means = match &spec.profile {
        Profile::OneGap { top, gap, k } => {
            if *k == 0 || *k > n {
                return Err(BanditError::InvalidSpec(format!(
                    "one-gap profile needs 1 <= k <= n, got k = {k}, n = {n}"
                )));
            }
            let mut m = vec![top - gap; n];
            m[..*k].fill(*top);
            m
        }
        Profile::Linear { lo, hi } => match n {
            0 => Vec::new(),
            1 => vec![*lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        },
        Profile::Explicit { means } => {
            if means.len() != n {
                return Err(BanditError::InvalidSpec(format!(
                    "explicit profile lists {} means but n = {n}",
                    means.len()
                )));
            }
            means.clone()
        }
    };
    if let Some(bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(BanditError::InvalidSpec(format!("mean {bad} outside [0, 1]")));
    }
    match spec.order {
        Order::Ascending => means.sort_by(|a, b| a.total_cmp(b)),
        Order::Descending => means.sort_by(|a, b| b.total_cmp(a)),
        Order::Random { seed } => means.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
        Order::AsGiven => {}
    }
    match spec.distribution {
        DistKind::Bernoulli => BanditInstance::bernoulli(&means),
        DistKind::Deterministic => BanditInstance::deterministic(&means),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    EpsBai,
    EpsKai,
    IdBai,
    Uniform,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::EpsBai => "eps-bai",
            Algo::EpsKai => "eps-kai",
            Algo::IdBai => "id-bai",
            Algo::Uniform => "uniform",
        }
    }

    pub fn criterion(self) -> Criterion {
        match self {
            Algo::EpsBai | Algo::Uniform => Criterion::EpsBest,
            Algo::EpsKai => Criterion::EpsTopK,
            Algo::IdBai => Criterion::ExactBest,
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps-bai" => Ok(Algo::EpsBai),
            "eps-kai" => Ok(Algo::EpsKai),
            "id-bai" => Ok(Algo::IdBai),
            "uniform" => Ok(Algo::Uniform),
            other => Err(BanditError::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub eps: f64,
    pub delta: f64,
    pub k: usize,
    pub c: f64,
    pub alpha_rule: AlphaRule,
    pub batch_rule: BatchRule,
}

impl AlgoParams {
    pub fn new(eps: f64, delta: f64, k: usize) -> Self {
        AlgoParams {
            eps,
            delta,
            k,
            c: DEFAULT_CONSTANT,
            alpha_rule: AlphaRule::Randomized,
            batch_rule: BatchRule::FixedLog,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub algo: Algo,
    pub instance: InstanceSpec,
    pub params: AlgoParams,
    pub trials: usize,
    pub base_seed: u64,
    /// Worker threads; 0 or 1 runs serially.
    pub parallelism: usize,
    /// Keep session pull logs (needed for access-model checks).
    pub audit: bool,
    /// Embed per-trial reports in the aggregate.
    pub per_trial: bool,
    /// Attach per-arm pull totals to each trial report.
    pub per_arm: bool,
}

impl TrialConfig {
    pub fn new(algo: Algo, instance: InstanceSpec, params: AlgoParams, trials: usize) -> Self {
        TrialConfig {
            algo,
            instance,
            params,
            trials,
            base_seed: 0,
            parallelism: 1,
            audit: true,
            per_trial: false,
            per_arm: false,
        }
    }

    pub fn seed_for(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

/// Everything that determines results, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub instance: InstanceSpec,
    #[serde(flatten)]
    pub algo: AlgoParams,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub algo: Algo,
    pub params: AlgoParams,
    pub seed: u64,
    pub returned_ids: Vec<ArmId>,
    pub total_pulls: u64,
    pub pass_count: u64,
    pub correct: bool,
    /// Access-model audit verdict; absent when auditing is off.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub access_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_arm_pulls: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub algo: Algo,
    pub params: ParamsEcho,
    pub trials: usize,
    pub failure_rate: f64,
    pub failure_ci95: f64,
    pub mean_pulls: f64,
    pub pulls_ci95: f64,
    pub mean_passes: f64,
    pub bound_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<TrialReport>>,
}

impl AggregateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Algorithm-specific output kept alongside a trial report.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialDetail {
    EpsBai(EpsBaiOutcome),
    EpsKai(EpsKaiOutcome),
    IdBai(IdBaiOutcome),
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub report: TrialReport,
    pub verdict: TrialVerdict,
    pub detail: TrialDetail,
}

fn validate(config: &TrialConfig, instance: &BanditInstance) -> Result<()> {
    if config.trials == 0 {
        return Err(BanditError::Config("trials must be at least 1".into()));
    }
    let p = &config.params;
    match config.algo {
        Algo::EpsBai | Algo::Uniform => {
            ScheduleParams::new(p.eps, p.delta, 1, p.c)?;
        }
        Algo::EpsKai => {
            ScheduleParams::new(p.eps, p.delta, p.k, p.c)?;
            if instance.len() < p.k {
                return Err(BanditError::InvalidSpec(format!(
                    "eps-kai needs n >= k, got n = {}, k = {}",
                    instance.len(),
                    p.k
                )));
            }
        }
        Algo::IdBai => {
            IdBaiConfig::with_constant(p.delta, p.c)?;
            if !instance.has_unique_best() {
                return Err(BanditError::InvalidSpec(
                    "id-bai instances need a unique best arm".into(),
                ));
            }
        }
    }
    if instance.is_empty() {
        return Err(BanditError::InvalidSpec("instance has no arms".into()));
    }
    Ok(())
}

/// Runs trial `index` of `config` against a pre-generated instance.
pub fn execute_trial(
    config: &TrialConfig,
    instance: &BanditInstance,
    index: usize,
) -> Result<TrialRun> {
    let seed = config.seed_for(index);
    let p = config.params;
    let mut session =
        StreamSession::with_config(instance, seed, SessionConfig { audit: config.audit });
    let (returned_ids, detail) = match config.algo {
        Algo::EpsBai => {
            let out = EpsBai::new(ScheduleParams::new(p.eps, p.delta, 1, p.c)?)
                .with_alpha_rule(p.alpha_rule)
                .with_trace(config.audit)
                .run(&mut session)?;
            (vec![out.best], TrialDetail::EpsBai(out))
        }
        Algo::EpsKai => {
            let out = EpsKai::new(ScheduleParams::new(p.eps, p.delta, p.k, p.c)?)
                .with_alpha_rule(p.alpha_rule)
                .with_trace(config.audit)
                .run(&mut session)?;
            (out.arms.clone(), TrialDetail::EpsKai(out))
        }
        Algo::IdBai => {
            let mut cfg = IdBaiConfig::with_constant(p.delta, p.c)?;
            cfg.batch_rule = p.batch_rule;
            let out = IdBai::new(cfg).run(&mut session)?;
            (vec![out.best], TrialDetail::IdBai(out))
        }
        Algo::Uniform => {
            let best = uniform_baseline(&mut session, p.eps, p.delta)?;
            (vec![best], TrialDetail::Uniform)
        }
    };
    let correct = match config.algo {
        Algo::EpsBai | Algo::Uniform => check_eps_best(instance, returned_ids[0], p.eps)?,
        Algo::EpsKai => check_eps_topk(instance, &returned_ids, p.k, p.eps)?,
        Algo::IdBai => check_exact_best(instance, returned_ids[0])?,
    };
    let report = TrialReport {
        algo: config.algo,
        params: p,
        seed,
        returned_ids: returned_ids.clone(),
        total_pulls: session.total_pulls(),
        pass_count: session.pass_count(),
        correct,
        access_ok: session.audit().map(|a| a.is_clean()),
        per_arm_pulls: if config.per_arm {
            session.per_arm_pulls()
        } else {
            None
        },
    };
    Ok(TrialRun {
        report,
        verdict: TrialVerdict {
            correct,
            returned_ids,
            criterion: config.algo.criterion(),
        },
        detail,
    })
}

/// Runs every trial and keeps the algorithm-specific details.
pub fn run_trials_detailed(config: &TrialConfig) -> Result<(AggregateReport, Vec<TrialRun>)> {
    let instance = generate_instance(&config.instance)?;
    validate(config, &instance)?;
    let work = |i: usize| execute_trial(config, &instance, i);
    let runs: Vec<TrialRun> = if config.parallelism <= 1 {
        (0..config.trials).map(work).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| BanditError::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(work)
                .collect::<Result<_>>()
        })?
    };
    let reports: Vec<TrialReport> = runs.iter().map(|r| r.report.clone()).collect();
    let aggregate = aggregate(config, &instance, &reports)?;
    Ok((aggregate, runs))
}

/// Runs every trial; returns the aggregate and the per-trial reports.
pub fn run_trials(config: &TrialConfig) -> Result<(AggregateReport, Vec<TrialReport>)> {
    let (aggregate, runs) = run_trials_detailed(config)?;
    Ok((aggregate, runs.into_iter().map(|r| r.report).collect()))
}

fn aggregate(
    config: &TrialConfig,
    instance: &BanditInstance,
    reports: &[TrialReport],
) -> Result<AggregateReport> {
    let t = reports.len() as f64;
    let failures = reports.iter().filter(|r| !r.correct).count() as f64;
    let failure_rate = failures / t;
    let failure_ci95 = 1.96 * (failure_rate * (1.0 - failure_rate) / t).sqrt();
    let mean_pulls = reports.iter().map(|r| r.total_pulls as f64).sum::<f64>() / t;
    let pulls_ci95 = if reports.len() > 1 {
        let var = reports
            .iter()
            .map(|r| (r.total_pulls as f64 - mean_pulls).powi(2))
            .sum::<f64>()
            / (t - 1.0);
        1.96 * (var / t).sqrt()
    } else {
        0.0
    };
    let mean_passes = reports.iter().map(|r| r.pass_count as f64).sum::<f64>() / t;
    let p = &config.params;
    let bound = match config.algo {
        Algo::EpsBai | Algo::Uniform => worst_case_bound(instance.len(), p.eps, p.delta, 1),
        Algo::EpsKai => worst_case_bound(instance.len(), p.eps, p.delta, p.k),
        // a lone arm needs no samples, so the ratio is reported as 0
        Algo::IdBai if instance.len() == 1 => 0.0,
        Algo::IdBai => instance_bound(instance, p.delta)?,
    };
    Ok(AggregateReport {
        algo: config.algo,
        params: ParamsEcho {
            instance: config.instance.clone(),
            algo: config.params,
            base_seed: config.base_seed,
        },
        trials: reports.len(),
        failure_rate,
        failure_ci95,
        mean_pulls,
        pulls_ci95,
        mean_passes,
        bound_ratio: if bound > 0.0 { mean_pulls / bound } else { 0.0 },
        per_trial: config.per_trial.then(|| reports.to_vec()),
    })
}

/// A parameter swept by [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vary {
    pub key: VaryKey,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VaryKey {
    N,
    K,
    Eps,
    Delta,
}

impl FromStr for Vary {
    type Err = BanditError;

    /// Parses `key=v1,v2,...` with key one of `n`, `k`, `eps`, `delta`.
    fn from_str(s: &str) -> Result<Self> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| BanditError::Config(format!("expected key=values, got `{s}`")))?;
        let key = match key.trim() {
            "n" => VaryKey::N,
            "k" => VaryKey::K,
            "eps" => VaryKey::Eps,
            "delta" => VaryKey::Delta,
            other => return Err(BanditError::Config(format!("cannot vary `{other}`"))),
        };
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| BanditError::Config(format!("bad value `{v}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(BanditError::Config("no values to sweep".into()));
        }
        Ok(Vary { key, values })
    }
}

/// One row of a sweep: the aggregate for a single configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algo: Algo,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub failure_rate: f64,
    pub failure_ci95: f64,
    pub mean_pulls: f64,
    pub pulls_ci95: f64,
    pub mean_passes: f64,
    pub bound_ratio: f64,
}

/// Repeats `run_trials` for each swept value.
pub fn sweep(base: &TrialConfig, vary: &Vary) -> Result<Vec<SweepRow>> {
    vary.values
        .iter()
        .map(|&v| {
            let mut config = base.clone();
            match vary.key {
                VaryKey::N => {
                    config.instance.n = v as usize;
                    if let Profile::Explicit { .. } = config.instance.profile {
                        return Err(BanditError::Config(
                            "cannot vary n with an explicit profile".into(),
                        ));
                    }
                }
                VaryKey::K => {
                    config.params.k = v as usize;
                    if let Profile::OneGap { k, .. } = &mut config.instance.profile {
                        *k = v as usize;
                    }
                }
                VaryKey::Eps => config.params.eps = v,
                VaryKey::Delta => config.params.delta = v,
            }
            let (agg, _) = run_trials(&config)?;
            Ok(SweepRow {
                algo: config.algo,
                n: config.instance.n,
                k: config.params.k,
                eps: config.params.eps,
                delta: config.params.delta,
                trials: agg.trials,
                failure_rate: agg.failure_rate,
                failure_ci95: agg.failure_ci95,
                mean_pulls: agg.mean_pulls,
                pulls_ci95: agg.pulls_ci95,
                mean_passes: agg.mean_passes,
                bound_ratio: agg.bound_ratio,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct TrialCsvRow<'a> {
    algo: &'a str,
    seed: u64,
    returned_ids: String,
    total_pulls: u64,
    pass_count: u64,
    correct: bool,
}

/// One header row plus one row per trial.
pub fn trials_to_csv(reports: &[TrialReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        let ids: Vec<String> = r.returned_ids.iter().map(|id| id.0.to_string()).collect();
        w.serialize(TrialCsvRow {
            algo: r.algo.name(),
            seed: r.seed,
            returned_ids: ids.join(";"),
            total_pulls: r.total_pulls,
            pass_count: r.pass_count,
            correct: r.correct,
        })
        .map_err(|e| BanditError::Config(format!("csv: {e}")))?;
    }
    finish_csv(w)
}

/// One header row plus one row per sweep point.
pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| BanditError::Config(format!("csv: {e}")))?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| BanditError::Config(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| BanditError::Config(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn one_gap_ascending() {
        let spec = InstanceSpec {
            n: 3,
            profile: Profile::OneGap { top: 0.7, gap: 0.2, k: 1 },
            order: Order::Ascending,
            distribution: DistKind::Bernoulli,
        };
        let inst = generate_instance(&spec).unwrap();
        assert!(close(&inst.means(), &[0.5, 0.5, 0.7]));
        assert!(inst.has_unique_best());
    }

    #[test]
    fn explicit_descending() {
        let spec = InstanceSpec::explicit(vec![0.1, 0.9], Order::Descending, DistKind::Deterministic);
        assert_eq!(generate_instance(&spec).unwrap().means(), vec![0.9, 0.1]);
    }

    #[test]
    fn linear_spacing() {
        let spec = InstanceSpec {
            n: 5,
            profile: Profile::Linear { lo: 0.1, hi: 0.9 },
            order: Order::Ascending,
            distribution: DistKind::Bernoulli,
        };
        assert!(close(&generate_instance(&spec).unwrap().means(), &[0.1, 0.3, 0.5, 0.7, 0.9]));
    }

    #[test]
    fn random_order_is_seeded() {
        let spec = |seed| InstanceSpec {
            n: 20,
            profile: Profile::Linear { lo: 0.0, hi: 1.0 },
            order: Order::Random { seed },
            distribution: DistKind::Bernoulli,
        };
        let a = generate_instance(&spec(3)).unwrap();
        assert_eq!(a, generate_instance(&spec(3)).unwrap());
        assert_ne!(a, generate_instance(&spec(4)).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let bad = InstanceSpec::explicit(vec![0.5, 1.5], Order::AsGiven, DistKind::Bernoulli);
        assert!(matches!(generate_instance(&bad), Err(BanditError::InvalidSpec(_))));
        let mut mismatched = InstanceSpec::explicit(vec![0.5], Order::AsGiven, DistKind::Bernoulli);
        mismatched.n = 2;
        assert!(generate_instance(&mismatched).is_err());
        assert!(matches!("ucb".parse::<Algo>(), Err(BanditError::Config(_))));
    }

    #[test]
    fn deterministic_instance_never_fails() {
        let spec = InstanceSpec::explicit(vec![0.1, 0.9, 0.3], Order::AsGiven, DistKind::Deterministic);
        let config = TrialConfig::new(Algo::EpsBai, spec, AlgoParams::new(0.4, 0.01, 1), 7);
        let (agg, reports) = run_trials(&config).unwrap();
        assert_eq!(agg.failure_rate, 0.0);
        assert_eq!(reports.len(), 7);
        assert!(reports.iter().all(|r| r.access_ok == Some(true)));
    }

    #[test]
    fn single_trial_aggregate_mirrors_report() {
        let spec = InstanceSpec::explicit(vec![0.3, 0.6, 0.5], Order::AsGiven, DistKind::Bernoulli);
        let mut config = TrialConfig::new(Algo::EpsBai, spec, AlgoParams::new(0.3, 0.1, 1), 1);
        config.base_seed = 42;
        let (agg, reports) = run_trials(&config).unwrap();
        let r = &reports[0];
        assert_eq!(r.seed, 42);
        assert_eq!(agg.mean_pulls, r.total_pulls as f64);
        assert_eq!(agg.mean_passes, r.pass_count as f64);
        assert_eq!(agg.failure_rate, if r.correct { 0.0 } else { 1.0 });
        assert_eq!(agg.pulls_ci95, 0.0);
    }

    #[test]
    fn rerun_and_parallel_are_identical() {
        let spec = InstanceSpec {
            n: 12,
            profile: Profile::Linear { lo: 0.2, hi: 0.8 },
            order: Order::Random { seed: 9 },
            distribution: DistKind::Bernoulli,
        };
        let mut config = TrialConfig::new(Algo::EpsKai, spec, AlgoParams::new(0.3, 0.1, 3), 16);
        config.per_trial = true;
        config.base_seed = 1000;
        let a = run_trials(&config).unwrap().0.to_json();
        let b = run_trials(&config).unwrap().0.to_json();
        config.parallelism = 4;
        let c = run_trials(&config).unwrap().0.to_json();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn id_bai_requires_unique_best() {
        let spec = InstanceSpec::explicit(vec![0.5, 0.5], Order::AsGiven, DistKind::Bernoulli);
        let config = TrialConfig::new(Algo::IdBai, spec, AlgoParams::new(0.1, 0.1, 1), 1);
        assert!(matches!(run_trials(&config), Err(BanditError::InvalidSpec(_))));
    }

    #[test]
    fn vary_parsing_and_csv() {
        let v: Vary = "n=5,10".parse().unwrap();
        assert_eq!(v.key, VaryKey::N);
        assert_eq!(v.values, vec![5.0, 10.0]);
        assert!("x=1".parse::<Vary>().is_err());

        let spec = InstanceSpec {
            n: 4,
            profile: Profile::OneGap { top: 0.6, gap: 0.3, k: 1 },
            order: Order::Ascending,
            distribution: DistKind::Bernoulli,
        };
        let config = TrialConfig::new(Algo::EpsBai, spec, AlgoParams::new(0.3, 0.1, 1), 3);
        let rows = sweep(&config, &v).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![5, 10]);
        let csv = sweep_to_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("algo,n,k,eps,delta,trials,failure_rate"));

        let (_, reports) = run_trials(&config).unwrap();
        let csv = trials_to_csv(&reports).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("eps-bai,0,"));
    }
}
