//! Access-model and bookkeeping invariants over random instances.

use proptest::prelude::*;
use streaming_bandits::eps_kai::check_trace;
use streaming_bandits::oracles::{check_eps_best, uniform_baseline, uniform_pulls_per_arm};
use streaming_bandits::stream::log_is_in_order;
use streaming_bandits::{
    ArmId, ArmSet, BanditInstance, EpsBai, EpsKai, IdBai, IdBaiConfig, ScheduleParams,
    StreamSession,
};

fn means_strategy(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..=max_n)
}

/// Means with a unique maximum that is separated from the rest.
fn unique_best_strategy(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(0.0f64..=0.6, 1..max_n), 0.15f64..0.4, any::<prop::sample::Index>())
        .prop_map(|(mut rest, gap, at)| {
            let top = rest.iter().cloned().fold(0.0, f64::max) + gap;
            let i = at.index(rest.len() + 1);
            rest.insert(i, top);
            rest
        })
}

fn assert_clean(session: &StreamSession<'_>, passes: u64) {
    let audit = session.audit().unwrap();
    assert!(audit.is_clean(), "{audit:?}");
    assert_eq!(audit.passes, passes);
    let per_arm: u64 = session.per_arm_pulls().unwrap().iter().sum();
    assert_eq!(per_arm, session.total_pulls());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eps_bai_single_pass_and_replacement_rules(
        means in means_strategy(40),
        eps in 0.1f64..0.5,
        delta in 0.01f64..0.5,
        seed in any::<u64>(),
    ) {
        let inst = BanditInstance::bernoulli(&means).unwrap();
        let params = ScheduleParams::best_arm(eps, delta).unwrap();
        let mut s = StreamSession::new(&inst, seed);
        let out = EpsBai::new(params).run(&mut s).unwrap();
        assert_clean(&s, 1);

        let mut candidate = ArmId(1);
        for r in &out.replacements {
            prop_assert_eq!(r.previous, candidate);
            prop_assert!(r.arm > r.previous);
            prop_assert!(r.alpha >= eps / 4.0 - 1e-15);
            prop_assert!(r.mean >= r.previous_mean + r.alpha);
            prop_assert!(r.budget > r.threshold);
            // every arm between the two was a lost challenge
            prop_assert_eq!(r.beat_count, (r.arm.0 - r.previous.0) as u64);
            candidate = r.arm;
        }
        prop_assert_eq!(out.best, candidate);
        prop_assert_eq!(out.state.candidate, candidate);
        prop_assert_eq!(out.state.beat_count, (means.len() + 1 - candidate.0) as u64);
    }

    #[test]
    fn eps_bai_replays_identically(
        means in means_strategy(30),
        seed in any::<u64>(),
    ) {
        let inst = BanditInstance::bernoulli(&means).unwrap();
        let params = ScheduleParams::best_arm(0.2, 0.1).unwrap();
        let run = |seed| {
            let mut s = StreamSession::new(&inst, seed);
            let out = EpsBai::new(params).run(&mut s).unwrap();
            (out, s.total_pulls(), s.pull_log().unwrap().to_vec())
        };
        prop_assert_eq!(run(seed), run(seed));
    }

    #[test]
    fn restricted_eps_bai_only_touches_survivors(
        means in means_strategy(40),
        keep in prop::collection::vec(any::<bool>(), 40),
        seed in any::<u64>(),
    ) {
        let inst = BanditInstance::bernoulli(&means).unwrap();
        let n = means.len();
        let ids: Vec<ArmId> = (0..n).filter(|&i| keep[i]).map(ArmId::from_index).collect();
        prop_assume!(!ids.is_empty());
        let survivors = ArmSet::from_ids(n, &ids);
        let params = ScheduleParams::best_arm(0.25, 0.1).unwrap();
        let mut s = StreamSession::new(&inst, seed);
        let out = EpsBai::new(params).run_restricted(&mut s, &survivors).unwrap();
        prop_assert!(survivors.contains(out.best));
        for (i, &pulls) in s.per_arm_pulls().unwrap().iter().enumerate() {
            if !survivors.contains(ArmId::from_index(i)) {
                prop_assert_eq!(pulls, 0);
            }
        }
        prop_assert!(log_is_in_order(s.pull_log().unwrap()));
    }

    #[test]
    fn eps_kai_trace_and_output(
        means in means_strategy(40),
        k in 1usize..6,
        eps in 0.1f64..0.5,
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= means.len());
        let inst = BanditInstance::bernoulli(&means).unwrap();
        let params = ScheduleParams::new(eps, 0.1, k, 100.0).unwrap();
        let mut s = StreamSession::new(&inst, seed);
        let out = EpsKai::new(params).run(&mut s).unwrap();
        assert_clean(&s, 1);
        prop_assert_eq!(out.arms.len(), k);
        prop_assert!(out.arms.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(check_trace(&out, eps, k).is_empty());
        prop_assert!(out.state.beat_count() >= 1);
        prop_assert!(out.evictions.iter().all(|e| e.budget > e.threshold && e.beat_count >= 1));
        let mut resident: Vec<ArmId> = out.state.entries().iter().map(|e| e.arm).collect();
        resident.sort();
        prop_assert_eq!(resident, out.arms.clone());
    }

    #[test]
    fn id_bai_round_bookkeeping(
        means in unique_best_strategy(12),
        seed in any::<u64>(),
    ) {
        let inst = BanditInstance::bernoulli(&means).unwrap();
        let mut s = StreamSession::new(&inst, seed);
        let out = IdBai::new(IdBaiConfig::new(0.1).unwrap()).run(&mut s).unwrap();
        assert_clean(&s, out.rounds.iter().map(|r| r.passes).sum());

        let log = s.pull_log().unwrap();
        let mut pass_floor = 0u64;
        for r in &out.rounds {
            prop_assert!(r.passes <= 3);
            prop_assert!(r.survivors_before.contains(&r.candidate));
            prop_assert!(r.tests.iter().all(|t| t.arm != r.candidate));
            prop_assert_eq!(r.tests.len() + 1, r.survivors_before.len());

            let spent: u64 = r.tests.iter().filter(|t| t.budgeted).map(|t| t.pulls).sum();
            prop_assert_eq!(r.initial_budget - spent as i128, r.final_budget);
            prop_assert_eq!(r.h, 1 + r.tests.iter().filter(|t| t.budgeted && t.eliminated).count() as u64);

            let ceiling = pass_floor + r.passes;
            for rec in log.iter().filter(|p| p.pass > pass_floor && p.pass <= ceiling) {
                prop_assert!(r.survivors_before.contains(&rec.arm), "arm {:?} pulled after elimination", rec.arm);
            }
            pass_floor = ceiling;
        }
        let last = out.rounds.last().map(|r| r.candidate);
        if let Some(c) = last {
            prop_assert_eq!(out.best, c);
        }
    }
}

#[test]
fn deterministic_rewards_make_eps_bai_exact_enough() {
    let inst = BanditInstance::deterministic(&[0.1, 0.5, 0.3, 0.9, 0.85, 0.2]).unwrap();
    for seed in 0..20 {
        let mut s = StreamSession::new(&inst, seed);
        let params = ScheduleParams::best_arm(0.1, 0.1).unwrap();
        let best = EpsBai::new(params).run(&mut s).unwrap().best;
        assert!(check_eps_best(&inst, best, 0.1).unwrap());
    }
}

// The uniform comparator is cheaper than eps-bai at these sizes: its per-arm
// count is (2/ε²)·ln(2n/δ), while eps-bai spends at least (16/ε²)·ln(C/δ)
// on every challenger.
#[test]
fn uniform_baseline_is_cheaper_at_moderate_n() {
    let means: Vec<f64> = (0..100).map(|i| if i == 99 { 0.6 } else { 0.35 }).collect();
    let inst = BanditInstance::bernoulli(&means).unwrap();
    let (eps, delta) = (0.25, 0.1);
    assert_eq!(uniform_pulls_per_arm(100, eps, delta), 244);

    let mut base = StreamSession::new(&inst, 3);
    uniform_baseline(&mut base, eps, delta).unwrap();
    let mut ours = StreamSession::new(&inst, 3);
    EpsBai::new(ScheduleParams::best_arm(eps, delta).unwrap()).run(&mut ours).unwrap();

    assert_eq!(base.total_pulls(), 100 * 244);
    assert!(ours.total_pulls() > base.total_pulls());
    assert!(ours.total_pulls() >= 99 * 3537);
}
