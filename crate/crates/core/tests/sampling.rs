//! Batch sampling against exact binomial probabilities.

use statrs::distribution::{Binomial, DiscreteCDF};
use streaming_bandits::{BanditInstance, StreamSession};

const SEEDS: u64 = 1000;
const PULLS: u64 = 10_000;

/// Exact `P(lo ≤ S ≤ hi)` for `S ~ Bin(PULLS, p)`.
fn window_probability(p: f64, lo: u64, hi: u64) -> f64 {
    let bin = Binomial::new(p, PULLS).unwrap();
    bin.cdf(hi) - if lo == 0 { 0.0 } else { bin.cdf(lo - 1) }
}

fn batch_sums(p: f64) -> Vec<u64> {
    let inst = BanditInstance::bernoulli(&[p]).unwrap();
    (0..SEEDS)
        .map(|seed| {
            let mut s = StreamSession::new(&inst, seed);
            s.begin_pass();
            let b = s.sample_mean(PULLS).unwrap();
            assert_eq!(b.count, PULLS);
            (b.mean * PULLS as f64).round() as u64
        })
        .collect()
}

fn within(sums: &[u64], lo: u64, hi: u64) -> u64 {
    sums.iter().filter(|&&s| (lo..=hi).contains(&s)).count() as u64
}

#[test]
fn fair_coin_mean_within_two_percent() {
    let sums = batch_sums(0.5);
    let hits = within(&sums, 4800, 5200);
    let p = window_probability(0.5, 4800, 5200);
    assert!(p > 0.9999, "oracle probability {p}");
    assert!(hits >= 990, "{hits} of {SEEDS} seeds within 0.02");
}

#[test]
fn narrow_windows_match_binomial_frequencies() {
    for &(p, lo, hi) in &[(0.5, 4950, 5050), (0.1, 985, 1015), (0.9, 8990, 9030)] {
        let sums = batch_sums(p);
        let hits = within(&sums, lo, hi) as f64;
        let q = window_probability(p, lo, hi);
        let expected = q * SEEDS as f64;
        let sd = (SEEDS as f64 * q * (1.0 - q)).sqrt();
        assert!(
            (hits - expected).abs() <= 4.0 * sd,
            "p={p}: {hits} hits, expected {expected:.1} ± {sd:.1}"
        );
    }
}

#[test]
fn mean_and_variance_of_batch_sums() {
    let sums = batch_sums(0.3);
    let n = sums.len() as f64;
    let mean = sums.iter().map(|&s| s as f64).sum::<f64>() / n;
    let var = sums.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let true_var = PULLS as f64 * 0.3 * 0.7;
    // standard error of the mean is sqrt(2100/1000) ≈ 1.45
    assert!((mean - 3000.0).abs() < 6.0, "mean {mean}");
    assert!((var / true_var - 1.0).abs() < 0.15, "variance {var} vs {true_var}");
}
