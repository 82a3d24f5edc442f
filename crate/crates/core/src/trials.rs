//! Seeding and statistics for Monte-Carlo trial batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Independent generator `k` derived from `seed`.
pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

/// Seed for trial `i` of a batch; trials never share a stream.
pub fn trial_seed(seed: u64, i: u64) -> u64 {
    stream(seed ^ 0x7472_6961_6c73, i).random()
}

/// Runs `n` trials, in parallel if asked. Results come back in trial order
/// either way.
pub fn run_trials<T, F>(n: u64, seed: u64, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(|i| f(trial_seed(seed, i))).collect()
    } else {
        (0..n).map(|i| f(trial_seed(seed, i))).collect()
    }
}

/// Binomial standard deviation of a rate estimate `sqrt(p (1 - p) / n)`.
pub fn sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Exact two-sided Clopper-Pearson interval at the given confidence.
pub fn clopper_pearson(successes: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(successes <= n && n > 0, "need 0 <= k <= n, n > 0");
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, n as f64);
    let lo = if successes == 0 { 0.0 } else { Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0) };
    let hi = if k == n { 1.0 } else { Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0) };
    (lo, hi)
}

/// Exact one-sided upper Clopper-Pearson bound.
pub fn upper_bound(successes: u64, n: u64, confidence: f64) -> f64 {
    clopper_pearson(successes, n, 1.0 - 2.0 * (1.0 - confidence)).1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct RateEstimate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
}

impl RateEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        Self { successes, trials, rate: successes as f64 / trials as f64 }
    }

    pub fn count<T>(items: &[T], pred: impl Fn(&T) -> bool) -> Self {
        Self::new(items.iter().filter(|t| pred(t)).count() as u64, items.len() as u64)
    }

    /// `rate <= bound + k sigma`, with `sigma` taken at the bound.
    pub fn within(&self, bound: f64, k: f64) -> bool {
        self.rate <= bound + k * sigma(bound.clamp(0.0, 1.0), self.trials)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // scipy.stats.beta.ppf oracles
    #[test]
    fn clopper_pearson_matches_reference() {
        let (lo, hi) = clopper_pearson(5, 100, 0.95);
        assert!((lo - 0.016431).abs() < 1e-5, "{lo}");
        assert!((hi - 0.112835).abs() < 1e-5, "{hi}");
        assert_eq!(clopper_pearson(0, 10, 0.95).0, 0.0);
        assert_eq!(clopper_pearson(10, 10, 0.95).1, 1.0);
    }

    #[test]
    fn upper_bound_zero_successes() {
        // 1 - 0.01^(1/100)
        let u = upper_bound(0, 100, 0.99);
        assert!((u - 0.045007).abs() < 1e-5, "{u}");
    }

    #[test]
    fn trials_are_order_stable() {
        let a = run_trials(50, 7, false, |s| s);
        let b = run_trials(50, 7, true, |s| s);
        assert_eq!(a, b);
        let mut d = a.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 50);
    }
}
