//! Quantum position verification: the two-basis BB84 protocol and its
//! multi-basis variant, run on the spacetime simulator.

mod runner;
mod stats;
mod strategy;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::BitString;
use crate::spacetime::SpacetimeError;

pub use runner::{run_qpv, run_qpv_multi_basis, run_qpv_single, MultiBasisRun, QpvRun, RunOptions};
pub use stats::{
    conditional_error_rate, Deviations, QpvRoundRecord, QpvStats, QpvSummary, Response, RoundVerdict, Verdict,
};
pub use strategy::ProverStrategy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpvError {
    #[error("invalid QPV configuration: {0}")]
    InvalidConfig(String),
    #[error("challenge lengths differ: |x| = {x}, |y| = {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("no detections, conditional error rate is undefined")]
    NoDetections,
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct QpvConfig {
    /// Length of each verifier challenge `x`, `y`.
    pub n_bits: usize,
    pub rounds: usize,
    /// Detection probability the verifiers expect of an honest prover.
    pub eta: f64,
    pub error_threshold: f64,
    pub deviation_threshold: f64,
    pub num_bases: usize,
    pub t_delta: f64,
    /// Spacing between whole runs; `None` picks one run duration plus one round spacing.
    pub delta_t: Option<f64>,
    pub round_spacing: f64,
    pub function_seed: u64,
    /// Verifier-to-prover distance; verifiers sit at `-distance` and `+distance`.
    pub distance: f64,
    /// Speed of the quantum signal as a fraction of `c`.
    pub speed_fraction: f64,
    /// How long before `t0` the qubit reaches the prover.
    pub qubit_lead: f64,
    /// Multi-basis mode only; defaults to the first verifier's position.
    pub preparer_position: Option<f64>,
    /// Multi-basis mode only; `2 * 4 * num_bases` weights indexed `[z][s][theta]`.
    pub deviation_weights: Option<Vec<f64>>,
}

impl Default for QpvConfig {
    fn default() -> Self {
        Self {
            n_bits: 16,
            rounds: 1000,
            eta: 1.0,
            error_threshold: 0.05,
            deviation_threshold: 0.03,
            num_bases: 2,
            t_delta: 0.0,
            delta_t: None,
            round_spacing: 4.0,
            function_seed: 0x5eed,
            distance: 1.0,
            speed_fraction: 1.0,
            qubit_lead: 0.01,
            preparer_position: None,
            deviation_weights: None,
        }
    }
}

impl QpvConfig {
    pub fn validate(&self) -> Result<(), QpvError> {
        let bad = |m: String| Err(QpvError::InvalidConfig(m));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta = {} outside (0, 1]", self.eta));
        }
        for (name, v) in [("error_threshold", self.error_threshold), ("deviation_threshold", self.deviation_threshold)] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1)"));
            }
        }
        if self.num_bases < 2 {
            return bad(format!("num_bases = {} < 2", self.num_bases));
        }
        if self.n_bits == 0 || self.rounds == 0 {
            return bad("n_bits and rounds must be positive".into());
        }
        if !(self.t_delta >= 0.0 && self.qubit_lead >= 0.0) {
            return bad("t_delta and qubit_lead must be nonnegative".into());
        }
        if !(self.round_spacing > 0.0 && self.distance > 0.0) {
            return bad("round_spacing and distance must be positive".into());
        }
        if !(self.speed_fraction > 0.0 && self.speed_fraction <= 1.0) {
            return Err(SpacetimeError::SpeedFraction(self.speed_fraction).into());
        }
        if let Some(dt) = self.delta_t {
            if dt <= self.run_duration() {
                return bad(format!("delta_t = {dt} does not exceed the run duration {}", self.run_duration()));
            }
        }
        if let Some(w) = &self.deviation_weights {
            if w.len() != 8 * self.num_bases || w.iter().any(|x| !(*x >= 0.0)) {
                return bad(format!("deviation_weights needs {} nonnegative entries", 8 * self.num_bases));
            }
        }
        Ok(())
    }

    fn preparer_distance(&self) -> f64 {
        match self.preparer_position {
            Some(p) => p.abs(),
            None => self.distance,
        }
    }

    /// From the first qubit departure to the latest admissible response.
    pub fn run_duration(&self) -> f64 {
        let lead = self.qubit_lead + self.preparer_distance() / self.speed_fraction;
        (self.rounds - 1) as f64 * self.round_spacing + lead.max(self.distance) + self.distance + self.t_delta
    }

    pub fn effective_delta_t(&self) -> f64 {
        self.delta_t.unwrap_or(self.run_duration() + self.round_spacing)
    }
}

/// The public function `theta = f(x, y)`: SHA-256 over the seed, the
/// lengths and both challenges, reduced to `[0, num_bases)` by a
/// multiply-high.
pub fn basis_function(seed: u64, x: &BitString, y: &BitString, num_bases: usize) -> Result<usize, QpvError> {
    if x.len() != y.len() {
        return Err(QpvError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((x.len() as u64).to_le_bytes());
    h.update(x.to_bytes());
    h.update(y.to_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    let v = u64::from_le_bytes(word);
    Ok(((v as u128 * num_bases as u128) >> 64) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_function_is_deterministic() {
        let x = BitString::from_binary("1011").unwrap();
        let y = BitString::from_binary("0001").unwrap();
        assert_eq!(basis_function(1, &x, &y, 5).unwrap(), basis_function(1, &x, &y, 5).unwrap());
        assert!(basis_function(1, &x, &y, 5).unwrap() < 5);
    }

    #[test]
    fn basis_function_rejects_length_mismatch() {
        let x = BitString::zeros(3);
        let y = BitString::zeros(4);
        assert_eq!(basis_function(0, &x, &y, 2), Err(QpvError::LengthMismatch { x: 3, y: 4 }));
    }

    #[test]
    fn basis_function_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| {
                let x = BitString::random(&mut rng, 32);
                let y = BitString::random(&mut rng, 32);
                basis_function(42, &x, &y, 2).unwrap() == 0
            })
            .count();
        let f = zeros as f64 / n as f64;
        assert!((0.494..=0.506).contains(&f), "{f}");
    }

    #[test]
    fn basis_function_chi_square_five_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut counts = [0u64; 5];
        for _ in 0..n {
            let x = BitString::random(&mut rng, 16);
            let y = BitString::random(&mut rng, 16);
            counts[basis_function(9, &x, &y, 5).unwrap()] += 1;
        }
        let e = n as f64 / 5.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 99.9% quantile of chi-square with 4 degrees of freedom
        assert!(chi2 < 18.467, "{chi2}");
    }

    #[test]
    fn seeds_are_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let agree = (0..n)
            .filter(|_| {
                let x = BitString::random(&mut rng, 16);
                let y = BitString::random(&mut rng, 16);
                basis_function(1, &x, &y, 2).unwrap() == basis_function(2, &x, &y, 2).unwrap()
            })
            .count();
        let f = agree as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{f}");
    }

    #[test]
    fn config_validation() {
        assert!(QpvConfig::default().validate().is_ok());
        let bad = QpvConfig { eta: 0.0, ..QpvConfig::default() };
        assert!(bad.validate().is_err());
        let bad = QpvConfig { num_bases: 1, ..QpvConfig::default() };
        assert!(bad.validate().is_err());
        let c = QpvConfig::default();
        let bad = QpvConfig { delta_t: Some(c.run_duration()), ..c.clone() };
        assert!(bad.validate().is_err());
        let ok = QpvConfig { delta_t: Some(c.run_duration() + 1.0), ..c };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<QpvConfig>(r#"{"rounds": 10, "bogus": 1}"#).is_err());
        let c: QpvConfig = serde_json::from_str(r#"{"rounds": 10}"#).unwrap();
        assert_eq!(c.rounds, 10);
        assert_eq!(c.n_bits, 16);
    }
}
