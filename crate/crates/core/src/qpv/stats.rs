use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::QpvError;
use crate::bits::BitString;
use crate::quantum::{outcome_probability, BasisAngle, Bb84State};

/// A prover's answer: `None` is the no-detection symbol.
pub type Response = Option<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum RoundVerdict {
    Ok,
    TimingFail,
    MismatchFail,
    Loss,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct QpvRoundRecord {
    pub round: usize,
    pub x: BitString,
    pub y: BitString,
    pub theta: usize,
    /// BB84 state index: 0 = |0>, 1 = |1>, 2 = |+>, 3 = |->.
    pub prepared_state: usize,
    pub z_sent: bool,
    pub response1: Response,
    pub response2: Response,
    pub arrival1: Option<f64>,
    pub arrival2: Option<f64>,
    pub verdict: RoundVerdict,
}

/// Outcome counts `N[z][s][theta]` with `z` in {0, 1, none}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct QpvStats {
    pub num_bases: usize,
    counts: Vec<u64>,
    pub rounds_run: u64,
    pub detections: u64,
    pub errors: u64,
    pub timing_failures: u64,
    pub mismatch_failures: u64,
}

fn z_index(z: Response) -> usize {
    match z {
        Some(false) => 0,
        Some(true) => 1,
        None => 2,
    }
}

impl QpvStats {
    pub fn new(num_bases: usize) -> Self {
        Self {
            num_bases,
            counts: vec![0; 3 * 4 * num_bases],
            rounds_run: 0,
            detections: 0,
            errors: 0,
            timing_failures: 0,
            mismatch_failures: 0,
        }
    }

    fn idx(&self, z: usize, s: usize, theta: usize) -> usize {
        (z * 4 + s) * self.num_bases + theta
    }

    pub(crate) fn record(&mut self, rec: &QpvRoundRecord) {
        self.rounds_run += 1;
        match rec.verdict {
            RoundVerdict::TimingFail => self.timing_failures += 1,
            RoundVerdict::MismatchFail => self.mismatch_failures += 1,
            _ => {}
        }
        // Mismatched rounds have no single outcome to count.
        if rec.verdict == RoundVerdict::MismatchFail {
            return;
        }
        let i = self.idx(z_index(rec.response1), rec.prepared_state, rec.theta);
        self.counts[i] += 1;
        if rec.response1.is_some() {
            self.detections += 1;
        }
        if rec.verdict == RoundVerdict::Error {
            self.errors += 1;
        }
    }

    /// `N_{z s theta}`; `z = None` counts losses.
    pub fn n_zst(&self, z: Response, s: usize, theta: usize) -> u64 {
        self.counts[self.idx(z_index(z), s, theta)]
    }

    /// `N_{s theta}`, summed over all outcomes including loss.
    pub fn n_st(&self, s: usize, theta: usize) -> u64 {
        [Some(false), Some(true), None].iter().map(|&z| self.n_zst(z, s, theta)).sum()
    }

    pub fn transmission(&self) -> f64 {
        if self.rounds_run == 0 {
            0.0
        } else {
            self.detections as f64 / self.rounds_run as f64
        }
    }

    pub fn conditional_error_rate(&self) -> Result<f64, QpvError> {
        conditional_error_rate(self.errors, self.detections)
    }

    /// Per-cell deviations `|N_zst / N_st - eta p(z|s, theta)|` for `z` in {0, 1}.
    pub fn deviations(&self, eta: f64, weights: Option<&[f64]>) -> Deviations {
        let n = self.num_bases;
        let mut values = vec![0.0; 2 * 4 * n];
        let mut empty_cells = Vec::new();
        for s in 0..4 {
            let state = Bb84State::from_index(s).state();
            for theta in 0..n {
                let nst = self.n_st(s, theta);
                if nst == 0 {
                    empty_cells.push((s, theta));
                }
                for z in 0..2 {
                    let expected = eta * outcome_probability(&state, BasisAngle::equally_spaced(theta, n), z == 1);
                    let observed =
                        if nst == 0 { 0.0 } else { self.n_zst(Some(z == 1), s, theta) as f64 / nst as f64 };
                    values[(z * 4 + s) * n + theta] = (observed - expected).abs();
                }
            }
        }
        let total = match weights {
            Some(w) => values.iter().zip(w).map(|(d, w)| d * w).sum(),
            None => values.iter().sum::<f64>() / (4 * n) as f64,
        };
        Deviations { num_bases: n, values, total, empty_cells }
    }
}

pub fn conditional_error_rate(errors: u64, detections: u64) -> Result<f64, QpvError> {
    if detections == 0 {
        return Err(QpvError::NoDetections);
    }
    Ok(errors as f64 / detections as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Deviations {
    pub num_bases: usize,
    /// Indexed `[z][s][theta]` with `z` in {0, 1}.
    pub values: Vec<f64>,
    /// `delta_T`: the weighted sum, by default `1/(4n)` times the plain sum.
    pub total: f64,
    /// `(s, theta)` cells that saw no rounds.
    pub empty_cells: Vec<(usize, usize)>,
}

impl Deviations {
    pub fn get(&self, z: bool, s: usize, theta: usize) -> f64 {
        self.values[(z as usize * 4 + s) * self.num_bases + theta]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct QpvSummary {
    pub rounds: u64,
    pub detections: u64,
    pub errors: u64,
    pub transmission: f64,
    #[serde(rename = "conditionalError")]
    pub conditional_error: Option<f64>,
    pub deviations: Option<Deviations>,
    pub verdict: Verdict,
}
