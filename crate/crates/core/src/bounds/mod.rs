//! Closed-form security quantities: composition bounds, net sizes, the
//! classical rounding size, ν, the partition LP and the error-rate lower
//! bound, plus the threshold optimizer over δ̃ tables.

mod optimize;
mod table;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::binary_entropy_inv;

pub use crate::msgauth::{robustness_bound_msg_auth, soundness_bound_msg_auth};
pub use optimize::{eta_sweep, logspace, optimize_thresholds, Fig2Params, Fig2Point, OptimizerGrid};
pub use table::{DeltaTildeTable, Lookup, TableEntry, TableMeta, STUB_TABLE_JSON};

/// Tolerance for snapping `log2` to an integer before taking the ceiling.
const LOG_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("{0}")]
    Domain(String),
    #[error("parameters infeasible: nu argument {0} < 0")]
    Infeasible(f64),
    #[error("rounding size 2^{exponent} * {factor} does not fit in 128 bits")]
    Overflow { exponent: u32, factor: u64 },
    #[error("delta-tilde table: {0}")]
    Table(String),
    #[error("delta-tilde table does not cover (eps_tilde = {eps_tilde}, eta_tilde = {eta_tilde})")]
    Coverage { eps_tilde: f64, eta_tilde: f64 },
}

fn domain(msg: impl Into<String>) -> BoundsError {
    BoundsError::Domain(msg.into())
}

fn check_prob(name: &str, p: f64) -> Result<(), BoundsError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("{name} = {p} outside [0, 1]")))
    }
}

/// A probability bound: `value` is `raw` clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Bound {
    pub value: f64,
    pub raw: f64,
}

impl Bound {
    pub fn clamped(raw: f64) -> Self {
        Self { value: raw.clamp(0.0, 1.0), raw }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Thm1Variant {
    /// Hash term `1 / l_T`.
    #[serde(alias = "paper")]
    PaperLiteral,
    /// Hash term `2^-l_T`.
    Exponential,
}

/// `eps_QKD + hash term + eps_QPV` for QKD closed by a hash check and QPV.
pub fn thm1_bound(eps_qkd: f64, l_t: usize, eps_qpv: f64, variant: Thm1Variant) -> Result<Bound, BoundsError> {
    if l_t == 0 {
        return Err(domain("l_T must be at least 1"));
    }
    check_prob("eps_qkd", eps_qkd)?;
    check_prob("eps_qpv", eps_qpv)?;
    let hash = match variant {
        Thm1Variant::PaperLiteral => 1.0 / l_t as f64,
        Thm1Variant::Exponential => (-(l_t as f64)).exp2(),
    };
    Ok(Bound::clamped(eps_qkd + hash + eps_qpv))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityParams {
    pub eps_qkd: f64,
    pub eps_qpv: f64,
    pub eps_rob_qkd: f64,
    pub eps_rob_qpv: f64,
    /// Collision probability of the hash family.
    pub delta_hash: f64,
    pub l_t: usize,
    pub l_k: usize,
    pub l_c: usize,
}

impl SecurityParams {
    pub fn validate(&self) -> Result<(), BoundsError> {
        check_prob("eps_qkd", self.eps_qkd)?;
        check_prob("eps_qpv", self.eps_qpv)?;
        check_prob("eps_rob_qkd", self.eps_rob_qkd)?;
        check_prob("eps_rob_qpv", self.eps_rob_qpv)?;
        check_prob("delta_hash", self.delta_hash)
    }

    fn half_key(&self) -> f64 {
        self.l_k.div_ceil(2) as f64
    }
}

/// `delta + 2 ceil(l_K/2) eps_QPV` for location-authenticated messages.
pub fn protocol2_soundness(p: &SecurityParams) -> Result<Bound, BoundsError> {
    p.validate()?;
    Ok(Bound::clamped(p.delta_hash + 2.0 * p.half_key() * p.eps_qpv))
}

/// `(ceil(l_K/2) + 2) eps_rob^QPV`.
pub fn protocol2_robustness(p: &SecurityParams) -> Result<Bound, BoundsError> {
    p.validate()?;
    Ok(Bound::clamped((p.half_key() + 2.0) * p.eps_rob_qpv))
}

/// `2 eps_QKD + 2 delta + (4 ceil(l_K/2) + 2) eps_QPV`.
pub fn protocol3_security(p: &SecurityParams) -> Result<Bound, BoundsError> {
    p.validate()?;
    Ok(Bound::clamped(2.0 * p.eps_qkd + 2.0 * p.delta_hash + (4.0 * p.half_key() + 2.0) * p.eps_qpv))
}

/// `eps_rob^QKD + (ceil(l_K/2) + 3) eps_rob^QPV`.
pub fn protocol3_robustness(p: &SecurityParams) -> Result<Bound, BoundsError> {
    p.validate()?;
    Ok(Bound::clamped(p.eps_rob_qkd + (p.half_key() + 3.0) * p.eps_rob_qpv))
}

/// Base-2 logs of the δ-net sizes for the shared state, Alice's and Bob's
/// operations of a `q`-qubit strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct NetSizes {
    pub log2_ns: f64,
    pub log2_na: f64,
    pub log2_nb: f64,
}

pub fn net_sizes(q: u32, delta: f64) -> Result<NetSizes, BoundsError> {
    if !(delta > 0.0) {
        return Err(domain(format!("delta = {delta} must be positive")));
    }
    let l = (1.0 + 2.0 / delta).log2();
    let q = q as f64;
    Ok(NetSizes {
        log2_ns: (4.0 * q + 1.0).exp2() * l,
        log2_na: (6.0 * q + 7.0).exp2() * l,
        log2_nb: (6.0 * q + 4.0).exp2() * l,
    })
}

fn check_delta_tilde(delta_tilde: f64) -> Result<(), BoundsError> {
    if delta_tilde > 0.0 && delta_tilde <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("delta_tilde = {delta_tilde} outside (0, 1]")))
    }
}

/// `ceil(log2(1 + 12/δ̃))`; values within 1e-12 of an integer count as that
/// integer.
pub fn rounding_log_term(delta_tilde: f64) -> Result<u64, BoundsError> {
    check_delta_tilde(delta_tilde)?;
    let x = (1.0 + 12.0 / delta_tilde).log2();
    let r = x.round();
    Ok(if (x - r).abs() <= LOG_SNAP { r as u64 } else { x.ceil() as u64 })
}

/// `k = 2^(6q+7) (ceil(log2(1 + 12/δ̃)) + 1)`.
pub fn classical_rounding_size(q: u32, delta_tilde: f64) -> Result<u128, BoundsError> {
    let factor = rounding_log_term(delta_tilde)? + 1;
    let exponent = 6 * q + 7;
    1u128
        .checked_shl(exponent)
        .filter(|_| exponent < 128)
        .and_then(|p| p.checked_mul(factor as u128))
        .ok_or(BoundsError::Overflow { exponent, factor })
}

/// How α is normalised when given as a fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaNorm {
    /// `α / 2^(2n)`, the form inside ν.
    PairSpace,
    /// `α / 2^n`.
    InputSpace,
}

/// Converts an α fraction to `α / 2^(2n)`. The input-space form needs `n`.
pub fn alpha_frac(value: f64, norm: AlphaNorm, n: Option<u32>) -> Result<f64, BoundsError> {
    if !(value >= 0.0) {
        return Err(domain(format!("alpha fraction {value} must be nonnegative")));
    }
    match (norm, n) {
        (AlphaNorm::PairSpace, _) => Ok(value),
        (AlphaNorm::InputSpace, Some(n)) => Ok(value * (-(n as f64)).exp2()),
        (AlphaNorm::InputSpace, None) => Err(domain("alpha given as alpha/2^n needs n")),
    }
}

/// `1 - 2^-α`.
pub fn alpha_factor(alpha: f64) -> f64 {
    1.0 - (-alpha).exp2()
}

/// `1 - 2^(9 - 6 q0) (ceil(log2(1 + 12/δ̃)) + 1) - α/2^(2n)`. `q0` may be
/// infinite.
pub fn nu_argument(q0: f64, delta_tilde: f64, alpha_frac: f64) -> Result<f64, BoundsError> {
    if q0.is_nan() {
        return Err(domain("q0 is NaN"));
    }
    if !(alpha_frac >= 0.0) {
        return Err(domain(format!("alpha fraction {alpha_frac} must be nonnegative")));
    }
    let term = (rounding_log_term(delta_tilde)? + 1) as f64;
    Ok(1.0 - (9.0 - 6.0 * q0).exp2() * term - alpha_frac)
}

pub fn nu_value(q0: f64, delta_tilde: f64, alpha_frac: f64) -> Result<f64, BoundsError> {
    let arg = nu_argument(q0, delta_tilde, alpha_frac)?;
    if arg < 0.0 {
        return Err(BoundsError::Infeasible(arg));
    }
    binary_entropy_inv(arg).map_err(|e| domain(e.to_string()))
}

fn partition_ratio(eta_r: f64, eta_thres: f64) -> Result<f64, BoundsError> {
    if !(eta_thres < 1.0) {
        return Err(domain(format!("eta_thres = {eta_thres} must be below 1")));
    }
    Ok((eta_r - eta_thres) / (1.0 - eta_thres))
}

/// Minimum error of a sub-strategy with transmission `eta_r`:
/// `max(eps_thres eta ((eta_r - eta_thres)/(1 - eta_thres) - 1 + nu), 0)`.
pub fn lp_error_lower_bound(eta_r: f64, eta_thres: f64, eps_thres: f64, eta: f64, nu: f64) -> Result<f64, BoundsError> {
    let ratio = partition_ratio(eta_r, eta_thres)?;
    Ok((eps_thres * eta * (ratio - 1.0 + nu)).max(0.0))
}

/// Grid search over the partition simplex: minimise `(l3 + l4) eps_thres eta`
/// subject to `l1 <= 1 - nu`, `l1 + l3 >= ratio`, `sum l = 1`, `l >= 0`.
/// Overshoots the optimum by at most `2 grid_step eps_thres eta`.
pub fn lp_brute_force_oracle(
    eta_r: f64,
    eta_thres: f64,
    eps_thres: f64,
    eta: f64,
    nu: f64,
    grid_step: f64,
) -> Result<f64, BoundsError> {
    let ratio = partition_ratio(eta_r, eta_thres)?;
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(domain(format!("grid step {grid_step} outside (0, 0.5]")));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let h = 1.0 / steps as f64;
    let mut best = f64::INFINITY;
    for i1 in 0..=steps {
        let l1 = i1 as f64 * h;
        if l1 > 1.0 - nu + 1e-12 {
            break;
        }
        for i3 in 0..=steps - i1 {
            let l3 = i3 as f64 * h;
            if l1 + l3 + 1e-12 < ratio {
                continue;
            }
            // l2 takes the remaining mass at zero cost, so l4 = 0
            let obj = l3 * eps_thres * eta;
            if obj < best {
                best = obj;
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(BoundsError::Infeasible(ratio))
    }
}

/// Parameters of the error-rate lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PartitionParams {
    pub eta: f64,
    pub eta_thres: f64,
    pub eps_thres: f64,
    pub nu: f64,
    /// α itself, not a fraction; infinite means `1 - 2^-α = 1`.
    pub alpha: f64,
}

impl PartitionParams {
    pub fn validate(&self) -> Result<(), BoundsError> {
        check_prob("eta", self.eta)?;
        if !(0.0..=self.eta).contains(&self.eta_thres) || self.eta_thres >= 1.0 {
            return Err(domain(format!("eta_thres = {} outside [0, eta] or not below 1", self.eta_thres)));
        }
        check_prob("eps_thres", self.eps_thres)?;
        check_prob("nu", self.nu)?;
        if !(self.alpha >= 0.0) {
            return Err(domain(format!("alpha = {} must be nonnegative", self.alpha)));
        }
        Ok(())
    }
}

/// `(1 - 2^-α) ((eta - eta_thres)/(1 - eta_thres) - 1 + nu) eps_thres`,
/// floored at 0 in `value`.
pub fn eps_lower_bound(p: &PartitionParams) -> Result<Bound, BoundsError> {
    p.validate()?;
    let ratio = partition_ratio(p.eta, p.eta_thres)?;
    let raw = alpha_factor(p.alpha) * (ratio - 1.0 + p.nu) * p.eps_thres;
    Ok(Bound::clamped(raw))
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct ManifestEntry {
    pub name: &'static str,
    pub formula: &'static str,
    pub command: &'static str,
}

/// Every bound this module evaluates.
pub fn manifest() -> Vec<ManifestEntry> {
    vec![
        ManifestEntry { name: "thm1", formula: "eps_QKD + 1/l_T + eps_QPV  |  eps_QKD + 2^-l_T + eps_QPV", command: "bounds thm1" },
        ManifestEntry { name: "protocol2-soundness", formula: "delta + 2 ceil(l_K/2) eps_QPV", command: "bounds protocol2" },
        ManifestEntry { name: "protocol2-robustness", formula: "(ceil(l_K/2) + 2) eps_rob", command: "bounds protocol2" },
        ManifestEntry {
            name: "protocol3-security",
            formula: "2 eps_QKD + 2 delta + (4 ceil(l_K/2) + 2) eps_QPV",
            command: "bounds protocol3",
        },
        ManifestEntry {
            name: "protocol3-robustness",
            formula: "eps_rob^QKD + (ceil(l_K/2) + 3) eps_rob^QPV",
            command: "bounds protocol3",
        },
        ManifestEntry {
            name: "net-sizes",
            formula: "log2 |N| <= 2^(4q+1), 2^(6q+7), 2^(6q+4) times log2(1 + 2/delta)",
            command: "bounds nets",
        },
        ManifestEntry {
            name: "classical-rounding",
            formula: "k = 2^(6q+7) (ceil(log2(1 + 12/delta~)) + 1)",
            command: "bounds rounding",
        },
        ManifestEntry {
            name: "nu",
            formula: "h^-1(1 - 2^(9-6 q0) (ceil(log2(1 + 12/delta~)) + 1) - alpha/2^(2n))",
            command: "bounds nu",
        },
        ManifestEntry {
            name: "partition-lp",
            formula: "max(eps_thres eta ((eta_r - eta_thres)/(1 - eta_thres) - 1 + nu), 0)",
            command: "bounds eps-lb --eta-r",
        },
        ManifestEntry {
            name: "eps-lb",
            formula: "(1 - 2^-alpha) ((eta - eta_thres)/(1 - eta_thres) - 1 + nu) eps_thres",
            command: "bounds eps-lb",
        },
        ManifestEntry { name: "threshold-optimizer", formula: "max over (eta_thres, eps_thres) of eps-lb", command: "bounds fig2" },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thm1_examples() {
        assert_eq!(thm1_bound(0.0, 1, 0.0, Thm1Variant::PaperLiteral).unwrap().value, 1.0);
        let b = thm1_bound(1e-10, 64, 1e-6, Thm1Variant::PaperLiteral).unwrap();
        assert_eq!(b.value, 0.015625 + 1e-6 + 1e-10);
        assert_eq!(thm1_bound(0.0, 64, 0.0, Thm1Variant::Exponential).unwrap().value, 2f64.powi(-64));
        let b = thm1_bound(0.5, 1, 0.5, Thm1Variant::PaperLiteral).unwrap();
        assert_eq!((b.value, b.raw), (1.0, 2.0));
        assert!(thm1_bound(0.0, 0, 0.0, Thm1Variant::Exponential).is_err());
    }

    #[test]
    fn protocol3_examples() {
        assert_eq!(protocol3_security(&SecurityParams::default()).unwrap().value, 0.0);
        let p = SecurityParams { eps_qkd: 1e-9, delta_hash: 2f64.powi(-31), l_k: 76, eps_qpv: 1e-5, ..Default::default() };
        assert_eq!(protocol3_security(&p).unwrap().value, 2e-9 + 2f64.powi(-30) + 154.0 * 1e-5);
        let p = SecurityParams { l_k: 2, eps_qpv: 0.25, ..Default::default() };
        let b = protocol3_security(&p).unwrap();
        assert_eq!((b.value, b.raw), (1.0, 1.5));

        assert_eq!(protocol3_robustness(&SecurityParams::default()).unwrap().value, 0.0);
        let p = SecurityParams { eps_rob_qkd: 1e-3, l_k: 76, eps_rob_qpv: 1e-4, ..Default::default() };
        assert!((protocol3_robustness(&p).unwrap().value - 5.1e-3).abs() < 1e-15);
        let p = SecurityParams { eps_rob_qkd: 0.5, l_k: 9, eps_rob_qpv: 0.5, ..Default::default() };
        assert_eq!(protocol3_robustness(&p).unwrap().value, 1.0);
    }

    #[test]
    fn protocol2_delegates() {
        for (l_k, e, d) in [(4, 0.1, 0.25), (76, 1e-4, 2f64.powi(-15)), (3, 0.3, 0.0)] {
            let p = SecurityParams { l_k, eps_qpv: e, eps_rob_qpv: e, delta_hash: d, ..Default::default() };
            assert_eq!(protocol2_soundness(&p).unwrap().value, soundness_bound_msg_auth(l_k, e, d));
            assert_eq!(protocol2_robustness(&p).unwrap().value, robustness_bound_msg_auth(l_k, e));
        }
    }

    #[test]
    fn net_examples() {
        assert_eq!(net_sizes(1, 2.0).unwrap().log2_ns, 32.0);
        let n = net_sizes(1, 1.0).unwrap();
        assert!((n.log2_ns - 50.718800023076994).abs() < 1e-12);
        let n = net_sizes(0, 1.0).unwrap();
        assert!((n.log2_na - 202.87520009230798).abs() < 1e-11);
        assert_eq!(n.log2_nb, 16.0 * 3f64.log2());
        assert!(net_sizes(0, 0.0).is_err());
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(classical_rounding_size(0, 12.0 / 31.0).unwrap(), 768);
        assert_eq!(classical_rounding_size(0, 0.5).unwrap(), 768);
        assert_eq!(classical_rounding_size(1, 0.5).unwrap(), 49152);
        assert_eq!(rounding_log_term(1.0).unwrap(), 4);
        assert!(classical_rounding_size(0, 0.0).is_err());
        assert!(matches!(classical_rounding_size(20, 0.5), Err(BoundsError::Overflow { .. })));
        assert_eq!(classical_rounding_size(19, 0.5).unwrap(), 6u128 << 121);
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_value(f64::INFINITY, 0.5, 0.0).unwrap(), 0.5);
        // 2^(9 - 6 q0) * 6 = 1 at q0 = (9 + log2 6) / 6
        let q0 = (9.0 + 6f64.log2()) / 6.0;
        let arg = nu_argument(q0, 0.5, 0.0).unwrap();
        assert!(arg.abs() < 1e-15, "{arg}");
        assert_eq!(nu_value(f64::INFINITY, 0.5, 1.0).unwrap(), 0.0);

        let arg = nu_argument(4.0, 0.5, 1e-10).unwrap();
        assert_eq!(arg, 1.0 - 6.0 * 2f64.powi(-15) - 1e-10);
        let nu = nu_value(4.0, 0.5, 1e-10).unwrap();
        let h = crate::quantum::binary_entropy(nu).unwrap();
        assert!((h - arg).abs() < 1e-12);
        assert!(nu < 0.5 && nu > 0.49);

        assert!(matches!(nu_value(1.0, 0.5, 0.0), Err(BoundsError::Infeasible(_))));
        assert!(nu_value(4.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn alpha_normalisations() {
        assert_eq!(alpha_frac(1e-10, AlphaNorm::PairSpace, None).unwrap(), 1e-10);
        assert_eq!(alpha_frac(1e-10, AlphaNorm::InputSpace, Some(10)).unwrap(), 1e-10 / 1024.0);
        assert!(alpha_frac(1e-10, AlphaNorm::InputSpace, None).is_err());
        assert_eq!(alpha_factor(f64::INFINITY), 1.0);
    }

    #[test]
    fn lp_examples() {
        assert!((lp_error_lower_bound(0.9, 0.5, 0.1, 1.0, 0.8).unwrap() - 0.06).abs() < 1e-15);
        let o = lp_brute_force_oracle(0.9, 0.5, 0.1, 1.0, 0.8, 1e-2).unwrap();
        assert!((o - 0.06).abs() < 1e-3, "{o}");
        // 1 - nu above the ratio: zero error possible
        assert_eq!(lp_error_lower_bound(0.6, 0.5, 0.1, 1.0, 0.3).unwrap(), 0.0);
        assert_eq!(lp_brute_force_oracle(0.6, 0.5, 0.1, 1.0, 0.3, 1e-2).unwrap(), 0.0);
        assert_eq!(lp_error_lower_bound(0.5, 0.5, 0.1, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(lp_error_lower_bound(0.9, 0.2, 0.1, 1.0, 0.0).unwrap(), 0.0);
        assert!(lp_error_lower_bound(0.9, 1.0, 0.1, 1.0, 0.5).is_err());
    }

    #[test]
    fn eps_lb_examples() {
        let p = PartitionParams { eta: 0.9, eta_thres: 0.5, eps_thres: 0.1, nu: 0.8, alpha: 30.0 };
        let b = eps_lower_bound(&p).unwrap();
        assert!((b.value - 0.06 * (1.0 - 2f64.powi(-30))).abs() < 1e-15);
        let p = PartitionParams { eta: 1.0, eta_thres: 0.0, eps_thres: 0.2, nu: 1.0, alpha: f64::INFINITY };
        assert_eq!(eps_lower_bound(&p).unwrap().value, 0.2);
        let p = PartitionParams { eta: 0.6, eta_thres: 0.5, eps_thres: 0.2, nu: 0.1, alpha: 30.0 };
        let b = eps_lower_bound(&p).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.raw < 0.0);
    }

    #[test]
    fn manifest_names_are_unique() {
        let m = manifest();
        let mut names: Vec<_> = m.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), m.len());
    }
}
