use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::table::{DeltaTildeTable, Lookup};
use super::{alpha_factor, nu_value, BoundsError};

/// `count` points evenly spaced in log between `lo` and `hi`.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerGrid {
    /// Values of `ε̃ = ε_thres η` tried; `ε_thres` follows per `η`.
    pub eps_tilde: Vec<f64>,
    /// `η_thres` runs over multiples of this up to `η`, below 1.
    pub eta_thres_step: f64,
    pub lookup: Lookup,
}

impl Default for OptimizerGrid {
    fn default() -> Self {
        Self { eps_tilde: logspace(1e-4, 0.5, 50), eta_thres_step: 0.01, lookup: Lookup::Conservative }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Params {
    pub q0: f64,
    /// `α / 2^(2n)` inside ν.
    pub alpha_frac: f64,
    /// α in the prefactor `1 - 2^-α`; absent means infinite.
    pub alpha: Option<f64>,
}

impl Default for Fig2Params {
    fn default() -> Self {
        Self { q0: 10.0, alpha_frac: 1e-10, alpha: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Fig2Point {
    pub eta: f64,
    pub q0: f64,
    pub best_eps_lb: f64,
    pub eta_thres: Option<f64>,
    pub eps_thres: Option<f64>,
    pub eps_tilde: Option<f64>,
    pub delta_tilde: Option<f64>,
    pub nu: Option<f64>,
    /// No threshold pair gave a feasible ν.
    pub all_infeasible: bool,
}

/// ν over the threshold grid, shared by every η of a sweep.
struct NuGrid {
    thresholds: Vec<f64>,
    /// `cells[k][e]` = (δ̃, ν) at `(eps_tilde[e], thresholds[k])`.
    cells: Vec<Vec<Option<(f64, f64)>>>,
}

impl NuGrid {
    fn new(max_eta: f64, params: &Fig2Params, table: &DeltaTildeTable, grid: &OptimizerGrid) -> Result<Self, BoundsError> {
        let step = grid.eta_thres_step;
        if !(step > 0.0 && step <= 1.0) {
            return Err(BoundsError::Domain(format!("eta_thres_step = {step} outside (0, 1]")));
        }
        let thresholds: Vec<f64> = (0..)
            .map(|k| k as f64 * step)
            .take_while(|&t| t <= max_eta + 1e-12 && t < 1.0)
            .collect();
        let cells = thresholds
            .iter()
            .map(|&t| {
                grid.eps_tilde
                    .iter()
                    .map(|&e| {
                        let d = table.lookup(e, t, grid.lookup)?;
                        if d <= 0.0 {
                            return Ok(None);
                        }
                        match nu_value(params.q0, d, params.alpha_frac) {
                            Ok(nu) => Ok(Some((d, nu))),
                            Err(BoundsError::Infeasible(_)) => Ok(None),
                            Err(e) => Err(e),
                        }
                    })
                    .collect()
            })
            .collect::<Result<_, BoundsError>>()?;
        Ok(Self { thresholds, cells })
    }

    fn best(&self, eta: f64, params: &Fig2Params, grid: &OptimizerGrid) -> Fig2Point {
        let prefactor = alpha_factor(params.alpha.unwrap_or(f64::INFINITY));
        let mut out = Fig2Point {
            eta,
            q0: params.q0,
            best_eps_lb: 0.0,
            eta_thres: None,
            eps_thres: None,
            eps_tilde: None,
            delta_tilde: None,
            nu: None,
            all_infeasible: true,
        };
        if eta <= 0.0 {
            return out;
        }
        let mut best = f64::NEG_INFINITY;
        for (k, &t) in self.thresholds.iter().enumerate().take_while(|(_, &t)| t <= eta + 1e-12) {
            for (e, &eps_tilde) in grid.eps_tilde.iter().enumerate() {
                let eps_thres = eps_tilde / eta;
                let Some((d, nu)) = self.cells[k][e] else { continue };
                if eps_thres > 1.0 {
                    continue;
                }
                out.all_infeasible = false;
                let lb = prefactor * ((eta - t) / (1.0 - t) - 1.0 + nu) * eps_thres;
                if lb > best {
                    best = lb;
                    out.eta_thres = Some(t);
                    out.eps_thres = Some(eps_thres);
                    out.eps_tilde = Some(eps_tilde);
                    out.delta_tilde = Some(d);
                    out.nu = Some(nu);
                }
            }
        }
        out.best_eps_lb = best.max(0.0);
        out
    }
}

/// Best `ε^LB` at transmission `eta` over the threshold grid, with ν from
/// the δ̃ table.
pub fn optimize_thresholds(
    eta: f64,
    params: &Fig2Params,
    table: &DeltaTildeTable,
    grid: &OptimizerGrid,
) -> Result<Fig2Point, BoundsError> {
    Ok(eta_sweep(&[eta], params, table, grid)?.remove(0))
}

pub fn eta_sweep(
    etas: &[f64],
    params: &Fig2Params,
    table: &DeltaTildeTable,
    grid: &OptimizerGrid,
) -> Result<Vec<Fig2Point>, BoundsError> {
    if let Some(&bad) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(BoundsError::Domain(format!("eta = {bad} outside [0, 1]")));
    }
    let max_eta = etas.iter().copied().fold(0.0, f64::max);
    let nus = NuGrid::new(max_eta, params, table, grid)?;
    Ok(etas.par_iter().map(|&eta| nus.best(eta, params, grid)).collect())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::bounds::{eps_lower_bound, PartitionParams, TableEntry, TableMeta};

    fn etas() -> Vec<f64> {
        (0..=100).map(|i| i as f64 / 100.0).collect()
    }

    #[test]
    fn logspace_ends() {
        let g = logspace(1e-4, 0.5, 50);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 1e-4).abs() < 1e-18 && (g[49] - 0.5).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn stub_curves() {
        let table = DeltaTildeTable::stub();
        let grid = OptimizerGrid::default();
        let p10 = Fig2Params { q0: 10.0, ..Default::default() };
        let p15 = Fig2Params { q0: 15.0, ..Default::default() };
        let c10 = eta_sweep(&etas(), &p10, &table, &grid).unwrap();
        let c15 = eta_sweep(&etas(), &p15, &table, &grid).unwrap();
        for (a, b) in c10.iter().zip(&c15) {
            assert!(b.best_eps_lb >= a.best_eps_lb, "eta {}: {} < {}", a.eta, b.best_eps_lb, a.best_eps_lb);
        }
        assert!(c10.windows(2).all(|w| w[1].best_eps_lb >= w[0].best_eps_lb));
        assert!(c10[100].best_eps_lb > 0.0);
        assert_eq!(c10[50].best_eps_lb, 0.0);
    }

    #[test]
    fn optimum_matches_direct_formula() {
        let table = DeltaTildeTable::stub();
        let grid = OptimizerGrid::default();
        let params = Fig2Params::default();
        let pt = optimize_thresholds(0.95, &params, &table, &grid).unwrap();
        let direct = eps_lower_bound(&PartitionParams {
            eta: 0.95,
            eta_thres: pt.eta_thres.unwrap(),
            eps_thres: pt.eps_thres.unwrap(),
            nu: pt.nu.unwrap(),
            alpha: f64::INFINITY,
        })
        .unwrap();
        assert!((direct.value - pt.best_eps_lb).abs() < 1e-15);
    }

    #[test]
    fn all_infeasible_is_flagged() {
        let meta = TableMeta { npa_level: 1, solver_tol: 0.0, extra: BTreeMap::new() };
        let grid: Vec<TableEntry> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
            .iter()
            .map(|&(eps_tilde, eta_tilde)| TableEntry { eps_tilde, eta_tilde, delta_tilde: 1e-300 })
            .collect();
        let table = DeltaTildeTable::new(meta, grid).unwrap();
        let params = Fig2Params { q0: 1.0, ..Default::default() };
        let pt = optimize_thresholds(0.9, &params, &table, &OptimizerGrid::default()).unwrap();
        assert!(pt.all_infeasible && pt.best_eps_lb == 0.0 && pt.eta_thres.is_none());
    }

    #[test]
    fn uncovered_grid_is_an_error() {
        let table = DeltaTildeTable::stub();
        let grid = OptimizerGrid { eps_tilde: vec![0.6], ..Default::default() };
        assert!(matches!(
            optimize_thresholds(0.9, &Fig2Params::default(), &table, &grid),
            Err(BoundsError::Coverage { .. })
        ));
    }
}
