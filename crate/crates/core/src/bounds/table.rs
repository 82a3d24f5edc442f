use std::collections::BTreeMap;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::BoundsError;

/// Synthetic δ̃ table bundled for running without solver output.
pub const STUB_TABLE_JSON: &str = include_str!("../../data/delta_tilde_stub.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TableMeta {
    pub npa_level: u32,
    pub solver_tol: f64,
    /// Generator, provenance, omitted points and anything else the producer
    /// records.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub eps_tilde: f64,
    pub eta_tilde: f64,
    pub delta_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Lookup {
    /// Smallest δ̃ among the surrounding grid corners.
    #[default]
    Conservative,
    Bilinear,
}

/// δ̃(ε̃, η̃) on a rectangular grid; points the producer omitted are holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DeltaTildeTable {
    pub meta: TableMeta,
    pub grid: Vec<TableEntry>,
    #[serde(skip)]
    eps_axis: Vec<f64>,
    #[serde(skip)]
    eta_axis: Vec<f64>,
    /// `values[i][j]` at `(eps_axis[i], eta_axis[j])`.
    #[serde(skip)]
    values: Vec<Vec<Option<f64>>>,
}

fn axis(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn position(axis: &[f64], x: f64) -> usize {
    axis.binary_search_by(|a| a.total_cmp(&x)).expect("value taken from the axis")
}

impl DeltaTildeTable {
    pub fn from_json(s: &str) -> Result<Self, BoundsError> {
        let raw: DeltaTildeTable = serde_json::from_str(s).map_err(|e| BoundsError::Table(e.to_string()))?;
        Self::new(raw.meta, raw.grid)
    }

    pub fn stub() -> Self {
        Self::from_json(STUB_TABLE_JSON).expect("bundled table is valid")
    }

    /// Checks ranges and that δ̃ does not increase with ε̃ at fixed η̃, within
    /// `max(solver_tol, 1e-12)`.
    pub fn new(meta: TableMeta, grid: Vec<TableEntry>) -> Result<Self, BoundsError> {
        let bad = |msg: String| Err(BoundsError::Table(msg));
        if !(meta.solver_tol >= 0.0 && meta.solver_tol.is_finite()) {
            return bad(format!("solver_tol = {} must be a nonnegative number", meta.solver_tol));
        }
        if grid.is_empty() {
            return bad("grid is empty".into());
        }
        for e in &grid {
            if !(0.0..=1.0).contains(&e.eps_tilde) || !(0.0..=1.0).contains(&e.eta_tilde) {
                return bad(format!("point ({}, {}) outside [0, 1]^2", e.eps_tilde, e.eta_tilde));
            }
            if !(0.0..=1.0).contains(&e.delta_tilde) {
                return bad(format!("delta_tilde = {} outside [0, 1] at ({}, {})", e.delta_tilde, e.eps_tilde, e.eta_tilde));
            }
        }
        let eps_axis = axis(grid.iter().map(|e| e.eps_tilde).collect());
        let eta_axis = axis(grid.iter().map(|e| e.eta_tilde).collect());
        let mut values = vec![vec![None; eta_axis.len()]; eps_axis.len()];
        for e in &grid {
            let slot = &mut values[position(&eps_axis, e.eps_tilde)][position(&eta_axis, e.eta_tilde)];
            if slot.is_some() {
                return bad(format!("duplicate point ({}, {})", e.eps_tilde, e.eta_tilde));
            }
            *slot = Some(e.delta_tilde);
        }
        let tol = meta.solver_tol.max(1e-12);
        for (j, eta) in eta_axis.iter().enumerate() {
            let column: Vec<(f64, f64)> =
                eps_axis.iter().enumerate().filter_map(|(i, &eps)| values[i][j].map(|d| (eps, d))).collect();
            for w in column.windows(2) {
                if w[1].1 > w[0].1 + tol {
                    return bad(format!(
                        "delta_tilde increases with eps_tilde at eta_tilde = {eta}: {} at {} -> {} at {}",
                        w[0].1, w[0].0, w[1].1, w[1].0
                    ));
                }
            }
        }
        Ok(Self { meta, grid, eps_axis, eta_axis, values })
    }

    pub fn eps_range(&self) -> (f64, f64) {
        (self.eps_axis[0], self.eps_axis[self.eps_axis.len() - 1])
    }

    pub fn eta_range(&self) -> (f64, f64) {
        (self.eta_axis[0], self.eta_axis[self.eta_axis.len() - 1])
    }

    pub fn provenance(&self) -> Option<&str> {
        self.meta.extra.get("provenance").and_then(|v| v.as_str())
    }

    /// Grid cell `(lo, hi, t)` holding `x`, with `t` the fractional offset.
    fn bracket(axis: &[f64], x: f64) -> Option<(usize, usize, f64)> {
        if x < axis[0] || x > axis[axis.len() - 1] || x.is_nan() {
            return None;
        }
        let hi = axis.partition_point(|&a| a < x);
        if axis[hi] == x {
            return Some((hi, hi, 0.0));
        }
        let lo = hi - 1;
        Some((lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo])))
    }

    pub fn lookup(&self, eps_tilde: f64, eta_tilde: f64, mode: Lookup) -> Result<f64, BoundsError> {
        let gap = BoundsError::Coverage { eps_tilde, eta_tilde };
        let (Some((i0, i1, s)), Some((j0, j1, t))) =
            (Self::bracket(&self.eps_axis, eps_tilde), Self::bracket(&self.eta_axis, eta_tilde))
        else {
            return Err(gap);
        };
        let corner = |i: usize, j: usize| self.values[i][j].ok_or(gap.clone());
        let (a, b, c, d) = (corner(i0, j0)?, corner(i1, j0)?, corner(i0, j1)?, corner(i1, j1)?);
        Ok(match mode {
            Lookup::Conservative => a.min(b).min(c).min(d),
            Lookup::Bilinear => (1.0 - s) * (1.0 - t) * a + s * (1.0 - t) * b + (1.0 - s) * t * c + s * t * d,
        })
    }
}
