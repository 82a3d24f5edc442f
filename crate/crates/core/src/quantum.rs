//! Single-qubit arithmetic: BB84 states, projective measurement in X-Z plane
//! bases, trace distance and the binary entropy function with its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on normalization, hermiticity and trace checks.
pub const STATE_TOL: f64 = 1e-12;

const ENTROPY_INV_MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("state is not normalized: norm^2 = {0}")]
    NotNormalized(f64),
    #[error("basis angle {0} outside [0, pi)")]
    AngleOutOfRange(f64),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix has negative eigenvalue {0}")]
    NotPositive(f64),
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    amp0: Complex64,
    amp1: Complex64,
}

impl PureState {
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self, QuantumError> {
        let n = amp0.norm_sqr() + amp1.norm_sqr();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::NotNormalized(n));
        }
        Ok(Self { amp0, amp1 })
    }

    /// Normalizes arbitrary (non-zero) amplitudes.
    pub fn normalized(amp0: Complex64, amp1: Complex64) -> Self {
        let n = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        Self { amp0: amp0 / n, amp1: amp1 / n }
    }

    pub fn real(a0: f64, a1: f64) -> Self {
        Self::normalized(Complex64::new(a0, 0.0), Complex64::new(a1, 0.0))
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        (self.amp0, self.amp1)
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    pub fn projector(&self) -> DensityMatrix2 {
        let (a, b) = (self.amp0, self.amp1);
        DensityMatrix2 { m: [[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]] }
    }

    /// Haar-random state, used by property tests and samplers.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let a0 = Complex64::new(g[0], g[1]);
            let a1 = Complex64::new(g[2], g[3]);
            if a0.norm_sqr() + a1.norm_sqr() > 1e-12 {
                return Self::normalized(a0, a1);
            }
        }
    }
}

/// Index of one of the four BB84 states: 0 = |0>, 1 = |1>, 2 = |+>, 3 = |->.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bb84State(u8);

impl Bb84State {
    pub const ALL: [Bb84State; 4] = [Bb84State(0), Bb84State(1), Bb84State(2), Bb84State(3)];

    pub fn new(basis: bool, value: bool) -> Self {
        Self(2 * basis as u8 + value as u8)
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < 4, "BB84 state index {index} out of range");
        Self(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// `false` for Z, `true` for X.
    pub fn basis(self) -> bool {
        self.0 >= 2
    }

    pub fn value(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn state(self) -> PureState {
        bb84_state(self.basis(), self.value())
    }
}

/// `|0>,|1>` for basis 0 and `|+>,|->` for basis 1.
pub fn bb84_state(basis: bool, value: bool) -> PureState {
    match (basis, value) {
        (false, false) => PureState::real(1.0, 0.0),
        (false, true) => PureState::real(0.0, 1.0),
        (true, false) => PureState { amp0: FRAC_1_SQRT_2.into(), amp1: FRAC_1_SQRT_2.into() },
        (true, true) => PureState { amp0: FRAC_1_SQRT_2.into(), amp1: (-FRAC_1_SQRT_2).into() },
    }
}

/// A measurement basis in the X-Z plane. Outcome 0 projects onto
/// `cos(a/2)|0> + sin(a/2)|1>`, so `a = 0` is Z and `a = pi/2` is X.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BasisAngle(f64);

impl BasisAngle {
    pub const Z: BasisAngle = BasisAngle(0.0);
    pub const X: BasisAngle = BasisAngle(PI / 2.0);

    pub fn new(angle: f64) -> Result<Self, QuantumError> {
        if !(0.0..PI).contains(&angle) {
            return Err(QuantumError::AngleOutOfRange(angle));
        }
        Ok(Self(angle))
    }

    /// The `index`-th of `count` equally spaced bases, `index * pi / count`.
    pub fn equally_spaced(index: usize, count: usize) -> Self {
        assert!(index < count);
        Self(index as f64 * PI / count as f64)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn vector(self, outcome: bool) -> PureState {
        let (c, s) = ((self.0 / 2.0).cos(), (self.0 / 2.0).sin());
        if outcome {
            PureState::real(-s, c)
        } else {
            PureState::real(c, s)
        }
    }
}

/// Born-rule probability of `outcome` when measuring `state` in `basis`.
pub fn outcome_probability(state: &PureState, basis: BasisAngle, outcome: bool) -> f64 {
    basis.vector(outcome).inner(state).norm_sqr()
}

/// A qubit in flight. Not `Clone`: measuring consumes it.
#[derive(Debug)]
pub struct Qubit(PureState);

impl Qubit {
    pub fn prepare(state: PureState) -> Self {
        Self(state)
    }

    pub fn measure<R: Rng + ?Sized>(self, basis: BasisAngle, rng: &mut R) -> bool {
        let p0 = outcome_probability(&self.0, basis, false);
        rng.random::<f64>() >= p0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    m: [[Complex64; 2]; 2],
}

impl DensityMatrix2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self, QuantumError> {
        let herm = |a: Complex64, b: Complex64| (a - b.conj()).norm() <= STATE_TOL;
        if !(herm(m[0][0], m[0][0]) && herm(m[1][1], m[1][1]) && herm(m[0][1], m[1][0])) {
            return Err(QuantumError::NotHermitian);
        }
        let tr = m[0][0].re + m[1][1].re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::BadTrace(tr));
        }
        let (lo, _) = hermitian_eigenvalues(&m);
        if lo < -STATE_TOL {
            return Err(QuantumError::NotPositive(lo));
        }
        Ok(Self { m })
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }
}

fn hermitian_eigenvalues(m: &[[Complex64; 2]; 2]) -> (f64, f64) {
    let (a, d) = (m[0][0].re, m[1][1].re);
    let half_tr = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + m[0][1].norm_sqr()).sqrt();
    (half_tr - r, half_tr + r)
}

/// `1/2 ||rho - sigma||_1`, from the eigenvalues of the difference.
pub fn trace_distance(rho: &DensityMatrix2, sigma: &DensityMatrix2) -> f64 {
    let mut d = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = rho.m[i][j] - sigma.m[i][j];
        }
    }
    let (l0, l1) = hermitian_eigenvalues(&d);
    (0.5 * (l0.abs() + l1.abs())).min(1.0)
}

/// `sqrt(1 - |<psi0|psi1>|^2)`.
pub fn trace_distance_pure(psi0: &PureState, psi1: &PureState) -> f64 {
    (1.0 - psi0.inner(psi1).norm_sqr()).max(0.0).sqrt()
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64, QuantumError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QuantumError::Domain(x));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// The unique `x` in `[0, 1/2]` with `h(x) = y`, by bisection.
///
/// Bisection runs until the bracket stops shrinking in floating point (or
/// 200 halvings), which leaves `|h(x) - y|` well under 1e-12.
pub fn binary_entropy_inv(y: f64) -> Result<f64, QuantumError> {
    if !(0.0..=1.0).contains(&y) {
        return Err(QuantumError::Domain(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..ENTROPY_INV_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // h is increasing on [0, 1/2]; mid is strictly inside (0, 1/2).
        if binary_entropy(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (hl, hh) = (binary_entropy(lo)?, binary_entropy(hi)?);
    Ok(if (hl - y).abs() <= (hh - y).abs() { lo } else { hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bb84_amplitudes() {
        let s = bb84_state(false, false).amplitudes();
        assert_eq!((s.0.re, s.1.re), (1.0, 0.0));
        let p = bb84_state(true, false).amplitudes();
        assert!(close(p.0.re, FRAC_1_SQRT_2, 1e-15) && close(p.1.re, FRAC_1_SQRT_2, 1e-15));
        let m = bb84_state(true, true).amplitudes();
        assert!(close(m.0.re, FRAC_1_SQRT_2, 1e-15) && close(m.1.re, -FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn born_rule_examples() {
        let zero = bb84_state(false, false);
        assert!(close(outcome_probability(&zero, BasisAngle::X, false), 0.5, 1e-12));
        assert!(close(outcome_probability(&zero, BasisAngle::Z, false), 1.0, 1e-12));
        let p = outcome_probability(&zero, BasisAngle::new(PI / 4.0).unwrap(), false);
        assert!(close(p, (PI / 8.0).cos().powi(2), 1e-12));
        assert!(close(p, 0.85355, 1e-5));
    }

    #[test]
    fn born_rule_matches_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let basis = BasisAngle::new(PI / 4.0).unwrap();
        let n = 200_000;
        let zeros = (0..n)
            .filter(|_| !Qubit::prepare(bb84_state(false, false)).measure(basis, &mut rng))
            .count();
        let freq = zeros as f64 / n as f64;
        let p: f64 = 0.853_553_390_593_273_7;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn angle_range_is_enforced() {
        assert!(BasisAngle::new(PI).is_err());
        assert!(BasisAngle::new(-0.1).is_err());
        assert_eq!(BasisAngle::equally_spaced(1, 2), BasisAngle::X);
    }

    #[test]
    fn trace_distance_examples() {
        let p0 = bb84_state(false, false).projector();
        let p1 = bb84_state(false, true).projector();
        let pp = bb84_state(true, false).projector();
        assert!(close(trace_distance(&p0, &p0), 0.0, 1e-15));
        assert!(close(trace_distance(&p0, &p1), 1.0, 1e-15));
        assert!(close(trace_distance(&p0, &pp), FRAC_1_SQRT_2, 1e-12));
        let plus = bb84_state(true, false);
        assert!(close(trace_distance_pure(&plus, &plus), 0.0, 1e-7));
        assert!(close(trace_distance_pure(&bb84_state(false, false), &bb84_state(false, true)), 1.0, 1e-15));
        assert!(close(trace_distance_pure(&bb84_state(false, false), &plus), 0.70711, 1e-5));
    }

    #[test]
    fn density_matrix_validation() {
        let c = |r: f64, i: f64| Complex64::new(r, i);
        assert_eq!(
            DensityMatrix2::new([[c(0.5, 0.0), c(0.1, 0.2)], [c(0.1, 0.2), c(0.5, 0.0)]]),
            Err(QuantumError::NotHermitian)
        );
        assert!(matches!(
            DensityMatrix2::new([[c(0.6, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.6, 0.0)]]),
            Err(QuantumError::BadTrace(_))
        ));
        assert!(matches!(
            DensityMatrix2::new([[c(0.5, 0.0), c(0.9, 0.0)], [c(0.9, 0.0), c(0.5, 0.0)]]),
            Err(QuantumError::NotPositive(_))
        ));
        assert!(DensityMatrix2::new([[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.5, 0.0)]]).is_ok());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // mpmath, 30 digits
        assert!(close(binary_entropy(0.11).unwrap(), 0.499_915_958_164_528_0, 1e-14));
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy_inv(-0.1).is_err());
    }

    #[test]
    fn entropy_inverse_examples() {
        assert_eq!(binary_entropy_inv(1.0).unwrap(), 0.5);
        assert_eq!(binary_entropy_inv(0.0).unwrap(), 0.0);
        let x = binary_entropy_inv(0.5).unwrap();
        assert!(close(x, 0.110_027_864_438_359_55, 1e-12), "{x}");
        assert!(close(binary_entropy(x).unwrap(), 0.5, 1e-12));
    }

    #[test]
    fn entropy_inverse_round_trip_on_grid() {
        for i in 0..=500 {
            let x = i as f64 * 1e-3;
            let back = binary_entropy_inv(binary_entropy(x).unwrap()).unwrap();
            assert!(close(back, x, 1e-9), "x = {x}, back = {back}");
        }
    }

    #[test]
    fn entropy_inverse_forward_residual() {
        for i in 1..1000 {
            let y = i as f64 / 1000.0;
            let x = binary_entropy_inv(y).unwrap();
            assert!(close(binary_entropy(x).unwrap(), y, 1e-12));
        }
    }
}
