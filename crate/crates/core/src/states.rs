//! Density matrices: validation, the example state families, and a
//! seeded sampler of fully separable states.
//!
//! Basis ordering is |i₁ i₂ … iₙ⟩ with the first party's index slowest,
//! so a bipartite m⊗n state is an m×m array of n×n blocks.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::{hermitian_eigenvalues, kron, CMatrix, MatError};

/// Tolerance for the Hermitian, unit-trace and PSD checks.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("NOT_HERMITIAN: max |rho_ij - conj(rho_ji)| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("TRACE_NOT_ONE: |trace - 1| = {deviation:e}")]
    TraceNotOne { deviation: f64 },
    #[error("NOT_PSD: minimum eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("DIMENSION_MISMATCH: {0}")]
    DimensionMismatch(String),
    #[error("{family} parameter {value} outside its domain {domain}")]
    ParameterOutOfDomain {
        family: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("state vector has zero norm")]
    ZeroVector,
    #[error("mixture weights invalid: {0}")]
    Weights(String),
    #[error("malformed state file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

impl StateError {
    /// True for errors raised by the invariant checks in [`validate`].
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            StateError::NotHermitian { .. }
                | StateError::TraceNotOne { .. }
                | StateError::NotPsd { .. }
                | StateError::DimensionMismatch(_)
                | StateError::ParameterOutOfDomain { .. }
        )
    }
}

/// A validated density matrix together with its subsystem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates and wraps `matrix`.
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self, StateError> {
        validate(DensityMatrix { dims, matrix })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_parties(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        // trace(ρ²) = Σ|ρ_ij|² for Hermitian ρ
        self.matrix.frobenius_norm_sqr()
    }

    /// Partial transpose over one party (0-indexed).
    pub fn partial_transpose(&self, party: usize) -> Result<CMatrix, StateError> {
        if party >= self.dims.len() {
            return Err(StateError::DimensionMismatch(format!(
                "party {} out of range for {} subsystems",
                party + 1,
                self.dims.len()
            )));
        }
        let d = self.dims[party];
        let inner: usize = self.dims[party + 1..].iter().product();
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for r in 0..n {
            let rp = (r / inner) % d;
            for c in 0..n {
                let cp = (c / inner) % d;
                let r2 = r + (cp * inner) - (rp * inner);
                let c2 = c + (rp * inner) - (cp * inner);
                out[(r2, c2)] = self.matrix[(r, c)];
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            dims: self.dims.clone(),
            matrix: (0..self.dim())
                .map(|i| self.matrix.row(i).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("state serialization cannot fail")
    }

    /// Parses the JSON state format and validates the result.
    pub fn from_json(text: &str) -> Result<Self, StateError> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| StateError::Malformed(e.to_string()))?;
        let rows = file.matrix.len();
        if file.matrix.iter().any(|r| r.len() != rows) {
            return Err(StateError::Malformed(
                "matrix must be a square array of [re, im] pairs".into(),
            ));
        }
        let data = file
            .matrix
            .into_iter()
            .flatten()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        let matrix = CMatrix::from_vec(rows, rows, data).map_err(|e| StateError::Malformed(e.to_string()))?;
        DensityMatrix::new(file.dims, matrix)
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    dims: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Returns the state unchanged if it is Hermitian, unit-trace and PSD.
pub fn validate(dm: DensityMatrix) -> Result<DensityMatrix, StateError> {
    let DensityMatrix { dims, matrix } = &dm;
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(StateError::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} must be nonempty and each at least 2"
        )));
    }
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    if !matrix.is_square() || total != Some(matrix.rows()) {
        return Err(StateError::DimensionMismatch(format!(
            "{}x{} matrix for dims {dims:?}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let deviation = matrix.hermitian_deviation().unwrap_or(f64::INFINITY);
    if deviation > STATE_TOL {
        return Err(StateError::NotHermitian { deviation });
    }
    let deviation = (matrix.trace() - 1.0).norm();
    if deviation > STATE_TOL {
        return Err(StateError::TraceNotOne { deviation });
    }
    let min_eigenvalue = hermitian_eigenvalues(matrix)?.min().unwrap_or(0.0);
    if min_eigenvalue < -STATE_TOL {
        return Err(StateError::NotPsd { min_eigenvalue });
    }
    Ok(dm)
}

/// |ψ⟩⟨ψ| for the normalized `amplitudes`.
pub fn pure_state(amplitudes: &[Complex64], dims: &[usize]) -> Result<DensityMatrix, StateError> {
    let expected: usize = dims.iter().product();
    if amplitudes.len() != expected {
        return Err(StateError::DimensionMismatch(format!(
            "{} amplitudes for dims {dims:?}",
            amplitudes.len()
        )));
    }
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(StateError::ZeroVector);
    }
    let psi: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
    DensityMatrix::new(dims.to_vec(), CMatrix::outer(&psi, &psi))
}

/// Convex combination Σ wᵢ ρᵢ.
pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<DensityMatrix, StateError> {
    if weights.len() != states.len() || states.is_empty() {
        return Err(StateError::Weights(format!(
            "{} weights for {} states",
            weights.len(),
            states.len()
        )));
    }
    if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
        return Err(StateError::Weights("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(StateError::Weights(format!("weights sum to {total}, expected 1")));
    }
    let dims = states[0].dims.clone();
    if let Some(bad) = states.iter().find(|s| s.dims != dims) {
        return Err(StateError::DimensionMismatch(format!(
            "mixture of dims {dims:?} and {:?}",
            bad.dims
        )));
    }
    let mut acc = CMatrix::zeros(states[0].dim(), states[0].dim());
    for (w, s) in weights.iter().zip(states) {
        acc = acc.add(&s.matrix.scale(*w))?;
    }
    DensityMatrix::new(dims, acc)
}

/// Computational-basis index of the digits `digits` (first party major).
pub fn basis_index(dims: &[usize], digits: &[usize]) -> usize {
    dims.iter().zip(digits).fold(0, |acc, (&d, &x)| acc * d + x)
}

fn ket(dims: &[usize], terms: &[(f64, &[usize])]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dims.iter().product()];
    for &(amp, digits) in terms {
        v[basis_index(dims, digits)] += amp;
    }
    v
}

fn check_domain(family: &'static str, value: f64, lo: f64, hi: f64, domain: &'static str) -> Result<(), StateError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(StateError::ParameterOutOfDomain { family, value, domain })
    }
}

/// Lower end of the d-range on which `rho_d` is positive semidefinite.
pub fn rho_d_min() -> f64 {
    (25.0 - 141f64.sqrt()) / 50.0
}

/// Upper end of the d-range on which `rho_d` is positive semidefinite.
pub fn rho_d_max() -> f64 {
    (25.0 + 141f64.sqrt()) / 100.0
}

/// The 3⊗3 NPT family with corner couplings −11/50.
///
/// Only PSD for d in [`rho_d_min`], [`rho_d_max`]; other values fail
/// validation with `NOT_PSD`.
pub fn rho_d(d: f64) -> Result<DensityMatrix, StateError> {
    if !d.is_finite() {
        return Err(StateError::ParameterOutOfDomain {
            family: "rho_d",
            value: d,
            domain: "[(25-sqrt 141)/50, (25+sqrt 141)/100]",
        });
    }
    let c = -11.0 / 50.0;
    let mut m = CMatrix::from_real_diag(&[(1.0 - d) / 2.0, 0.0, 0.0, 0.0, 0.5 - d, d, 0.0, 0.0, d / 2.0]);
    m[(0, 8)] = c.into();
    m[(8, 0)] = c.into();
    m[(4, 5)] = c.into();
    m[(5, 4)] = c.into();
    DensityMatrix::new(vec![3, 3], m)
}

/// The 3⊗3 PPT entangled family, normalized by N = 3(1 + ε² + 1/ε²).
pub fn rho_eps(eps: f64) -> Result<DensityMatrix, StateError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(StateError::ParameterOutOfDomain {
            family: "rho_eps",
            value: eps,
            domain: "(0, inf)",
        });
    }
    let e2 = eps * eps;
    let ie2 = 1.0 / e2;
    let mut m = CMatrix::from_real_diag(&[1.0, ie2, e2, e2, 1.0, ie2, ie2, e2, 1.0]);
    for (i, j) in [(0, 4), (0, 8), (4, 8), (1, 3), (2, 6), (5, 7)] {
        m[(i, j)] = 1.0.into();
        m[(j, i)] = 1.0.into();
    }
    let n = 3.0 * (1.0 + e2 + ie2);
    DensityMatrix::new(vec![3, 3], m.scale(1.0 / n))
}

/// The six orthonormal 4⊗4 kets mixed by [`rho_pq`].
pub fn rho_pq_kets() -> [Vec<Complex64>; 6] {
    let d = [4, 4];
    let h = FRAC_1_SQRT_2;
    [
        ket(&d, &[(h, &[0, 1]), (h, &[2, 3])]),
        ket(&d, &[(h, &[1, 0]), (h, &[3, 2])]),
        ket(&d, &[(h, &[1, 1]), (h, &[2, 2])]),
        ket(&d, &[(h, &[0, 0]), (-h, &[3, 3])]),
        ket(&d, &[(0.5, &[0, 3]), (0.5, &[1, 2]), (h, &[2, 1])]),
        ket(&d, &[(-0.5, &[0, 3]), (0.5, &[1, 2]), (h, &[3, 0])]),
    ]
}

/// The PPT-invariant point q₀ = (√2 − 1)/2 of [`rho_pq`].
pub fn rho_pq_q0() -> f64 {
    (2f64.sqrt() - 1.0) / 2.0
}

/// p Σ₁⁴|ψᵢ⟩⟨ψᵢ| + q Σ₅⁶|ψᵢ⟩⟨ψᵢ| on 4⊗4 with p = (1 − 2q)/4.
pub fn rho_pq(q: f64) -> Result<DensityMatrix, StateError> {
    check_domain("rho_pq", q, 0.0, 0.5, "[0, 1/2]")?;
    let p = (1.0 - 2.0 * q) / 4.0;
    let mut m = CMatrix::zeros(16, 16);
    for (i, k) in rho_pq_kets().iter().enumerate() {
        let w = if i < 4 { p } else { q };
        m = m.add(&CMatrix::outer(k, k).scale(w))?;
    }
    DensityMatrix::new(vec![4, 4], m)
}

pub fn ghz3_ket() -> Vec<Complex64> {
    ket(&[2, 2, 2], &[(FRAC_1_SQRT_2, &[0, 0, 0]), (FRAC_1_SQRT_2, &[1, 1, 1])])
}

pub fn w3_ket() -> Vec<Complex64> {
    let a = 1.0 / 3f64.sqrt();
    ket(&[2, 2, 2], &[(a, &[0, 0, 1]), (a, &[0, 1, 0]), (a, &[1, 0, 0])])
}

/// q|GHZ⟩⟨GHZ| + (1 − q)|W⟩⟨W| on three qubits.
pub fn ghz_w(q: f64) -> Result<DensityMatrix, StateError> {
    check_domain("ghz_w", q, 0.0, 1.0, "[0, 1]")?;
    let dims = [2, 2, 2];
    let ghz = pure_state(&ghz3_ket(), &dims)?;
    let w = pure_state(&w3_ket(), &dims)?;
    mixture(&[q, 1.0 - q], &[ghz, w])
}

/// (1 − x)/16 · I₁₆ + x |GHZ₄⟩⟨GHZ₄|.
pub fn noisy_ghz4(x: f64) -> Result<DensityMatrix, StateError> {
    check_domain("noisy_ghz4", x, 0.0, 1.0, "[0, 1]")?;
    let psi = ket(
        &[2, 2, 2, 2],
        &[(FRAC_1_SQRT_2, &[0, 0, 0, 0]), (FRAC_1_SQRT_2, &[1, 1, 1, 1])],
    );
    let m = CMatrix::identity(16)
        .scale((1.0 - x) / 16.0)
        .add(&CMatrix::outer(&psi, &psi).scale(x))?;
    DensityMatrix::new(vec![2, 2, 2, 2], m)
}

/// Random fully separable state Σₖ wₖ ⊗ᵢ |φₖᵢ⟩⟨φₖᵢ|.
///
/// Factors are normalized complex-Gaussian vectors and weights are
/// normalized Exp(1) draws. Deterministic for a given seed.
pub fn sample_separable(dims: &[usize], num_terms: usize, seed: u64) -> Result<DensityMatrix, StateError> {
    if num_terms == 0 {
        return Err(StateError::Weights("need at least one product term".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..num_terms).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();

    let n: usize = dims.iter().product();
    let mut acc = CMatrix::zeros(n, n);
    for w in weights {
        let mut term = CMatrix::identity(1);
        for &d in dims {
            let v: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
            term = kron(&term, &CMatrix::outer(&v, &v))?;
        }
        acc = acc.add(&term.scale(w / total))?;
    }
    DensityMatrix::new(dims.to_vec(), acc)
}

/// The parameterized example families, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    RhoD,
    RhoEps,
    RhoPq,
    GhzW,
    NoisyGhz4,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::RhoD,
        Family::RhoEps,
        Family::RhoPq,
        Family::GhzW,
        Family::NoisyGhz4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::RhoD => "rho_d",
            Family::RhoEps => "rho_eps",
            Family::RhoPq => "rho_pq",
            Family::GhzW => "ghz_w",
            Family::NoisyGhz4 => "noisy_ghz4",
        }
    }

    pub fn dims(self) -> &'static [usize] {
        match self {
            Family::RhoD | Family::RhoEps => &[3, 3],
            Family::RhoPq => &[4, 4],
            Family::GhzW => &[2, 2, 2],
            Family::NoisyGhz4 => &[2, 2, 2, 2],
        }
    }

    pub fn build(self, param: f64) -> Result<DensityMatrix, StateError> {
        match self {
            Family::RhoD => rho_d(param),
            Family::RhoEps => rho_eps(param),
            Family::RhoPq => rho_pq(param),
            Family::GhzW => ghz_w(param),
            Family::NoisyGhz4 => noisy_ghz4(param),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
            format!("unknown family '{s}' (expected one of {})", names.join(", "))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn validate_accepts_maximally_mixed() {
        let dm = DensityMatrix::new(vec![2], CMatrix::identity(2).scale(0.5)).unwrap();
        assert!((dm.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validate_errors() {
        let err = DensityMatrix::new(vec![2], CMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, StateError::TraceNotOne { deviation } if (deviation - 1.0).abs() < 1e-15));

        let m = CMatrix::from_real_diag(&[1.0, -1e-3]).scale(1.0 / (1.0 - 1e-3));
        let err = DensityMatrix::new(vec![2], m).unwrap_err();
        assert!(matches!(err, StateError::NotPsd { min_eigenvalue } if min_eigenvalue < -1e-4));

        let mut m = CMatrix::identity(2).scale(0.5);
        m[(0, 1)] = c(0.1);
        assert!(matches!(
            DensityMatrix::new(vec![2], m),
            Err(StateError::NotHermitian { .. })
        ));

        let err = DensityMatrix::new(vec![2, 2], CMatrix::identity(2).scale(0.5)).unwrap_err();
        assert!(matches!(err, StateError::DimensionMismatch(_)));
        assert!(err.is_validation());
    }

    #[test]
    fn pure_state_normalizes() {
        let prod = pure_state(&[c(1.0), c(0.0), c(0.0), c(0.0)], &[2, 2]).unwrap();
        assert_eq!(prod.matrix()[(0, 0)], c(1.0));
        let bell = pure_state(&[c(1.0), c(0.0), c(0.0), c(1.0)], &[2, 2]).unwrap();
        let bell2 = pure_state(&[c(2.0), c(0.0), c(0.0), c(2.0)], &[2, 2]).unwrap();
        assert!((bell.purity() - 1.0).abs() < 1e-14);
        assert!(bell.matrix().max_abs_diff(bell2.matrix()) < 1e-15);
        assert!(matches!(pure_state(&[c(0.0); 4], &[2, 2]), Err(StateError::ZeroVector)));
        assert!(pure_state(&[c(1.0); 3], &[2, 2]).is_err());
    }

    #[test]
    fn mixture_of_basis_states() {
        let zero = pure_state(&[c(1.0), c(0.0)], &[2]).unwrap();
        let one = pure_state(&[c(0.0), c(1.0)], &[2]).unwrap();
        let mixed = mixture(&[0.5, 0.5], &[zero.clone(), one]).unwrap();
        assert!(mixed.matrix().max_abs_diff(&CMatrix::identity(2).scale(0.5)) < 1e-15);
        assert_eq!(mixture(&[1.0], std::slice::from_ref(&zero)).unwrap(), zero);
        assert!(matches!(
            mixture(&[0.7, 0.7], &[zero.clone(), zero.clone()]),
            Err(StateError::Weights(_))
        ));
        let two = pure_state(&[c(1.0), c(0.0), c(0.0), c(0.0)], &[2, 2]).unwrap();
        assert!(matches!(
            mixture(&[0.5, 0.5], &[zero, two]),
            Err(StateError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rho_d_entries() {
        let dm = rho_d(0.3).unwrap();
        let m = dm.matrix();
        let diag: Vec<f64> = (0..9).map(|i| m[(i, i)].re).collect();
        let expected = [0.35, 0.0, 0.0, 0.0, 0.2, 0.3, 0.0, 0.0, 0.15];
        for (a, b) in diag.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(m[(0, 8)], c(-0.22));
        assert_eq!(m[(4, 5)], c(-0.22));
        assert!((m.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rho_d_psd_boundary() {
        for d in [rho_d_min(), rho_d_max()] {
            let dm = rho_d(d).unwrap();
            let min = hermitian_eigenvalues(dm.matrix()).unwrap().min().unwrap();
            assert!(min.abs() < 1e-9, "d = {d}: min eigenvalue {min}");
        }
        assert!(matches!(rho_d(0.2), Err(StateError::NotPsd { .. })));
        assert!(matches!(rho_d(0.4), Err(StateError::NotPsd { .. })));
    }

    #[test]
    fn rho_eps_normalization() {
        let n = 3.0 * (1.0 + 0.81 + 1.0 / 0.81);
        let dm = rho_eps(0.9).unwrap();
        assert!((dm.matrix()[(0, 0)].re - 1.0 / n).abs() < 1e-15);
        let n2 = 3.0 * (1.0 + 4.0 + 0.25);
        assert!((rho_eps(2.0).unwrap().matrix()[(1, 1)].re - 0.25 / n2).abs() < 1e-15);
        assert!(rho_eps(0.0).is_err());
        assert!(rho_eps(-1.0).is_err());
    }

    #[test]
    fn rho_eps_is_ppt() {
        for eps in [0.3, 0.9, 1.5, 4.0] {
            let dm = rho_eps(eps).unwrap();
            for party in 0..2 {
                let pt = dm.partial_transpose(party).unwrap();
                let min = hermitian_eigenvalues(&pt).unwrap().min().unwrap();
                assert!(min >= -1e-10, "eps {eps} party {party}: {min}");
            }
        }
    }

    #[test]
    fn rho_pq_kets_orthonormal() {
        let kets = rho_pq_kets();
        for (i, a) in kets.iter().enumerate() {
            for (j, b) in kets.iter().enumerate() {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rho_pq_properties() {
        let q0 = rho_pq_q0();
        let pt = rho_pq(q0).unwrap().partial_transpose(1).unwrap();
        assert!(hermitian_eigenvalues(&pt).unwrap().min().unwrap() >= -1e-10);

        let pt = rho_pq(0.4).unwrap().partial_transpose(1).unwrap();
        assert!(hermitian_eigenvalues(&pt).unwrap().min().unwrap() < -1e-3);

        for q in [0.0, 0.1, q0, 0.5] {
            let p = (1.0 - 2.0 * q) / 4.0;
            let dm = rho_pq(q).unwrap();
            assert!((dm.purity() - (4.0 * p * p + 2.0 * q * q)).abs() < 1e-12);
        }
        assert!(rho_pq(0.6).is_err());
        assert!(rho_pq(-0.1).is_err());
    }

    #[test]
    fn ghz_w_purities() {
        let ip: Complex64 = ghz3_ket().iter().zip(w3_ket()).map(|(x, y)| x.conj() * y).sum();
        assert_eq!(ip, c(0.0));
        assert!((ghz_w(1.0).unwrap().purity() - 1.0).abs() < 1e-14);
        assert!((ghz_w(0.0).unwrap().purity() - 1.0).abs() < 1e-14);
        assert!((ghz_w(0.5).unwrap().purity() - 0.5).abs() < 1e-14);
        assert!((ghz_w(0.3).unwrap().matrix().trace().re - 1.0).abs() < 1e-14);
        assert!(ghz_w(1.5).is_err());
    }

    #[test]
    fn noisy_ghz4_spectrum() {
        let mixed = noisy_ghz4(0.0).unwrap();
        assert!(mixed.matrix().max_abs_diff(&CMatrix::identity(16).scale(1.0 / 16.0)) < 1e-16);
        assert!((noisy_ghz4(1.0).unwrap().purity() - 1.0).abs() < 1e-14);
        let ev = hermitian_eigenvalues(noisy_ghz4(0.5).unwrap().matrix()).unwrap();
        let low = 0.5 / 16.0;
        assert!((ev.values()[0] - (low + 0.5)).abs() < 1e-14);
        assert!(ev.values()[1..].iter().all(|&x| (x - low).abs() < 1e-14));
        assert!(noisy_ghz4(-0.01).is_err());
    }

    #[test]
    fn partial_transpose_swaps_party_indices() {
        // ρ = |0⟩⟨1| ⊗ |1⟩⟨0| + h.c., scaled into a valid state with the identity.
        let dims = [2, 2];
        let mut m = CMatrix::identity(4).scale(0.25);
        let r = basis_index(&dims, &[0, 1]);
        let s = basis_index(&dims, &[1, 0]);
        m[(r, s)] = c(0.1);
        m[(s, r)] = c(0.1);
        let dm = DensityMatrix::new(dims.to_vec(), m).unwrap();
        let pt = dm.partial_transpose(1).unwrap();
        // ⟨0 1|ρ|1 0⟩ becomes ⟨0 0|ρ^T_B|1 1⟩
        assert_eq!(pt[(0, 3)], c(0.1));
        assert_eq!(pt[(r, s)], c(0.0));
        let pt_a = dm.partial_transpose(0).unwrap();
        assert_eq!(pt_a[(3, 0)], c(0.1));
        assert!(dm.partial_transpose(2).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_valid() {
        let a = sample_separable(&[2, 3], 4, 42).unwrap();
        let b = sample_separable(&[2, 3], 4, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_separable(&[2, 3], 4, 43).unwrap());
        let pure = sample_separable(&[2, 2], 1, 7).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-12);
        assert!(sample_separable(&[2, 2], 0, 7).is_err());
    }

    #[test]
    fn json_round_trip() {
        let dm = sample_separable(&[2, 2], 2, 5).unwrap();
        let back = DensityMatrix::from_json(&dm.to_json()).unwrap();
        assert_eq!(back, dm);
        assert!(matches!(
            DensityMatrix::from_json("{\"dims\": [2]"),
            Err(StateError::Malformed(_))
        ));
        let bad = r#"{"dims":[2],"matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#;
        assert!(matches!(
            DensityMatrix::from_json(bad),
            Err(StateError::TraceNotOne { .. })
        ));
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("bell".parse::<Family>().is_err());
    }
}
