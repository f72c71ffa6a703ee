//! Dense complex matrices and the spectral routines needed for small
//! quantum states: Kronecker products, Hermitian eigenvalues and
//! singular values.
//!
//! Everything here targets matrices of side at most a few dozen. Both
//! spectral routines are Jacobi methods: cubic per sweep, but robust and
//! accurate for the rank-deficient matrices that realignment produces.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use thiserror::Error;

/// Largest matrix side accepted by [`kron`].
pub const MAX_DIM: usize = 4096;

/// Hermiticity deviation tolerated by [`hermitian_eigenvalues`].
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Relative off-diagonal mass at which the Jacobi sweeps stop.
const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("input too large: {rows}x{cols} exceeds the supported side {MAX_DIM}")]
    TooLarge { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// A dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data, rejecting bad lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::Shape(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatError::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatError::Shape("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_vec(r, c, data)
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    /// Column vector |v⟩.
    pub fn column(v: &[Complex64]) -> Self {
        CMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// The outer product |u⟩⟨v|.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn dagger(&self) -> Self {
        dagger(self)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Result<Self, MatError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::Shape(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<Self, MatError> {
        if self.cols != other.rows {
            return Err(MatError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Σ |a_ij|².
    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |a_ij − conj(a_ji)|, or `None` for non-square input.
    pub fn hermitian_deviation(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        Some(dev)
    }

    /// Largest elementwise distance to `other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panics on incompatible shapes; use [`CMatrix::matmul`] to get an error instead.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("incompatible matrix shapes")
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    EigenvaluesHermitian,
    SingularValues,
}

/// Real spectrum sorted non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    kind: SpectrumKind,
}

impl Spectrum {
    fn new(mut values: Vec<f64>, kind: SpectrumKind) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Spectrum { values, kind }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn max(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Kronecker product with the first factor's indices major.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, MatError> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DIM && c <= MAX_DIM => Ok(CMatrix::from_fn(r, c, |i, j| {
            a[(i / b.rows, j / b.cols)] * b[(i % b.rows, j % b.cols)]
        })),
        _ => Err(MatError::TooLarge {
            rows: a.rows.saturating_mul(b.rows),
            cols: a.cols.saturating_mul(b.cols),
        }),
    }
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.cols, a.rows, |i, j| a[(j, i)].conj())
}

/// Parameters of the unitary that zeroes the off-diagonal of the 2x2
/// Hermitian block `[[app, apq], [conj(apq), aqq]]`.
///
/// Returns `(c, s, phase)` with `phase = apq / |apq|`; the rotation acting on
/// columns is `U = [[c, s], [-s·conj(phase), c·conj(phase)]]`.
fn jacobi_rotation(app: f64, aqq: f64, apq: Complex64) -> (f64, f64, Complex64) {
    let r = apq.norm();
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c, phase)
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input is symmetrized to (a + a†)/2 first, so deviations up to
/// [`HERMITIAN_TOL`] are accepted.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Spectrum, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let deviation = a.hermitian_deviation().unwrap_or(0.0);
    if deviation > HERMITIAN_TOL {
        return Err(MatError::NotHermitian { deviation });
    }
    let n = a.rows;
    let mut m = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);

    let scale = m.frobenius_norm_sqr().sqrt();
    let target = JACOBI_TOL * scale;
    let off = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > target {
        if sweeps == MAX_SWEEPS {
            return Err(MatError::NoConvergence {
                sweeps,
                residual: off(&m),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s, e) = jacobi_rotation(m[(p, p)].re, m[(q, q)].re, apq);
                let ec = e.conj();
                // m <- m U
                for k in 0..n {
                    let kp = m[(k, p)];
                    let kq = m[(k, q)];
                    m[(k, p)] = kp * c - kq * ec * s;
                    m[(k, q)] = kp * s + kq * ec * c;
                }
                // m <- U† m
                for k in 0..n {
                    let pk = m[(p, k)];
                    let qk = m[(q, k)];
                    m[(p, k)] = pk * c - qk * e * s;
                    m[(q, k)] = pk * s + qk * e * c;
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
            }
        }
    }

    let values = (0..n).map(|i| m[(i, i)].re).collect();
    Ok(Spectrum::new(values, SpectrumKind::EigenvaluesHermitian))
}

/// All min(rows, cols) singular values, descending, zeros included.
///
/// Uses one-sided (Hestenes) Jacobi on the columns of the taller
/// orientation, so numerically-zero singular values come out at the
/// rounding level of the entries rather than its square root.
pub fn singular_values(a: &CMatrix) -> Result<Spectrum, MatError> {
    let w = if a.cols > a.rows { dagger(a) } else { a.clone() };
    let (m, n) = (w.rows, w.cols);
    // column-major working copy
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| (0..m).map(|i| w[(i, j)]).collect()).collect();

    let orth_tol = f64::EPSILON * m as f64;
    // pairs whose overlap is below this are rounding noise against the whole matrix
    let floor = f64::EPSILON * f64::EPSILON * w.frobenius_norm_sqr();
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= floor || g <= orth_tol * (alpha * beta).sqrt() {
                    continue;
                }
                worst = worst.max(g / (alpha * beta).sqrt());
                rotated = true;
                let (c, s, e) = jacobi_rotation(alpha, beta, gamma);
                let ec = e.conj();
                let (left, right) = cols.split_at_mut(q);
                for (xp, xq) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (vp, vq) = (*xp, *xq);
                    *xp = vp * c - vq * ec * s;
                    *xq = vp * s + vq * ec * c;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps == MAX_SWEEPS {
            return Err(MatError::NoConvergence {
                sweeps,
                residual: worst,
            });
        }
    }

    let values = cols
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(Spectrum::new(values, SpectrumKind::SingularValues))
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> Result<f64, MatError> {
    Ok(singular_values(a)?.sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn kron_identities() {
        assert_eq!(
            kron(&CMatrix::identity(2), &CMatrix::identity(2)).unwrap(),
            CMatrix::identity(4)
        );
        let d = kron(
            &CMatrix::from_real_diag(&[1.0, 2.0]),
            &CMatrix::from_real_diag(&[3.0, 4.0]),
        )
        .unwrap();
        assert_eq!(d, CMatrix::from_real_diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_swaps_blocks() {
        let k = kron(&pauli_x(), &CMatrix::identity(2)).unwrap();
        let expected = CMatrix::from_real_rows(&[
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_rejects_oversized() {
        let big = CMatrix::zeros(100, 1);
        assert!(matches!(kron(&big, &big), Err(MatError::TooLarge { .. })));
    }

    #[test]
    fn dagger_conjugates() {
        let m = CMatrix::from_vec(1, 1, vec![c(0.0, 1.0)]).unwrap();
        assert_eq!(dagger(&m)[(0, 0)], c(0.0, -1.0));
        assert_eq!(dagger(&CMatrix::identity(3)), CMatrix::identity(3));
        let r = CMatrix::from_vec(1, 2, vec![c(1.0, 2.0), c(3.0, -4.0)]).unwrap();
        let d = dagger(&r);
        assert_eq!((d.rows(), d.cols()), (2, 1));
        assert_eq!(d[(1, 0)], c(3.0, 4.0));
    }

    #[test]
    fn from_vec_rejects_nan() {
        let err = CMatrix::from_vec(1, 2, vec![c(0.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, MatError::NonFinite { row: 0, col: 1 });
        assert!(CMatrix::from_vec(2, 2, vec![c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn eigenvalues_of_diagonal_and_pauli() {
        let s = hermitian_eigenvalues(&CMatrix::from_real_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.values(), &[3.0, 2.0, 1.0]);
        assert_eq!(s.kind(), SpectrumKind::EigenvaluesHermitian);
        let s = hermitian_eigenvalues(&pauli_x()).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-14);
        assert!((s.values()[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_pauli_y() {
        let y = CMatrix::from_vec(2, 2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let s = hermitian_eigenvalues(&y).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-14);
        assert!((s.values()[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_reject_bad_input() {
        assert!(matches!(
            hermitian_eigenvalues(&CMatrix::zeros(2, 3)),
            Err(MatError::NotSquare { rows: 2, cols: 3 })
        ));
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(MatError::NotHermitian { .. })));
    }

    #[test]
    fn singular_values_basic() {
        let s = singular_values(&CMatrix::identity(4)).unwrap();
        assert!(s.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let z = singular_values(&CMatrix::zeros(3, 5)).unwrap();
        assert_eq!(z.values(), &[0.0; 3]);
        assert_eq!(z.kind(), SpectrumKind::SingularValues);
        assert!((trace_norm(&CMatrix::identity(3)).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_values_of_rank_one_rectangular() {
        // |u⟩⟨v| with |u| = 3, |v| = 2 has the single singular value 6.
        let u = [c(1.0, 0.0), c(0.0, 2.0), c(2.0, 0.0)];
        let v = [c(0.0, 0.0), c(1.2, 1.6)];
        let s = singular_values(&CMatrix::outer(&u, &v)).unwrap();
        assert_eq!(s.values().len(), 2);
        assert!((s.values()[0] - 6.0).abs() < 1e-13);
        assert!(s.values()[1] < 1e-14);
    }
}
