#![allow(dead_code)]

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use realign_moments::matcore::CMatrix;
use realign_moments::states::DensityMatrix;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// G G† / tr(G G†) for a complex Gaussian G: full-rank, generally entangled.
pub fn random_density(dims: &[usize], seed: u64) -> DensityMatrix {
    let n: usize = dims.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(n, n, &mut rng);
    let w = &g * &g.dagger();
    let tr = w.trace().re;
    let mut m = w.scale(1.0 / tr);
    // exact Hermiticity
    let h = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    m = h;
    DensityMatrix::new(dims.to_vec(), m).expect("Ginibre state is valid")
}

/// Bipartite realignment assembled literally: rows vec(A₁₁)ᵀ, vec(A₂₁)ᵀ, …,
/// vec(A_m1)ᵀ, vec(A₁₂)ᵀ, … with A_ij the n×n blocks and vec stacking columns.
pub fn realign_by_blocks(rho: &CMatrix, m: usize, n: usize) -> CMatrix {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let block = CMatrix::from_fn(n, n, |k, l| rho[(i * n + k, j * n + l)]);
            let mut v = Vec::new();
            for col in 0..n {
                for row in 0..n {
                    v.push(block[(row, col)]);
                }
            }
            rows.push(v);
        }
    }
    CMatrix::from_fn(m * m, n * n, |r, s| rows[r][s])
}

/// Reorders parties of a state by `perm` (new party q is old party perm[q]).
pub fn permute_parties(dm: &DensityMatrix, perm: &[usize]) -> DensityMatrix {
    let dims = dm.dims();
    let n = dims.len();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let digits = |mut x: usize, ds: &[usize]| -> Vec<usize> {
        let mut out = vec![0; ds.len()];
        for q in (0..ds.len()).rev() {
            out[q] = x % ds[q];
            x /= ds[q];
        }
        out
    };
    let compose = |ds: &[usize], dg: &[usize]| ds.iter().zip(dg).fold(0, |acc, (&d, &x)| acc * d + x);
    let total = dm.dim();
    let old_index = |new: usize| {
        let nd = digits(new, &new_dims);
        let mut od = vec![0; n];
        for q in 0..n {
            od[perm[q]] = nd[q];
        }
        compose(dims, &od)
    };
    let m = CMatrix::from_fn(total, total, |r, s| dm.matrix()[(old_index(r), old_index(s))]);
    DensityMatrix::new(new_dims, m).unwrap()
}

/// Sorted entry magnitudes.
pub fn sorted_abs(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.as_slice().iter().map(|z| z.norm()).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
