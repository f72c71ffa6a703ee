//! Matrix realignment and realignment moments.
//!
//! For a bipartite m⊗n state written as blocks A_ij (n×n), the realigned
//! matrix has one row per block, ordered A₁₁, A₂₁, …, A_m1, A₁₂, …, and
//! each row is vec(A_ij)ᵀ with column-major vectorization. The partial
//! realignment of a multipartite state applies the same map across a
//! bipartition S₁|S₂ of the selected parties and leaves the complement C
//! untouched: C's ket index rides along with the rows and its bra index
//! with the columns.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::matcore::{dagger, singular_values, CMatrix, MatError};
use crate::states::DensityMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealignError {
    #[error("invalid realignment split: {0}")]
    InvalidSpec(String),
    #[error("bipartite realignment needs exactly 2 subsystems, got {0}")]
    NotBipartite(usize),
    #[error("need at least T1 and T2 (max_k = {0})")]
    MaxK(usize),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

/// Which parties are realigned against each other. Party indices are
/// 0-based internally and 1-based in the textual form `"12|3"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RealignSpec {
    group1: Vec<usize>,
    group2: Vec<usize>,
}

impl RealignSpec {
    /// Builds a split from 0-based party indices. Groups are sorted.
    pub fn new(mut group1: Vec<usize>, mut group2: Vec<usize>) -> Result<Self, RealignError> {
        group1.sort_unstable();
        group2.sort_unstable();
        if group1.is_empty() || group2.is_empty() {
            return Err(RealignError::InvalidSpec("both groups must be nonempty".into()));
        }
        let dup = |g: &[usize]| g.windows(2).any(|w| w[0] == w[1]);
        if dup(&group1) || dup(&group2) || group1.iter().any(|p| group2.contains(p)) {
            return Err(RealignError::InvalidSpec(
                "groups must be disjoint without repeats".into(),
            ));
        }
        Ok(RealignSpec { group1, group2 })
    }

    /// The split `1|2` of a bipartite state.
    pub fn bipartite() -> Self {
        RealignSpec {
            group1: vec![0],
            group2: vec![1],
        }
    }

    pub fn group1(&self) -> &[usize] {
        &self.group1
    }

    pub fn group2(&self) -> &[usize] {
        &self.group2
    }

    /// Number of realigned parties, l = |S₁| + |S₂|.
    pub fn selected(&self) -> usize {
        self.group1.len() + self.group2.len()
    }

    /// Parties left untouched, ascending.
    pub fn untouched(&self, num_parties: usize) -> Vec<usize> {
        (0..num_parties)
            .filter(|p| !self.group1.contains(p) && !self.group2.contains(p))
            .collect()
    }

    pub fn check(&self, num_parties: usize) -> Result<(), RealignError> {
        match self.group1.iter().chain(&self.group2).find(|&&p| p >= num_parties) {
            Some(p) => Err(RealignError::InvalidSpec(format!(
                "party {} out of range for {num_parties} subsystems",
                p + 1
            ))),
            None => Ok(()),
        }
    }

    /// Every split of `num_parties` parties, up to exchanging the two groups
    /// (which only transposes-and-permutes the realigned matrix).
    pub fn enumerate(num_parties: usize) -> Vec<RealignSpec> {
        let mut out = Vec::new();
        // each party: 0 = untouched, 1 = group1, 2 = group2
        let total = 3usize.pow(num_parties as u32);
        for code in 0..total {
            let mut g1 = Vec::new();
            let mut g2 = Vec::new();
            let mut c = code;
            for p in 0..num_parties {
                match c % 3 {
                    1 => g1.push(p),
                    2 => g2.push(p),
                    _ => {}
                }
                c /= 3;
            }
            let first = g1.first().zip(g2.first());
            if matches!(first, Some((a, b)) if a < b) {
                out.push(RealignSpec { group1: g1, group2: g2 });
            }
        }
        out.sort_by(|a, b| (a.selected(), &a.group1, &a.group2).cmp(&(b.selected(), &b.group1, &b.group2)));
        out
    }
}

impl fmt::Display for RealignSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.group1.iter().chain(&self.group2).any(|&p| p >= 9);
        let sep = if wide { "," } else { "" };
        let join = |g: &[usize]| g.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(sep);
        write!(f, "{}|{}", join(&self.group1), join(&self.group2))
    }
}

impl FromStr for RealignSpec {
    type Err = RealignError;

    /// Parses `"1|2"`, `"12|3"` or, for parties beyond 9, `"1,10|2"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RealignError::InvalidSpec(format!("cannot parse '{s}' (expected e.g. \"1|2\" or \"12|3\")"));
        let (a, b) = s.trim().split_once('|').ok_or_else(bad)?;
        let parse_group = |g: &str| -> Result<Vec<usize>, RealignError> {
            let g = g.trim();
            let items: Vec<&str> = if g.contains(',') {
                g.split(',').map(str::trim).collect()
            } else {
                g.split("").filter(|t| !t.is_empty()).collect()
            };
            items
                .into_iter()
                .map(|t| match t.parse::<usize>() {
                    Ok(p) if p >= 1 => Ok(p - 1),
                    _ => Err(bad()),
                })
                .collect()
        };
        RealignSpec::new(parse_group(a)?, parse_group(b)?)
    }
}

/// A realigned matrix and the split that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RealignedMatrix {
    matrix: CMatrix,
    spec: RealignSpec,
    source_dims: Vec<usize>,
}

impl RealignedMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spec(&self) -> &RealignSpec {
        &self.spec
    }

    pub fn source_dims(&self) -> &[usize] {
        &self.source_dims
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// Column-major vectorization as a column vector.
pub fn vec(a: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows() * a.cols(), 1);
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            out[(j * a.rows() + i, 0)] = a[(i, j)];
        }
    }
    out
}

/// Realignment of a bipartite state: entry [(j, i), (l, k)] = ρ[(i, k), (j, l)]
/// with the first index of each pair major.
pub fn realign_bipartite(dm: &DensityMatrix) -> Result<RealignedMatrix, RealignError> {
    if dm.num_parties() != 2 {
        return Err(RealignError::NotBipartite(dm.num_parties()));
    }
    realign_partial(dm, &RealignSpec::bipartite())
}

/// Realignment of a square operator with the given subsystem structure,
/// without requiring it to be a valid state.
pub fn realign_operator(op: &CMatrix, dims: &[usize], spec: &RealignSpec) -> Result<CMatrix, RealignError> {
    let n = dims.len();
    spec.check(n)?;
    let total: usize = dims.iter().product();
    if !op.is_square() || op.rows() != total {
        return Err(RealignError::InvalidSpec(format!(
            "{}x{} operator does not match dims {dims:?}",
            op.rows(),
            op.cols()
        )));
    }
    let untouched = spec.untouched(n);
    let size = |g: &[usize]| g.iter().map(|&p| dims[p]).product::<usize>();
    let (d1, d2, dc) = (size(&spec.group1), size(&spec.group2), size(&untouched));

    // stride of each party in the full index
    let mut stride = vec![1usize; n];
    for p in (0..n.saturating_sub(1)).rev() {
        stride[p] = stride[p + 1] * dims[p + 1];
    }
    // Per-party contribution to the composed group index of the full index.
    // For an index `x` of the full space, group index = Σ_p digit_p · weight_p.
    let group_weights = |g: &[usize]| -> Vec<usize> {
        let mut w = vec![0usize; n];
        let mut acc = 1;
        for &p in g.iter().rev() {
            w[p] = acc;
            acc *= dims[p];
        }
        w
    };
    let w1 = group_weights(&spec.group1);
    let w2 = group_weights(&spec.group2);
    let wc = group_weights(&untouched);
    let split = |x: usize| -> (usize, usize, usize) {
        let (mut a, mut b, mut c) = (0, 0, 0);
        for p in 0..n {
            let digit = (x / stride[p]) % dims[p];
            a += digit * w1[p];
            b += digit * w2[p];
            c += digit * wc[p];
        }
        (a, b, c)
    };
    let parts: Vec<(usize, usize, usize)> = (0..total).map(split).collect();

    let mut out = CMatrix::zeros(d1 * d1 * dc, d2 * d2 * dc);
    for (ket, &(k1, k2, kc)) in parts.iter().enumerate() {
        for (bra, &(b1, b2, bc)) in parts.iter().enumerate() {
            let row = (b1 * d1 + k1) * dc + kc;
            let col = (b2 * d2 + k2) * dc + bc;
            out[(row, col)] = op[(ket, bra)];
        }
    }
    Ok(out)
}

/// The partial realignment (R ⊗ I)ρ across `spec`.
pub fn realign_partial(dm: &DensityMatrix, spec: &RealignSpec) -> Result<RealignedMatrix, RealignError> {
    let matrix = realign_operator(dm.matrix(), dm.dims(), spec)?;
    Ok(RealignedMatrix {
        matrix,
        spec: spec.clone(),
        source_dims: dm.dims().to_vec(),
    })
}

/// Realignment moments Tₖ = Tr[(ρᴿ†ρᴿ)ᵏ].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    pub t1: f64,
    pub t2: f64,
    /// T₃, T₄, … when requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub higher: Vec<f64>,
}

impl MomentSet {
    pub fn new(t1: f64, t2: f64) -> Self {
        MomentSet {
            t1,
            t2,
            higher: Vec::new(),
        }
    }

    /// Tₖ for k ≥ 1, if computed.
    pub fn get(&self, k: usize) -> Option<f64> {
        match k {
            1 => Some(self.t1),
            2 => Some(self.t2),
            _ => self.higher.get(k.checked_sub(3)?).copied(),
        }
    }

    /// T₁² − T₂ = 2 Σ_{i<j} σᵢ²σⱼ².
    pub fn spread(&self) -> f64 {
        self.t1 * self.t1 - self.t2
    }
}

/// Moments T₁ … T_max_k from the singular values of the realigned matrix.
pub fn moments(rm: &RealignedMatrix, max_k: usize) -> Result<MomentSet, RealignError> {
    moments_of(rm.matrix(), max_k)
}

pub fn moments_of(m: &CMatrix, max_k: usize) -> Result<MomentSet, RealignError> {
    if max_k < 2 {
        return Err(RealignError::MaxK(max_k));
    }
    let sq: Vec<f64> = singular_values(m)?.into_vec().into_iter().map(|s| s * s).collect();
    let mut ts: Vec<f64> = (1..=max_k).map(|k| sq.iter().map(|x| x.powi(k as i32)).sum()).collect();
    let higher = ts.split_off(2);
    Ok(MomentSet {
        t1: ts[0],
        t2: ts[1],
        higher,
    })
}

/// Moments as traces of powers of the smaller Gram matrix, by repeated
/// multiplication. Independent of the singular-value path.
pub fn moments_by_trace_powers(m: &CMatrix, max_k: usize) -> Result<MomentSet, RealignError> {
    if max_k < 2 {
        return Err(RealignError::MaxK(max_k));
    }
    let md = dagger(m);
    let gram = if m.cols() <= m.rows() {
        md.matmul(m)?
    } else {
        m.matmul(&md)?
    };
    let mut power = gram.clone();
    let mut ts = vec![power.trace().re];
    for _ in 1..max_k {
        power = power.matmul(&gram)?;
        ts.push(power.trace().re);
    }
    let higher = ts.split_off(2);
    Ok(MomentSet {
        t1: ts[0],
        t2: ts[1],
        higher,
    })
}
