//! Moment-based entanglement criteria and the classical comparators.
//!
//! The parameterized statistics are
//!
//! * `V₁(a)` / `V₂(u)`: √{(2/a)[(1 + a/2)T₁ + √F(a)]} with
//!   F(a) = (T₁² − T₂)a²/2 + (T₁² − T₁)a + T₁², valid only where F ≥ 0.
//!   The two differ only in where the moments come from (bipartite vs.
//!   partial realignment).
//! * `V₃(v)`: √{(√(T₁ + (v² + 2v)T₂) − v√T₂)² + √(2(T₁² − T₂))}, valid for
//!   every v > 0.
//!
//! A statistic above 1 (plus [`DETECTION_SLACK`]) flags entanglement.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::matcore::{hermitian_eigenvalues, trace_norm, MatError};
use crate::realign::{moments, realign_bipartite, realign_partial, MomentSet, RealignError, RealignSpec};
use crate::states::{DensityMatrix, StateError};

/// Margin above 1 a statistic must clear before it counts as a detection.
pub const DETECTION_SLACK: f64 = 1e-9;
/// Partial-transpose eigenvalues below −PPT_TOL count as negative.
pub const PPT_TOL: f64 = 1e-10;
/// T₁² − T₂ at or below this is treated as a rank-one realignment.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Largest negative F(a) that is clamped to zero instead of rejected.
pub const F_CLAMP: f64 = 1e-12;

pub const OUTSIDE_RANGE_NOTE: &str = "parameter outside admissible range";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriterionError {
    #[error("invalid criterion parameter: {0}")]
    InvalidParameter(String),
    #[error("parameter {param} outside the admissible range (F = {f:e})")]
    OutsideAdmissible { param: f64, f: f64 },
    #[error(transparent)]
    Realign(#[from] RealignError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

fn serialize_bound<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

/// An interval of (0, ∞); `high` may be infinite (written as `null` in JSON).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    #[serde(serialize_with = "serialize_bound")]
    pub high: f64,
    pub low_closed: bool,
    pub high_closed: bool,
}

impl Interval {
    pub fn positive_axis() -> Self {
        Interval {
            low: 0.0,
            high: f64::INFINITY,
            low_closed: false,
            high_closed: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.low_closed { x >= self.low } else { x > self.low };
        let below = if self.high_closed {
            x <= self.high
        } else {
            x < self.high
        };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (low, low_closed) = if self.low > other.low {
            (self.low, self.low_closed)
        } else if other.low > self.low {
            (other.low, other.low_closed)
        } else {
            (self.low, self.low_closed && other.low_closed)
        };
        let (high, high_closed) = if self.high < other.high {
            (self.high, self.high_closed)
        } else if other.high < self.high {
            (other.high, other.high_closed)
        } else {
            (self.high, self.high_closed && other.high_closed)
        };
        let nonempty = low < high || (low == high && low_closed && high_closed);
        nonempty.then_some(Interval {
            low,
            high,
            low_closed,
            high_closed,
        })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.low_closed { '[' } else { '(' };
        let close = if self.high_closed { ']' } else { ')' };
        if self.high.is_finite() {
            write!(f, "{open}{}, {}{close}", self.low, self.high)
        } else {
            write!(f, "{open}{}, inf{close}", self.low)
        }
    }
}

/// The parameters a > 0 (or u > 0) for which F(a) ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibleRange {
    pub intervals: Vec<Interval>,
    pub discriminant: f64,
    pub degenerate: bool,
}

impl AdmissibleRange {
    pub fn contains(&self, a: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(a))
    }

    /// Upper end of the piece starting at 0, if bounded.
    pub fn lower_piece_end(&self) -> Option<f64> {
        self.intervals
            .first()
            .filter(|i| i.low == 0.0 && i.high.is_finite())
            .map(|i| i.high)
    }

    /// Start of the piece unbounded above, if it does not start at 0.
    pub fn upper_piece_start(&self) -> Option<f64> {
        self.intervals
            .last()
            .filter(|i| i.high.is_infinite() && i.low > 0.0)
            .map(|i| i.low)
    }
}

impl fmt::Display for AdmissibleRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(Interval::to_string).collect();
        if parts.is_empty() {
            f.write_str("(empty)")
        } else {
            f.write_str(&parts.join(" U "))
        }
    }
}

/// Δ = (T₁² − T₁)² − 2(T₁² − T₂)T₁².
pub fn discriminant(m: &MomentSet) -> f64 {
    let t1sq = m.t1 * m.t1;
    (t1sq - m.t1).powi(2) - 2.0 * (t1sq - m.t2) * t1sq
}

/// F(a) = (T₁² − T₂)a²/2 + (T₁² − T₁)a + T₁².
pub fn quadratic_f(m: &MomentSet, a: f64) -> f64 {
    let t1sq = m.t1 * m.t1;
    (t1sq - m.t2) * a * a / 2.0 + (t1sq - m.t1) * a + t1sq
}

/// Roots of F when it is a genuine quadratic with Δ > 0.
pub fn admissible_roots(m: &MomentSet) -> Option<(f64, f64)> {
    let spread = m.spread();
    let delta = discriminant(m);
    if spread <= DEGENERATE_TOL || delta <= 0.0 {
        return None;
    }
    let b = m.t1 - m.t1 * m.t1;
    let sq = delta.sqrt();
    Some(((b - sq) / spread, (b + sq) / spread))
}

pub fn admissible_range(m: &MomentSet) -> AdmissibleRange {
    let discriminant = discriminant(m);
    let t1sq = m.t1 * m.t1;
    let degenerate = m.spread() <= DEGENERATE_TOL;
    let mut intervals = Vec::with_capacity(2);
    if degenerate {
        // F is linear: (T₁² − T₁)a + T₁²
        let slope = t1sq - m.t1;
        if slope >= 0.0 {
            intervals.push(Interval::positive_axis());
        } else {
            intervals.push(Interval {
                high: t1sq / -slope,
                high_closed: true,
                ..Interval::positive_axis()
            });
        }
    } else {
        match admissible_roots(m) {
            Some((r1, r2)) if r2 > 0.0 => {
                if r1 > 0.0 {
                    intervals.push(Interval {
                        high: r1,
                        high_closed: true,
                        ..Interval::positive_axis()
                    });
                }
                intervals.push(Interval {
                    low: r2,
                    low_closed: true,
                    ..Interval::positive_axis()
                });
            }
            _ => intervals.push(Interval::positive_axis()),
        }
    }
    AdmissibleRange {
        intervals,
        discriminant,
        degenerate,
    }
}

/// Parameters admissible for every range given, e.g. across a whole state
/// family.
pub fn common_admissible<'a>(ranges: impl IntoIterator<Item = &'a AdmissibleRange>) -> Vec<Interval> {
    let mut acc = vec![Interval::positive_axis()];
    for r in ranges {
        acc = acc
            .iter()
            .flat_map(|a| r.intervals.iter().filter_map(move |b| a.intersect(b)))
            .collect();
    }
    acc
}

fn check_positive(name: &str, x: f64) -> Result<(), CriterionError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CriterionError::InvalidParameter(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

/// V₁(a). Fails when F(a) < −[`F_CLAMP`], i.e. a is not admissible.
pub fn v1(m: &MomentSet, a: f64) -> Result<f64, CriterionError> {
    check_positive("a", a)?;
    let f = quadratic_f(m, a);
    if f < -F_CLAMP {
        return Err(CriterionError::OutsideAdmissible { param: a, f });
    }
    Ok(((2.0 / a) * ((1.0 + a / 2.0) * m.t1 + f.max(0.0).sqrt())).sqrt())
}

/// V₂(u): the V₁ formula on moments of a partial realignment.
pub fn v2(m: &MomentSet, u: f64) -> Result<f64, CriterionError> {
    v1(m, u)
}

/// V₃(v). `v = 0` gives the limit √(T₁ + √(2(T₁² − T₂))).
pub fn v3(m: &MomentSet, v: f64) -> Result<f64, CriterionError> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(CriterionError::InvalidParameter(format!(
            "v must be nonnegative and finite, got {v}"
        )));
    }
    let inner = (m.t1 + (v * v + 2.0 * v) * m.t2).sqrt() - v * m.t2.sqrt();
    // T₁² − T₂ ≥ 0 exactly; rounding can push rank-one cases just below.
    let cross = (2.0 * m.spread().max(0.0)).sqrt();
    Ok((inner * inner + cross).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionId {
    V1,
    V2,
    V3,
    Realign,
    Ppt,
}

impl CriterionId {
    pub const ALL: [CriterionId; 5] = [
        CriterionId::V1,
        CriterionId::V2,
        CriterionId::V3,
        CriterionId::Realign,
        CriterionId::Ppt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriterionId::V1 => "v1",
            CriterionId::V2 => "v2",
            CriterionId::V3 => "v3",
            CriterionId::Realign => "realign",
            CriterionId::Ppt => "ppt",
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CriterionId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown criterion '{s}' (expected v1, v2, v3, realign or ppt)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Entangled,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Entangled => "ENTANGLED",
            Outcome::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Result of applying one criterion to one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub criterion: CriterionId,
    /// a, u or v.
    pub parameter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    /// 1-based party for the PPT test.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub party: Option<usize>,
    /// `None` when the formula is undefined at the requested parameter.
    pub statistic: Option<f64>,
    pub threshold: f64,
    pub outcome: Outcome,
    pub admissible: Option<AdmissibleRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentSet>,
    pub note: Option<String>,
}

impl CriterionVerdict {
    pub fn is_entangled(&self) -> bool {
        self.outcome == Outcome::Entangled
    }
}

fn exceeds_one(stat: f64) -> bool {
    stat > 1.0 + DETECTION_SLACK
}

fn gated_verdict(
    criterion: CriterionId,
    m: MomentSet,
    param: f64,
    split: &RealignSpec,
) -> Result<CriterionVerdict, CriterionError> {
    check_positive(if criterion == CriterionId::V1 { "a" } else { "u" }, param)?;
    let range = admissible_range(&m);
    let in_range = range.contains(param);
    let statistic = match v1(&m, param) {
        Ok(s) => Some(s),
        Err(CriterionError::OutsideAdmissible { .. }) => None,
        Err(e) => return Err(e),
    };
    let entangled = in_range && statistic.is_some_and(exceeds_one);
    Ok(CriterionVerdict {
        criterion,
        parameter: Some(param),
        split: Some(split.to_string()),
        party: None,
        statistic,
        threshold: 1.0,
        outcome: if entangled {
            Outcome::Entangled
        } else {
            Outcome::Inconclusive
        },
        admissible: Some(range),
        moments: Some(m),
        note: (!in_range).then(|| OUTSIDE_RANGE_NOTE.to_string()),
    })
}

/// V₁(a) on the bipartite realignment, gated by the admissible a-range.
pub fn verdict_v1(dm: &DensityMatrix, a: f64) -> Result<CriterionVerdict, CriterionError> {
    let m = moments(&realign_bipartite(dm)?, 2)?;
    gated_verdict(CriterionId::V1, m, a, &RealignSpec::bipartite())
}

/// V₂(u) on the partial realignment across `spec`, gated like V₁.
pub fn verdict_v2(dm: &DensityMatrix, spec: &RealignSpec, u: f64) -> Result<CriterionVerdict, CriterionError> {
    let m = moments(&realign_partial(dm, spec)?, 2)?;
    gated_verdict(CriterionId::V2, m, u, spec)
}

/// V₃(v) on the partial realignment across `spec`. No range gate.
pub fn verdict_v3(dm: &DensityMatrix, spec: &RealignSpec, v: f64) -> Result<CriterionVerdict, CriterionError> {
    check_positive("v", v)?;
    let m = moments(&realign_partial(dm, spec)?, 2)?;
    let stat = v3(&m, v)?;
    Ok(CriterionVerdict {
        criterion: CriterionId::V3,
        parameter: Some(v),
        split: Some(spec.to_string()),
        party: None,
        statistic: Some(stat),
        threshold: 1.0,
        outcome: if exceeds_one(stat) {
            Outcome::Entangled
        } else {
            Outcome::Inconclusive
        },
        admissible: None,
        moments: Some(m),
        note: None,
    })
}

/// Trace norm of the realigned matrix against 1.
pub fn realignment_norm_verdict(dm: &DensityMatrix, spec: &RealignSpec) -> Result<CriterionVerdict, CriterionError> {
    let rm = realign_partial(dm, spec)?;
    let stat = trace_norm(rm.matrix())?;
    Ok(CriterionVerdict {
        criterion: CriterionId::Realign,
        parameter: None,
        split: Some(spec.to_string()),
        party: None,
        statistic: Some(stat),
        threshold: 1.0,
        outcome: if exceeds_one(stat) {
            Outcome::Entangled
        } else {
            Outcome::Inconclusive
        },
        admissible: None,
        moments: Some(moments(&rm, 2)?),
        note: None,
    })
}

/// Minimum eigenvalue of the partial transpose over `party` (0-based).
///
/// Only single-party transposes are offered; to transpose a group of
/// parties, regroup the dims so the group forms one subsystem.
pub fn ppt_verdict(dm: &DensityMatrix, party: usize) -> Result<CriterionVerdict, CriterionError> {
    let pt = dm.partial_transpose(party)?;
    let min = hermitian_eigenvalues(&pt)?.min().unwrap_or(0.0);
    Ok(CriterionVerdict {
        criterion: CriterionId::Ppt,
        parameter: None,
        split: None,
        party: Some(party + 1),
        statistic: Some(min),
        threshold: 0.0,
        outcome: if min < -PPT_TOL {
            Outcome::Entangled
        } else {
            Outcome::Inconclusive
        },
        admissible: None,
        moments: None,
        note: None,
    })
}

/// A fully parameterized criterion, ready to apply to states.
#[derive(Debug, Clone, PartialEq)]
pub enum Criterion {
    V1 {
        a: f64,
    },
    V2 {
        split: RealignSpec,
        u: f64,
    },
    V3 {
        split: RealignSpec,
        v: f64,
    },
    Realign {
        split: RealignSpec,
    },
    /// 0-based party.
    Ppt {
        party: usize,
    },
}

impl Criterion {
    pub fn id(&self) -> CriterionId {
        match self {
            Criterion::V1 { .. } => CriterionId::V1,
            Criterion::V2 { .. } => CriterionId::V2,
            Criterion::V3 { .. } => CriterionId::V3,
            Criterion::Realign { .. } => CriterionId::Realign,
            Criterion::Ppt { .. } => CriterionId::Ppt,
        }
    }

    /// The continuous parameter, if any.
    pub fn parameter(&self) -> Option<f64> {
        match self {
            Criterion::V1 { a } => Some(*a),
            Criterion::V2 { u, .. } => Some(*u),
            Criterion::V3 { v, .. } => Some(*v),
            _ => None,
        }
    }

    pub fn evaluate(&self, dm: &DensityMatrix) -> Result<CriterionVerdict, CriterionError> {
        match self {
            Criterion::V1 { a } => verdict_v1(dm, *a),
            Criterion::V2 { split, u } => verdict_v2(dm, split, *u),
            Criterion::V3 { split, v } => verdict_v3(dm, split, *v),
            Criterion::Realign { split } => realignment_norm_verdict(dm, split),
            Criterion::Ppt { party } => ppt_verdict(dm, *party),
        }
    }
}
