//! Drivers for the command-line subcommands.
//!
//! Kept in the library so the integration tests can call them without
//! spawning the binary.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::criteria::{Criterion, CriterionError, CriterionId, CriterionVerdict, Outcome};
use crate::realign::RealignSpec;
use crate::states::{sample_separable, DensityMatrix, Family, StateError};

/// Bisection stops once the bracket is this narrow.
pub const THRESHOLD_TOL: f64 = 1e-6;

pub const SWEEP_HEADER: &str = "state_param,criterion,criterion_param,statistic,admissible_low,admissible_high,outcome";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read state file {path}: {reason}")]
    InputFile { path: String, reason: String },
    #[error("invalid state: {0}")]
    Validation(StateError),
    #[error("{0}")]
    Usage(String),
    #[error("bracket [{lo}, {hi}] does not straddle the threshold (statistic {stat_lo} at {lo}, {stat_hi} at {hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        stat_lo: f64,
        stat_hi: f64,
    },
    #[error(transparent)]
    Criterion(CriterionError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    /// 2 for unreadable input files, 3 for states that fail validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InputFile { .. } | CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            _ => 1,
        }
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        if e.is_validation() {
            CliError::Validation(e)
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<CriterionError> for CliError {
    fn from(e: CriterionError) -> Self {
        match e {
            CriterionError::State(s) => s.into(),
            other => CliError::Criterion(other),
        }
    }
}

/// Formats `x` with 12 significant digits, dropping trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

/// Reads and validates a JSON state file.
pub fn load_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::InputFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    DensityMatrix::from_json(&text).map_err(|e| match e {
        StateError::Malformed(reason) => CliError::InputFile {
            path: path.display().to_string(),
            reason,
        },
        other => CliError::Validation(other),
    })
}

/// Inclusive grid `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    /// Points lo, lo + step, … and finally hi itself.
    pub fn points(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        let eps = 1e-9 * self.step;
        let n = ((span + eps) / self.step).floor() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|i| (self.lo + i as f64 * self.step).min(self.hi)).collect();
        let last = *pts.last().expect("grid has at least one point");
        if self.hi - last > eps {
            pts.push(self.hi);
        } else {
            *pts.last_mut().unwrap() = self.hi;
        }
        pts
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
        match nums.as_deref() {
            Ok(&[lo, hi, step]) if lo.is_finite() && hi.is_finite() => {
                if !(step > 0.0 && step.is_finite()) {
                    Err(format!("step must be positive in '{s}'"))
                } else if hi < lo {
                    Err(format!("empty range '{s}'"))
                } else {
                    Ok(Grid { lo, hi, step })
                }
            }
            _ => Err(format!("expected lo:hi:step, got '{s}'")),
        }
    }
}

/// Bracket `lo:hi` for threshold searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Bracket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
        let lo: f64 = a.trim().parse().map_err(|_| format!("bad bracket start '{a}'"))?;
        let hi: f64 = b.trim().parse().map_err(|_| format!("bad bracket end '{b}'"))?;
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(format!("bracket '{s}' must satisfy lo < hi"));
        }
        Ok(Bracket { lo, hi })
    }
}

/// Which criterion to run and with which parameters. Parameter lists
/// expand into one [`Criterion`] per value.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionSelection {
    pub id: CriterionId,
    pub a: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub split: Option<RealignSpec>,
    /// 1-based.
    pub party: Option<usize>,
}

impl CriterionSelection {
    pub fn new(id: CriterionId) -> Self {
        CriterionSelection {
            id,
            a: Vec::new(),
            u: Vec::new(),
            v: Vec::new(),
            split: None,
            party: None,
        }
    }

    pub fn expand(&self) -> Result<Vec<Criterion>, CliError> {
        let split = self.split.clone().unwrap_or_else(RealignSpec::bipartite);
        let need = |name: &str, xs: &[f64]| -> Result<Vec<f64>, CliError> {
            if xs.is_empty() {
                Err(CliError::Usage(format!("criterion {} needs --{name}", self.id)))
            } else {
                Ok(xs.to_vec())
            }
        };
        Ok(match self.id {
            CriterionId::V1 => need("a", &self.a)?.into_iter().map(|a| Criterion::V1 { a }).collect(),
            CriterionId::V2 => need("u", &self.u)?
                .into_iter()
                .map(|u| Criterion::V2 {
                    split: split.clone(),
                    u,
                })
                .collect(),
            CriterionId::V3 => need("v", &self.v)?
                .into_iter()
                .map(|v| Criterion::V3 {
                    split: split.clone(),
                    v,
                })
                .collect(),
            CriterionId::Realign => vec![Criterion::Realign { split }],
            CriterionId::Ppt => {
                let party = self.party.unwrap_or(2);
                if party == 0 {
                    return Err(CliError::Usage("--party is 1-based".into()));
                }
                vec![Criterion::Ppt { party: party - 1 }]
            }
        })
    }

    /// Exactly one criterion, as `analyze` and `threshold` need.
    pub fn single(&self) -> Result<Criterion, CliError> {
        let mut all = self.expand()?;
        if all.len() != 1 {
            return Err(CliError::Usage(format!(
                "expected a single {} parameter, got {}",
                self.id,
                all.len()
            )));
        }
        Ok(all.remove(0))
    }
}

/// Where a state came from, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub state: StateSource,
    pub verdict: CriterionVerdict,
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = &self.verdict;
        match (&self.state.family, self.state.param, &self.state.path) {
            (Some(fam), Some(p), _) => writeln!(f, "state      {fam}({p}) dims {:?}", self.state.dims)?,
            (_, _, Some(path)) => writeln!(f, "state      {path} dims {:?}", self.state.dims)?,
            _ => writeln!(f, "state      dims {:?}", self.state.dims)?,
        }
        write!(f, "criterion  {}", v.criterion)?;
        if let Some(p) = v.parameter {
            write!(f, " param {p}")?;
        }
        if let Some(s) = &v.split {
            write!(f, " split {s}")?;
        }
        if let Some(p) = v.party {
            write!(f, " party {p}")?;
        }
        writeln!(f)?;
        if let Some(m) = &v.moments {
            writeln!(f, "moments    T1 = {}  T2 = {}", fmt_sig(m.t1), fmt_sig(m.t2))?;
        }
        if let Some(r) = &v.admissible {
            writeln!(f, "delta      {}", fmt_sig(r.discriminant))?;
            writeln!(f, "admissible {r}{}", if r.degenerate { " (degenerate)" } else { "" })?;
        }
        match v.statistic {
            Some(s) => writeln!(f, "statistic  {} (threshold {})", fmt_sig(s), v.threshold)?,
            None => writeln!(f, "statistic  undefined (threshold {})", v.threshold)?,
        }
        if let Some(note) = &v.note {
            writeln!(f, "note       {note}")?;
        }
        write!(f, "outcome    {}", v.outcome)
    }
}

pub fn analyze(dm: &DensityMatrix, source: StateSource, criterion: &Criterion) -> Result<AnalysisReport, CliError> {
    Ok(AnalysisReport {
        state: source,
        verdict: criterion.evaluate(dm)?,
    })
}

/// Evaluates a family member.
pub fn analyze_family(family: Family, param: f64, criterion: &Criterion) -> Result<AnalysisReport, CliError> {
    let dm = family.build(param)?;
    let source = StateSource {
        family: Some(family.name().to_string()),
        param: Some(param),
        path: None,
        dims: dm.dims().to_vec(),
    };
    analyze(&dm, source, criterion)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub state_param: f64,
    pub criterion: CriterionId,
    pub criterion_param: Option<f64>,
    pub statistic: Option<f64>,
    pub admissible_low: Option<f64>,
    pub admissible_high: Option<f64>,
    pub outcome: Outcome,
}

impl SweepRow {
    fn from_verdict(state_param: f64, v: &CriterionVerdict) -> Self {
        SweepRow {
            state_param,
            criterion: v.criterion,
            criterion_param: v.parameter,
            statistic: v.statistic,
            admissible_low: v.admissible.as_ref().and_then(|r| r.lower_piece_end()),
            admissible_high: v.admissible.as_ref().and_then(|r| r.upper_piece_start()),
            outcome: v.outcome,
        }
    }

    pub fn to_csv_line(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            fmt_sig(self.state_param),
            self.criterion,
            opt(self.criterion_param),
            opt(self.statistic),
            opt(self.admissible_low),
            opt(self.admissible_high),
            self.outcome
        )
    }
}

/// One row per (state parameter, criterion) pair, state parameter ascending.
pub fn sweep(family: Family, grid: &Grid, criteria: &[Criterion]) -> Result<Vec<SweepRow>, CliError> {
    let points = grid.points();
    let per_point: Result<Vec<Vec<SweepRow>>, CliError> = points
        .par_iter()
        .map(|&x| {
            let dm = family.build(x)?;
            criteria
                .iter()
                .map(|c| Ok(SweepRow::from_verdict(x, &c.evaluate(&dm)?)))
                .collect()
        })
        .collect();
    Ok(per_point?.into_iter().flatten().collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv_line())?;
    }
    out.flush()
}

/// Bisects on the family parameter for the point where the statistic
/// crosses 1.
pub fn threshold(family: Family, criterion: &Criterion, bracket: Bracket) -> Result<f64, CliError> {
    let stat = |x: f64| -> Result<f64, CliError> {
        let v = criterion.evaluate(&family.build(x)?)?;
        v.statistic
            .ok_or_else(|| CliError::Usage(format!("{} statistic undefined at {x}", criterion.id())))
    };
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let (s_lo, s_hi) = (stat(lo)?, stat(hi)?);
    let above_lo = s_lo > 1.0;
    if above_lo == (s_hi > 1.0) {
        return Err(CliError::NoSignChange {
            lo,
            hi,
            stat_lo: s_lo,
            stat_hi: s_hi,
        });
    }
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if (stat(mid)? > 1.0) == above_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub dims: Vec<usize>,
    pub num_states: usize,
    pub num_terms: usize,
    pub seed: u64,
    pub criteria: Vec<CriterionId>,
    pub a: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `None` audits every split of the parties.
    pub splits: Option<Vec<RealignSpec>>,
}

impl AuditConfig {
    pub fn new(dims: Vec<usize>) -> Self {
        AuditConfig {
            dims,
            num_states: 200,
            num_terms: 3,
            seed: 0,
            criteria: vec![
                CriterionId::V1,
                CriterionId::V2,
                CriterionId::V3,
                CriterionId::Realign,
                CriterionId::Ppt,
            ],
            a: vec![0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            u: vec![0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            v: vec![0.01, 0.5, 1.0, 5.0],
            splits: None,
        }
    }

    fn evaluations(&self) -> Vec<Criterion> {
        let n = self.dims.len();
        let splits = self.splits.clone().unwrap_or_else(|| RealignSpec::enumerate(n));
        let mut out = Vec::new();
        for id in &self.criteria {
            match id {
                CriterionId::V1 if n == 2 => out.extend(self.a.iter().map(|&a| Criterion::V1 { a })),
                CriterionId::V1 => {}
                CriterionId::V2 => {
                    for s in &splits {
                        out.extend(self.u.iter().map(|&u| Criterion::V2 { split: s.clone(), u }));
                    }
                }
                CriterionId::V3 => {
                    for s in &splits {
                        out.extend(self.v.iter().map(|&v| Criterion::V3 { split: s.clone(), v }));
                    }
                }
                CriterionId::Realign => out.extend(splits.iter().map(|s| Criterion::Realign { split: s.clone() })),
                CriterionId::Ppt => out.extend((0..n).map(|party| Criterion::Ppt { party })),
            }
        }
        out
    }
}

/// Findings for one criterion setting over all sampled states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub criterion: CriterionId,
    pub parameter: Option<f64>,
    pub split: Option<String>,
    pub party: Option<usize>,
    /// States where the setting was applicable (inside the admissible range).
    pub evaluated: usize,
    /// States skipped because the parameter was outside their admissible range.
    pub skipped: usize,
    /// Separable states flagged ENTANGLED.
    pub violations: usize,
    pub min_statistic: Option<f64>,
    pub max_statistic: Option<f64>,
    /// Seed of the state with the largest statistic (smallest for PPT).
    pub worst_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub dims: Vec<usize>,
    pub num_states: usize,
    pub num_terms: usize,
    pub seed: u64,
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn violations(&self, id: CriterionId) -> usize {
        self.rows
            .iter()
            .filter(|r| r.criterion == id)
            .map(|r| r.violations)
            .sum()
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "audit: {} separable states, dims {:?}, {} product terms, seeds {}..{}",
            self.num_states,
            self.dims,
            self.num_terms,
            self.seed,
            self.seed + self.num_states as u64
        )?;
        writeln!(
            f,
            "{:<8} {:>8} {:>6} {:>5} {:>9} {:>7} {:>10} {:>14} {:>14} {:>10}",
            "crit",
            "param",
            "split",
            "party",
            "evaluated",
            "skipped",
            "violations",
            "min_stat",
            "max_stat",
            "worst_seed"
        )?;
        let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            writeln!(
                f,
                "{:<8} {:>8} {:>6} {:>5} {:>9} {:>7} {:>10} {:>14} {:>14} {:>10}",
                r.criterion.name(),
                opt(r.parameter),
                r.split.as_deref().unwrap_or("-"),
                r.party.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
                r.evaluated,
                r.skipped,
                r.violations,
                opt(r.min_statistic),
                opt(r.max_statistic),
                r.worst_seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into())
            )?;
        }
        for id in CriterionId::ALL {
            if self.rows.iter().any(|r| r.criterion == id) {
                let evaluated: usize = self
                    .rows
                    .iter()
                    .filter(|r| r.criterion == id)
                    .map(|r| r.evaluated)
                    .sum();
                writeln!(
                    f,
                    "total {:<8} {} violations in {} evaluations",
                    id.name(),
                    self.violations(id),
                    evaluated
                )?;
            }
        }
        Ok(())
    }
}

/// Samples separable states and counts how often each criterion wrongly
/// flags one of them.
pub fn audit(config: &AuditConfig) -> Result<AuditReport, CliError> {
    if config.num_states == 0 {
        return Err(CliError::Usage("audit needs at least one state".into()));
    }
    let seeds: Vec<u64> = (0..config.num_states as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    let states: Vec<DensityMatrix> = seeds
        .par_iter()
        .map(|&s| sample_separable(&config.dims, config.num_terms, s))
        .collect::<Result<_, _>>()?;

    let rows: Result<Vec<AuditRow>, CliError> = config
        .evaluations()
        .par_iter()
        .map(|criterion| {
            let mut row = AuditRow {
                criterion: criterion.id(),
                parameter: criterion.parameter(),
                split: None,
                party: None,
                evaluated: 0,
                skipped: 0,
                violations: 0,
                min_statistic: None,
                max_statistic: None,
                worst_seed: None,
            };
            let lower_is_worse = criterion.id() == CriterionId::Ppt;
            let mut worst: Option<f64> = None;
            for (dm, &seed) in states.iter().zip(&seeds) {
                let v = criterion.evaluate(dm)?;
                row.split = v.split.clone();
                row.party = v.party;
                let admissible = v
                    .admissible
                    .as_ref()
                    .is_none_or(|r| r.contains(v.parameter.unwrap_or(0.0)));
                let Some(stat) = v.statistic.filter(|_| admissible) else {
                    row.skipped += 1;
                    continue;
                };
                row.evaluated += 1;
                if v.outcome == Outcome::Entangled {
                    row.violations += 1;
                }
                row.min_statistic = Some(row.min_statistic.map_or(stat, |m| m.min(stat)));
                row.max_statistic = Some(row.max_statistic.map_or(stat, |m| m.max(stat)));
                let worse = match worst {
                    None => true,
                    Some(w) if lower_is_worse => stat < w,
                    Some(w) => stat > w,
                };
                if worse {
                    worst = Some(stat);
                    row.worst_seed = Some(seed);
                }
            }
            Ok(row)
        })
        .collect();

    Ok(AuditReport {
        dims: config.dims.clone(),
        num_states: config.num_states,
        num_terms: config.num_terms,
        seed: config.seed,
        rows: rows?,
    })
}
