//! Entanglement detection from realignment moments.
//!
//! The crate builds density matrices ([`states`]), realigns them across a
//! chosen split of the parties ([`realign`]), and evaluates moment-based
//! separability bounds next to the trace-norm realignment and PPT tests
//! ([`criteria`]). [`cli`] holds the analyze / sweep / threshold / audit
//! drivers behind the `realign-moments` binary.
//!
//! ```
//! use realign_moments::criteria::verdict_v1;
//! use realign_moments::states::{rho_pq, rho_pq_q0};
//!
//! let state = rho_pq(rho_pq_q0()).unwrap();
//! let verdict = verdict_v1(&state, 0.2).unwrap();
//! assert!(verdict.is_entangled());
//! assert!((verdict.statistic.unwrap() - 1.5073).abs() < 5e-4);
//! ```

pub mod cli;
pub mod criteria;
pub mod matcore;
pub mod realign;
pub mod states;

pub use criteria::{Criterion, CriterionId, CriterionVerdict, Outcome};
pub use matcore::{CMatrix, Spectrum};
pub use realign::{MomentSet, RealignSpec, RealignedMatrix};
pub use states::{DensityMatrix, Family};
