//! Discrete implicit action fields: Picard iteration, semigroup marching,
//! calibrated-curve extraction and the dynamic-programming checks.

mod backtrack;
mod dp;
mod field;
mod herglotz;
mod markov;
mod picard;
mod solver;

pub use backtrack::{backtrack_calibrated, CalibratedCurve, CurveSample};
pub use dp::{default_substeps, default_v_max, dp_min_action, semigroup_march, DpConfig, UField};
pub use field::{ActionField, Grid, Scheme, INTERPOLATION};
pub use herglotz::herglotz_residual;
pub use markov::{markov_defect, triangle_b};
pub use solver::{Method, Solver};
pub(crate) use picard::Stopwatch;
pub use picard::{picard_iterate, picard_iterate_from, IterationTrace, DEFAULT_MAX_OUTER, DEFAULT_TOL_FIX};

