use super::dp::{DpConfig, Problem, SlotRule, UField};
use super::field::{ActionField, Scheme};
use crate::catalog::ContactLagrangian;
use crate::error::{Error, Result};
use crate::torus::TorusPoint;

pub const DEFAULT_TOL_FIX: f64 = 1e-9;
pub const DEFAULT_MAX_OUTER: usize = 60;

/// Per-pass record of a fixed-point run. Entry `i` is `|h_{i+1} - h_i|_inf`
/// over reachable nodes, where `h_0` is the starting constant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub diffs: Vec<f64>,
    /// Wall time per pass; zeros where no clock is available.
    pub seconds: Vec<f64>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.diffs.last().copied()
    }

    /// `d_{n+1} / d_n` for `n >= 1`, `NaN` where `d_n = 0`.
    pub fn ratios(&self) -> Vec<f64> {
        self.diffs
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN })
            .collect()
    }
}

pub(crate) struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

fn diff_from_constant(f: &ActionField, c: f64) -> f64 {
    f.layers
        .iter()
        .flatten()
        .filter(|v| v.is_finite())
        .map(|v| (v - c).abs())
        .fold(0.0, f64::max)
}

/// Fixed-point iteration `h_{i+1} = dp_min_action(L, h_i)` from `h_0 = 0`.
pub fn picard_iterate<L: ContactLagrangian + ?Sized>(
    l: &L,
    x0: &TorusPoint,
    u0: f64,
    horizon: f64,
    cfg: &DpConfig,
    tol_fix: f64,
    max_outer: usize,
) -> Result<(ActionField, IterationTrace)> {
    picard_iterate_from(l, x0, u0, horizon, cfg, tol_fix, max_outer, 0.0)
}

/// As [`picard_iterate`] with the constant initial iterate `h_0 = initial`.
#[allow(clippy::too_many_arguments)]
pub fn picard_iterate_from<L: ContactLagrangian + ?Sized>(
    l: &L,
    x0: &TorusPoint,
    u0: f64,
    horizon: f64,
    cfg: &DpConfig,
    tol_fix: f64,
    max_outer: usize,
    initial: f64,
) -> Result<(ActionField, IterationTrace)> {
    if !(tol_fix > 0.0) {
        return Err(Error::InvalidInput(format!("tol_fix must be positive, got {tol_fix}")));
    }
    if max_outer == 0 {
        return Err(Error::InvalidInput("max_outer must be at least 1".into()));
    }
    if !initial.is_finite() {
        return Err(Error::InvalidInput("initial iterate must be finite".into()));
    }
    let problem = Problem {
        l,
        x0: *x0,
        u0,
        horizon,
        cfg,
    };
    let mut trace = IterationTrace::default();

    let clock = Stopwatch::start();
    let mut current = problem.march(SlotRule::Frozen(UField::Constant(initial)), Scheme::Picard)?;
    trace.diffs.push(diff_from_constant(&current, initial));
    trace.seconds.push(clock.seconds());

    while trace.len() < max_outer {
        let clock = Stopwatch::start();
        let next = problem.march(SlotRule::Frozen(UField::Field(&current)), Scheme::Picard)?;
        let d = next.sup_diff(&current);
        trace.diffs.push(d);
        trace.seconds.push(clock.seconds());
        current = next;
        if d <= tol_fix {
            return Ok((current, trace));
        }
    }
    Err(Error::NonConvergence { trace })
}
