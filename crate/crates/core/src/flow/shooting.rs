//! Multistart shooting on the initial momentum.
//!
//! For a target `(x, t)` every solution of the contact system with
//! `X(0) = x0, U(0) = u0, X(t) = x` is a candidate; the action value is the
//! smallest terminal `U(t)` among them.

use std::cmp::Ordering;

use super::{flow_lifted, ContactState, LiftedState};
use crate::catalog::ContactHamiltonian;
use crate::error::{Error, Result};
use crate::par;
use crate::torus::{diameter, FiberMatrix, FiberVector, TorusPoint};

#[derive(Clone, Debug)]
pub struct ShootOptions {
    /// Half-width of the momentum search box; `None` picks
    /// [`default_search_radius`].
    pub radius: Option<f64>,
    /// Lattice starts per axis.
    pub multistart: usize,
    pub dt: f64,
    /// Boundary residual accepted as converged.
    pub tol: f64,
    pub max_newton: usize,
    pub cluster_eps: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            radius: None,
            multistart: 40,
            dt: 1e-3,
            tol: 1e-10,
            max_newton: 50,
            cluster_eps: 1e-6,
        }
    }
}

/// `2 (1 + diam / t) e^{lambda t}`.
pub fn default_search_radius(dim: usize, lambda: f64, t: f64) -> f64 {
    2.0 * (1.0 + diameter(dim) / t) * (lambda * t).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingBranch {
    pub p0: FiberVector,
    pub terminal: ContactState,
    /// Torus distance from `X(t; p0)` to the target.
    pub residual: f64,
    pub converged: bool,
}

fn lex_cmp(a: &FiberVector, b: &FiberVector) -> Ordering {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

struct Problem<'a, H: ?Sized> {
    h: &'a H,
    x0: FiberVector,
    u0: f64,
    t: f64,
    dt: f64,
}

impl<H: ContactHamiltonian + ?Sized> Problem<'_, H> {
    fn endpoint(&self, p0: &FiberVector) -> Option<LiftedState> {
        flow_lifted(
            self.h,
            LiftedState {
                x: self.x0,
                u: self.u0,
                p: *p0,
            },
            self.t,
            self.dt,
        )
    }

    fn jacobian(&self, p0: &FiberVector) -> Option<FiberMatrix> {
        let dim = p0.dim();
        let step = 1e-6 * (1.0 + p0.max_abs());
        let mut jac = FiberMatrix::zeros(dim);
        for j in 0..dim {
            let mut e = FiberVector::zeros(dim);
            e.set(j, step);
            let plus = self.endpoint(&(*p0 + e))?.x;
            let minus = self.endpoint(&(*p0 - e))?.x;
            let col = (plus - minus) * (0.5 / step);
            for i in 0..dim {
                jac.set(i, j, col[i]);
            }
        }
        Some(jac)
    }

    /// Damped Newton on `p0 -> X(t; p0) - lift`. Returns the root on success.
    fn newton(&self, start: FiberVector, lift: FiberVector, opts: &ShootOptions) -> Option<FiberVector> {
        let mut p0 = start;
        let mut resid = self.endpoint(&p0)?.x - lift;
        let mut norm = resid.norm();
        for _ in 0..opts.max_newton {
            if norm <= opts.tol {
                return Some(p0);
            }
            let step = self.jacobian(&p0)?.solve(&resid)?;
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..=8 {
                let trial = p0 - step * scale;
                if let Some(end) = self.endpoint(&trial) {
                    let r = end.x - lift;
                    if r.norm() < norm {
                        p0 = trial;
                        resid = r;
                        norm = r.norm();
                        accepted = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (norm <= opts.tol).then_some(p0)
    }
}

fn lattice_starts(dim: usize, radius: f64, per_axis: usize) -> Vec<FiberVector> {
    let spacing = 2.0 * radius / per_axis as f64;
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -radius + (i as f64 + 0.5) * spacing)
        .collect();
    match dim {
        1 => axis.iter().map(|&a| FiberVector::axis(1, a)).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| FiberVector::new(&[a, b]).unwrap()))
            .collect(),
    }
}

fn lift_shifts(dim: usize) -> Vec<FiberVector> {
    let ks = [-1.0, 0.0, 1.0];
    match dim {
        1 => ks.iter().map(|&k| FiberVector::axis(1, k)).collect(),
        _ => ks
            .iter()
            .flat_map(|&a| ks.iter().map(move |&b| FiberVector::new(&[a, b]).unwrap()))
            .collect(),
    }
}

/// Enumerate the distinct converged solutions from `(x0, u0)` reaching
/// `target` at time `t`, sorted lexicographically by initial momentum.
///
/// Each lattice start aims Newton at the lift of `target` nearest to its own
/// endpoint and at the neighbouring lifts. Roots outside the search box are
/// discarded.
pub fn shoot<H: ContactHamiltonian + ?Sized>(
    h: &H,
    x0: &TorusPoint,
    u0: f64,
    target: &TorusPoint,
    t: f64,
    opts: &ShootOptions,
) -> Result<Vec<ShootingBranch>> {
    let dim = h.dim();
    if x0.dim() != dim || target.dim() != dim {
        return Err(Error::InvalidInput("shooting dimension mismatch".into()));
    }
    if !(t > 0.0 && t.is_finite()) || !u0.is_finite() {
        return Err(Error::InvalidInput(format!("shooting needs t > 0, got {t}")));
    }
    if opts.multistart == 0 || !(opts.dt > 0.0) {
        return Err(Error::InvalidInput("multistart and dt must be positive".into()));
    }
    let lambda = h.lipschitz_u().unwrap_or(0.0);
    let radius = opts
        .radius
        .unwrap_or_else(|| default_search_radius(dim, lambda, t));
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("search radius must be positive, got {radius}")));
    }

    let problem = Problem {
        h,
        x0: FiberVector::new(x0.coords())?,
        u0,
        t,
        dt: opts.dt,
    };
    let starts = lattice_starts(dim, radius, opts.multistart);
    let shifts = lift_shifts(dim);
    let roots: Vec<Vec<FiberVector>> = par::map_indexed(starts.len(), |i| {
        let start = starts[i];
        let Some(end) = problem.endpoint(&start) else {
            return Vec::new();
        };
        let nearest = end.x + end.wrapped().displacement_unchecked(target);
        shifts
            .iter()
            .filter_map(|s| problem.newton(start, nearest + *s, opts))
            .filter(|p| p.max_abs() <= radius)
            .collect()
    });

    let mut all: Vec<FiberVector> = roots.into_iter().flatten().collect();
    all.sort_by(lex_cmp);
    let mut distinct: Vec<FiberVector> = Vec::new();
    for p in all {
        if distinct.iter().all(|q| (*q - p).norm() > opts.cluster_eps) {
            distinct.push(p);
        }
    }

    let mut branches = Vec::with_capacity(distinct.len());
    for p0 in distinct {
        let Some(end) = problem.endpoint(&p0) else {
            continue;
        };
        let x = end.wrapped();
        let residual = x.displacement_unchecked(target).norm();
        branches.push(ShootingBranch {
            p0,
            terminal: ContactState {
                x,
                u: end.u,
                p: end.p,
                t,
            },
            residual,
            converged: residual <= opts.tol * 10.0,
        });
    }
    branches.retain(|b| b.converged);
    if branches.is_empty() {
        return Err(Error::NoSolution(format!(
            "no converged branches within momentum radius {radius} (radius too small or t too large)"
        )));
    }
    Ok(branches)
}

/// Smallest terminal `U(t)` over converged branches; ties go to the smallest
/// `|p0|`, then to the lexicographically smallest `p0`.
pub fn min_over_solutions(branches: &[ShootingBranch]) -> Result<(f64, ShootingBranch)> {
    branches
        .iter()
        .filter(|b| b.converged)
        .min_by(|a, b| {
            a.terminal
                .u
                .total_cmp(&b.terminal.u)
                .then(a.p0.norm().total_cmp(&b.p0.norm()))
                .then_with(|| lex_cmp(&a.p0, &b.p0))
        })
        .map(|b| (b.terminal.u, b.clone()))
        .ok_or_else(|| Error::NoSolution("no converged branch to minimise over".into()))
}
