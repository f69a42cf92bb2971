//! Bellman recursion over time layers.
//!
//! A step from layer `k` to `k + 1` ends at a grid node `x` and departs from
//! `y = x - d`, where `d` runs over a fixed stencil of displacements on a
//! lattice `substeps` times finer than the grid, limited by `|d| <= v_max dt`.
//! Values at off-grid departures are interpolated multilinearly. The step cost
//! is `dt * L(midpoint, u_slot, d / dt)`.

use super::field::{interp_corners, ActionField, Grid, Scheme};
use crate::catalog::ContactLagrangian;
use crate::error::{Error, Result};
use crate::par;
use crate::torus::{diameter, FiberVector, TorusPoint, MAX_DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct DpConfig {
    pub dim: usize,
    /// Grid nodes per axis.
    pub m: usize,
    pub dt: f64,
    /// Slope cap: largest admissible `|displacement| / dt` per step.
    pub v_max: f64,
    /// Departure lattice refinement per grid cell (`1` = grid-to-grid).
    pub substeps: usize,
}

impl DpConfig {
    /// Configuration with the default slope cap for horizon `t` and u-Lipschitz
    /// constant `lambda`.
    pub fn new(dim: usize, m: usize, dt: f64, lambda: f64, horizon: f64) -> Self {
        Self {
            dim,
            m,
            dt,
            v_max: default_v_max(dim, lambda, horizon, dt),
            substeps: default_substeps(dim),
        }
    }

    pub fn with_v_max(mut self, v_max: f64) -> Self {
        self.v_max = v_max;
        self
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.m)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.v_max > 0.0 && self.v_max * self.dt < 0.5) {
            return Err(Error::InvalidInput(format!(
                "need 0 < v_max * dt < 1/2, got v_max = {}, dt = {}",
                self.v_max, self.dt
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidInput("substeps must be at least 1".into()));
        }
        Ok(())
    }

    /// Stencil radius in grid cells, `ceil(v_max dt m)`.
    pub fn neighbor_radius(&self) -> usize {
        ((self.v_max * self.dt * self.m as f64).ceil() as usize).max(1)
    }

    /// Number of layers for horizon `t`; `dt` must divide `t`.
    pub fn layers_for(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if !(k >= 1.0) || (k * self.dt - t).abs() > 1e-9 * t.max(self.dt) {
            return Err(Error::InvalidInput(format!(
                "dt = {} does not divide the horizon {t}",
                self.dt
            )));
        }
        Ok(k as usize)
    }
}

/// `3 (1 + diam e^{lambda T} / T)`, capped at `0.45 / dt` so one step never
/// covers half a period.
pub fn default_v_max(dim: usize, lambda: f64, horizon: f64, dt: f64) -> f64 {
    let raw = 3.0 * (1.0 + diameter(dim) * (lambda * horizon).exp() / horizon);
    raw.min(0.45 / dt)
}

pub fn default_substeps(dim: usize) -> usize {
    if dim == 1 {
        8
    } else {
        2
    }
}

/// One admissible step displacement with its precomputed interpolation data.
#[derive(Clone, Debug)]
pub(crate) struct Offset {
    /// Displacement from departure to arrival.
    pub disp: FiberVector,
    pub velocity: FiberVector,
    /// Corner offsets (in cells, relative to the arrival node) and weights.
    corners: [[isize; MAX_DIM]; 4],
    weights: [f64; 4],
    n: usize,
}

impl Offset {
    #[inline]
    fn corner_nodes(&self, grid: &Grid, arrival: [usize; MAX_DIM]) -> [usize; 4] {
        let mut out = [0; 4];
        for (o, corner) in out.iter_mut().zip(&self.corners).take(self.n) {
            *o = grid.flatten([
                arrival[0] as isize + corner[0],
                arrival[1] as isize + corner[1],
            ]);
        }
        out
    }
}

/// Stencil in fixed order: lexicographic in the departure lattice offset.
/// Ties in every argmin resolve to the first entry in this order.
pub(crate) fn stencil(cfg: &DpConfig) -> Vec<Offset> {
    let q = cfg.substeps as isize;
    let r = cfg.neighbor_radius() as isize * q;
    let h = 1.0 / cfg.m as f64;
    let reach = cfg.v_max * cfg.dt;
    // departure y = x + s / q cells, s in [-r, r]^dim
    let split = |s: isize| -> (isize, f64) {
        let base = s.div_euclid(q);
        (base, s.rem_euclid(q) as f64 / q as f64)
    };
    let mut out = Vec::new();
    let second: Vec<isize> = if cfg.dim == 2 { (-r..=r).collect() } else { vec![0] };
    for s0 in -r..=r {
        for &s1 in &second {
            let mut d = [0.0; MAX_DIM];
            d[0] = -(s0 as f64) * h / q as f64;
            d[1] = -(s1 as f64) * h / q as f64;
            let disp = FiberVector::from_array(d, cfg.dim);
            if disp.norm() > reach * (1.0 + 1e-12) {
                continue;
            }
            let (b0, f0) = split(s0);
            let (b1, f1) = split(s1);
            let mut corners = [[0isize; MAX_DIM]; 4];
            let mut weights = [0.0; 4];
            let mut n = 0;
            let a_count = if f0 == 0.0 { 1 } else { 2 };
            let b_count = if f1 == 0.0 { 1 } else { 2 };
            for a in 0..a_count {
                for b in 0..b_count {
                    corners[n] = [b0 + a as isize, b1 + b as isize];
                    let wa = if a == 0 { 1.0 - f0 } else { f0 };
                    let wb = if b == 0 { 1.0 - f1 } else { f1 };
                    weights[n] = wa * wb;
                    n += 1;
                }
            }
            out.push(Offset {
                disp,
                velocity: disp * (1.0 / cfg.dt),
                corners,
                weights,
                n,
            });
        }
    }
    out
}

/// Source of the u-slot for frozen passes: `h_i` of the previous iterate.
#[derive(Clone, Copy, Debug)]
pub enum UField<'a> {
    Constant(f64),
    Field(&'a ActionField),
}

impl UField<'_> {
    #[inline]
    fn at(&self, k: usize, node: usize) -> f64 {
        match self {
            UField::Constant(c) => *c,
            UField::Field(f) => f.layers[k - 1][node],
        }
    }

    #[inline]
    fn interp(&self, k: usize, nodes: &[usize; 4], w: &[f64; 4], n: usize) -> f64 {
        match self {
            UField::Constant(c) => *c,
            UField::Field(f) => interp_corners(&f.layers[k - 1], nodes, w, n),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum SlotRule<'a> {
    /// `u = (u_i(y, t_k) + u_i(x, t_{k+1})) / 2` from a frozen field, with
    /// `u_i(., 0) = u0`.
    Frozen(UField<'a>),
    /// `u = h(y, t_k)`, the value being marched.
    Departure,
}

pub(crate) struct Problem<'a, L: ?Sized> {
    pub l: &'a L,
    pub x0: TorusPoint,
    pub u0: f64,
    pub horizon: f64,
    pub cfg: &'a DpConfig,
}

impl<L: ContactLagrangian + ?Sized> Problem<'_, L> {
    fn check(&self) -> Result<(Grid, usize)> {
        self.cfg.validate()?;
        if self.l.dim() != self.cfg.dim || self.x0.dim() != self.cfg.dim {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: L has {}, config {}, x0 {}",
                self.l.dim(),
                self.cfg.dim,
                self.x0.dim()
            )));
        }
        if !self.u0.is_finite() {
            return Err(Error::InvalidInput("u0 must be finite".into()));
        }
        Ok((self.cfg.grid()?, self.cfg.layers_for(self.horizon)?))
    }

    /// One-step layer from `(x0, u0)` at `t = 0`.
    fn base_layer(&self, grid: &Grid, rule: SlotRule<'_>) -> Vec<f64> {
        let dt = self.cfg.dt;
        let reach = self.cfg.v_max * dt;
        let mut out = vec![f64::INFINITY; grid.len()];
        par::fill_indexed(&mut out, |node| {
            let x = grid.point(node);
            let d = self.x0.displacement_unchecked(&x);
            if d.norm() > reach * (1.0 + 1e-12) {
                return f64::INFINITY;
            }
            let mid = self.x0.translate(&(d * 0.5));
            let u = match rule {
                SlotRule::Frozen(uf) => 0.5 * (self.u0 + uf.at(1, node)),
                SlotRule::Departure => self.u0,
            };
            self.u0 + dt * self.l.value(&mid, u, &(d * (1.0 / dt)))
        });
        out
    }

    fn next_layer(
        &self,
        grid: &Grid,
        stencil: &[Offset],
        prev: &[f64],
        k: usize,
        rule: SlotRule<'_>,
    ) -> Vec<f64> {
        let dt = self.cfg.dt;
        let mut out = vec![f64::INFINITY; grid.len()];
        par::fill_indexed(&mut out, |node| {
            let axes = grid.axes(node);
            let x = grid.point(node);
            let arrival_u = match rule {
                SlotRule::Frozen(uf) => uf.at(k + 1, node),
                SlotRule::Departure => 0.0,
            };
            let mut best = f64::INFINITY;
            for off in stencil {
                let nodes = off.corner_nodes(grid, axes);
                let start = interp_corners(prev, &nodes, &off.weights, off.n);
                if !start.is_finite() {
                    continue;
                }
                let u = match rule {
                    SlotRule::Frozen(uf) => {
                        0.5 * (uf.interp(k, &nodes, &off.weights, off.n) + arrival_u)
                    }
                    SlotRule::Departure => start,
                };
                if !u.is_finite() {
                    continue;
                }
                let mid = x.translate(&(off.disp * -0.5));
                let cost = start + dt * self.l.value(&mid, u, &off.velocity);
                if cost < best {
                    best = cost;
                }
            }
            best
        });
        out
    }

    pub(crate) fn march(&self, rule: SlotRule<'_>, scheme: Scheme) -> Result<ActionField> {
        let (grid, layers) = self.check()?;
        if let SlotRule::Frozen(UField::Field(f)) = rule {
            if f.grid != grid || f.layers.len() != layers || (f.dt - self.cfg.dt).abs() > 0.0 {
                return Err(Error::InvalidInput(
                    "frozen u-field must share the grid and time layers".into(),
                ));
            }
        }
        let stencil = stencil(self.cfg);
        let mut out = Vec::with_capacity(layers);
        out.push(self.base_layer(&grid, rule));
        for k in 1..layers {
            let next = self.next_layer(&grid, &stencil, &out[k - 1], k, rule);
            out.push(next);
        }
        if out.last().is_none_or(|l| l.iter().all(|v| !v.is_finite())) {
            return Err(Error::InfeasibleGrid(format!(
                "no grid node reachable at t = {} with v_max = {}",
                self.horizon, self.cfg.v_max
            )));
        }
        for layer in &out {
            if layer.iter().any(|v| v.is_nan()) {
                return Err(Error::NumericalDomain("NaN in action field".into()));
            }
        }
        Ok(ActionField {
            x0: self.x0,
            u0: self.u0,
            horizon: self.horizon,
            dt: self.cfg.dt,
            grid,
            v_max: self.cfg.v_max,
            substeps: self.cfg.substeps,
            scheme,
            layers: out,
        })
    }
}

/// One minimisation pass with the u-slot frozen to `u_field`:
/// `h(x, t) = u0 + min over lattice paths of sum dt L(mid, u_field, d / dt)`.
pub fn dp_min_action<L: ContactLagrangian + ?Sized>(
    l: &L,
    u_field: UField<'_>,
    x0: &TorusPoint,
    u0: f64,
    horizon: f64,
    cfg: &DpConfig,
) -> Result<ActionField> {
    Problem {
        l,
        x0: *x0,
        u0,
        horizon,
        cfg,
    }
    .march(SlotRule::Frozen(u_field), Scheme::FrozenPass)
}

/// Forward marching with one-step semigroup updates:
/// `h(x, t_{k+1}) = min_y [h(y, t_k) + dt L(mid, h(y, t_k), d / dt)]`.
pub fn semigroup_march<L: ContactLagrangian + ?Sized>(
    l: &L,
    x0: &TorusPoint,
    u0: f64,
    horizon: f64,
    cfg: &DpConfig,
) -> Result<ActionField> {
    Problem {
        l,
        x0: *x0,
        u0,
        horizon,
        cfg,
    }
    .march(SlotRule::Departure, Scheme::Semigroup)
}
