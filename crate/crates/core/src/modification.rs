//! Compactified Lagrangian
//! `L_R = alpha_R(|v|) Lbar_R + mu_R beta(|v|^2 - R^2)` with
//! `Lbar_R = rho_R(u) L(x, u, v) + (1 - rho_R(u)) L(x, 0, v)`,
//! and the checks that solving with `L_R` changes nothing once `R` exceeds
//! the a priori bound of the minimisers.
//!
//! `rho_R` and `alpha_R` are quintic smoothsteps over unit bands, so they are
//! C^2 rather than smooth. `beta(z) = z^3` for `z > 0`.

use crate::action::{backtrack_calibrated, picard_iterate, ActionField, DpConfig};
use crate::catalog::{ContactLagrangian, Outcome, Provenance};
use crate::error::{Error, Result};
use crate::torus::{FiberMatrix, FiberVector, TorusPoint};

/// `6s^5 - 15s^4 + 10s^3` clamped to `[0, 1]`, with first and second
/// derivatives.
fn smoothstep(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let s2 = s * s;
        (
            s2 * s * (10.0 + s * (6.0 * s - 15.0)),
            30.0 * s2 * (1.0 - s) * (1.0 - s),
            60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        )
    }
}

/// Sup of `|S'|` and `|S''|` for the quintic step: `15/8` and `10/sqrt(3)`.
pub const SMOOTHSTEP_D1_MAX: f64 = 15.0 / 8.0;
pub const SMOOTHSTEP_D2_MAX: f64 = 5.773_502_691_896_258;

/// `rho_R(u)`: 1 on `|u| <= R`, 0 beyond `R + 1`.
pub fn bump_rho(r: f64, u: f64) -> f64 {
    1.0 - smoothstep(u.abs() - r).0
}

/// `d rho_R / du`.
pub fn bump_rho_prime(r: f64, u: f64) -> f64 {
    -smoothstep(u.abs() - r).1 * u.signum()
}

/// `alpha_R` as a function of `|v|`: 1 up to `R + 1`, 0 beyond `R + 2`.
pub fn bump_alpha(r: f64, v: &FiberVector) -> f64 {
    alpha_radial(r, v.norm()).0
}

/// `alpha_R(s)` and its first two radial derivatives.
pub fn alpha_radial(r: f64, speed: f64) -> (f64, f64, f64) {
    let (s, d1, d2) = smoothstep(speed - r - 1.0);
    (1.0 - s, -d1, -d2)
}

/// `beta(z) = z^3` for `z > 0`, else 0; with `beta'` and `beta''`.
pub fn beta(z: f64) -> (f64, f64, f64) {
    if z > 0.0 {
        (z * z * z, 3.0 * z * z, 6.0 * z)
    } else {
        (0.0, 0.0, 0.0)
    }
}

/// Sample lattice for the compact region `|u| <= R + 1`, `|v| <= R + 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModSampleSpec {
    pub x_points: usize,
    /// Points per axis in `u` and in each velocity component.
    pub per_axis: usize,
}

impl Default for ModSampleSpec {
    fn default() -> Self {
        Self {
            x_points: 8,
            per_axis: 64,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

fn torus_samples(dim: usize, n: usize) -> Vec<TorusPoint> {
    let axis: Vec<f64> = (0..n.max(1)).map(|i| i as f64 / n.max(1) as f64).collect();
    let mut out = Vec::new();
    for &a in &axis {
        if dim == 1 {
            out.push(TorusPoint::wrap(&[a]).unwrap());
        } else {
            for &b in &axis {
                out.push(TorusPoint::wrap(&[a, b]).unwrap());
            }
        }
    }
    out
}

/// Velocity samples in the box `[-w, w]^dim` with `|v| <= w`.
fn velocity_samples(dim: usize, w: f64, n: usize) -> Vec<FiberVector> {
    let axis = linspace(-w, w, n);
    let mut out = Vec::new();
    for &a in &axis {
        if dim == 1 {
            out.push(FiberVector::axis(1, a));
        } else {
            for &b in &axis {
                let v = FiberVector::new(&[a, b]).unwrap();
                if v.norm() <= w {
                    out.push(v);
                }
            }
        }
    }
    out
}

fn lbar<L: ContactLagrangian + ?Sized>(base: &L, r: f64, x: &TorusPoint, u: f64, v: &FiberVector) -> (f64, FiberVector) {
    let rho = bump_rho(r, u);
    if rho == 1.0 {
        return (base.value(x, u, v), base.grad_v(x, u, v));
    }
    let (l0, g0) = (base.value(x, 0.0, v), base.grad_v(x, 0.0, v));
    if rho == 0.0 {
        return (l0, g0);
    }
    (
        rho * base.value(x, u, v) + (1.0 - rho) * l0,
        base.grad_v(x, u, v) * rho + g0 * (1.0 - rho),
    )
}

/// `1.1 max{(max|Lbar| + max|Lbar_v|) / (R + 1)^2, 1}` from sampled maxima.
pub fn mu_from_maxima(max_l: f64, max_lv: f64, r: f64) -> f64 {
    1.1 * ((max_l + max_lv) / ((r + 1.0) * (r + 1.0))).max(1.0)
}

/// Penalty weight for `base` at cutoff `r`, sampled over the compact region.
pub fn compute_mu<L: ContactLagrangian + ?Sized>(base: &L, r: f64, spec: &ModSampleSpec) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("R must be positive, got {r}")));
    }
    let dim = base.dim();
    let xs = torus_samples(dim, spec.x_points);
    let us = linspace(-(r + 1.0), r + 1.0, spec.per_axis);
    let vs = velocity_samples(dim, r + 2.0, spec.per_axis);
    let (mut max_l, mut max_lv) = (0.0f64, 0.0f64);
    for x in &xs {
        for &u in &us {
            for v in &vs {
                let (l, g) = lbar(base, r, x, u, v);
                max_l = max_l.max(l.abs());
                max_lv = max_lv.max(g.norm());
            }
        }
    }
    if !(max_l.is_finite() && max_lv.is_finite()) {
        return Err(Error::NumericalDomain("non-finite Lagrangian on the sample region".into()));
    }
    Ok(mu_from_maxima(max_l, max_lv, r))
}

/// `L_R` built from `base`.
#[derive(Clone, Debug)]
pub struct ModifiedLagrangian<L> {
    base: L,
    r: f64,
    mu: f64,
    name: String,
}

impl<L: ContactLagrangian> ModifiedLagrangian<L> {
    /// `mu_R` from [`compute_mu`].
    pub fn new(base: L, r: f64, spec: &ModSampleSpec) -> Result<Self> {
        let mu = compute_mu(&base, r, spec)?;
        Self::with_mu(base, r, mu)
    }

    /// Explicit penalty weight, bypassing the lower bound.
    pub fn with_mu(base: L, r: f64, mu: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite() && mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidInput(format!("need R > 0 and mu > 0, got R = {r}, mu = {mu}")));
        }
        let name = format!("{}_R{r}", base.name());
        Ok(Self { base, r, mu, name })
    }

    pub fn base(&self) -> &L {
        &self.base
    }

    pub fn cutoff(&self) -> f64 {
        self.r
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// The composite formula term by term.
pub fn modified_eval<L: ContactLagrangian>(m: &ModifiedLagrangian<L>, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
    m.value(x, u, v)
}

impl<L: ContactLagrangian> ContactLagrangian for ModifiedLagrangian<L> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
        let r2 = v.norm_sq();
        let (alpha, _, _) = alpha_radial(self.r, r2.sqrt());
        let penalty = self.mu * beta(r2 - self.r * self.r).0;
        if alpha == 0.0 {
            return penalty;
        }
        alpha * lbar(&self.base, self.r, x, u, v).0 + penalty
    }

    fn grad_x(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector {
        let alpha = bump_alpha(self.r, v);
        if alpha == 0.0 {
            return FiberVector::zeros(self.dim());
        }
        let rho = bump_rho(self.r, u);
        let g = if rho == 1.0 {
            self.base.grad_x(x, u, v)
        } else if rho == 0.0 {
            self.base.grad_x(x, 0.0, v)
        } else {
            self.base.grad_x(x, u, v) * rho + self.base.grad_x(x, 0.0, v) * (1.0 - rho)
        };
        g * alpha
    }

    fn d_u(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
        let alpha = bump_alpha(self.r, v);
        let rho = bump_rho(self.r, u);
        if alpha == 0.0 || rho == 0.0 {
            return 0.0;
        }
        let mut d = rho * self.base.d_u(x, u, v);
        let drho = bump_rho_prime(self.r, u);
        if drho != 0.0 {
            d += drho * (self.base.value(x, u, v) - self.base.value(x, 0.0, v));
        }
        alpha * d
    }

    fn grad_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector {
        let r2 = v.norm_sq();
        let speed = r2.sqrt();
        let (alpha, d_alpha, _) = alpha_radial(self.r, speed);
        let (_, d_beta, _) = beta(r2 - self.r * self.r);
        let mut g = *v * (2.0 * self.mu * d_beta);
        if alpha != 0.0 {
            let (l, lv) = lbar(&self.base, self.r, x, u, v);
            g = g + lv * alpha;
            if d_alpha != 0.0 {
                g = g + *v * (d_alpha * l / speed);
            }
        }
        g
    }

    fn hess_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberMatrix {
        let dim = self.dim();
        let r2 = v.norm_sq();
        let speed = r2.sqrt();
        let (alpha, a1, a2) = alpha_radial(self.r, speed);
        let (_, b1, b2) = beta(r2 - self.r * self.r);
        let mut h = FiberMatrix::scaled_identity(dim, 2.0 * self.mu * b1)
            .add(&FiberMatrix::sym_outer(v, v, 4.0 * self.mu * b2));
        if alpha != 0.0 {
            let rho = bump_rho(self.r, u);
            let hbar = if rho == 1.0 {
                self.base.hess_v(x, u, v)
            } else if rho == 0.0 {
                self.base.hess_v(x, 0.0, v)
            } else {
                self.base
                    .hess_v(x, u, v)
                    .scale(rho)
                    .add(&self.base.hess_v(x, 0.0, v).scale(1.0 - rho))
            };
            h = h.add(&hbar.scale(alpha));
            if a1 != 0.0 || a2 != 0.0 {
                let (l, lv) = lbar(&self.base, self.r, x, u, v);
                let radial = FiberMatrix::sym_outer(v, v, 1.0 / r2);
                // Hess(alpha) = a'' vv^T/r^2 + a' (I/r - vv^T/r^3)
                let hess_alpha = radial
                    .scale(a2)
                    .add(&FiberMatrix::identity(dim).add(&radial.scale(-1.0)).scale(a1 / speed));
                h = h
                    .add(&hess_alpha.scale(l))
                    .add(&FiberMatrix::sym_outer(v, &lv, 2.0 * a1 / speed));
            }
        }
        h
    }

    fn provenance(&self) -> Provenance {
        Provenance::Modified
    }

    fn lipschitz_u(&self) -> Option<f64> {
        None
    }
}

/// Velocity regimes of the positivity argument, by `|v|`:
/// `[0, R]`, `(R, R+1]`, `(R+1, R+2]`, `(R+2, R+3]`.
pub const REGIMES: [&str; 4] = ["i", "ii", "iii", "iv"];

pub fn regime_of(r: f64, speed: f64) -> usize {
    if speed <= r {
        0
    } else if speed <= r + 1.0 {
        1
    } else if speed <= r + 2.0 {
        2
    } else {
        3
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModificationReport {
    pub r: f64,
    pub mu: f64,
    /// Smallest Hessian eigenvalue per velocity regime.
    pub regime_min_eig: [f64; 4],
    /// Sampled `sup |d L_R / du|`.
    pub lambda_r: f64,
    /// Sampled `sup |L_R(x,u,v) - L_R(x,0,v)|` and its bound `lambda_R (R + 1)`.
    pub u_offset_max: f64,
    /// Smallest `L_R - (|v|^2 - 1 + D)` beyond `R + 2`.
    pub superlinear_slack: f64,
    pub positive_definite: [Outcome; 4],
    pub lipschitz: Outcome,
    pub bounded_offset: Outcome,
    pub superlinear: Outcome,
}

impl ModificationReport {
    pub fn all_pass(&self) -> bool {
        self.positive_definite.iter().all(|o| *o == Outcome::Pass)
            && [self.lipschitz, self.bounded_offset, self.superlinear]
                .iter()
                .all(|o| *o == Outcome::Pass)
    }

    pub fn failed_regimes(&self) -> Vec<&'static str> {
        (0..4)
            .filter(|&i| self.positive_definite[i] != Outcome::Pass)
            .map(|i| REGIMES[i])
            .collect()
    }
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

/// Sample the Tonelli and u-Lipschitz properties of `L_R` without failing.
pub fn tonelli_report<L: ContactLagrangian>(m: &ModifiedLagrangian<L>, spec: &ModSampleSpec) -> ModificationReport {
    let r = m.r;
    let dim = m.dim();
    let xs = torus_samples(dim, spec.x_points.min(8));
    let n = spec.per_axis.max(8);
    let us = linspace(-(r + 2.0), r + 2.0, n / 2 + 1);
    let vs = velocity_samples(dim, r + 3.0, n + 1);

    let mut min_eig = [f64::INFINITY; 4];
    let mut lambda_r: f64 = 0.0;
    let mut offset: f64 = 0.0;
    let mut d_floor = f64::INFINITY;
    for x in &xs {
        for v in &vs {
            let k = regime_of(r, v.norm());
            let l0 = m.value(x, 0.0, v);
            for &u in &us {
                min_eig[k] = min_eig[k].min(m.hess_v(x, u, v).min_eigenvalue());
                lambda_r = lambda_r.max(m.d_u(x, u, v).abs());
                offset = offset.max((m.value(x, u, v) - l0).abs());
                if u.abs() <= r + 1.0 {
                    d_floor = d_floor.min(m.base.value(x, u, v));
                }
            }
        }
    }
    let d_floor = d_floor.min(0.0);
    let mut slack = f64::INFINITY;
    for x in &xs {
        for v in vs.iter().filter(|v| v.norm() > r + 2.0) {
            for &u in &us {
                slack = slack.min(m.value(x, u, v) - (v.norm_sq() - 1.0 + d_floor));
            }
        }
    }
    ModificationReport {
        r,
        mu: m.mu,
        regime_min_eig: min_eig,
        lambda_r,
        u_offset_max: offset,
        superlinear_slack: slack,
        positive_definite: min_eig.map(|e| outcome(e > 0.0)),
        lipschitz: outcome(lambda_r.is_finite()),
        bounded_offset: outcome(offset <= lambda_r * (r + 1.0) * (1.0 + 1e-9) + 1e-12),
        superlinear: outcome(slack >= 0.0),
    }
}

/// As [`tonelli_report`], turning a failed positivity regime into a
/// construction error.
pub fn verify_modified_tonelli<L: ContactLagrangian>(
    m: &ModifiedLagrangian<L>,
    spec: &ModSampleSpec,
) -> Result<ModificationReport> {
    let rep = tonelli_report(m, spec);
    let failed = rep.failed_regimes();
    if !failed.is_empty() {
        return Err(Error::Construction(format!(
            "L_R Hessian not positive definite in regime(s) {} (mu = {}, min eigenvalues {:?}); mu is too small",
            failed.join(", "),
            rep.mu,
            rep.regime_min_eig
        )));
    }
    if !rep.all_pass() {
        return Err(Error::Construction(format!("L_R fails a structural check: {rep:?}")));
    }
    Ok(rep)
}

/// Everything [`check_invariance`] needs besides the Lagrangian.
#[derive(Clone, Debug)]
pub struct InvarianceSetup {
    pub x0: TorusPoint,
    pub u0: f64,
    pub horizon: f64,
    /// Discretisation of the reference solve; the modified solves keep `m`
    /// and `dt` but raise the slope cap to `0.45 / dt`.
    pub cfg: DpConfig,
    pub tol_fix: f64,
    pub max_outer: usize,
    /// Layers from this time on are compared.
    pub compare_from: f64,
    /// Forces `mu_R` for both cutoffs (negative testing).
    pub mu_override: Option<f64>,
    pub sample: ModSampleSpec,
}

impl InvarianceSetup {
    pub fn new(x0: TorusPoint, horizon: f64, cfg: DpConfig) -> Self {
        Self {
            x0,
            u0: 0.0,
            horizon,
            cfg,
            tol_fix: crate::action::DEFAULT_TOL_FIX,
            max_outer: crate::action::DEFAULT_MAX_OUTER,
            compare_from: 0.5 * horizon,
            mu_override: None,
            sample: ModSampleSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceOutcome {
    /// `|h_R1 - h_R2|_inf` over compared layers.
    pub diff: f64,
    /// The same norm over the earlier layers, where short times force fast
    /// curves into the modified region; shows the truncation is active.
    pub early_diff: f64,
    /// Largest `|u|`, `|v|` along calibrated curves of the unmodified solve.
    pub r0: f64,
    pub mu: [f64; 2],
}

/// Largest `|u|` or `|v|` along calibrated curves ending at a coarse set of
/// nodes at `compare_from` and at the horizon.
pub fn observed_bound<L: ContactLagrangian + ?Sized>(field: &ActionField, l: &L, compare_from: f64) -> Result<f64> {
    let grid = field.grid;
    let stride = (grid.m / 8).max(1);
    let mut bound: f64 = field.u0.abs();
    let k_from = field
        .layer_at(compare_from)
        .ok_or_else(|| Error::InvalidInput(format!("compare_from = {compare_from} is not a layer time")))?;
    for k in [k_from, field.layer_count()] {
        for node in 0..grid.len() {
            if !grid.axes(node)[..grid.dim].iter().all(|a| a % stride == 0) {
                continue;
            }
            if !field.value(k, node).is_finite() {
                continue;
            }
            let c = backtrack_calibrated(field, l, &grid.point(node), field.time(k))?;
            let (u, v) = c.extent();
            bound = bound.max(u).max(v);
        }
    }
    Ok(bound)
}

fn compared_diff(a: &ActionField, b: &ActionField, layers: std::ops::RangeInclusive<usize>) -> f64 {
    let mut worst: f64 = 0.0;
    for k in layers {
        for (x, y) in a.layer(k).iter().zip(b.layer(k)) {
            if x.is_finite() || y.is_finite() {
                worst = worst.max((x - y).abs());
            }
        }
    }
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst
    }
}

/// Solve with `L_{R1}` and `L_{R2}` and report how far apart the fields are.
pub fn check_invariance<L: ContactLagrangian + Clone>(
    l: &L,
    r1: f64,
    r2: f64,
    setup: &InvarianceSetup,
) -> Result<InvarianceOutcome> {
    let (reference, _) = picard_iterate(
        l,
        &setup.x0,
        setup.u0,
        setup.horizon,
        &setup.cfg,
        setup.tol_fix,
        setup.max_outer,
    )?;
    let r0 = observed_bound(&reference, l, setup.compare_from)?;
    if r1.min(r2) <= r0 {
        return Err(Error::Precondition(format!(
            "cutoff {} does not exceed the observed a priori bound R0 = {r0:.4}",
            r1.min(r2)
        )));
    }
    let build = |r: f64| -> Result<ModifiedLagrangian<L>> {
        let m = match setup.mu_override {
            Some(mu) => ModifiedLagrangian::with_mu(l.clone(), r, mu)?,
            None => ModifiedLagrangian::new(l.clone(), r, &setup.sample)?,
        };
        verify_modified_tonelli(&m, &setup.sample)?;
        Ok(m)
    };
    let m1 = build(r1)?;
    let m2 = build(r2)?;
    let wide = setup.cfg.clone().with_v_max(0.45 / setup.cfg.dt);
    let solve = |m: &ModifiedLagrangian<L>| {
        picard_iterate(m, &setup.x0, setup.u0, setup.horizon, &wide, setup.tol_fix, setup.max_outer).map(|(f, _)| f)
    };
    let h1 = solve(&m1)?;
    let h2 = if r1 == r2 && m1.mu == m2.mu { h1.clone() } else { solve(&m2)? };
    let k_from = reference.layer_at(setup.compare_from).unwrap_or(1);
    Ok(InvarianceOutcome {
        diff: compared_diff(&h1, &h2, k_from..=h1.layer_count()),
        early_diff: compared_diff(&h1, &h2, 1..=k_from.saturating_sub(1)),
        r0,
        mu: [m1.mu, m2.mu],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{fd_lagrangian_partials, CatalogEntry};
    use crate::torus::wrap;

    #[test]
    fn bump_examples() {
        assert_eq!(bump_rho(2.0, 1.5), 1.0);
        assert_eq!(bump_rho(2.0, 3.5), 0.0);
        assert!((bump_rho(2.0, 2.5) - 0.5).abs() < 1e-15);
        assert!((bump_rho(2.0, -2.5) - 0.5).abs() < 1e-15);
        let v = |s: f64| FiberVector::axis(1, s);
        assert_eq!(bump_alpha(2.0, &v(2.5)), 1.0);
        assert_eq!(bump_alpha(2.0, &v(4.5)), 0.0);
        assert!((bump_alpha(2.0, &v(3.5)) - 0.5).abs() < 1e-15);
        assert_eq!(beta(-1.0).0, 0.0);
        assert_eq!(beta(1.0).0, 1.0);
        assert_eq!(beta(2.0), (8.0, 12.0, 12.0));
    }

    #[test]
    fn smoothstep_derivative_bounds() {
        let (mut d1, mut d2) = (0.0f64, 0.0f64);
        for i in 0..=20000 {
            let (_, a, b) = smoothstep(i as f64 / 20000.0);
            d1 = d1.max(a.abs());
            d2 = d2.max(b.abs());
        }
        // |rho'| < 2 holds; the second derivative of any unit-band step
        // reaches at least 4, the quintic reaches 10/sqrt(3)
        assert!(d1 < 2.0 && (d1 - SMOOTHSTEP_D1_MAX).abs() < 1e-6);
        assert!((d2 - SMOOTHSTEP_D2_MAX).abs() < 1e-3);
        // finite-difference check of the closed-form derivatives
        for s in [0.1, 0.37, 0.5, 0.81] {
            let h = 1e-6;
            let (_, d, dd) = smoothstep(s);
            assert!(((smoothstep(s + h).0 - smoothstep(s - h).0) / (2.0 * h) - d).abs() < 1e-8);
            assert!(((smoothstep(s + h).1 - smoothstep(s - h).1) / (2.0 * h) - dd).abs() < 1e-6);
        }
    }

    #[test]
    fn beta_conditions() {
        for i in 1..400 {
            let z = i as f64 * 0.01;
            let (b, b1, b2) = beta(z);
            assert!(b > z * z - 1.0 && b1 > 0.0 && b2 > 0.0);
            if z >= 1.0 {
                assert!(b2 > 1.0);
            }
        }
    }

    #[test]
    fn mu_formula() {
        assert!((mu_from_maxima(10.0, 8.0, 2.0) - 2.2).abs() < 1e-12);
        assert!((mu_from_maxima(0.1, 0.1, 2.0) - 1.1).abs() < 1e-12);
        let l = CatalogEntry::discounted(1, 0.0, 0.5).unwrap().lagrangian();
        let spec = ModSampleSpec::default();
        let mu3 = compute_mu(&l, 3.0, &spec).unwrap();
        let mu6 = compute_mu(&l, 6.0, &spec).unwrap();
        // |Lbar| lies between (R+2)^2/2 + lambda R (attained at u = -R) and
        // (R+2)^2/2 + lambda (R+1); |Lbar_v| = R+2 at the sampled corner
        let lo = mu_from_maxima(0.5 * 25.0 + 0.5 * 3.0, 5.0, 3.0);
        let hi = mu_from_maxima(0.5 * 25.0 + 0.5 * 4.0, 5.0, 3.0);
        assert!(lo <= mu3 && mu3 <= hi, "{lo} <= {mu3} <= {hi}");
        assert!(mu6 >= 1.1 && mu6 <= mu3 + 1e-12);
    }

    #[test]
    fn plateau_is_exact() {
        let base = CatalogEntry::nonlinear_u(2, 0.3, 0.3).unwrap().lagrangian();
        let m = ModifiedLagrangian::new(base.clone(), 3.0, &ModSampleSpec { x_points: 4, per_axis: 16 }).unwrap();
        let x = wrap(&[0.3, 0.8]).unwrap();
        for (u, v) in [(0.0, [0.0, 0.0]), (-2.9, [1.0, -2.0]), (3.0, [2.1, 2.1])] {
            let v = FiberVector::new(&v).unwrap();
            assert_eq!(modified_eval(&m, &x, u, &v), base.value(&x, u, &v));
        }
    }

    #[test]
    fn far_region_is_pure_penalty() {
        let base = CatalogEntry::discounted(1, 0.3, 0.5).unwrap().lagrangian();
        let m = ModifiedLagrangian::with_mu(base, 2.0, 1.7).unwrap();
        let x = wrap(&[0.1]).unwrap();
        let v = FiberVector::axis(1, 4.5);
        assert_eq!(m.value(&x, 3.5, &v), 1.7 * (4.5f64 * 4.5 - 4.0).powi(3));
    }

    #[test]
    fn transition_band_term_by_term() {
        let base = CatalogEntry::nonlinear_u(1, 0.3, 0.3).unwrap().lagrangian();
        let m = ModifiedLagrangian::with_mu(base.clone(), 2.0, 1.3).unwrap();
        let x = wrap(&[0.7]).unwrap();
        let (u, s) = (2.4, 3.3);
        let v = FiberVector::axis(1, s);
        let rho = bump_rho(2.0, u);
        let alpha = bump_alpha(2.0, &v);
        let lb = rho * base.value(&x, u, &v) + (1.0 - rho) * base.value(&x, 0.0, &v);
        let expect = alpha * lb + 1.3 * (s * s - 4.0).powi(3);
        assert!((m.value(&x, u, &v) - expect).abs() < 1e-12);
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        for dim in [1, 2] {
            let base = CatalogEntry::nonlinear_u(dim, 0.3, 0.4).unwrap().lagrangian();
            let m = ModifiedLagrangian::with_mu(base, 2.0, 1.5).unwrap();
            let x = TorusPoint::wrap(&[0.3, 0.6][..dim]).unwrap();
            for u in [0.5, 2.3, -2.7, 3.4] {
                for s in [1.0, 2.4, 3.3, 3.8, 4.6] {
                    let raw = [s * 0.8, s * 0.6];
                    let v = if dim == 1 { FiberVector::axis(1, s) } else { FiberVector::new(&raw).unwrap() };
                    let fd = fd_lagrangian_partials(&m, &x, u, &v, 1e-4);
                    let tol = 1e-5 * (1.0 + m.value(&x, u, &v).abs());
                    assert!((fd.d_u - m.d_u(&x, u, &v)).abs() < tol, "u={u} s={s}");
                    assert!((fd.grad_fiber - m.grad_v(&x, u, &v)).max_abs() < tol, "u={u} s={s}");
                    assert!((fd.grad_x - m.grad_x(&x, u, &v)).max_abs() < tol);
                    let h = m.hess_v(&x, u, &v);
                    for i in 0..dim {
                        for j in 0..dim {
                            assert!(
                                (fd.hess_fiber.get(i, j) - h.get(i, j)).abs() < 1e-3 * (1.0 + h.get(i, j).abs()),
                                "dim={dim} u={u} s={s} ({i},{j}): {} vs {}",
                                fd.hess_fiber.get(i, j),
                                h.get(i, j)
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tonelli_verification() {
        let base = CatalogEntry::discounted(1, 0.0, 0.5).unwrap().lagrangian();
        let spec = ModSampleSpec::default();
        let good = ModifiedLagrangian::new(base.clone(), 3.0, &spec).unwrap();
        let rep = verify_modified_tonelli(&good, &spec).unwrap();
        assert!(rep.all_pass());
        assert!((rep.lambda_r - 0.5).abs() < 0.5 * SMOOTHSTEP_D1_MAX * 4.0 + 1e-9);

        let bad = ModifiedLagrangian::with_mu(base, 3.0, 0.01).unwrap();
        let rep = tonelli_report(&bad, &spec);
        assert_eq!(rep.positive_definite[2], Outcome::Fail);
        assert!(matches!(verify_modified_tonelli(&bad, &spec), Err(Error::Construction(_))));

        let classical = CatalogEntry::classical(1, 0.3).unwrap().lagrangian();
        let m = ModifiedLagrangian::new(classical, 3.0, &spec).unwrap();
        let x = wrap(&[0.2]).unwrap();
        for u in [-2.0, 0.0, 2.9] {
            assert_eq!(m.d_u(&x, u, &FiberVector::axis(1, 1.0)), 0.0);
        }
    }

    #[test]
    fn invariance_and_its_negative_cases() {
        let l = CatalogEntry::discounted(1, 0.0, 0.5).unwrap().lagrangian();
        let cfg = DpConfig::new(1, 40, 0.05, 0.5, 1.0);
        let mut setup = InvarianceSetup::new(wrap(&[0.0]).unwrap(), 1.0, cfg);
        setup.sample = ModSampleSpec { x_points: 4, per_axis: 24 };
        let same = check_invariance(&l, 6.0, 6.0, &setup).unwrap();
        assert_eq!(same.diff, 0.0);
        let out = check_invariance(&l, 6.0, 10.0, &setup).unwrap();
        assert!(out.diff <= 2.0 * setup.tol_fix, "{out:?}");
        assert!(out.early_diff > 1.0, "{out:?}");
        assert!(out.r0 > 0.1 && out.r0 < 6.0);
        assert!(matches!(check_invariance(&l, 0.1, 10.0, &setup), Err(Error::Precondition(_))));
        // the penalty curvature grows like (R+1)^4, so at R = 6 the weight
        // has to drop further than at R = 3 before convexity breaks
        setup.mu_override = Some(1e-3);
        assert!(matches!(check_invariance(&l, 6.0, 10.0, &setup), Err(Error::Construction(_))));
    }
}
