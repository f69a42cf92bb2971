//! Property checks on computed action fields, each producing one
//! [`CheckReport`] with a measured value, a threshold and a verdict.

mod checks;
mod classical;
mod report;

pub use checks::*;
pub use classical::lax_oleinik;
pub use report::{write_report_csv, write_report_text, CheckReport, Tolerance};

use crate::action::{picard_iterate, DpConfig, Method, Solver, Stopwatch, DEFAULT_MAX_OUTER, DEFAULT_TOL_FIX};
use crate::catalog::CatalogEntry;
use crate::error::{Error, Result};
use crate::flow::{ContactState, ShootOptions};
use crate::modification::{check_invariance, InvarianceSetup};
use crate::torus::{FiberVector, TorusPoint};

/// Grids and parameters for [`run_all`]. The defaults finish in a few
/// minutes on a desktop.
#[derive(Clone, Debug)]
pub struct HarnessConfig {
    pub dim: usize,
    pub x0: TorusPoint,
    pub u0: f64,
    pub horizon: f64,
    pub m: usize,
    pub dt: f64,
    pub v_max: Option<f64>,
    pub tol_fix: f64,
    pub max_outer: usize,
    pub eps: f64,
    pub lambda: f64,
    pub a: f64,
    pub shoot: ShootOptions,
    /// Distances from `x0` (along the first axis) of the cross-method probes.
    pub probe_offsets: Vec<f64>,
    /// Closed-form comparison radius around `x0`.
    pub closed_form_reach: f64,
    pub markov_m: usize,
    pub markov_dt: f64,
    pub markov_stride: usize,
    pub triangle_samples: usize,
    pub short_time_m: usize,
    pub short_time_dt: f64,
    pub short_time_eps: Vec<f64>,
    /// Initial momenta per axis in `[-1, 1]` for the short-time check.
    pub short_time_momenta: usize,
    pub invariance_m: usize,
    pub invariance_dt: f64,
    pub invariance_r: (f64, f64),
    pub invariance_mu: Option<f64>,
    /// `(lambda, T)` pairs for the Picard rate check on the discounted entry.
    pub rate_cases: Vec<(f64, f64)>,
    pub rate_m: usize,
    pub rate_dt: f64,
    pub method_tolerance: Tolerance,
    pub markov_tolerance: Tolerance,
    /// Closed-form and shooting comparisons allow `max(5e-3, this)`.
    pub accuracy_tolerance: Tolerance,
    pub timing: bool,
}

impl HarnessConfig {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self {
            dim,
            x0: TorusPoint::origin(dim)?,
            u0: 0.0,
            horizon: 1.0,
            m: 200,
            dt: 0.01,
            v_max: None,
            tol_fix: DEFAULT_TOL_FIX,
            max_outer: DEFAULT_MAX_OUTER,
            eps: 0.0,
            lambda: 0.5,
            a: 0.5,
            shoot: ShootOptions::default(),
            probe_offsets: vec![0.1, 0.2, 0.3, 0.4, 0.45],
            closed_form_reach: 0.4,
            markov_m: 100,
            markov_dt: 0.02,
            markov_stride: 1,
            triangle_samples: 9,
            short_time_m: 400,
            short_time_dt: 0.01,
            short_time_eps: vec![0.05, 0.1],
            short_time_momenta: 9,
            invariance_m: 100,
            invariance_dt: 0.02,
            invariance_r: (6.0, 10.0),
            invariance_mu: None,
            rate_cases: vec![(0.5, 1.0), (0.5, 2.0), (2.0, 2.0)],
            rate_m: 100,
            rate_dt: 0.02,
            method_tolerance: Tolerance::new(1.0, 1.0, 10.0),
            markov_tolerance: Tolerance::new(1.0, 0.0, 0.0),
            accuracy_tolerance: Tolerance::new(0.5, 0.25, 0.0),
            timing: true,
        })
    }

    pub fn entries(&self) -> Result<Vec<CatalogEntry>> {
        Ok(vec![
            CatalogEntry::classical(self.dim, self.eps)?,
            CatalogEntry::discounted(self.dim, self.eps, self.lambda)?,
            CatalogEntry::nonlinear_u(self.dim, self.eps, self.a)?,
        ])
    }

    pub fn dp_config(&self, entry: &CatalogEntry) -> DpConfig {
        let cfg = DpConfig::new(self.dim, self.m, self.dt, entry.lambda(), self.horizon);
        match self.v_max {
            Some(v) => cfg.with_v_max(v),
            None => cfg,
        }
    }

    fn probes(&self) -> Vec<TorusPoint> {
        self.probe_offsets
            .iter()
            .map(|&d| self.x0.translate(&FiberVector::axis(self.dim, d)))
            .collect()
    }

    /// Initial momenta of the short-time check.
    pub fn momenta(&self) -> Vec<FiberVector> {
        let n = self.short_time_momenta.max(1);
        let at = |i: usize| if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 };
        let mut out = Vec::new();
        if self.dim == 1 {
            for i in 0..n {
                out.push(FiberVector::axis(1, at(i)));
            }
        } else {
            // n points in total on a square lattice inside the unit disc
            let side = (n as f64).sqrt().ceil() as usize;
            for i in 0..side {
                for j in 0..side {
                    let s = |k: usize| if side == 1 { 0.0 } else { (-1.0 + 2.0 * k as f64 / (side - 1) as f64) / 2f64.sqrt() };
                    out.push(FiberVector::new(&[s(i), s(j)]).expect("finite"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.x0.dim() != self.dim {
            return Err(Error::Config("x0 dimension differs from dim".into()));
        }
        if !(self.horizon > 0.0) || !(self.tol_fix > 0.0) {
            return Err(Error::Config("horizon and tol_fix must be positive".into()));
        }
        for (what, m, dt, t) in [
            ("dt", self.m, self.dt, self.horizon),
            ("markov_dt", self.markov_m, self.markov_dt, self.horizon),
            ("invariance_dt", self.invariance_m, self.invariance_dt, self.horizon),
        ] {
            DpConfig::new(self.dim, m, dt, 0.0, t)
                .layers_for(t)
                .map_err(|_| Error::Config(format!("{what} = {dt} does not divide T = {t}")))?;
            if m < 4 {
                return Err(Error::Config(format!("grid for {what} needs m >= 4")));
            }
        }
        for (what, dt) in [("dt", self.dt), ("markov_dt", self.markov_dt), ("invariance_dt", self.invariance_dt)] {
            DpConfig::new(self.dim, 4, dt, 0.0, self.horizon)
                .layers_for(0.5 * self.horizon)
                .map_err(|_| Error::Config(format!("{what} = {dt} does not divide T / 2")))?;
        }
        Ok(())
    }
}

fn timed(f: impl FnOnce() -> Vec<CheckReport>) -> Vec<CheckReport> {
    let clock = Stopwatch::start();
    let mut out = f();
    let each = clock.seconds() / out.len().max(1) as f64;
    for r in &mut out {
        r.seconds = each;
    }
    out
}

/// Every check on all three catalog entries, sorted by name.
pub fn run_all(cfg: &HarnessConfig) -> Result<Vec<CheckReport>> {
    cfg.validate()?;
    let mut reports = Vec::new();
    let dx = 1.0 / cfg.m as f64;
    let half = 0.5 * cfg.horizon;
    let probes = cfg.probes();

    for entry in cfg.entries()? {
        let dp = cfg.dp_config(&entry);
        let l = entry.lagrangian();
        let id = entry.id();
        let solved = picard_iterate(&l, &cfg.x0, cfg.u0, cfg.horizon, &dp, cfg.tol_fix, cfg.max_outer);
        let (field, trace) = match solved {
            Ok(v) => v,
            Err(e) => {
                reports.push(CheckReport::errored(format!("{id}.solve"), format!("{entry}"), 0.0, &e));
                continue;
            }
        };
        let scale = field
            .layer(field.layer_count())
            .iter()
            .filter(|v| v.is_finite())
            .fold(1.0f64, |a, v| a.max(v.abs()));
        let noise = 1e3 * f64::EPSILON * scale;
        let accuracy = cfg.accuracy_tolerance.eval(dx, cfg.dt, cfg.tol_fix).max(5e-3);

        reports.extend(timed(|| vec![check_uniqueness(&entry, &cfg.x0, cfg.u0, cfg.horizon, &dp, cfg.tol_fix, cfg.max_outer)]));
        reports.extend(timed(|| vec![check_fixed_point(&entry, &field, &dp, cfg.tol_fix)]));
        reports.extend(timed(|| {
            let inputs = format!("{entry} m={} dt={} T={}", dp.m, dp.dt, cfg.horizon);
            vec![convergence_rate_report(&format!("{id}.convergence_rate"), &inputs, &trace, entry.lambda(), cfg.horizon, noise)]
        }));
        reports.extend(timed(|| vec![check_gronwall_floor(&entry, &field, dx + cfg.dt)]));
        reports.extend(timed(|| vec![check_boundary_continuity(&entry, &field, 1.0, dx)]));
        reports.extend(timed(|| {
            let threshold = cfg.method_tolerance.eval(dx, cfg.dt, cfg.tol_fix);
            let name = format!("{id}.method_agreement");
            let inputs = format!("{entry} m={} dt={} picard vs semigroup, tol {}", dp.m, dp.dt, cfg.method_tolerance.describe());
            let semi = Solver { l: &l, cfg: dp.clone(), method: Method::Semigroup }.solve(&cfg.x0, cfg.u0, cfg.horizon);
            vec![match semi {
                Ok(s) => CheckReport::new(name, inputs, s.sup_diff(&field), threshold),
                Err(e) => CheckReport::errored(name, inputs, threshold, &e),
            }]
        }));
        reports.extend(timed(|| vec![check_shooting_agreement(&entry, &field, &probes, &cfg.shoot, accuracy)]));
        reports.extend(timed(|| {
            let x = cfg.x0.translate(&FiberVector::axis(cfg.dim, 0.3));
            vec![check_herglotz_backtrack(&entry, &field, &x, 0.1)]
        }));
        reports.extend(timed(|| {
            let st = DpConfig::new(cfg.dim, cfg.short_time_m, cfg.short_time_dt, entry.lambda(), max_eps(cfg));
            vec![check_short_time(
                &entry,
                &cfg.x0,
                cfg.u0,
                &cfg.momenta(),
                &cfg.short_time_eps,
                &st,
                cfg.tol_fix,
                cfg.max_outer,
                5e-3,
            )]
        }));
        if let Some(r) = check_closed_form(&entry, &field, cfg.closed_form_reach, accuracy) {
            reports.push(r);
        }
        match id {
            "classical" => {
                reports.extend(timed(|| {
                    if cfg.u0 == 0.0 {
                        vec![check_classical_pair(&entry, &field, &dp), check_u0_shift(&entry, &field, &dp, 0.7)]
                    } else {
                        vec![check_u0_shift(&entry, &field, &dp, 0.7)]
                    }
                }));
            }
            "discounted" => {
                reports.extend(timed(|| {
                    let mk = DpConfig::new(cfg.dim, cfg.markov_m, cfg.markov_dt, entry.lambda(), cfg.horizon);
                    let tol = cfg.markov_tolerance.eval(1.0 / cfg.markov_m as f64, cfg.markov_dt, cfg.tol_fix);
                    check_markov(&l, &entry.to_string(), &cfg.x0, cfg.u0, cfg.horizon, half, &mk, cfg.markov_stride, tol)
                }));
                reports.extend(timed(|| {
                    let solver = Solver {
                        l: &l,
                        cfg: dp.clone(),
                        method: Method::Picard { tol_fix: cfg.tol_fix, max_outer: cfg.max_outer },
                    };
                    let x = cfg.x0.translate(&FiberVector::axis(cfg.dim, 0.3));
                    check_triangle(&entry, &solver, &field, &x, half, cfg.triangle_samples, dx + cfg.dt, 2e-2)
                }));
                reports.extend(timed(|| vec![invariance_report(cfg, &entry)]));
                reports.extend(timed(|| {
                    let mut out = Vec::new();
                    for &(lambda, t) in &cfg.rate_cases {
                        out.push(rate_case(cfg, lambda, t));
                    }
                    out
                }));
            }
            _ => {
                reports.extend(timed(|| {
                    let s0 = ContactState::new(cfg.x0, cfg.u0 + 0.2, FiberVector::axis(cfg.dim, 0.7), 0.0)
                        .expect("finite state");
                    vec![check_herglotz_order(&entry, &s0, 1.0, 0.01)]
                }));
            }
        }
    }
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(reports)
}

fn max_eps(cfg: &HarnessConfig) -> f64 {
    cfg.short_time_eps.iter().copied().fold(0.0, f64::max)
}

/// Invariance of the action under two cutoff radii of the modification.
pub fn invariance_report(cfg: &HarnessConfig, entry: &CatalogEntry) -> CheckReport {
    let (r1, r2) = cfg.invariance_r;
    let threshold = 2.0 * cfg.tol_fix;
    let dp = DpConfig::new(cfg.dim, cfg.invariance_m, cfg.invariance_dt, entry.lambda(), cfg.horizon);
    let mut setup = InvarianceSetup::new(cfg.x0, cfg.horizon, dp);
    setup.u0 = cfg.u0;
    setup.tol_fix = cfg.tol_fix;
    setup.max_outer = cfg.max_outer;
    setup.mu_override = cfg.invariance_mu;
    let mu = cfg.invariance_mu.map_or("auto".to_string(), |m| format!("{m:e}"));
    let inputs = format!(
        "{entry} m={} dt={} T={} R1={r1} R2={r2} mu={mu} compared t >= {}",
        cfg.invariance_m, cfg.invariance_dt, cfg.horizon, setup.compare_from
    );
    match check_invariance(&entry.lagrangian(), r1, r2, &setup) {
        Ok(o) => CheckReport::new("invariance.cutoff", inputs, o.diff, threshold).with_note(format!(
            "R0 = {:.4}, mu = {:.4e} / {:.4e}, early-layer difference {:.3e}",
            o.r0, o.mu[0], o.mu[1], o.early_diff
        )),
        Err(e) => CheckReport::errored("invariance.cutoff", inputs, threshold, &e),
    }
}

fn rate_case(cfg: &HarnessConfig, lambda: f64, t: f64) -> CheckReport {
    let name = format!("convergence_rate.lambda_t_{}", lambda * t);
    let inputs = format!("discounted(eps={}, lambda={lambda}) m={} dt={} T={t}", cfg.eps, cfg.rate_m, cfg.rate_dt);
    let entry = match CatalogEntry::discounted(cfg.dim, cfg.eps, lambda) {
        Ok(e) => e,
        Err(e) => return CheckReport::errored(name, inputs, 1.0, &e),
    };
    let dp = DpConfig::new(cfg.dim, cfg.rate_m, cfg.rate_dt, lambda, t);
    match picard_iterate(&entry.lagrangian(), &cfg.x0, cfg.u0, t, &dp, cfg.tol_fix, cfg.max_outer) {
        Ok((field, trace)) => {
            let scale = field.layer(field.layer_count()).iter().filter(|v| v.is_finite()).fold(1.0f64, |a, v| a.max(v.abs()));
            convergence_rate_report(&name, &inputs, &trace, lambda, t, 1e3 * f64::EPSILON * scale)
        }
        Err(e) => CheckReport::errored(name, inputs, 1.0, &e),
    }
}
