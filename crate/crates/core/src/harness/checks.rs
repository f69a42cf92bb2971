use super::classical::lax_oleinik;
use super::report::CheckReport;
use crate::action::{
    backtrack_calibrated, dp_min_action, herglotz_residual, markov_defect, picard_iterate_from, ActionField,
    CalibratedCurve, DpConfig, IterationTrace, Method, Solver, UField,
};
use crate::catalog::{CatalogEntry, ContactLagrangian};
use crate::error::{Error, Result};
use crate::flow::{integrate, min_over_solutions, shoot, ContactState, ShootOptions};
use crate::torus::{distance, FiberVector, TorusPoint};

fn describe(entry: &CatalogEntry, cfg: &DpConfig, horizon: f64) -> String {
    format!("{entry} dim={} m={} dt={} T={horizon} v_max={:.4}", cfg.dim, cfg.m, cfg.dt, cfg.v_max)
}

/// Classical free-particle action `u0 + d^2 / (2t)`.
pub fn closed_form_classical(d: f64, u0: f64, t: f64) -> f64 {
    u0 + d * d / (2.0 * t)
}

/// Flat discounted action: `e^{-lt} (u0 + l d^2 / (2 (1 - e^{-lt})))`,
/// reducing to the classical one as `l -> 0`.
pub fn closed_form_discounted(d: f64, u0: f64, t: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return closed_form_classical(d, u0, t);
    }
    let e = (-lambda * t).exp();
    e * (u0 + lambda * d * d / (2.0 * (1.0 - e)))
}

/// Picard from the constant starts `0, +5, -5`; largest pairwise gap.
pub fn check_uniqueness(
    entry: &CatalogEntry,
    x0: &TorusPoint,
    u0: f64,
    horizon: f64,
    cfg: &DpConfig,
    tol_fix: f64,
    max_outer: usize,
) -> CheckReport {
    let name = format!("{}.uniqueness", entry.id());
    let inputs = format!("{} starts=0,+5,-5 tol_fix={tol_fix:e}", describe(entry, cfg, horizon));
    let threshold = 10.0 * tol_fix;
    let l = entry.lagrangian();
    let mut fields = Vec::new();
    for start in [0.0, 5.0, -5.0] {
        match picard_iterate_from(&l, x0, u0, horizon, cfg, tol_fix, max_outer, start) {
            Ok((f, _)) => fields.push(f),
            Err(e) => return CheckReport::errored(name, inputs, threshold, &e),
        }
    }
    let gap = fields[0].sup_diff(&fields[1]).max(fields[0].sup_diff(&fields[2])).max(fields[1].sup_diff(&fields[2]));
    CheckReport::new(name, inputs, gap, threshold)
}

/// One more frozen pass against the converged field.
pub fn check_fixed_point(entry: &CatalogEntry, field: &ActionField, cfg: &DpConfig, tol_fix: f64) -> CheckReport {
    let name = format!("{}.fixed_point", entry.id());
    let inputs = describe(entry, cfg, field.horizon);
    let l = entry.lagrangian();
    match dp_min_action(&l, UField::Field(field), &field.x0, field.u0, field.horizon, cfg) {
        Ok(next) => CheckReport::new(name, inputs, next.sup_diff(field), tol_fix),
        Err(e) => CheckReport::errored(name, inputs, tol_fix, &e),
    }
}

/// Ratio and factorial bounds on the Picard differences. With `d_n` the
/// n-th entry of the trace, `C = d_1 / T`:
/// `d_{n+1} / d_n <= 1.2 lambda T / (n + 1)` for `n >= 2` and
/// `d_n <= 1.5 C lambda^{n-1} T^n / n!` for `n >= 1`, both only while the
/// differences sit above `noise_floor`. Reports the worst ratio to its bound.
pub fn convergence_rate_report(
    name: &str,
    inputs: &str,
    trace: &IterationTrace,
    lambda: f64,
    horizon: f64,
    noise_floor: f64,
) -> CheckReport {
    let d = &trace.diffs;
    if d.len() >= 2 && d[1..].contains(&0.0) && d.len() < 4 {
        return CheckReport::new(name, inputs, 0.0, 1.0).with_note("fixed point reached exactly");
    }
    if d.len() < 4 {
        return CheckReport::inconclusive(name, inputs, 1.0, &format!("{} passes, need at least 4", d.len()));
    }
    let c = d[1] / horizon;
    let mut worst: f64 = 0.0;
    let mut used = 0;
    let mut fact = 1.0;
    for n in 1..d.len() {
        fact *= n as f64;
        if d[n] <= noise_floor {
            break;
        }
        let bound = 1.5 * c * lambda.powi(n as i32 - 1) * horizon.powi(n as i32) / fact;
        worst = worst.max(d[n] / bound);
        if n >= 2 && n + 1 < d.len() && d[n + 1] > noise_floor {
            let ratio = d[n + 1] / d[n];
            worst = worst.max(ratio / (1.2 * lambda * horizon / (n as f64 + 1.0)));
            used += 1;
        }
    }
    if used == 0 {
        return CheckReport::inconclusive(name, inputs, 1.0, "differences hit the noise floor too early");
    }
    CheckReport::new(name, inputs, worst, 1.0).with_note(format!("{used} ratios above the noise floor"))
}

/// `h >= -(|u0| + C0 T) e^{lambda T}` with `C0 = max(0, -min_x L(x, 0, 0))`.
pub fn check_gronwall_floor(entry: &CatalogEntry, field: &ActionField, slack: f64) -> CheckReport {
    let name = format!("{}.gronwall_floor", entry.id());
    let l = entry.lagrangian();
    let dim = field.grid.dim;
    let n: usize = 64;
    let mut min_l = f64::INFINITY;
    let zero = FiberVector::zeros(dim);
    for i in 0..n.pow(dim as u32) {
        let c = [(i % n) as f64 / n as f64, (i / n) as f64 / n as f64];
        let x = TorusPoint::wrap(&c[..dim]).expect("valid sample");
        min_l = min_l.min(l.value(&x, 0.0, &zero));
    }
    let c0 = (-min_l).max(0.0);
    let t = field.horizon;
    let floor = (field.u0.abs() + c0 * t) * (entry.lambda() * t).exp();
    let inputs = format!("{entry} T={t} C0={c0:.4} slack={slack:e}");
    CheckReport::new(name, inputs, 0.0 - field.finite_min(), floor + slack).with_note("measured is -min h")
}

/// Inside the cone `d(x, x0) <= kappa t` the first layers stay within
/// `t M_kappa` of `u0`, `M_kappa = sup |L|` over `|v| <= kappa`,
/// `|u - u0| <= 1`. Reports the worst excess over that bound.
pub fn check_boundary_continuity(entry: &CatalogEntry, field: &ActionField, kappa: f64, slack: f64) -> CheckReport {
    let name = format!("{}.boundary_continuity", entry.id());
    let l = entry.lagrangian();
    let dim = field.grid.dim;
    let mut m_k: f64 = 0.0;
    for i in 0..32 {
        let x = TorusPoint::wrap(&[i as f64 / 32.0, 0.25][..dim]).expect("valid sample");
        for j in 0..=8 {
            let u = field.u0 - 1.0 + j as f64 / 4.0;
            for s in 0..=8 {
                let v = FiberVector::axis(dim, -kappa + s as f64 * kappa / 4.0);
                m_k = m_k.max(l.value(&x, u, &v).abs());
            }
        }
    }
    let grid = field.grid;
    let layers = field.layer_count().min(5);
    let mut worst = f64::NEG_INFINITY;
    for k in 1..=layers {
        let t = field.time(k);
        for node in 0..grid.len() {
            let x = grid.point(node);
            if distance(&x, &field.x0).expect("same dimension") > kappa * t {
                continue;
            }
            worst = worst.max((field.value(k, node) - field.u0).abs() - t * m_k);
        }
    }
    let inputs = format!("{entry} kappa={kappa} layers=1..{layers} M={m_k:.4}");
    if worst == f64::NEG_INFINITY {
        return CheckReport::inconclusive(name, inputs, slack, "no grid node inside the cone");
    }
    CheckReport::new(name, inputs, worst, slack)
}

/// Bit-for-bit agreement of the contact solver with the classical recursion
/// on a `u`-independent entry at `u0 = 0`.
pub fn check_classical_pair(entry: &CatalogEntry, field: &ActionField, cfg: &DpConfig) -> CheckReport {
    let name = format!("{}.lax_oleinik_pair", entry.id());
    let inputs = describe(entry, cfg, field.horizon);
    if !entry.is_u_independent() || field.u0 != 0.0 {
        return CheckReport::inconclusive(name, inputs, 0.0, "needs a u-independent entry at u0 = 0");
    }
    let l = entry.lagrangian();
    // the classical recursion sees L(x, v) only
    let lx = |x: &TorusPoint, v: &FiberVector| l.value(x, 0.0, v);
    match lax_oleinik(lx, &field.x0, field.horizon, cfg) {
        Ok(layers) => {
            let mut worst: f64 = 0.0;
            for (k, layer) in layers.iter().enumerate() {
                for (a, b) in field.layer(k + 1).iter().zip(layer) {
                    if a != b {
                        worst = worst.max(if a.is_finite() && b.is_finite() { (a - b).abs() } else { f64::INFINITY });
                    }
                }
            }
            CheckReport::new(name, inputs, worst, 0.0)
        }
        Err(e) => CheckReport::errored(name, inputs, 0.0, &e),
    }
}

/// `h_{x0, c} = c + h_{x0, 0}` on a `u`-independent entry.
pub fn check_u0_shift(entry: &CatalogEntry, field: &ActionField, cfg: &DpConfig, shift: f64) -> CheckReport {
    let name = format!("{}.u0_shift", entry.id());
    let inputs = format!("{} shift={shift}", describe(entry, cfg, field.horizon));
    let threshold = 1e-12 * (1.0 + shift.abs());
    let l = entry.lagrangian();
    match crate::action::semigroup_march(&l, &field.x0, field.u0 + shift, field.horizon, cfg) {
        Ok(g) => {
            let mut worst: f64 = 0.0;
            for k in 1..=g.layer_count() {
                for (a, b) in g.layer(k).iter().zip(field.layer(k)) {
                    if a.is_finite() != b.is_finite() {
                        worst = f64::INFINITY;
                    } else if a.is_finite() {
                        worst = worst.max((a - b - shift).abs());
                    }
                }
            }
            CheckReport::new(name, inputs, worst, threshold)
        }
        Err(e) => CheckReport::errored(name, inputs, threshold, &e),
    }
}

/// Largest `|h - closed form|` at the horizon over nodes within distance
/// `reach` of `x0`, for flat (`eps = 0`) entries with a closed form.
pub fn check_closed_form(entry: &CatalogEntry, field: &ActionField, reach: f64, threshold: f64) -> Option<CheckReport> {
    if entry.eps() != 0.0 {
        return None;
    }
    let t = field.horizon;
    let exact: Box<dyn Fn(f64) -> f64> = match entry.id() {
        "classical" => Box::new(move |d| closed_form_classical(d, field.u0, t)),
        "discounted" => {
            let lambda = entry.lambda();
            Box::new(move |d| closed_form_discounted(d, field.u0, t, lambda))
        }
        _ => return None,
    };
    let k = field.layer_count();
    let grid = field.grid;
    let mut worst: f64 = 0.0;
    for node in 0..grid.len() {
        let d = distance(&grid.point(node), &field.x0).expect("same dimension");
        if d <= reach {
            worst = worst.max((field.value(k, node) - exact(d)).abs());
        }
    }
    Some(CheckReport::new(
        format!("{}.closed_form", entry.id()),
        format!("{entry} m={} dt={} T={t} d<={reach}", grid.m, field.dt),
        worst,
        threshold,
    ))
}

/// `|h_DP(x, T) - min over shooting branches of U(T)|` at probe points.
pub fn check_shooting_agreement(
    entry: &CatalogEntry,
    field: &ActionField,
    probes: &[TorusPoint],
    opts: &ShootOptions,
    threshold: f64,
) -> CheckReport {
    let name = format!("{}.shooting_agreement", entry.id());
    let inputs = format!(
        "{entry} m={} dt={} T={} probes={} shoot_dt={}",
        field.grid.m,
        field.dt,
        field.horizon,
        probes.len(),
        opts.dt
    );
    let k = field.layer_count();
    let mut worst: f64 = 0.0;
    for y in probes {
        let branches = match shoot(entry, &field.x0, field.u0, y, field.horizon, opts) {
            Ok(b) => b,
            Err(e) => return CheckReport::errored(name, inputs, threshold, &e),
        };
        let (u_min, _) = match min_over_solutions(&branches) {
            Ok(v) => v,
            Err(e) => return CheckReport::errored(name, inputs, threshold, &e),
        };
        worst = worst.max((field.sample_layer(k, y) - u_min).abs());
    }
    CheckReport::new(name, inputs, worst, threshold)
}

/// Euler-Lagrange-Herglotz residual of the curve backtracked from `(x, T)`.
pub fn check_herglotz_backtrack(entry: &CatalogEntry, field: &ActionField, x: &TorusPoint, threshold: f64) -> CheckReport {
    let name = format!("{}.herglotz_backtrack", entry.id());
    let inputs = format!("{entry} m={} dt={} T={} x={:?}", field.grid.m, field.dt, field.horizon, x.coords());
    let l = entry.lagrangian();
    let res = backtrack_calibrated(field, &l, x, field.horizon).and_then(|c| herglotz_residual(&l, &c));
    match res {
        Ok(r) => CheckReport::new(name, inputs, r, threshold),
        Err(e) => CheckReport::errored(name, inputs, threshold, &e),
    }
}

/// Residual of an exactly integrated characteristic at steps `dt` and
/// `dt / 2`; measured is `r(dt / 2) / r(dt)`, second order gives `1/4`.
pub fn check_herglotz_order(entry: &CatalogEntry, s0: &ContactState, t: f64, dt: f64) -> CheckReport {
    let name = format!("{}.herglotz_order", entry.id());
    let inputs = format!("{entry} p0={:?} T={t} dt={dt},{}", s0.p.as_slice(), dt / 2.0);
    let threshold = 2f64.powf(-1.8);
    let l = entry.lagrangian();
    let residual = |step: f64| -> Result<f64> {
        let tr = integrate(entry, s0, t, step)?;
        herglotz_residual(&l, &CalibratedCurve::from(&tr))
    };
    match (residual(dt), residual(dt / 2.0)) {
        (Ok(a), Ok(b)) if a > 0.0 => CheckReport::new(name, inputs, b / a, threshold)
            .with_note(format!("r(dt) = {a:.3e}, order {:.3}", (a / b).log2())),
        (Ok(_), Ok(_)) => CheckReport::new(name, inputs, 0.0, threshold).with_note("residual is exactly zero"),
        (Err(e), _) | (_, Err(e)) => CheckReport::errored(name, inputs, threshold, &e),
    }
}

/// `U(eps)` against `h(X(eps), eps)` for characteristics from `x0` with the
/// given initial momenta. Reports the max gap at the smallest `eps` that
/// passes; the note records the largest passing `eps`.
#[allow(clippy::too_many_arguments)]
pub fn check_short_time(
    entry: &CatalogEntry,
    x0: &TorusPoint,
    u0: f64,
    momenta: &[FiberVector],
    eps_grid: &[f64],
    cfg: &DpConfig,
    tol_fix: f64,
    max_outer: usize,
    threshold: f64,
) -> CheckReport {
    let name = format!("{}.short_time", entry.id());
    let mut eps_sorted = eps_grid.to_vec();
    eps_sorted.sort_by(f64::total_cmp);
    let horizon = *eps_sorted.last().unwrap_or(&0.0);
    let inputs = format!(
        "{entry} m={} dt={} p0_count={} eps={:?}",
        cfg.m,
        cfg.dt,
        momenta.len(),
        eps_sorted
    );
    let run = || -> Result<Vec<f64>> {
        let l = entry.lagrangian();
        let (field, _) = picard_iterate_from(&l, x0, u0, horizon, cfg, tol_fix, max_outer, 0.0)?;
        let mut gaps = Vec::new();
        for &eps in &eps_sorted {
            let k = field
                .layer_at(eps)
                .ok_or_else(|| Error::InvalidInput(format!("eps = {eps} is not a layer time")))?;
            let mut worst: f64 = 0.0;
            for p0 in momenta {
                let s0 = ContactState::new(*x0, u0, *p0, 0.0)?;
                let end = integrate(entry, &s0, eps, 1e-4)?;
                let last = end.last();
                worst = worst.max((last.u - field.sample_layer(k, &last.x)).abs());
            }
            gaps.push(worst);
        }
        Ok(gaps)
    };
    match run() {
        Ok(gaps) => {
            let passing: Vec<usize> = (0..gaps.len()).filter(|&i| gaps[i] <= threshold).collect();
            let largest = passing.last().map(|&i| format!("{}", eps_sorted[i])).unwrap_or_else(|| "none".into());
            let shown = passing.first().map(|&i| gaps[i]).unwrap_or(gaps[0]);
            CheckReport::new(name, inputs, shown, threshold)
                .with_note(format!(
                "largest passing eps: {largest}; gaps {}",
                gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join(" ")
            ))
        }
        Err(e) => CheckReport::errored(name, inputs, threshold, &e),
    }
}

/// Markov defect at `t` of the field built by `solver`, and its refinement
/// factor against a grid twice as fine in space and time.
#[allow(clippy::too_many_arguments)]
pub fn check_markov<L: ContactLagrangian + ?Sized>(
    l: &L,
    label: &str,
    x0: &TorusPoint,
    u0: f64,
    horizon: f64,
    t: f64,
    coarse: &DpConfig,
    stride: usize,
    threshold: f64,
) -> Vec<CheckReport> {
    let defect = |cfg: &DpConfig, stride: usize| -> Result<f64> {
        let solver = Solver {
            l,
            cfg: cfg.clone(),
            method: Method::Semigroup,
        };
        let field = solver.solve(x0, u0, horizon)?;
        markov_defect(&solver, &field, t, stride)
    };
    let inputs = format!("{label} m={} dt={} T={horizon} t={t} semigroup", coarse.m, coarse.dt);
    let fine = DpConfig {
        m: coarse.m * 2,
        dt: coarse.dt / 2.0,
        ..coarse.clone()
    };
    let mut out = Vec::new();
    let c = defect(coarse, stride);
    match &c {
        Ok(d) => out.push(CheckReport::new("markov.defect", inputs.clone(), *d, threshold)),
        Err(e) => out.push(CheckReport::errored("markov.defect", inputs.clone(), threshold, e)),
    }
    let name = "markov.refinement";
    let finputs = format!("{inputs}; refined m={} dt={}", fine.m, fine.dt);
    let thr = 1.0 / 1.5;
    match (c, defect(&fine, stride * 2)) {
        (Ok(a), Ok(b)) if a > 0.0 => {
            out.push(CheckReport::new(name, finputs, b / a, thr).with_note(format!("fine defect {b:.3e}, factor {:.3}", a / b)))
        }
        (Ok(_), Ok(_)) => out.push(CheckReport::inconclusive(name, finputs, thr, "coarse defect is zero")),
        (Err(e), _) | (_, Err(e)) => out.push(CheckReport::errored(name, finputs, thr, &e)),
    }
    out
}

/// Triangle inequality for `B` at sampled intermediate points, and the gap
/// at the point where the calibrated curve to `x` sits at time `t`.
#[allow(clippy::too_many_arguments)]
pub fn check_triangle(
    entry: &CatalogEntry,
    solver: &Solver<'_, crate::catalog::CatalogLagrangian>,
    field: &ActionField,
    x: &TorusPoint,
    t: f64,
    samples: usize,
    tol: f64,
    gap_threshold: f64,
) -> Vec<CheckReport> {
    let s = field.horizon - t;
    let inputs = format!(
        "{entry} m={} dt={} t={t} s={s} x={:?} samples={samples}",
        field.grid.m,
        field.dt,
        x.coords()
    );
    let lhs = field.sample_layer(field.layer_count(), x) - field.u0;
    let k_t = match field.layer_at(t) {
        Some(k) => k,
        None => {
            let e = Error::InvalidInput(format!("t = {t} is not a layer time"));
            return vec![
                CheckReport::errored("triangle.inequality", inputs.clone(), tol, &e),
                CheckReport::errored("triangle.calibrated_gap", inputs, gap_threshold, &e),
            ];
        }
    };
    let rhs = |y: &TorusPoint| -> Result<f64> {
        let hy = field.sample_layer(k_t, y);
        let b_ts = crate::action::triangle_b(solver, y, hy, x, s)?;
        Ok(b_ts + (hy - field.u0))
    };
    let mut out = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut err = None;
    let dim = field.grid.dim;
    for i in 0..samples {
        let off = -0.5 + (i as f64 + 0.5) / samples as f64;
        let y = field.x0.translate(&FiberVector::axis(dim, off));
        if !field.sample_layer(k_t, &y).is_finite() {
            continue;
        }
        match rhs(&y) {
            Ok(r) => worst = worst.max(lhs - r),
            Err(Error::InfeasibleGrid(_)) => {}
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    match err {
        Some(e) => out.push(CheckReport::errored("triangle.inequality", inputs.clone(), tol, &e)),
        None => out.push(
            CheckReport::new("triangle.inequality", inputs.clone(), worst.max(0.0), tol)
                .with_note(format!("largest B(t+s) - B(s) - B(t) = {worst:.3e}")),
        ),
    }
    let l = entry.lagrangian();
    let gap = backtrack_calibrated(field, &l, x, field.horizon).and_then(|c| {
        let i = c
            .samples
            .iter()
            .position(|p| (p.t - t).abs() <= 1e-9 * t.max(1.0))
            .ok_or_else(|| Error::Internal("calibrated curve misses the split time".into()))?;
        Ok(rhs(&c.samples[i].x)? - lhs)
    });
    match gap {
        Ok(g) => out.push(CheckReport::new("triangle.calibrated_gap", inputs, g.abs(), gap_threshold)),
        Err(e) => out.push(CheckReport::errored("triangle.calibrated_gap", inputs, gap_threshold, &e)),
    }
    out
}
