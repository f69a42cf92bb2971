//! Browser bindings: solve an action field, enumerate shooting branches and
//! integrate a characteristic, all on the one-dimensional torus.

use contact_action::action::{backtrack_calibrated, picard_iterate, DpConfig};
use contact_action::catalog::{CatalogEntry, ContactHamiltonian};
use contact_action::flow::{integrate, shoot, ContactState, ShootOptions};
use contact_action::torus::{FiberVector, TorusPoint};
use wasm_bindgen::prelude::*;

fn err(e: contact_action::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn entry(name: &str, eps: f64, coupling: f64) -> Result<CatalogEntry, JsError> {
    CatalogEntry::by_name(name, 1, eps, coupling).map_err(err)
}

/// `h_{0,u0}(., T)` on the `m` grid nodes, followed by the calibrated curve
/// to `probe` as `(t, x)` pairs.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn solve_field(
    name: &str,
    eps: f64,
    coupling: f64,
    u0: f64,
    horizon: f64,
    m: usize,
    dt: f64,
    probe: f64,
) -> Result<Vec<f64>, JsError> {
    let e = entry(name, eps, coupling)?;
    let l = e.lagrangian();
    let cfg = DpConfig::new(1, m, dt, e.lambda(), horizon);
    let x0 = TorusPoint::origin(1).map_err(err)?;
    let (field, _) = picard_iterate(&l, &x0, u0, horizon, &cfg, 1e-9, 60).map_err(err)?;
    let mut out = field.layer(field.layer_count()).to_vec();
    let p = TorusPoint::wrap(&[probe]).map_err(err)?;
    let curve = backtrack_calibrated(&field, &l, &p, horizon).map_err(err)?;
    for s in &curve.samples {
        out.push(s.t);
        out.push(s.x.coords()[0]);
    }
    Ok(out)
}

/// Converged branches from `(0, u0)` to `target` as `(p0, U(T))` pairs,
/// sorted by `p0`.
#[wasm_bindgen]
pub fn shoot_branches(name: &str, eps: f64, coupling: f64, u0: f64, horizon: f64, target: f64) -> Result<Vec<f64>, JsError> {
    let e = entry(name, eps, coupling)?;
    let x0 = TorusPoint::origin(1).map_err(err)?;
    let y = TorusPoint::wrap(&[target]).map_err(err)?;
    let branches = shoot(&e, &x0, u0, &y, horizon, &ShootOptions::default()).map_err(err)?;
    Ok(branches.iter().flat_map(|b| [b.p0.as_slice()[0], b.terminal.u]).collect())
}

/// RK4 characteristic from `(0, u0, p0)` as `(t, x, u, H)` rows; `x` is
/// unwrapped so the path stays continuous.
#[wasm_bindgen]
pub fn characteristic(name: &str, eps: f64, coupling: f64, u0: f64, p0: f64, horizon: f64) -> Result<Vec<f64>, JsError> {
    let e = entry(name, eps, coupling)?;
    let s0 = ContactState::new(
        TorusPoint::origin(1).map_err(err)?,
        u0,
        FiberVector::new(&[p0]).map_err(err)?,
        0.0,
    )
    .map_err(err)?;
    let tr = integrate(&e, &s0, horizon, 1e-3).map_err(err)?;
    let mut out = Vec::with_capacity(4 * tr.len());
    let mut lifted = 0.0;
    let mut prev = 0.0;
    for s in &tr.states {
        let x = s.x.coords()[0];
        let mut d = x - prev;
        d -= d.round();
        lifted += d;
        prev = x;
        out.extend([s.t, lifted, s.u, e.value(&s.x, s.u, &s.p)]);
    }
    Ok(out)
}
