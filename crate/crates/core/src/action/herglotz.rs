use super::backtrack::CalibratedCurve;
use crate::catalog::ContactLagrangian;
use crate::error::{Error, Result};

/// Largest centred-difference defect of
/// `d/dt L_v = L_x + L_u L_v` over interior samples, each normalised by
/// `max(1, |L_v|)`. Samples must be equally spaced by `curve.dt`.
pub fn herglotz_residual<L: ContactLagrangian + ?Sized>(l: &L, curve: &CalibratedCurve) -> Result<f64> {
    let s = &curve.samples;
    if s.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 samples, got {}",
            s.len()
        )));
    }
    let lv: Vec<_> = s.iter().map(|p| l.grad_v(&p.x, p.u, &p.v)).collect();
    let mut worst: f64 = 0.0;
    for k in 1..s.len() - 1 {
        let p = &s[k];
        let lx = l.grad_x(&p.x, p.u, &p.v);
        let lu = l.d_u(&p.x, p.u, &p.v);
        let lhs = (lv[k + 1] - lv[k - 1]) * (0.5 / curve.dt);
        let defect = lhs - lx - lv[k] * lu;
        worst = worst.max(defect.norm() / lv[k].norm().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{legendre_inverse, CatalogEntry, NewtonOptions};
    use crate::flow::{integrate, ContactState};
    use crate::torus::{wrap, FiberVector};

    fn exact_curve(dt: f64) -> CalibratedCurve {
        let e = CatalogEntry::nonlinear_u(1, 0.3, 0.3).unwrap();
        let s0 = ContactState::new(wrap(&[0.1]).unwrap(), 0.2, FiberVector::new(&[0.7]).unwrap(), 0.0).unwrap();
        let tr = integrate(&e, &s0, 1.0, dt).unwrap();
        CalibratedCurve::from(&tr)
    }

    #[test]
    fn integrated_trajectory_is_second_order() {
        let e = CatalogEntry::nonlinear_u(1, 0.3, 0.3).unwrap();
        let l = e.lagrangian();
        let r1 = herglotz_residual(&l, &exact_curve(0.02)).unwrap();
        let r2 = herglotz_residual(&l, &exact_curve(0.01)).unwrap();
        let slope = (r1 / r2).log2();
        assert!(slope > 1.8, "r1={r1} r2={r2} slope={slope}");
        // the sampled velocity is the Legendre image of the integrated momentum
        let s0 = ContactState::new(wrap(&[0.1]).unwrap(), 0.2, FiberVector::new(&[0.7]).unwrap(), 0.0).unwrap();
        let tr = integrate(&e, &s0, 1.0, 0.01).unwrap();
        let s = &tr.states[50];
        let (_, v) = legendre_inverse(&l, &s.x, s.u, &s.p, &NewtonOptions::default()).unwrap();
        assert!((v[0] - tr.velocities[50][0]).abs() < 1e-10);
    }

    #[test]
    fn perturbation_is_detected() {
        let l = CatalogEntry::nonlinear_u(1, 0.3, 0.3).unwrap().lagrangian();
        let clean = exact_curve(0.01);
        let base = herglotz_residual(&l, &clean).unwrap();
        let mut bad = clean.clone();
        bad.samples[40].v = bad.samples[40].v * 2.0;
        assert!(herglotz_residual(&l, &bad).unwrap() > 10.0 * base);
    }

    #[test]
    fn too_short() {
        let l = CatalogEntry::classical(1, 0.0).unwrap().lagrangian();
        let mut c = exact_curve(0.5);
        c.samples.truncate(2);
        assert!(herglotz_residual(&l, &c).is_err());
    }
}
