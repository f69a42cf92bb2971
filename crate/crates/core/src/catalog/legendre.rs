//! Fiberwise Legendre transform by damped Newton iteration.

use super::{ContactHamiltonian, ContactLagrangian, Provenance};
use crate::error::{Error, Result};
use crate::torus::{FiberMatrix, FiberVector, TorusPoint};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Tolerance on the gradient residual `|v - dH/dp(p)|`.
    pub tol: f64,
    pub max_iters: usize,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iters: 50,
            max_halvings: 8,
        }
    }
}

/// Maximise `<target, z> - f(z)` given `grad f` and `hess f`, starting at
/// `start`. Returns the maximiser.
fn conjugate_argmax(
    target: &FiberVector,
    start: FiberVector,
    grad: impl Fn(&FiberVector) -> FiberVector,
    hess: impl Fn(&FiberVector) -> FiberMatrix,
    opts: &NewtonOptions,
) -> Result<FiberVector> {
    let mut z = start;
    let mut residual = (*target - grad(&z)).norm();
    for _ in 0..opts.max_iters {
        if residual <= opts.tol {
            return Ok(z);
        }
        let r = *target - grad(&z);
        let step = hess(&z)
            .solve(&r)
            .ok_or(Error::NoConvergence { residual })?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial = z + step * scale;
            let trial_res = (*target - grad(&trial)).norm();
            if trial_res.is_finite() && trial_res < residual {
                z = trial;
                residual = trial_res;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual <= opts.tol {
        Ok(z)
    } else {
        Err(Error::NoConvergence { residual })
    }
}

/// `L(x, u, v) = sup_p { <v, p> - H(x, u, p) }` and the maximising momentum.
pub fn legendre_dual<H: ContactHamiltonian + ?Sized>(
    h: &H,
    x: &TorusPoint,
    u: f64,
    v: &FiberVector,
    opts: &NewtonOptions,
) -> Result<(f64, FiberVector)> {
    let p = conjugate_argmax(
        v,
        *v,
        |p| h.grad_p(x, u, p),
        |p| h.hess_p(x, u, p),
        opts,
    )?;
    Ok((v.dot(&p) - h.value(x, u, &p), p))
}

/// `H(x, u, p) = sup_v { <p, v> - L(x, u, v) }` and the maximising velocity.
pub fn legendre_inverse<L: ContactLagrangian + ?Sized>(
    l: &L,
    x: &TorusPoint,
    u: f64,
    p: &FiberVector,
    opts: &NewtonOptions,
) -> Result<(f64, FiberVector)> {
    let v = conjugate_argmax(
        p,
        *p,
        |v| l.grad_v(x, u, v),
        |v| l.hess_v(x, u, v),
        opts,
    )?;
    Ok((p.dot(&v) - l.value(x, u, &v), v))
}

/// A Lagrangian evaluated through the numerical Legendre transform of `H`.
///
/// Partials follow from the envelope theorem at `p*`: `L_x = -H_x`,
/// `L_u = -H_u`, `L_v = p*`, `L_vv = (H_pp)^{-1}`. A failed Newton solve
/// yields `NaN`.
pub struct LegendreLagrangian<H> {
    hamiltonian: H,
    opts: NewtonOptions,
}

impl<H: ContactHamiltonian> LegendreLagrangian<H> {
    pub fn new(hamiltonian: H) -> Self {
        Self {
            hamiltonian,
            opts: NewtonOptions::default(),
        }
    }

    pub fn hamiltonian(&self) -> &H {
        &self.hamiltonian
    }

    fn momentum(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> Option<(f64, FiberVector)> {
        legendre_dual(&self.hamiltonian, x, u, v, &self.opts).ok()
    }
}

impl<H: ContactHamiltonian> ContactLagrangian for LegendreLagrangian<H> {
    fn name(&self) -> &str {
        self.hamiltonian.name()
    }

    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn value(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
        self.momentum(x, u, v).map_or(f64::NAN, |(l, _)| l)
    }

    fn grad_x(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector {
        match self.momentum(x, u, v) {
            Some((_, p)) => -self.hamiltonian.grad_x(x, u, &p),
            None => FiberVector::axis(v.dim(), f64::NAN),
        }
    }

    fn d_u(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
        self.momentum(x, u, v)
            .map_or(f64::NAN, |(_, p)| -self.hamiltonian.d_u(x, u, &p))
    }

    fn grad_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector {
        self.momentum(x, u, v)
            .map_or(FiberVector::axis(v.dim(), f64::NAN), |(_, p)| p)
    }

    fn hess_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberMatrix {
        let dim = v.dim();
        let Some((_, p)) = self.momentum(x, u, v) else {
            return FiberMatrix::scaled_identity(dim, f64::NAN);
        };
        let hpp = self.hamiltonian.hess_p(x, u, &p);
        let mut inv = FiberMatrix::zeros(dim);
        for j in 0..dim {
            let mut e = FiberVector::zeros(dim);
            e.set(j, 1.0);
            let col = hpp
                .solve(&e)
                .unwrap_or(FiberVector::axis(dim, f64::NAN));
            for i in 0..dim {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }

    fn provenance(&self) -> Provenance {
        Provenance::LegendreOf
    }

    fn lipschitz_u(&self) -> Option<f64> {
        self.hamiltonian.lipschitz_u()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CatalogEntry;
    use crate::torus::wrap;

    fn fv(c: &[f64]) -> FiberVector {
        FiberVector::new(c).unwrap()
    }

    #[test]
    fn free_particle_at_rest() {
        let h = CatalogEntry::classical(1, 0.0).unwrap();
        let x = wrap(&[0.0]).unwrap();
        let (l, p) = legendre_dual(&h, &x, 0.0, &fv(&[0.0]), &NewtonOptions::default()).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(p[0], 0.0);
    }

    #[test]
    fn discounted_dual_is_analytic() {
        let h = CatalogEntry::discounted(1, 0.0, 0.5).unwrap();
        let x = wrap(&[0.0]).unwrap();
        let (l, p) = legendre_dual(&h, &x, 2.0, &fv(&[1.0]), &NewtonOptions::default()).unwrap();
        assert!((l - (-0.5)).abs() < 1e-15);
        assert_eq!(p[0], 1.0);
    }

    #[test]
    fn pendulum_dual_matches_grid_maximum() {
        let h = CatalogEntry::classical(1, 0.3).unwrap();
        let x = wrap(&[0.25]).unwrap();
        let v = fv(&[0.7]);
        let (l, p) = legendre_dual(&h, &x, 1.7, &v, &NewtonOptions::default()).unwrap();
        // brute-force sup over a fine momentum grid
        let n = 400_001;
        let brute = (0..n)
            .map(|i| -5.0 + 10.0 * i as f64 / (n - 1) as f64)
            .map(|q| 0.7 * q - h.value(&x, 1.7, &fv(&[q])))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((brute - 0.245).abs() < 1e-9);
        assert!((l - 0.245).abs() < 1e-12);
        assert!((p[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let e = CatalogEntry::classical(1, 0.0).unwrap();
        let x = wrap(&[0.0]).unwrap();
        let (hv, v) =
            legendre_inverse(&e.lagrangian(), &x, 0.0, &fv(&[0.0]), &NewtonOptions::default())
                .unwrap();
        assert_eq!((hv, v[0]), (0.0, 0.0));

        let e = CatalogEntry::discounted(1, 0.0, 0.5).unwrap();
        let (hv, v) =
            legendre_inverse(&e.lagrangian(), &x, 1.0, &fv(&[2.0]), &NewtonOptions::default())
                .unwrap();
        assert!((hv - 2.5).abs() < 1e-14);
        assert!((hv - e.value(&x, 1.0, &fv(&[2.0]))).abs() < 1e-14);
        assert_eq!(v[0], 2.0);
    }

    /// `H = cosh(p) + p^2/2` is not quadratic, so Newton has real work to do.
    struct CoshKinetic;

    impl ContactHamiltonian for CoshKinetic {
        fn name(&self) -> &str {
            "cosh"
        }
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _: &TorusPoint, u: f64, p: &FiberVector) -> f64 {
            p[0].cosh() + 0.5 * p[0] * p[0] + 0.1 * u
        }
        fn grad_x(&self, _: &TorusPoint, _: f64, _: &FiberVector) -> FiberVector {
            FiberVector::zeros(1)
        }
        fn d_u(&self, _: &TorusPoint, _: f64, _: &FiberVector) -> f64 {
            0.1
        }
        fn grad_p(&self, _: &TorusPoint, _: f64, p: &FiberVector) -> FiberVector {
            FiberVector::axis(1, p[0].sinh() + p[0])
        }
        fn hess_p(&self, _: &TorusPoint, _: f64, p: &FiberVector) -> FiberMatrix {
            FiberMatrix::scaled_identity(1, p[0].cosh() + 1.0)
        }
    }

    #[test]
    fn nonquadratic_round_trip() {
        let h = CoshKinetic;
        let l = LegendreLagrangian::new(CoshKinetic);
        let x = wrap(&[0.3]).unwrap();
        let opts = NewtonOptions::default();
        for v in [-20.0, -3.0, 0.0, 0.4, 7.5, 30.0] {
            let v = fv(&[v]);
            let (lv, p) = legendre_dual(&h, &x, 0.5, &v, &opts).unwrap();
            assert!((h.grad_p(&x, 0.5, &p) - v).norm() <= 1e-12 * (1.0 + v.norm()));
            let (hv, back) = legendre_inverse(&l, &x, 0.5, &p, &opts).unwrap();
            assert!((back - v).norm() <= 10.0 * opts.tol * (1.0 + v.norm()));
            // Fenchel equality at the maximiser
            assert!((lv + hv - v.dot(&p)).abs() < 1e-9 * (1.0 + lv.abs()));
        }
        assert_eq!(l.provenance(), Provenance::LegendreOf);
    }

    #[test]
    fn reports_last_residual_on_failure() {
        let h = CoshKinetic;
        let x = wrap(&[0.3]).unwrap();
        let opts = NewtonOptions {
            max_iters: 1,
            ..Default::default()
        };
        match legendre_dual(&h, &x, 0.0, &fv(&[40.0]), &opts) {
            Err(Error::NoConvergence { residual }) => assert!(residual > opts.tol),
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }
}
