//! Central finite differences, used to audit analytic partials.

use super::{ContactHamiltonian, ContactLagrangian};
use crate::torus::{FiberMatrix, FiberVector, TorusPoint};

/// Partials of `F(x, u, w)` where `w` is the fiber argument (`p` or `v`).
#[derive(Clone, Copy, Debug)]
pub struct Partials {
    pub grad_x: FiberVector,
    pub d_u: f64,
    pub grad_fiber: FiberVector,
    pub hess_fiber: FiberMatrix,
}

fn central<F>(f: F, x: &TorusPoint, u: f64, w: &FiberVector, h: f64) -> Partials
where
    F: Fn(&TorusPoint, f64, &FiberVector) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let dim = w.dim();
    let unit = |i: usize, s: f64| {
        let mut e = FiberVector::zeros(dim);
        e.set(i, s);
        e
    };
    let mut grad_x = FiberVector::zeros(dim);
    let mut grad_fiber = FiberVector::zeros(dim);
    let mut hess_fiber = FiberMatrix::zeros(dim);
    let f0 = f(x, u, w);
    for i in 0..dim {
        let fp = f(&x.translate(&unit(i, h)), u, w);
        let fm = f(&x.translate(&unit(i, -h)), u, w);
        grad_x.set(i, (fp - fm) / (2.0 * h));

        let wp = *w + unit(i, h);
        let wm = *w - unit(i, h);
        grad_fiber.set(i, (f(x, u, &wp) - f(x, u, &wm)) / (2.0 * h));
        hess_fiber.set(i, i, (f(x, u, &wp) - 2.0 * f0 + f(x, u, &wm)) / (h * h));
        for j in 0..i {
            let e_i = unit(i, h);
            let e_j = unit(j, h);
            let mixed = (f(x, u, &(*w + e_i + e_j)) - f(x, u, &(*w + e_i - e_j))
                - f(x, u, &(*w - e_i + e_j))
                + f(x, u, &(*w - e_i - e_j)))
                / (4.0 * h * h);
            hess_fiber.set(i, j, mixed);
            hess_fiber.set(j, i, mixed);
        }
    }
    let d_u = (f(x, u + h, w) - f(x, u - h, w)) / (2.0 * h);
    Partials {
        grad_x,
        d_u,
        grad_fiber,
        hess_fiber,
    }
}

pub fn fd_hamiltonian_partials<H: ContactHamiltonian + ?Sized>(
    h: &H,
    x: &TorusPoint,
    u: f64,
    p: &FiberVector,
    step: f64,
) -> Partials {
    central(|x, u, p| h.value(x, u, p), x, u, p, step)
}

pub fn fd_lagrangian_partials<L: ContactLagrangian + ?Sized>(
    l: &L,
    x: &TorusPoint,
    u: f64,
    v: &FiberVector,
    step: f64,
) -> Partials {
    central(|x, u, v| l.value(x, u, v), x, u, v, step)
}
