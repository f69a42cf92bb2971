//! The contact Hamiltonian vector field
//!
//! ```text
//! x' = dH/dp,   p' = -dH/dx - (dH/du) p,   u' = <dH/dp, p> - H
//! ```
//!
//! integrated with fixed-step classical RK4, plus the shooting representation
//! of the action function.

mod shooting;

use std::io::Write;

pub use shooting::{default_search_radius, min_over_solutions, shoot, ShootOptions, ShootingBranch};

use crate::catalog::ContactHamiltonian;
use crate::error::{Error, Result};
use crate::torus::{FiberVector, TorusPoint, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactState {
    pub x: TorusPoint,
    pub u: f64,
    pub p: FiberVector,
    pub t: f64,
}

impl ContactState {
    pub fn new(x: TorusPoint, u: f64, p: FiberVector, t: f64) -> Result<Self> {
        if x.dim() != p.dim() {
            return Err(Error::InvalidInput("state x/p dimension mismatch".into()));
        }
        if !(u.is_finite() && p.is_finite() && t.is_finite()) {
            return Err(Error::InvalidInput("non-finite contact state".into()));
        }
        Ok(Self { x, u, p, t })
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.p.is_finite() && self.t.is_finite()
    }
}

/// Time derivatives `(x', u', p')` at a state.
#[derive(Clone, Copy, Debug)]
pub struct FieldValue {
    pub dx: FiberVector,
    pub du: f64,
    pub dp: FiberVector,
}

pub fn vector_field<H: ContactHamiltonian + ?Sized>(h: &H, s: &ContactState) -> Result<FieldValue> {
    let out = field_at(h, &s.x, s.u, &s.p);
    if out.dx.is_finite() && out.dp.is_finite() && out.du.is_finite() {
        Ok(out)
    } else {
        Err(Error::NumericalDomain(format!(
            "vector field not finite at x={:?}, u={}, p={:?}",
            s.x, s.u, s.p
        )))
    }
}

#[inline]
fn field_at<H: ContactHamiltonian + ?Sized>(
    h: &H,
    x: &TorusPoint,
    u: f64,
    p: &FiberVector,
) -> FieldValue {
    let hp = h.grad_p(x, u, p);
    let hu = h.d_u(x, u, p);
    FieldValue {
        dx: hp,
        du: hp.dot(p) - h.value(x, u, p),
        dp: -h.grad_x(x, u, p) - *p * hu,
    }
}

/// State in the universal cover `R^n x R x R^n`, used internally so that
/// shooting sees continuous endpoint maps.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LiftedState {
    pub x: FiberVector,
    pub u: f64,
    pub p: FiberVector,
}

impl LiftedState {
    fn axpy(&self, k: &FieldValue, h: f64) -> Self {
        Self {
            x: self.x + k.dx * h,
            u: self.u + k.du * h,
            p: self.p + k.dp * h,
        }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.u.is_finite() && self.p.is_finite()
    }

    pub fn wrapped(&self) -> TorusPoint {
        let mut c = [0.0; MAX_DIM];
        c[..self.x.dim()].copy_from_slice(self.x.as_slice());
        TorusPoint::wrap(&c[..self.x.dim()]).expect("finite lifted state")
    }
}

#[inline]
fn lifted_field<H: ContactHamiltonian + ?Sized>(h: &H, s: &LiftedState) -> FieldValue {
    field_at(h, &s.wrapped(), s.u, &s.p)
}

#[inline]
pub(crate) fn rk4_step<H: ContactHamiltonian + ?Sized>(h: &H, s: &LiftedState, dt: f64) -> LiftedState {
    let k1 = lifted_field(h, s);
    let k2 = lifted_field(h, &s.axpy(&k1, 0.5 * dt));
    let k3 = lifted_field(h, &s.axpy(&k2, 0.5 * dt));
    let k4 = lifted_field(h, &s.axpy(&k3, dt));
    LiftedState {
        x: s.x + (k1.dx + k2.dx * 2.0 + k3.dx * 2.0 + k4.dx) * (dt / 6.0),
        u: s.u + (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du) * (dt / 6.0),
        p: s.p + (k1.dp + k2.dp * 2.0 + k3.dp * 2.0 + k4.dp) * (dt / 6.0),
    }
}

/// Number of uniform steps of size at most `dt` covering `[0, t]`.
pub(crate) fn step_count(t: f64, dt: f64) -> usize {
    ((t / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Endpoint of the lifted flow after time `t`, or `None` on blow-up.
pub(crate) fn flow_lifted<H: ContactHamiltonian + ?Sized>(
    h: &H,
    start: LiftedState,
    t: f64,
    dt: f64,
) -> Option<LiftedState> {
    let n = step_count(t, dt);
    let step = t / n as f64;
    let mut s = start;
    for _ in 0..n {
        s = rk4_step(h, &s, step);
        if !s.is_finite() {
            return None;
        }
    }
    Some(s)
}

/// A uniformly sampled solution curve.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<ContactState>,
    /// `v_k = dH/dp` at each state.
    pub velocities: Vec<FiberVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &ContactState {
        self.states.last().expect("trajectories are never empty")
    }

    /// CSV with columns `t, x_1..x_n, u, p_1..p_n, v_1..v_n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.states.first().map_or(1, |s| s.x.dim());
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|i| format!("x_{i}")));
        header.push("u".into());
        header.extend((1..=dim).map(|i| format!("p_{i}")));
        header.extend((1..=dim).map(|i| format!("v_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (s, v) in self.states.iter().zip(&self.velocities) {
            let mut row = vec![s.t.to_string()];
            row.extend(s.x.coords().iter().map(f64::to_string));
            row.push(s.u.to_string());
            row.extend(s.p.as_slice().iter().map(f64::to_string));
            row.extend(v.as_slice().iter().map(f64::to_string));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrate from `s0` over `[s0.t, s0.t + t_final]` with RK4. The step is
/// `t_final / ceil(t_final / dt)`, so the last stamp lands on `t_final`.
pub fn integrate<H: ContactHamiltonian + ?Sized>(
    h: &H,
    s0: &ContactState,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= dt * (1.0 - 1e-12)) || !t_final.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t_final = {t_final} must be at least dt = {dt}"
        )));
    }
    if s0.x.dim() != h.dim() {
        return Err(Error::InvalidInput("state dimension does not match H".into()));
    }
    vector_field(h, s0)?;
    let n = step_count(t_final, dt);
    let step = t_final / n as f64;
    let mut states = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n + 1);
    states.push(*s0);
    velocities.push(h.grad_p(&s0.x, s0.u, &s0.p));
    let mut lifted = LiftedState {
        x: FiberVector::new(s0.x.coords())?,
        u: s0.u,
        p: s0.p,
    };
    for k in 1..=n {
        let next = rk4_step(h, &lifted, step);
        if !next.is_finite() {
            return Err(Error::BlowUp {
                last: Box::new(*states.last().unwrap()),
            });
        }
        lifted = next;
        let x = lifted.wrapped();
        // re-anchor the lift so coordinates stay O(1)
        lifted.x = FiberVector::new(x.coords())?;
        let v = h.grad_p(&x, lifted.u, &lifted.p);
        if !v.is_finite() {
            return Err(Error::BlowUp {
                last: Box::new(*states.last().unwrap()),
            });
        }
        states.push(ContactState {
            x,
            u: lifted.u,
            p: lifted.p,
            t: s0.t + k as f64 * step,
        });
        velocities.push(v);
    }
    Ok(Trajectory {
        dt: step,
        states,
        velocities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{CatalogEntry, ContactLagrangian};
    use crate::torus::{distance, wrap};
    use std::f64::consts::PI;

    fn state(x: f64, u: f64, p: f64) -> ContactState {
        ContactState::new(wrap(&[x]).unwrap(), u, FiberVector::axis(1, p), 0.0).unwrap()
    }

    #[test]
    fn vector_field_examples() {
        let h = CatalogEntry::discounted(1, 0.0, 0.5).unwrap();
        let f = vector_field(&h, &state(0.0, 0.0, 0.0)).unwrap();
        assert_eq!((f.dx[0], f.du, f.dp[0]), (0.0, 0.0, 0.0));

        let f = vector_field(&h, &state(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((f.dx[0], f.du, f.dp[0]), (1.0, 0.5, -0.5));

        let h = CatalogEntry::classical(1, 0.3).unwrap();
        for u in [-2.0, 0.0, 3.5] {
            let f = vector_field(&h, &state(0.25, u, 0.0)).unwrap();
            assert_eq!(f.dx[0], 0.0);
            assert!((f.dp[0] - 2.0 * PI * 0.3).abs() < 1e-15);
            assert!((f.dp[0] - 1.884956).abs() < 1e-6);
        }
    }

    #[test]
    fn rest_point_gives_constant_two_state_trajectory() {
        let h = CatalogEntry::classical(1, 0.0).unwrap();
        let tr = integrate(&h, &state(0.4, 0.0, 0.0), 0.01, 0.01).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.states[0].x, tr.states[1].x);
        assert_eq!(tr.states[0].u, tr.states[1].u);
    }

    #[test]
    fn free_particle_closed_form() {
        let h = CatalogEntry::classical(1, 0.0).unwrap();
        let tr = integrate(&h, &state(0.8, 0.25, 0.7), 1.0, 1e-3).unwrap();
        for s in &tr.states {
            let x = wrap(&[0.8 + 0.7 * s.t]).unwrap();
            assert!(distance(&s.x, &x).unwrap() < 1e-12);
            assert!((s.u - (0.25 + 0.5 * 0.49 * s.t)).abs() < 1e-12);
        }
        assert!((tr.last().t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discounted_momentum_decays_exponentially() {
        let h = CatalogEntry::discounted(1, 0.0, 0.5).unwrap();
        let tr = integrate(&h, &state(0.0, 0.0, 1.0), 1.0, 1e-3).unwrap();
        let p = tr.last().p[0];
        assert!((p - (-0.5f64).exp()).abs() < 1e-8);
        assert!((p - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn hamiltonian_evolves_by_exponential_factor() {
        // dH/dt = -H_u H along the flow; for the discounted entry H(t) = H(0) e^{-lambda t}
        let h = CatalogEntry::discounted(1, 0.3, 0.5).unwrap();
        let tr = integrate(&h, &state(0.1, 0.4, 0.9), 2.0, 1e-3).unwrap();
        let h0 = h.value(&tr.states[0].x, tr.states[0].u, &tr.states[0].p);
        for s in &tr.states {
            let expected = h0 * (-0.5 * s.t).exp();
            assert!((h.value(&s.x, s.u, &s.p) - expected).abs() < 1e-11);
        }
        // u-independent entry: plain conservation
        let h = CatalogEntry::classical(1, 0.3).unwrap();
        let tr = integrate(&h, &state(0.1, 0.4, 0.9), 2.0, 1e-2).unwrap();
        let h0 = h.value(&tr.states[0].x, 0.0, &tr.states[0].p);
        for (k, s) in tr.states.iter().enumerate() {
            assert!((h.value(&s.x, 0.0, &s.p) - h0).abs() <= 50.0 * 1e-8 * k as f64 + 1e-14);
        }
    }

    #[test]
    fn nonlinear_u_energy_identity() {
        // H(t) = H(0) exp(-int_0^t H_u), accumulate the integral by trapezoid
        let h = CatalogEntry::nonlinear_u(1, 0.3, 0.8).unwrap();
        let tr = integrate(&h, &state(0.1, 0.4, 0.9), 1.0, 1e-3).unwrap();
        let hu = |s: &ContactState| h.d_u(&s.x, s.u, &s.p);
        let mut integral = 0.0;
        let h0 = h.value(&tr.states[0].x, tr.states[0].u, &tr.states[0].p);
        for w in tr.states.windows(2) {
            integral += 0.5 * tr.dt * (hu(&w[0]) + hu(&w[1]));
            let predicted = h0 * (-integral).exp();
            assert!((h.value(&w[1].x, w[1].u, &w[1].p) - predicted).abs() < 1e-6);
        }
    }

    #[test]
    fn u_rate_equals_lagrangian() {
        let h = CatalogEntry::nonlinear_u(1, 0.3, 0.8).unwrap();
        let l = h.lagrangian();
        let tr = integrate(&h, &state(0.1, 0.4, 0.9), 1.0, 1e-3).unwrap();
        for s in &tr.states {
            let f = vector_field(&h, s).unwrap();
            assert!((f.du - l.value(&s.x, s.u, &f.dx)).abs() < 1e-12);
        }
    }

    #[test]
    fn blow_up_is_reported_with_last_state() {
        struct Explosive;
        impl ContactHamiltonian for Explosive {
            fn name(&self) -> &str {
                "explosive"
            }
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &TorusPoint, _: f64, p: &FiberVector) -> f64 {
                p[0].powi(4)
            }
            fn grad_x(&self, _: &TorusPoint, _: f64, _: &FiberVector) -> FiberVector {
                FiberVector::zeros(1)
            }
            fn d_u(&self, _: &TorusPoint, _: f64, _: &FiberVector) -> f64 {
                -1e3
            }
            fn grad_p(&self, _: &TorusPoint, _: f64, p: &FiberVector) -> FiberVector {
                FiberVector::axis(1, 4.0 * p[0].powi(3))
            }
            fn hess_p(&self, _: &TorusPoint, _: f64, p: &FiberVector) -> crate::torus::FiberMatrix {
                crate::torus::FiberMatrix::scaled_identity(1, 12.0 * p[0] * p[0])
            }
        }
        match integrate(&Explosive, &state(0.0, 0.0, 1.0), 10.0, 1e-2) {
            Err(Error::BlowUp { last }) => assert!(last.is_finite() && last.t > 0.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_steps() {
        let h = CatalogEntry::classical(1, 0.0).unwrap();
        assert!(integrate(&h, &state(0.0, 0.0, 0.0), 1.0, 0.0).is_err());
        assert!(integrate(&h, &state(0.0, 0.0, 0.0), 0.001, 0.01).is_err());
    }

    #[test]
    fn csv_layout() {
        let h = CatalogEntry::classical(1, 0.0).unwrap();
        let tr = integrate(&h, &state(0.0, 0.0, 0.5), 0.02, 0.01).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1,u,p_1,v_1");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,0,0.5,0.5");
    }
}
