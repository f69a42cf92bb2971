//! Calibrated curves from a computed field.
//!
//! The argmin walk recovers a lattice path, whose step velocities jump by a
//! lattice spacing at a time. That path is then polished into a critical
//! point of the discrete Herglotz action
//! `u_{k+1} = u_k + dt L(mid_k, u_k, v_k)` with both endpoints fixed, which
//! removes the lattice noise without leaving the DP's basin.

use std::io::Write;

use super::dp::{stencil, DpConfig};
use super::field::{ActionField, Scheme};
use crate::catalog::ContactLagrangian;
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::torus::{FiberVector, TorusPoint};

#[derive(Clone, Debug, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub x: TorusPoint,
    pub u: f64,
    pub v: FiberVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibratedCurve {
    pub dt: f64,
    pub samples: Vec<CurveSample>,
}

impl CalibratedCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest `|u|` and `|v|` seen along the curve.
    pub fn extent(&self) -> (f64, f64) {
        self.samples.iter().fold((0.0f64, 0.0f64), |(u, v), s| {
            (u.max(s.u.abs()), v.max(s.v.norm()))
        })
    }

    /// Same columns as trajectory exports minus the momenta.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.samples.first().map_or(1, |s| s.x.dim());
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|i| format!("x_{i}")));
        header.push("u".into());
        header.extend((1..=dim).map(|i| format!("v_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![s.t.to_string()];
            row.extend(s.x.coords().iter().map(f64::to_string));
            row.push(s.u.to_string());
            row.extend(s.v.as_slice().iter().map(f64::to_string));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

impl From<&Trajectory> for CalibratedCurve {
    fn from(tr: &Trajectory) -> Self {
        CalibratedCurve {
            dt: tr.dt,
            samples: tr
                .states
                .iter()
                .zip(&tr.velocities)
                .map(|(s, v)| CurveSample {
                    t: s.t,
                    x: s.x,
                    u: s.u,
                    v: *v,
                })
                .collect(),
        }
    }
}

/// Recover the minimising curve ending at `(x, t)`; `t` must be a layer time.
pub fn backtrack_calibrated<L: ContactLagrangian + ?Sized>(
    field: &ActionField,
    l: &L,
    x: &TorusPoint,
    t: f64,
) -> Result<CalibratedCurve> {
    let dim = field.grid.dim;
    if x.dim() != dim || l.dim() != dim {
        return Err(Error::InvalidInput("backtrack dimension mismatch".into()));
    }
    let k_end = field
        .layer_at(t)
        .ok_or_else(|| Error::InvalidInput(format!("t = {t} is not a layer time of the field")))?;
    if !field.sample_layer(k_end, x).is_finite() {
        return Err(Error::InvalidInput(format!("({x:?}, {t}) is not reachable")));
    }
    let dt = field.dt;
    let cfg = DpConfig {
        dim,
        m: field.grid.m,
        dt,
        v_max: field.v_max,
        substeps: field.substeps,
    };
    let offsets = stencil(&cfg);

    // walk back: disps[k] is the step arriving at layer k + 1
    let mut disps = vec![FiberVector::zeros(dim); k_end];
    let mut here = *x;
    for k in (2..=k_end).rev() {
        let arrival_u = field.sample_layer(k, &here);
        let mut best: Option<(f64, usize)> = None;
        for (i, off) in offsets.iter().enumerate() {
            let y = here.translate(&(off.disp * -1.0));
            let start = field.sample_layer(k - 1, &y);
            if !start.is_finite() {
                continue;
            }
            let u = match field.scheme {
                Scheme::Semigroup => start,
                _ => 0.5 * (start + arrival_u),
            };
            let mid = here.translate(&(off.disp * -0.5));
            let cost = start + dt * l.value(&mid, u, &off.velocity);
            if cost.is_finite() && best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, i));
            }
        }
        let (_, i) = best.ok_or_else(|| {
            Error::Internal(format!("no finite predecessor at layer {k} from {here:?}"))
        })?;
        disps[k - 1] = offsets[i].disp;
        here = here.translate(&(offsets[i].disp * -1.0));
    }
    disps[0] = field.x0.displacement_unchecked(&here);

    // lifted positions X_0 = x0, X_k = X_{k-1} + disp
    let mut lifted = Vec::with_capacity((k_end + 1) * dim);
    lifted.extend_from_slice(field.x0.coords());
    for k in 0..k_end {
        for j in 0..dim {
            let prev = lifted[k * dim + j];
            lifted.push(prev + disps[k][j]);
        }
    }

    let path = HerglotzPath {
        l,
        dim,
        dt,
        u0: field.u0,
    };
    path.polish(&mut lifted);

    let mut samples = Vec::with_capacity(k_end + 1);
    for k in 0..=k_end {
        let xk = TorusPoint::wrap(&lifted[k * dim..(k + 1) * dim])?;
        let u = if k == 0 { field.u0 } else { field.sample_layer(k, &xk) };
        // vertex velocity: centred in the interior, extrapolated from the
        // two nearest steps at the ends
        let v = if k_end == 1 {
            path.velocity(&lifted, 0)
        } else if k == 0 {
            path.velocity(&lifted, 0) * 1.5 - path.velocity(&lifted, 1) * 0.5
        } else if k == k_end {
            path.velocity(&lifted, k - 1) * 1.5 - path.velocity(&lifted, k - 2) * 0.5
        } else {
            (path.velocity(&lifted, k - 1) + path.velocity(&lifted, k)) * 0.5
        };
        samples.push(CurveSample {
            t: k as f64 * dt,
            x: xk,
            u,
            v,
        });
    }
    Ok(CalibratedCurve { dt, samples })
}

/// Discrete Herglotz action over lifted vertex positions (flattened).
struct HerglotzPath<'a, L: ?Sized> {
    l: &'a L,
    dim: usize,
    dt: f64,
    u0: f64,
}

struct StepData {
    lx: FiberVector,
    lu: f64,
    lv: FiberVector,
}

impl<L: ContactLagrangian + ?Sized> HerglotzPath<'_, L> {
    fn steps(&self, xs: &[f64]) -> usize {
        xs.len() / self.dim - 1
    }

    fn velocity(&self, xs: &[f64], k: usize) -> FiberVector {
        let d = self.dim;
        let mut v = FiberVector::zeros(d);
        for j in 0..d {
            v.set(j, (xs[(k + 1) * d + j] - xs[k * d + j]) / self.dt);
        }
        v
    }

    fn midpoint(&self, xs: &[f64], k: usize) -> TorusPoint {
        let d = self.dim;
        let mut c = [0.0; 2];
        for j in 0..d {
            c[j] = 0.5 * (xs[k * d + j] + xs[(k + 1) * d + j]);
        }
        TorusPoint::wrap(&c[..d]).unwrap_or_else(|_| TorusPoint::origin(d).unwrap())
    }

    /// Terminal value and the per-step data along the recursion.
    fn forward(&self, xs: &[f64], with_data: bool) -> (f64, Vec<StepData>) {
        let mut u = self.u0;
        let mut data = Vec::new();
        for k in 0..self.steps(xs) {
            let mid = self.midpoint(xs, k);
            let v = self.velocity(xs, k);
            if with_data {
                data.push(StepData {
                    lx: self.l.grad_x(&mid, u, &v),
                    lu: self.l.d_u(&mid, u, &v),
                    lv: self.l.grad_v(&mid, u, &v),
                });
            }
            u += self.dt * self.l.value(&mid, u, &v);
        }
        (u, data)
    }

    /// Gradient of `u_N` with respect to the interior vertices (adjoint sweep).
    fn gradient(&self, xs: &[f64]) -> Vec<f64> {
        let n = self.steps(xs);
        let d = self.dim;
        let (_, data) = self.forward(xs, true);
        let mut mu = vec![0.0; n + 1];
        mu[n] = 1.0;
        for k in (0..n).rev() {
            mu[k] = mu[k + 1] * (1.0 + self.dt * data[k].lu);
        }
        let mut g = vec![0.0; (n - 1) * d];
        for vtx in 1..n {
            let (a, b) = (&data[vtx], &data[vtx - 1]);
            for j in 0..d {
                g[(vtx - 1) * d + j] = mu[vtx + 1] * (0.5 * self.dt * a.lx[j] - a.lv[j])
                    + mu[vtx] * (0.5 * self.dt * b.lx[j] + b.lv[j]);
            }
        }
        g
    }

    fn with_interior(&self, xs: &[f64], z: &[f64]) -> Vec<f64> {
        let mut out = xs.to_vec();
        let d = self.dim;
        out[d..d + z.len()].copy_from_slice(z);
        out
    }

    /// Damped Newton on the interior vertices; keeps the input on failure.
    fn polish(&self, xs: &mut [f64]) {
        let n = self.steps(xs);
        if n < 2 {
            return;
        }
        let d = self.dim;
        let nv = (n - 1) * d;
        let mut z: Vec<f64> = xs[d..d + nv].to_vec();
        let mut obj = self.forward(xs, false).0;
        if !obj.is_finite() {
            return;
        }
        let fd_h = 1e-6 * self.dt;
        for _ in 0..30 {
            let full = self.with_interior(xs, &z);
            let g = self.gradient(&full);
            let gmax = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if !gmax.is_finite() || gmax < 1e-12 {
                break;
            }
            // dense symmetric Hessian by central differences of the gradient
            let mut hess = vec![0.0; nv * nv];
            for i in 0..nv {
                let mut zp = z.clone();
                zp[i] += fd_h;
                let gp = self.gradient(&self.with_interior(xs, &zp));
                zp[i] -= 2.0 * fd_h;
                let gm = self.gradient(&self.with_interior(xs, &zp));
                for r in 0..nv {
                    hess[r * nv + i] = (gp[r] - gm[r]) / (2.0 * fd_h);
                }
            }
            for r in 0..nv {
                for c in 0..r {
                    let s = 0.5 * (hess[r * nv + c] + hess[c * nv + r]);
                    hess[r * nv + c] = s;
                    hess[c * nv + r] = s;
                }
            }
            let diag = (0..nv).fold(0.0f64, |a, i| a.max(hess[i * nv + i].abs())).max(1.0);
            let mut shift = 0.0;
            let mut accepted = false;
            for _ in 0..12 {
                let mut a = hess.clone();
                for i in 0..nv {
                    a[i * nv + i] += shift;
                }
                let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
                if let Some(step) = solve_dense(a, nv, rhs) {
                    let slope: f64 = step.iter().zip(&g).map(|(s, gi)| s * gi).sum();
                    if slope < 0.0 {
                        let mut tau = 1.0;
                        for _ in 0..30 {
                            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + tau * b).collect();
                            let val = self.forward(&self.with_interior(xs, &trial), false).0;
                            if val.is_finite() && val <= obj + 1e-4 * tau * slope {
                                z = trial;
                                obj = val;
                                accepted = true;
                                break;
                            }
                            tau *= 0.5;
                        }
                    }
                }
                if accepted {
                    break;
                }
                shift = if shift == 0.0 { 1e-6 * diag } else { shift * 10.0 };
            }
            if !accepted {
                break;
            }
        }
        xs[d..d + nv].copy_from_slice(&z);
    }
}

/// Gaussian elimination with partial pivoting on a row-major `n x n` matrix.
fn solve_dense(mut a: Vec<f64>, n: usize, mut b: Vec<f64>) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
