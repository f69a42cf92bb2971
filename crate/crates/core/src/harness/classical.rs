//! Classical Lax-Oleinik recursion for `u`-independent Lagrangians.
//!
//! Written against a Lagrangian `L(x, v)` with no u-slot at all, so it can
//! serve as a second code path for the contact solver on entries where both
//! discretise the same problem. The lattice, interpolation and quadrature are
//! the same as the contact solver's, which makes the two bit-comparable.

use crate::action::{DpConfig, Grid};
use crate::error::{Error, Result};
use crate::torus::{FiberVector, TorusPoint};

/// `V(x, t_k) = min over paths from x0 of sum dt L(mid, d / dt)`, layers
/// `t_1..t_K`, unreachable nodes `+inf`.
pub fn lax_oleinik<F>(l: F, x0: &TorusPoint, horizon: f64, cfg: &DpConfig) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&TorusPoint, &FiberVector) -> f64 + Sync,
{
    cfg.validate()?;
    let grid = Grid::new(cfg.dim, cfg.m)?;
    let layers = cfg.layers_for(horizon)?;
    let dt = cfg.dt;
    let reach = cfg.v_max * dt;
    let q = cfg.substeps as i64;
    let r = cfg.neighbor_radius() as i64 * q;
    let h = grid.spacing();

    // departures y = x + s h / q on the fine lattice, lexicographic in s
    let mut steps: Vec<([i64; 2], FiberVector)> = Vec::new();
    let second: Vec<i64> = if cfg.dim == 2 { (-r..=r).collect() } else { vec![0] };
    for s0 in -r..=r {
        for &s1 in &second {
            let comps = [-(s0 as f64) * h / q as f64, -(s1 as f64) * h / q as f64];
            let d = FiberVector::new(&comps[..cfg.dim])?;
            if d.norm() <= reach * (1.0 + 1e-12) {
                steps.push(([s0, s1], d));
            }
        }
    }

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(layers);
    let first: Vec<f64> = (0..grid.len())
        .map(|node| {
            let x = grid.point(node);
            let d = x0.displacement_to(&x).expect("same dimension");
            if d.norm() > reach * (1.0 + 1e-12) {
                f64::INFINITY
            } else {
                dt * l(&x0.translate(&(d * 0.5)), &(d * (1.0 / dt)))
            }
        })
        .collect();
    out.push(first);

    let m = cfg.m as i64;
    for _ in 1..layers {
        let prev = out.last().unwrap();
        let next: Vec<f64> = (0..grid.len())
            .map(|node| {
                let a = grid.axes(node);
                let x = grid.point(node);
                let mut best = f64::INFINITY;
                for (s, d) in &steps {
                    // bilinear weights of the departure on the coarse grid
                    let mut start = 0.0;
                    let mut finite = true;
                    let (b0, f0) = (s[0].div_euclid(q), s[0].rem_euclid(q) as f64 / q as f64);
                    let (b1, f1) = (s[1].div_euclid(q), s[1].rem_euclid(q) as f64 / q as f64);
                    let n0 = if f0 == 0.0 { 1 } else { 2 };
                    let n1 = if f1 == 0.0 { 1 } else { 2 };
                    'corners: for i in 0..n0 {
                        for j in 0..n1 {
                            let w0 = if i == 0 { 1.0 - f0 } else { f0 };
                            let w1 = if j == 0 { 1.0 - f1 } else { f1 };
                            let c0 = (a[0] as i64 + b0 + i as i64).rem_euclid(m) as usize;
                            let idx = if cfg.dim == 1 {
                                c0
                            } else {
                                c0 * cfg.m + (a[1] as i64 + b1 + j as i64).rem_euclid(m) as usize
                            };
                            let v = prev[idx];
                            if !v.is_finite() {
                                finite = false;
                                break 'corners;
                            }
                            start += (w0 * w1) * v;
                        }
                    }
                    if !finite {
                        continue;
                    }
                    let cost = start + dt * l(&x.translate(&(*d * -0.5)), &(*d * (1.0 / dt)));
                    if cost < best {
                        best = cost;
                    }
                }
                best
            })
            .collect();
        out.push(next);
    }
    if out.last().unwrap().iter().all(|v| !v.is_finite()) {
        return Err(Error::InfeasibleGrid("no node reachable at the horizon".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::wrap;

    #[test]
    fn free_particle_first_layer_is_exact() {
        let cfg = DpConfig::new(1, 50, 0.02, 0.0, 0.2);
        let v = lax_oleinik(|_, v| 0.5 * v.norm_sq(), &wrap(&[0.0]).unwrap(), 0.2, &cfg).unwrap();
        assert_eq!(v.len(), 10);
        // one node over: d = 0.02, v = 1, cost dt / 2
        assert!((v[0][1] - 0.01).abs() < 1e-15);
        assert_eq!(v[0][0], 0.0);
    }
}
