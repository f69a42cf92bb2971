use std::io::Write;

use crate::error::{Error, Result};
use crate::torus::{wrap_unit, TorusPoint, MAX_DIM};

/// Uniform periodic grid with `m` nodes per axis, flattened in lexicographic
/// order (first axis slowest).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub dim: usize,
    pub m: usize,
}

impl Grid {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if m < 2 {
            return Err(Error::InvalidInput(format!("grid needs m >= 2, got {m}")));
        }
        Ok(Self { dim, m })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    #[inline]
    pub fn axes(&self, idx: usize) -> [usize; MAX_DIM] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.m, idx % self.m],
        }
    }

    #[inline]
    pub fn flatten(&self, axes: [isize; MAX_DIM]) -> usize {
        let m = self.m as isize;
        match self.dim {
            1 => axes[0].rem_euclid(m) as usize,
            _ => (axes[0].rem_euclid(m) * m + axes[1].rem_euclid(m)) as usize,
        }
    }

    pub fn point(&self, idx: usize) -> TorusPoint {
        let a = self.axes(idx);
        let h = self.spacing();
        let c = [a[0] as f64 * h, a[1] as f64 * h];
        TorusPoint::wrap(&c[..self.dim]).expect("grid coordinates are finite")
    }

    /// Nearest node (ties round up).
    pub fn nearest(&self, x: &TorusPoint) -> usize {
        let mut axes = [0isize; MAX_DIM];
        for (a, c) in axes.iter_mut().zip(x.coords()) {
            *a = (c * self.m as f64).round() as isize;
        }
        self.flatten(axes)
    }

    /// Corner indices and multilinear weights for an arbitrary point.
    pub(crate) fn corners(&self, x: &TorusPoint) -> ([usize; 4], [f64; 4], usize) {
        let m = self.m as f64;
        let mut base = [0isize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for (i, c) in x.coords().iter().enumerate() {
            let s = wrap_unit(*c) * m;
            let f = s.floor();
            base[i] = f as isize;
            frac[i] = s - f;
        }
        let mut idx = [0usize; 4];
        let mut w = [0.0; 4];
        let mut n = 0;
        let corners_per_axis = |f: f64| if f == 0.0 { 1 } else { 2 };
        let c0 = corners_per_axis(frac[0]);
        let c1 = if self.dim == 2 { corners_per_axis(frac[1]) } else { 1 };
        for a in 0..c0 {
            for b in 0..c1 {
                let wa = if a == 0 { 1.0 - frac[0] } else { frac[0] };
                let wb = if self.dim == 1 {
                    1.0
                } else if b == 0 {
                    1.0 - frac[1]
                } else {
                    frac[1]
                };
                idx[n] = self.flatten([base[0] + a as isize, base[1] + b as isize]);
                w[n] = wa * wb;
                n += 1;
            }
        }
        (idx, w, n)
    }
}

/// Multilinear interpolation; infinite when any contributing corner is.
#[inline]
pub(crate) fn interp_corners(values: &[f64], idx: &[usize; 4], w: &[f64; 4], n: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..n {
        let v = values[idx[c]];
        if !v.is_finite() {
            return f64::INFINITY;
        }
        acc += w[c] * v;
    }
    acc
}

/// How the u-slot of the Lagrangian was filled when the field was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// A single minimisation pass against a frozen u-field.
    FrozenPass,
    /// Converged fixed point of frozen passes.
    Picard,
    /// Forward marching with the departure value in the u-slot.
    Semigroup,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::FrozenPass => "frozen_pass",
            Scheme::Picard => "picard",
            Scheme::Semigroup => "semigroup",
        }
    }
}

/// Discretised `h_{x0,u0}(x, t)` on `grid x {t_1, ..., t_K}` with
/// `t_k = k dt`. Unreachable nodes hold `+inf`.
///
/// Off-grid values are multilinear in `x` and linear in `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionField {
    pub x0: TorusPoint,
    pub u0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub grid: Grid,
    pub v_max: f64,
    pub substeps: usize,
    pub scheme: Scheme,
    pub(crate) layers: Vec<Vec<f64>>,
}

pub const INTERPOLATION: &str = "multilinear_x_linear_t";

impl ActionField {
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Time of layer `k` (1-based).
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Values at layer `k` (1-based), indexed by flattened grid node.
    pub fn layer(&self, k: usize) -> &[f64] {
        assert!(k >= 1 && k <= self.layers.len(), "layer {k} out of range");
        &self.layers[k - 1]
    }

    pub fn value(&self, k: usize, node: usize) -> f64 {
        self.layer(k)[node]
    }

    /// Layer index for time `t` if it sits on a layer.
    pub fn layer_at(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        ((k * self.dt - t).abs() <= 1e-9 * self.dt.max(t) && k >= 1.0 && k as usize <= self.layers.len())
            .then_some(k as usize)
    }

    /// Interpolated value within layer `k`.
    pub fn sample_layer(&self, k: usize, x: &TorusPoint) -> f64 {
        let (idx, w, n) = self.grid.corners(x);
        interp_corners(self.layer(k), &idx, &w, n)
    }

    /// Interpolated value at `(x, t)` for `t` in `[t_1, T]`.
    pub fn sample(&self, x: &TorusPoint, t: f64) -> Result<f64> {
        let k_max = self.layers.len();
        if x.dim() != self.grid.dim {
            return Err(Error::InvalidInput("sample dimension mismatch".into()));
        }
        if let Some(k) = self.layer_at(t) {
            return Ok(self.sample_layer(k, x));
        }
        let s = t / self.dt;
        if !(s >= 1.0 && s <= k_max as f64) {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside the field's time range [{}, {}]",
                self.dt, self.horizon
            )));
        }
        let lo = s.floor() as usize;
        let theta = s - lo as f64;
        let a = self.sample_layer(lo, x);
        let b = self.sample_layer((lo + 1).min(k_max), x);
        Ok((1.0 - theta) * a + theta * b)
    }

    /// Smallest finite value over all layers.
    pub fn finite_min(&self) -> f64 {
        self.layers
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|a - b|` over nodes finite in both fields. Fields must share
    /// their grid and time layers.
    pub fn sup_diff(&self, other: &ActionField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        debug_assert_eq!(self.layers.len(), other.layers.len());
        self.layers
            .iter()
            .zip(&other.layers)
            .flat_map(|(a, b)| a.iter().zip(b))
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV: header `t,x_1[,x_2],h`, time-major then grid order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = match self.grid.dim {
            1 => "t,x_1,h",
            _ => "t,x_1,x_2,h",
        };
        writeln!(w, "{header}")?;
        for k in 1..=self.layers.len() {
            let t = self.time(k);
            for (node, v) in self.layer(k).iter().enumerate() {
                let p = self.grid.point(node);
                let xs: Vec<String> = p.coords().iter().map(f64::to_string).collect();
                writeln!(w, "{t},{},{v}", xs.join(","))?;
            }
        }
        Ok(())
    }

    /// `key=value` metadata describing how the field was produced. `extra`
    /// entries (catalog entry, parameters, ...) are appended in order.
    pub fn write_sidecar<W: Write>(&self, mut w: W, extra: &[(String, String)]) -> std::io::Result<()> {
        let x0: Vec<String> = self.x0.coords().iter().map(f64::to_string).collect();
        writeln!(w, "x0={}", x0.join(","))?;
        writeln!(w, "u0={}", self.u0)?;
        writeln!(w, "T={}", self.horizon)?;
        writeln!(w, "dim={}", self.grid.dim)?;
        writeln!(w, "m={}", self.grid.m)?;
        writeln!(w, "dt={}", self.dt)?;
        writeln!(w, "v_max={}", self.v_max)?;
        writeln!(w, "substeps={}", self.substeps)?;
        writeln!(w, "scheme={}", self.scheme.as_str())?;
        writeln!(w, "interpolation={INTERPOLATION}")?;
        for (k, v) in extra {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing_round_trips() {
        let g = Grid::new(2, 5).unwrap();
        for idx in 0..g.len() {
            let a = g.axes(idx);
            assert_eq!(g.flatten([a[0] as isize, a[1] as isize]), idx);
            assert_eq!(g.nearest(&g.point(idx)), idx);
        }
        assert_eq!(g.flatten([-1, 5]), 4 * 5);
        assert!(Grid::new(1, 1).is_err());
    }

    #[test]
    fn corner_weights_partition_unity() {
        let g = Grid::new(2, 8).unwrap();
        let x = TorusPoint::wrap(&[0.97, 0.3]).unwrap();
        let (idx, w, n) = g.corners(&x);
        assert_eq!(n, 4);
        assert!((w[..n].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // wraps across the seam
        assert!(idx[..n].contains(&g.flatten([0, 2])));
        let on_node = g.corners(&g.point(11));
        assert_eq!((on_node.0[0], on_node.1[0], on_node.2), (11, 1.0, 1));
    }

    #[test]
    fn interpolation_is_exact_for_linear_data_and_propagates_inf() {
        let g = Grid::new(1, 10).unwrap();
        let vals: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let x = TorusPoint::wrap(&[0.34]).unwrap();
        let (idx, w, n) = g.corners(&x);
        assert!((interp_corners(&vals, &idx, &w, n) - 6.8).abs() < 1e-12);
        let mut vals = vals;
        vals[4] = f64::INFINITY;
        assert_eq!(interp_corners(&vals, &idx, &w, n), f64::INFINITY);
    }
}
