//! Flat tori `T^n = R^n / Z^n` for `n` in `{1, 2}`.
//!
//! Points are stored in the canonical chart `[0, 1)^n`. Fiber vectors (velocities
//! and momenta) live in `R^n` and carry no wrapping.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 2;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dimension must be 1 or 2, got {dim}"
        )));
    }
    Ok(())
}

/// Reduce a finite real number into `[0, 1)`.
#[inline]
pub fn wrap_unit(c: f64) -> f64 {
    let r = c - c.floor();
    // c slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of a coordinate difference in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_half(d: f64) -> f64 {
    let r = d - (d + 0.5).floor();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct TorusPoint {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl TorusPoint {
    /// Wrap raw coordinates onto the torus.
    pub fn wrap(raw: &[f64]) -> Result<Self> {
        check_dim(raw.len())?;
        if raw.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite torus coordinate in {raw:?}"
            )));
        }
        let mut coords = [0.0; MAX_DIM];
        for (dst, &c) in coords.iter_mut().zip(raw) {
            *dst = wrap_unit(c);
        }
        Ok(Self {
            coords,
            dim: raw.len(),
        })
    }

    pub fn origin(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            coords: [0.0; MAX_DIM],
            dim,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    /// Move along a fiber vector and wrap. The caller guarantees matching
    /// dimensions and finite components.
    #[inline]
    pub fn translate(&self, v: &FiberVector) -> Self {
        debug_assert_eq!(self.dim, v.dim());
        let mut coords = [0.0; MAX_DIM];
        for i in 0..self.dim {
            coords[i] = wrap_unit(self.coords[i] + v[i]);
        }
        Self {
            coords,
            dim: self.dim,
        }
    }

    /// Representative of `b - self` with components in `[-1/2, 1/2)`.
    pub fn displacement_to(&self, b: &TorusPoint) -> Result<FiberVector> {
        if self.dim != b.dim {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {} vs {}",
                self.dim, b.dim
            )));
        }
        Ok(self.displacement_unchecked(b))
    }

    #[inline]
    pub(crate) fn displacement_unchecked(&self, b: &TorusPoint) -> FiberVector {
        let mut c = [0.0; MAX_DIM];
        for (ci, (bi, ai)) in c.iter_mut().zip(b.coords.iter().zip(&self.coords)).take(self.dim) {
            *ci = wrap_half(bi - ai);
        }
        FiberVector {
            comps: c,
            dim: self.dim,
        }
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusPoint{:?}", self.coords())
    }
}

/// A tangent or cotangent vector: `ẋ` or `p`.
#[derive(Clone, Copy, PartialEq)]
pub struct FiberVector {
    comps: [f64; MAX_DIM],
    dim: usize,
}

impl FiberVector {
    pub fn new(comps: &[f64]) -> Result<Self> {
        check_dim(comps.len())?;
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite fiber component in {comps:?}"
            )));
        }
        let mut c = [0.0; MAX_DIM];
        c[..comps.len()].copy_from_slice(comps);
        Ok(Self {
            comps: c,
            dim: comps.len(),
        })
    }

    #[inline]
    pub fn zeros(dim: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        Self {
            comps: [0.0; MAX_DIM],
            dim,
        }
    }

    /// Unit vector along the first axis scaled by `s`.
    #[inline]
    pub fn axis(dim: usize, s: f64) -> Self {
        let mut v = Self::zeros(dim);
        v.comps[0] = s;
        v
    }

    #[inline]
    pub(crate) fn from_array(comps: [f64; MAX_DIM], dim: usize) -> Self {
        Self { comps, dim }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.comps[..self.dim]
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: f64) {
        assert!(i < self.dim);
        self.comps[i] = value;
    }

    #[inline]
    pub fn dot(&self, other: &FiberVector) -> f64 {
        (0..self.dim).map(|i| self.comps[i] * other.comps[i]).sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Largest absolute component.
    #[inline]
    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }
}

impl fmt::Debug for FiberVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_slice())
    }
}

impl Index<usize> for FiberVector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl Add for FiberVector {
    type Output = FiberVector;
    #[inline]
    fn add(mut self, rhs: FiberVector) -> FiberVector {
        for i in 0..self.dim {
            self.comps[i] += rhs.comps[i];
        }
        self
    }
}

impl Sub for FiberVector {
    type Output = FiberVector;
    #[inline]
    fn sub(mut self, rhs: FiberVector) -> FiberVector {
        for i in 0..self.dim {
            self.comps[i] -= rhs.comps[i];
        }
        self
    }
}

impl Neg for FiberVector {
    type Output = FiberVector;
    #[inline]
    fn neg(mut self) -> FiberVector {
        for i in 0..self.dim {
            self.comps[i] = -self.comps[i];
        }
        self
    }
}

impl Mul<f64> for FiberVector {
    type Output = FiberVector;
    #[inline]
    fn mul(mut self, s: f64) -> FiberVector {
        for i in 0..self.dim {
            self.comps[i] *= s;
        }
        self
    }
}

/// Symmetric `n x n` matrix for fiber Hessians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberMatrix {
    m: [[f64; MAX_DIM]; MAX_DIM],
    dim: usize,
}

impl FiberMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            m: [[0.0; MAX_DIM]; MAX_DIM],
            dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = s;
        }
        out
    }

    /// `a b^T + b a^T` scaled by `s / 2`, i.e. the symmetric part of `s a b^T`.
    pub fn sym_outer(a: &FiberVector, b: &FiberVector, s: f64) -> Self {
        let dim = a.dim();
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                out.m[i][j] = 0.5 * s * (a[i] * b[j] + b[i] * a[j]);
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.dim && j < self.dim);
        self.m[i][j] = value;
    }

    pub fn scale(mut self, s: f64) -> Self {
        for row in self.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        self
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(mut self, other: &FiberMatrix) -> Self {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.m[i][j] += other.m[i][j];
            }
        }
        self
    }

    pub fn mul_vec(&self, v: &FiberVector) -> FiberVector {
        let mut out = FiberVector::zeros(self.dim);
        for i in 0..self.dim {
            out.comps[i] = (0..self.dim).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.dim < 2 || (self.m[0][1] - self.m[1][0]).abs() <= tol
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        match self.dim {
            1 => self.m[0][0],
            _ => {
                let a = self.m[0][0];
                let d = self.m[1][1];
                let b = 0.5 * (self.m[0][1] + self.m[1][0]);
                let mean = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                mean - rad
            }
        }
    }

    /// Solve `self * x = rhs`; `None` when singular.
    pub fn solve(&self, rhs: &FiberVector) -> Option<FiberVector> {
        match self.dim {
            1 => {
                let a = self.m[0][0];
                (a != 0.0 && a.is_finite()).then(|| FiberVector::axis(1, rhs[0] / a))
            }
            _ => {
                let det = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
                if det == 0.0 || !det.is_finite() {
                    return None;
                }
                let x0 = (self.m[1][1] * rhs[0] - self.m[0][1] * rhs[1]) / det;
                let x1 = (self.m[0][0] * rhs[1] - self.m[1][0] * rhs[0]) / det;
                Some(FiberVector::from_array([x0, x1], 2))
            }
        }
    }
}

pub fn wrap(raw: &[f64]) -> Result<TorusPoint> {
    TorusPoint::wrap(raw)
}

pub fn displacement(a: &TorusPoint, b: &TorusPoint) -> Result<FiberVector> {
    a.displacement_to(b)
}

pub fn distance(a: &TorusPoint, b: &TorusPoint) -> Result<f64> {
    Ok(a.displacement_to(b)?.norm())
}

/// Diameter of `T^n` with unit period: `sqrt(n) / 2`.
pub fn diameter(dim: usize) -> f64 {
    (dim as f64).sqrt() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> TorusPoint {
        wrap(c).unwrap()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(p(&[0.25]).coords(), &[0.25]);
        assert_eq!(p(&[1.75]).coords(), &[0.75]);
        assert!((p(&[-0.1]).coords()[0] - 0.9).abs() < 1e-15);
        assert_eq!(p(&[-1e-18]).coords(), &[0.0]);
    }

    #[test]
    fn wrap_rejects_bad_input() {
        assert!(matches!(wrap(&[f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(wrap(&[f64::INFINITY]), Err(Error::InvalidInput(_))));
        assert!(wrap(&[]).is_err());
        assert!(wrap(&[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn displacement_examples() {
        let d = displacement(&p(&[0.1]), &p(&[0.2])).unwrap();
        assert!((d[0] - 0.1).abs() < 1e-15);
        let d = displacement(&p(&[0.9]), &p(&[0.1])).unwrap();
        assert!((d[0] - 0.2).abs() < 1e-15);
        let d = displacement(&p(&[0.0]), &p(&[0.5])).unwrap();
        assert_eq!(d[0], -0.5);
        assert!(displacement(&p(&[0.0]), &p(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&p(&[0.1]), &p(&[0.1])).unwrap(), 0.0);
        assert!((distance(&p(&[0.9]), &p(&[0.1])).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(
            distance(&p(&[0.0, 0.0]), &p(&[0.5, 0.5])).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2
        );
    }

    #[test]
    fn min_eigenvalue_2x2() {
        let mut m = FiberMatrix::identity(2);
        m.set(0, 1, 0.5);
        m.set(1, 0, 0.5);
        assert!((m.min_eigenvalue() - 0.5).abs() < 1e-15);
        let x = m.solve(&FiberVector::new(&[1.5, 1.5]).unwrap()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    fn coords2() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..=2)
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(raw in coords2()) {
            let once = p(&raw);
            let twice = p(once.coords());
            prop_assert_eq!(once.coords(), twice.coords());
            prop_assert!(once.coords().iter().all(|c| (0.0..1.0).contains(c)));
        }

        #[test]
        fn displacement_lands_on_target(a in coords2(), shift in prop::collection::vec(-5.0f64..5.0, 2)) {
            let a = p(&a);
            let b = p(&shift[..a.dim()]);
            let d = displacement(&a, &b).unwrap();
            prop_assert!(d.as_slice().iter().all(|c| (-0.5..0.5).contains(c)));
            let landed = a.translate(&d);
            prop_assert!(distance(&landed, &b).unwrap() < 1e-12);
        }

        #[test]
        fn displacement_antisymmetric_and_metric(
            a in prop::collection::vec(0.0f64..1.0, 2),
            b in prop::collection::vec(0.0f64..1.0, 2),
            c in prop::collection::vec(0.0f64..1.0, 2),
        ) {
            let (a, b, c) = (p(&a), p(&b), p(&c));
            let dab = displacement(&a, &b).unwrap();
            let dba = displacement(&b, &a).unwrap();
            let on_tie = dab.as_slice().iter().chain(dba.as_slice()).any(|x| *x == -0.5);
            if !on_tie {
                prop_assert!((dab + dba).max_abs() < 1e-15);
            }
            let ab = distance(&a, &b).unwrap();
            prop_assert!(ab <= diameter(2) + 1e-15);
            prop_assert!((ab - distance(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!(ab <= distance(&a, &c).unwrap() + distance(&c, &b).unwrap() + 1e-14);
        }
    }
}
