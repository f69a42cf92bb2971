//! Sampled evidence for the Tonelli and Osgood conditions on a Hamiltonian.
//!
//! Positive definiteness and the Osgood bound are checked on a finite sample
//! grid. Superlinearity cannot be decided from finitely many samples; the
//! report records `H / |p|` at growing `|p|` and passes when the ratios grow.

use std::fmt;

use super::ContactHamiltonian;
use crate::error::{Error, Result};
use crate::torus::{FiberVector, TorusPoint};

/// Radii at which `H / |p|` is recorded.
pub const SUPERLINEAR_RADII: [f64; 3] = [10.0, 20.0, 40.0];

#[derive(Clone, Debug)]
pub struct SampleSpec {
    /// Samples per torus axis.
    pub x_points: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub u_points: usize,
    /// Momentum box half-width; also the radius of the compact set `K`.
    pub p_max: f64,
    pub p_points: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            x_points: 16,
            u_min: -3.0,
            u_max: 3.0,
            u_points: 13,
            p_max: 4.0,
            p_points: 17,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    NotChecked,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "FAIL",
            Outcome::NotChecked => "not checked",
        })
    }
}

#[derive(Clone, Debug)]
pub struct AssumptionReport {
    /// Minimum eigenvalue of `d2H/dp2` over all samples.
    pub min_hessian_eig: f64,
    /// `min_{x,u} H / |p|` at each of [`SUPERLINEAR_RADII`].
    pub superlinearity_ratios: [f64; 3],
    /// `min (f_K(u) - (<H_p, p> - H))` over samples with `u >= 0`.
    pub osgood_slack: Option<f64>,
    pub positive_definite: Outcome,
    pub superlinear: Outcome,
    pub osgood: Outcome,
}

impl AssumptionReport {
    /// Derive the flags from the recorded samples.
    fn from_samples(
        min_hessian_eig: f64,
        superlinearity_ratios: [f64; 3],
        osgood_slack: Option<f64>,
    ) -> Self {
        let flag = |ok: bool| if ok { Outcome::Pass } else { Outcome::Fail };
        let r = superlinearity_ratios;
        Self {
            min_hessian_eig,
            superlinearity_ratios,
            osgood_slack,
            positive_definite: flag(min_hessian_eig > 0.0),
            superlinear: flag(r[0] < r[1] && r[1] < r[2]),
            osgood: osgood_slack.map_or(Outcome::NotChecked, |s| flag(s >= 0.0)),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.positive_definite == Outcome::Pass
            && self.superlinear == Outcome::Pass
            && self.osgood != Outcome::Fail
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| lo + step * i as f64)
}

fn torus_samples(dim: usize, per_axis: usize) -> Vec<TorusPoint> {
    let axis: Vec<f64> = (0..per_axis).map(|i| i as f64 / per_axis as f64).collect();
    match dim {
        1 => axis.iter().map(|&a| TorusPoint::wrap(&[a]).unwrap()).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| TorusPoint::wrap(&[a, b]).unwrap()))
            .collect(),
    }
}

fn fiber_samples(dim: usize, half_width: f64, per_axis: usize) -> Vec<FiberVector> {
    let axis: Vec<f64> = linspace(-half_width, half_width, per_axis).collect();
    match dim {
        1 => axis.iter().map(|&a| FiberVector::axis(1, a)).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| FiberVector::new(&[a, b]).unwrap()))
            .collect(),
    }
}

pub fn check_assumptions<H: ContactHamiltonian + ?Sized>(
    h: &H,
    spec: &SampleSpec,
) -> Result<AssumptionReport> {
    if spec.x_points == 0 || spec.u_points == 0 || spec.p_points == 0 {
        return Err(Error::InvalidInput("sample grid sizes must be positive".into()));
    }
    if !(spec.p_max > 0.0 && spec.p_max.is_finite() && spec.u_min <= spec.u_max) {
        return Err(Error::InvalidInput("sample ranges must be bounded and ordered".into()));
    }
    let dim = h.dim();
    let xs = torus_samples(dim, spec.x_points);
    let us: Vec<f64> = linspace(spec.u_min, spec.u_max, spec.u_points).collect();
    let ps = fiber_samples(dim, spec.p_max, spec.p_points);
    // the sample box reaches |p| = sqrt(dim) p_max at its corners
    let p_radius = spec.p_max * (dim as f64).sqrt();

    let mut min_eig = f64::INFINITY;
    let mut slack: Option<f64> = None;
    for x in &xs {
        for &u in &us {
            for p in &ps {
                min_eig = min_eig.min(h.hess_p(x, u, p).min_eigenvalue());
                if u >= 0.0 {
                    if let Some(f) = h.osgood_majorant(u, p_radius) {
                        let growth = h.grad_p(x, u, p).dot(p) - h.value(x, u, p);
                        let s = f - growth;
                        slack = Some(slack.map_or(s, |m| m.min(s)));
                    }
                }
            }
        }
    }

    let mut ratios = [f64::INFINITY; 3];
    for (slot, &r) in ratios.iter_mut().zip(SUPERLINEAR_RADII.iter()) {
        let p = FiberVector::axis(dim, r);
        for x in &xs {
            for &u in &us {
                *slot = slot.min(h.value(x, u, &p) / r);
            }
        }
    }

    Ok(AssumptionReport::from_samples(min_eig, ratios, slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CatalogEntry;
    use crate::torus::FiberMatrix;

    #[test]
    fn catalog_entries_pass() {
        let spec = SampleSpec::default();
        for entry in [
            CatalogEntry::classical(1, 0.3).unwrap(),
            CatalogEntry::discounted(1, 0.3, 0.5).unwrap(),
            CatalogEntry::nonlinear_u(1, 0.3, 0.3).unwrap(),
            CatalogEntry::nonlinear_u(2, 0.3, 2.0).unwrap(),
        ] {
            let rep = check_assumptions(&entry, &spec).unwrap();
            assert!(rep.all_pass(), "{entry}: {rep:?}");
            assert_eq!(rep.osgood, Outcome::Pass);
        }
    }

    #[test]
    fn classical_hessian_is_identity() {
        let rep =
            check_assumptions(&CatalogEntry::classical(1, 0.3).unwrap(), &SampleSpec::default())
                .unwrap();
        assert_eq!(rep.min_hessian_eig, 1.0);
        let r = rep.superlinearity_ratios;
        assert!(r[0] < r[1] && r[1] < r[2]);
    }

    #[test]
    fn discounted_osgood_slack_matches_hand_bound() {
        // slack = p_max^2/2 + eps - max(p^2/2 - eps cos - lambda u) over u >= 0
        //       = p_max^2/2 + eps - (p_max^2/2 + eps) = 0 at x=1/2, u=0, |p|=p_max
        let spec = SampleSpec::default();
        let rep =
            check_assumptions(&CatalogEntry::discounted(1, 0.3, 0.5).unwrap(), &spec).unwrap();
        assert!(rep.osgood_slack.unwrap().abs() < 1e-12);
    }

    /// `H = |p|`: convex but not strictly, zero fiber Hessian.
    struct AbsMomentum;

    impl ContactHamiltonian for AbsMomentum {
        fn name(&self) -> &str {
            "abs"
        }
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _: &TorusPoint, _: f64, p: &FiberVector) -> f64 {
            p.norm()
        }
        fn grad_x(&self, _: &TorusPoint, _: f64, _: &FiberVector) -> FiberVector {
            FiberVector::zeros(1)
        }
        fn d_u(&self, _: &TorusPoint, _: f64, _: &FiberVector) -> f64 {
            0.0
        }
        fn grad_p(&self, _: &TorusPoint, _: f64, p: &FiberVector) -> FiberVector {
            FiberVector::axis(1, p[0].signum())
        }
        fn hess_p(&self, _: &TorusPoint, _: f64, _: &FiberVector) -> FiberMatrix {
            FiberMatrix::zeros(1)
        }
    }

    #[test]
    fn non_tonelli_mock_fails_positive_definiteness() {
        let rep = check_assumptions(&AbsMomentum, &SampleSpec::default()).unwrap();
        assert_eq!(rep.positive_definite, Outcome::Fail);
        assert_eq!(rep.superlinear, Outcome::Fail);
        // no majorant supplied
        assert_eq!(rep.osgood, Outcome::NotChecked);
        assert!(rep.osgood_slack.is_none());
    }

    #[test]
    fn rejects_empty_grid() {
        let spec = SampleSpec {
            u_points: 0,
            ..Default::default()
        };
        assert!(check_assumptions(&AbsMomentum, &spec).is_err());
    }
}
