//! Contact Hamiltonians `H(x, u, p)`, their Lagrangians `L(x, u, v)`, and the
//! compiled-in catalog.
//!
//! Every catalog entry has the form
//!
//! ```text
//! H(x, u, p) = |p|^2 / 2 + eps * cos(2 pi x_1) + g(u)
//! L(x, u, v) = |v|^2 / 2 - eps * cos(2 pi x_1) - g(u)
//! ```
//!
//! with `g = 0` (classical), `g(u) = lambda * u` (discounted) or
//! `g(u) = a * sin(u)` (nonlinear_u). The kinetic term is quadratic so the
//! Legendre transform is closed-form; [`legendre`] still provides the Newton
//! solve for Hamiltonians that are not.

mod assumptions;
mod fd;
mod legendre;

use std::f64::consts::PI;
use std::fmt;

pub use assumptions::{check_assumptions, AssumptionReport, Outcome, SampleSpec};
pub use fd::{fd_hamiltonian_partials, fd_lagrangian_partials, Partials};
pub use legendre::{legendre_dual, legendre_inverse, LegendreLagrangian, NewtonOptions};

use crate::error::{Error, Result};
use crate::torus::{FiberMatrix, FiberVector, TorusPoint};

/// Evaluation handle for a contact Hamiltonian `H(x, u, p)`.
pub trait ContactHamiltonian: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &TorusPoint, u: f64, p: &FiberVector) -> f64;
    fn grad_x(&self, x: &TorusPoint, u: f64, p: &FiberVector) -> FiberVector;
    fn d_u(&self, x: &TorusPoint, u: f64, p: &FiberVector) -> f64;
    fn grad_p(&self, x: &TorusPoint, u: f64, p: &FiberVector) -> FiberVector;
    fn hess_p(&self, x: &TorusPoint, u: f64, p: &FiberVector) -> FiberMatrix;

    /// Known bound on `|dH/du|`, when there is one.
    fn lipschitz_u(&self) -> Option<f64> {
        None
    }

    /// Osgood majorant `f_K(u)` for the compact set `K = {|p| <= p_max}`.
    fn osgood_majorant(&self, _u: f64, _p_max: f64) -> Option<f64> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    LegendreOf,
    Modified,
}

/// Evaluation handle for a contact Lagrangian `L(x, u, v)`.
pub trait ContactLagrangian: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64;
    fn grad_x(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector;
    fn d_u(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64;
    fn grad_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector;
    fn hess_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberMatrix;
    fn provenance(&self) -> Provenance;

    fn lipschitz_u(&self) -> Option<f64> {
        None
    }
}

impl<T: ContactLagrangian + ?Sized> ContactLagrangian for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
        (**self).value(x, u, v)
    }
    fn grad_x(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector {
        (**self).grad_x(x, u, v)
    }
    fn d_u(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
        (**self).d_u(x, u, v)
    }
    fn grad_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberVector {
        (**self).grad_v(x, u, v)
    }
    fn hess_v(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> FiberMatrix {
        (**self).hess_v(x, u, v)
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
    fn lipschitz_u(&self) -> Option<f64> {
        (**self).lipschitz_u()
    }
}

/// The u-coupling `g(u)` of a catalog entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    None,
    Linear { lambda: f64 },
    Sine { a: f64 },
}

impl Coupling {
    #[inline]
    fn g(&self, u: f64) -> f64 {
        match *self {
            Coupling::None => 0.0,
            Coupling::Linear { lambda } => lambda * u,
            Coupling::Sine { a } => a * u.sin(),
        }
    }

    #[inline]
    fn dg(&self, u: f64) -> f64 {
        match *self {
            Coupling::None => 0.0,
            Coupling::Linear { lambda } => lambda,
            Coupling::Sine { a } => a * u.cos(),
        }
    }

    fn lipschitz(&self) -> f64 {
        match *self {
            Coupling::None => 0.0,
            Coupling::Linear { lambda } => lambda.abs(),
            Coupling::Sine { a } => a.abs(),
        }
    }

    /// `sup_{u >= 0} (-g(u))`.
    fn neg_sup_on_halfline(&self) -> f64 {
        match *self {
            Coupling::None => 0.0,
            Coupling::Linear { lambda } if lambda >= 0.0 => 0.0,
            Coupling::Linear { .. } => f64::INFINITY,
            Coupling::Sine { a } => a.abs(),
        }
    }
}

pub const CATALOG_NAMES: [&str; 3] = ["classical", "discounted", "nonlinear_u"];

/// One compiled-in contact Hamiltonian on `T^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    name: &'static str,
    dim: usize,
    eps: f64,
    coupling: Coupling,
}

impl CatalogEntry {
    pub fn classical(dim: usize, eps: f64) -> Result<Self> {
        Self::build("classical", dim, eps, Coupling::None)
    }

    pub fn discounted(dim: usize, eps: f64, lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::InvalidInput(format!(
                "discounted entry needs lambda >= 0, got {lambda}"
            )));
        }
        Self::build("discounted", dim, eps, Coupling::Linear { lambda })
    }

    pub fn nonlinear_u(dim: usize, eps: f64, a: f64) -> Result<Self> {
        Self::build("nonlinear_u", dim, eps, Coupling::Sine { a })
    }

    /// Look up an entry by name. `coupling` is `lambda` for `discounted` and
    /// `a` for `nonlinear_u`; it is ignored for `classical`.
    pub fn by_name(name: &str, dim: usize, eps: f64, coupling: f64) -> Result<Self> {
        match name {
            "classical" => Self::classical(dim, eps),
            "discounted" => Self::discounted(dim, eps, coupling),
            "nonlinear_u" => Self::nonlinear_u(dim, eps, coupling),
            other => Err(Error::Config(format!(
                "unknown entry '{other}', valid entries: {}",
                CATALOG_NAMES.join(", ")
            ))),
        }
    }

    fn build(name: &'static str, dim: usize, eps: f64, coupling: Coupling) -> Result<Self> {
        if !(1..=crate::torus::MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!("dimension must be 1 or 2, got {dim}")));
        }
        let finite = eps.is_finite()
            && match coupling {
                Coupling::None => true,
                Coupling::Linear { lambda } => lambda.is_finite(),
                Coupling::Sine { a } => a.is_finite(),
            };
        if !finite {
            return Err(Error::InvalidInput("non-finite catalog parameter".into()));
        }
        Ok(Self {
            name,
            dim,
            eps,
            coupling,
        })
    }

    /// Catalog name, one of [`CATALOG_NAMES`].
    pub fn id(&self) -> &'static str {
        self.name
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// Lipschitz constant of the u-coupling (`0` for `classical`).
    pub fn lambda(&self) -> f64 {
        self.coupling.lipschitz()
    }

    pub fn is_u_independent(&self) -> bool {
        matches!(self.coupling, Coupling::None)
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("eps", self.eps)];
        match self.coupling {
            Coupling::None => {}
            Coupling::Linear { lambda } => out.push(("lambda", lambda)),
            Coupling::Sine { a } => out.push(("a", a)),
        }
        out
    }

    /// The closed-form Lagrangian of this entry.
    pub fn lagrangian(&self) -> CatalogLagrangian {
        CatalogLagrangian { entry: self.clone() }
    }

    #[inline]
    fn potential(&self, x: &TorusPoint) -> f64 {
        self.eps * (2.0 * PI * x.coords()[0]).cos()
    }

    #[inline]
    fn potential_grad(&self, x: &TorusPoint) -> FiberVector {
        FiberVector::axis(self.dim, -2.0 * PI * self.eps * (2.0 * PI * x.coords()[0]).sin())
    }
}

impl fmt::Display for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, (k, v)) in self.params().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, ")")
    }
}

impl ContactHamiltonian for CatalogEntry {
    fn name(&self) -> &str {
        self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn value(&self, x: &TorusPoint, u: f64, p: &FiberVector) -> f64 {
        0.5 * p.norm_sq() + self.potential(x) + self.coupling.g(u)
    }

    fn grad_x(&self, x: &TorusPoint, _u: f64, _p: &FiberVector) -> FiberVector {
        self.potential_grad(x)
    }

    fn d_u(&self, _x: &TorusPoint, u: f64, _p: &FiberVector) -> f64 {
        self.coupling.dg(u)
    }

    fn grad_p(&self, _x: &TorusPoint, _u: f64, p: &FiberVector) -> FiberVector {
        *p
    }

    fn hess_p(&self, _x: &TorusPoint, _u: f64, _p: &FiberVector) -> FiberMatrix {
        FiberMatrix::identity(self.dim)
    }

    fn lipschitz_u(&self) -> Option<f64> {
        Some(self.coupling.lipschitz())
    }

    /// Constant majorant `p_max^2 / 2 + |eps| + sup_{u>=0}(-g(u))`, valid for
    /// `u >= 0`.
    fn osgood_majorant(&self, u: f64, p_max: f64) -> Option<f64> {
        if u < 0.0 {
            return None;
        }
        let c = 0.5 * p_max * p_max + self.eps.abs() + self.coupling.neg_sup_on_halfline();
        c.is_finite().then_some(c)
    }
}

/// Closed-form Legendre dual of a [`CatalogEntry`].
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogLagrangian {
    entry: CatalogEntry,
}

impl CatalogLagrangian {
    pub fn entry(&self) -> &CatalogEntry {
        &self.entry
    }
}

impl ContactLagrangian for CatalogLagrangian {
    fn name(&self) -> &str {
        self.entry.name
    }

    fn dim(&self) -> usize {
        self.entry.dim
    }

    #[inline]
    fn value(&self, x: &TorusPoint, u: f64, v: &FiberVector) -> f64 {
        0.5 * v.norm_sq() - self.entry.potential(x) - self.entry.coupling.g(u)
    }

    fn grad_x(&self, x: &TorusPoint, _u: f64, _v: &FiberVector) -> FiberVector {
        -self.entry.potential_grad(x)
    }

    fn d_u(&self, _x: &TorusPoint, u: f64, _v: &FiberVector) -> f64 {
        -self.entry.coupling.dg(u)
    }

    fn grad_v(&self, _x: &TorusPoint, _u: f64, v: &FiberVector) -> FiberVector {
        *v
    }

    fn hess_v(&self, _x: &TorusPoint, _u: f64, _v: &FiberVector) -> FiberMatrix {
        FiberMatrix::identity(self.entry.dim)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }

    fn lipschitz_u(&self) -> Option<f64> {
        Some(self.entry.coupling.lipschitz())
    }
}
