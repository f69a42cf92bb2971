use super::dp::{semigroup_march, DpConfig};
use super::field::ActionField;
use super::picard::{picard_iterate, DEFAULT_MAX_OUTER, DEFAULT_TOL_FIX};
use crate::catalog::ContactLagrangian;
use crate::error::Result;
use crate::torus::TorusPoint;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Picard { tol_fix: f64, max_outer: usize },
    Semigroup,
}

impl Method {
    pub fn picard() -> Self {
        Method::Picard {
            tol_fix: DEFAULT_TOL_FIX,
            max_outer: DEFAULT_MAX_OUTER,
        }
    }
}

/// A Lagrangian, a discretisation and a method: everything needed to produce
/// `h_{x0,u0}` for arbitrary base points.
pub struct Solver<'a, L: ?Sized> {
    pub l: &'a L,
    pub cfg: DpConfig,
    pub method: Method,
}

impl<L: ContactLagrangian + ?Sized> Solver<'_, L> {
    pub fn solve(&self, x0: &TorusPoint, u0: f64, horizon: f64) -> Result<ActionField> {
        match self.method {
            Method::Picard { tol_fix, max_outer } => {
                picard_iterate(self.l, x0, u0, horizon, &self.cfg, tol_fix, max_outer).map(|(f, _)| f)
            }
            Method::Semigroup => semigroup_march(self.l, x0, u0, horizon, &self.cfg),
        }
    }
}
