use super::field::ActionField;
use super::solver::Solver;
use crate::catalog::ContactLagrangian;
use crate::error::{Error, Result};
use crate::par;
use crate::torus::TorusPoint;

/// `max_x |h(x, t + s) - min_y h_{y, h(y, t)}(x, s)|` with `t + s` the horizon
/// of `field`. Base points `y` run over every `stride`-th grid node per axis;
/// nodes unreachable on either side are skipped.
pub fn markov_defect<L: ContactLagrangian + ?Sized>(
    solver: &Solver<'_, L>,
    field: &ActionField,
    t: f64,
    stride: usize,
) -> Result<f64> {
    let s = field.horizon - t;
    let k_t = field
        .layer_at(t)
        .ok_or_else(|| Error::InvalidInput(format!("t = {t} is not a layer time")))?;
    if k_t >= field.layer_count() {
        return Err(Error::InvalidInput(format!("need s > 0, got t = {t} at the horizon")));
    }
    if solver.cfg.grid()? != field.grid || (solver.cfg.dt - field.dt).abs() > 0.0 {
        return Err(Error::InvalidInput("solver and field discretisations differ".into()));
    }
    let stride = stride.max(1);
    let grid = field.grid;
    let bases: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.axes(i)[..grid.dim].iter().all(|a| a % stride == 0))
        .filter(|&i| field.value(k_t, i).is_finite())
        .collect();
    let fresh: Vec<Result<Option<Vec<f64>>>> = par::map_indexed(bases.len(), |j| {
        let y = grid.point(bases[j]);
        match solver.solve(&y, field.value(k_t, bases[j]), s) {
            Ok(f) => Ok(Some(f.layer(f.layer_count()).to_vec())),
            Err(Error::InfeasibleGrid(_)) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut rhs = vec![f64::INFINITY; grid.len()];
    for layer in fresh {
        if let Some(layer) = layer? {
            for (r, v) in rhs.iter_mut().zip(layer) {
                *r = r.min(v);
            }
        }
    }
    let lhs = field.layer(field.layer_count());
    Ok(lhs
        .iter()
        .zip(&rhs)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `B^t(x, u; y) = h_{x,u}(y, t) - u`.
pub fn triangle_b<L: ContactLagrangian + ?Sized>(
    solver: &Solver<'_, L>,
    x: &TorusPoint,
    u: f64,
    y: &TorusPoint,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let f = solver.solve(x, u, t)?;
    Ok(f.sample_layer(f.layer_count(), y) - u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{DpConfig, Method};
    use crate::catalog::CatalogEntry;
    use crate::torus::{wrap, FiberVector};

    #[test]
    fn u_independent_semigroup_is_nearly_associative() {
        let l = CatalogEntry::classical(1, 0.3).unwrap().lagrangian();
        let x0 = wrap(&[0.0]).unwrap();
        let cfg = DpConfig::new(1, 100, 0.025, 0.0, 0.5);
        let solver = Solver { l: &l, cfg, method: Method::Semigroup };
        let f = solver.solve(&x0, 0.0, 0.5).unwrap();
        let d = markov_defect(&solver, &f, 0.25, 1).unwrap();
        assert!(d < 2e-3, "defect {d}");
    }

    #[test]
    fn free_particle_b_is_u_independent() {
        let l = CatalogEntry::classical(1, 0.0).unwrap().lagrangian();
        let cfg = DpConfig::new(1, 200, 0.01, 0.0, 1.0);
        let solver = Solver { l: &l, cfg, method: Method::picard() };
        let x = wrap(&[0.0]).unwrap();
        let y = wrap(&[0.3]).unwrap();
        let a = triangle_b(&solver, &x, 0.0, &y, 1.0).unwrap();
        let b = triangle_b(&solver, &x, 3.0, &y, 1.0).unwrap();
        assert!((a - 0.045).abs() < 2e-3);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn one_step_b_is_stationary_cost() {
        let l = CatalogEntry::discounted(1, 0.2, 0.5).unwrap().lagrangian();
        let cfg = DpConfig::new(1, 50, 0.02, 0.5, 1.0);
        let solver = Solver { l: &l, cfg, method: Method::Semigroup };
        let x = wrap(&[0.2]).unwrap();
        let b = triangle_b(&solver, &x, 0.7, &x, 0.02).unwrap();
        let expect = 0.02 * l.value(&x, 0.7, &FiberVector::zeros(1));
        assert!((b - expect).abs() < 1e-15);
    }
}
