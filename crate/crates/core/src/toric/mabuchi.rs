use crate::error::{Error, Result};

use super::grid::{Domain, GridFunction};
use super::quadrature::quadrature_weights;

fn weights_for(g0: &GridFunction, g1: &GridFunction) -> Result<Vec<f64>> {
    if g0.grid() != g1.grid() {
        return Err(Error::GridMismatch(
            "symplectic potentials on different grids".into(),
        ));
    }
    match (g0.domain(), g1.domain()) {
        (Domain::Polytope(p), Domain::Polytope(q)) if p == q => {
            let vol = p.volume();
            Ok(quadrature_weights(g0.grid(), p)
                .into_iter()
                .map(|w| w / vol)
                .collect())
        }
        _ => Err(Error::GridMismatch(
            "symplectic potentials must live on the same polytope".into(),
        )),
    }
}

/// Toric Mabuchi distance `(⨍_P |g1 − g0|^p)^{1/p}` between metrics given
/// by their symplectic potentials; `p = ∞` gives the sup over `P`.
pub fn mabuchi_dp(g0: &GridFunction, g1: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p must be at least 1, got {p}"
        )));
    }
    let w = weights_for(g0, g1)?;
    let diffs = g0
        .values()
        .iter()
        .zip(g1.values())
        .map(|(a, b)| (b - a).abs());
    if p.is_infinite() {
        return Ok(diffs
            .zip(&w)
            .filter(|(_, w)| **w > 0.0)
            .map(|(d, _)| d)
            .fold(0.0, f64::max));
    }
    Ok(diffs
        .zip(&w)
        .map(|(d, w)| w * d.powf(p))
        .sum::<f64>()
        .powf(1.0 / p))
}

/// Energy difference `E(φ1) − E(φ0) = ⨍_P (g0 − g1)` in the convention
/// where the energy increases with the potential; the sign flips with the
/// Legendre transform.
pub fn energy_difference(g0: &GridFunction, g1: &GridFunction) -> Result<f64> {
    let w = weights_for(g0, g1)?;
    Ok(g0
        .values()
        .iter()
        .zip(g1.values())
        .zip(&w)
        .map(|((a, b), w)| w * (a - b))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::grid::Grid;
    use crate::toric::polytope::LatticePolytope;

    fn on_interval(f: impl Fn(f64) -> f64) -> GridFunction {
        let p = LatticePolytope::unit_interval();
        let grid = Grid::over_polytope(&p, 2001).unwrap();
        GridFunction::from_fn(grid, Domain::Polytope(p), |x| f(x[0])).unwrap()
    }

    #[test]
    fn affine_shift_distances() {
        let g0 = on_interval(|x| x * x);
        let g1 = on_interval(|x| x * x + x);
        assert!((mabuchi_dp(&g0, &g1, 1.0).unwrap() - 0.5).abs() < 1e-6);
        assert!((mabuchi_dp(&g0, &g1, 2.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert!((mabuchi_dp(&g0, &g1, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
        assert!((energy_difference(&g0, &g1).unwrap() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_small_p_and_mismatched_grids() {
        let g0 = on_interval(|x| x);
        assert!(mabuchi_dp(&g0, &g0, 0.5).is_err());
        let p = LatticePolytope::unit_interval();
        let other = GridFunction::from_fn(
            Grid::over_polytope(&p, 11).unwrap(),
            Domain::Polytope(p),
            |x| x[0],
        )
        .unwrap();
        assert!(mabuchi_dp(&g0, &other, 1.0).is_err());
    }
}
