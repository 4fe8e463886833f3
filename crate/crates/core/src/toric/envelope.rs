use crate::error::{Error, Result};

use super::grid::{Axis, Domain, Grid, GridFunction};
use super::legendre::{discrete_legendre, LegendreOptions};
use super::polytope::LatticePolytope;

const NO_COVERAGE: LegendreOptions = LegendreOptions {
    coverage_tol: 0.0,
    check_coverage: false,
};

/// Grid function certified convex on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexGridFunction(GridFunction);

impl ConvexGridFunction {
    /// Accepts `f` when it coincides with its lower convex hull (1-D) or has
    /// nonnegative second differences along the axes and both diagonals (2-D),
    /// up to a relative tolerance of 1e-9.
    pub fn new(f: GridFunction) -> Result<Self> {
        let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-9 * scale;
        let ok = match f.dim() {
            1 => {
                let xs = f.grid().axis(0).nodes();
                let hull = lower_hull_values(&xs, f.values());
                hull.iter().zip(f.values()).all(|(h, v)| v - h <= tol)
            }
            _ => second_differences_nonnegative(&f, tol),
        };
        if ok {
            Ok(Self(f))
        } else {
            Err(Error::InvalidParameter(
                "grid function is not convex".into(),
            ))
        }
    }

    pub fn as_grid_function(&self) -> &GridFunction {
        &self.0
    }

    pub fn into_inner(self) -> GridFunction {
        self.0
    }
}

impl std::ops::Deref for ConvexGridFunction {
    type Target = GridFunction;
    fn deref(&self) -> &GridFunction {
        &self.0
    }
}

fn second_differences_nonnegative(f: &GridFunction, tol: f64) -> bool {
    let g = f.grid();
    let (n0, n1) = (g.axis(0).len(), g.axis(1).len());
    let inside = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i as usize >= n0 || j as usize >= n1 {
            return None;
        }
        let idx = [i as usize, j as usize];
        if let Domain::Polytope(p) = f.domain() {
            let x = g.point(g.flatten(&idx));
            if !p.contains(&x, 1e-12) {
                return None;
            }
        }
        Some(f.at(&idx))
    };
    for j in 0..n1 as isize {
        for i in 0..n0 as isize {
            let Some(c) = inside(i, j) else { continue };
            for (di, dj) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
                if let (Some(a), Some(b)) = (inside(i - di, j - dj), inside(i + di, j + dj)) {
                    if a + b - 2.0 * c < -tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Values of the lower convex hull of the points `(xs[i], f[i])` at `xs`.
fn lower_hull_values(xs: &[f64], f: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or above the chord a→i
            let cross = (xs[b] - xs[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = Vec::with_capacity(xs.len());
    let mut s = 0;
    for (i, &x) in xs.iter().enumerate() {
        while s + 1 < hull.len() - 1 && hull[s + 1] <= i {
            s += 1;
        }
        if hull.len() == 1 {
            out.push(f[i]);
            continue;
        }
        let (a, b) = (hull[s], hull[s + 1]);
        let t = (x - xs[a]) / (xs[b] - xs[a]);
        out.push(if i == a {
            f[a]
        } else if i == b {
            f[b]
        } else {
            (1.0 - t) * f[a] + t * f[b]
        });
    }
    out
}

/// Greatest convex minorant of `f` on its grid.
///
/// Exact in 1-D (lower hull of the samples). In 2-D it is the double
/// discrete Legendre transform through a product grid of slopes spanning the
/// range of the finite differences of `f`, which lies between the true
/// envelope and `f`.
pub fn convex_envelope(f: &GridFunction) -> Result<ConvexGridFunction> {
    match f.dim() {
        1 => {
            let xs = f.grid().axis(0).nodes();
            let env = f.with_values(lower_hull_values(&xs, f.values()))?;
            ConvexGridFunction::new(env)
        }
        _ => {
            let dual = slope_grid(f)?;
            let g = discrete_legendre(f, &dual, Domain::Box, NO_COVERAGE)?;
            let env = discrete_legendre(&g, f.grid(), f.domain().clone(), NO_COVERAGE)?;
            // the biconjugate never exceeds f; clamp rounding
            let vals = env
                .values()
                .iter()
                .zip(f.values())
                .map(|(e, v)| e.min(*v))
                .collect();
            ConvexGridFunction::new(f.with_values(vals)?)
        }
    }
}

fn slope_grid(f: &GridFunction) -> Result<Grid> {
    let g = f.grid();
    let mut axes = Vec::with_capacity(g.dim());
    for a in 0..g.dim() {
        let h = g.axis(a).step();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..g.len() {
            let mut idx = g.unflatten(k);
            if idx[a] + 1 >= g.axis(a).len() {
                continue;
            }
            let v0 = f.values()[k];
            idx[a] += 1;
            let s = (f.values()[g.flatten(&idx)] - v0) / h;
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if hi - lo < 1e-12 {
            lo -= 1.0;
            hi += 1.0;
        }
        axes.push(Axis::new(lo, hi, g.axis(a).len())?);
    }
    Grid::new(axes)
}

/// Envelope `P(φ)`: the largest convex function below `φ` whose gradient
/// lies in `P`, computed through the dual grid over `P` with `resolution`
/// nodes per axis.
pub fn polytope_envelope(
    phi: &GridFunction,
    p: &LatticePolytope,
    resolution: usize,
) -> Result<GridFunction> {
    if phi.dim() != p.dim() {
        return Err(Error::GridMismatch(
            "potential and polytope dimensions differ".into(),
        ));
    }
    let dual = Grid::over_polytope(p, resolution)?;
    let g = discrete_legendre(phi, &dual, Domain::Polytope(p.clone()), NO_COVERAGE)?;
    let env = discrete_legendre(&g, phi.grid(), phi.domain().clone(), NO_COVERAGE)?;
    let vals = env
        .values()
        .iter()
        .zip(phi.values())
        .map(|(e, v)| e.min(*v))
        .collect();
    phi.with_values(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_well_envelope() {
        let grid = Grid::uniform(-2.0, 2.0, 401, 1).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| (x[0] * x[0] - 1.0).powi(2)).unwrap();
        let env = convex_envelope(&f).unwrap();
        for (x, v) in env.grid().points().zip(env.values()) {
            let expect = if x[0].abs() <= 1.0 {
                0.0
            } else {
                (x[0] * x[0] - 1.0).powi(2)
            };
            assert!((v - expect).abs() < 1e-12, "x = {}, {v} vs {expect}", x[0]);
        }
    }

    #[test]
    fn envelope_is_idempotent_1d() {
        let grid = Grid::uniform(-3.0, 3.0, 301, 1).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| {
            (2.0 * x[0]).sin() + 0.2 * x[0] * x[0]
        })
        .unwrap();
        let e1 = convex_envelope(&f).unwrap();
        let e2 = convex_envelope(&e1).unwrap();
        assert!(e1.max_abs_diff(&e2).unwrap() < 1e-12);
    }

    #[test]
    fn envelope_2d_below_and_convex() {
        let grid = Grid::uniform(-1.0, 1.0, 41, 2).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| {
            (x[0] * x[0] - 0.5).powi(2) + x[1] * x[1] + 0.3 * (5.0 * x[1]).cos()
        })
        .unwrap();
        let env = convex_envelope(&f).unwrap();
        assert!(env.values().iter().zip(f.values()).all(|(e, v)| e <= v));
        let again = convex_envelope(&env).unwrap();
        assert!(env.max_abs_diff(&again).unwrap() < 1e-2);
    }

    #[test]
    fn non_convex_rejected() {
        let grid = Grid::uniform(-1.0, 1.0, 11, 1).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| -x[0] * x[0]).unwrap();
        assert!(ConvexGridFunction::new(f).is_err());
    }

    #[test]
    fn polytope_envelope_caps_slopes() {
        // |x| has slopes ±1; the envelope with slopes in [0,1] is max(x, 0) − const-free
        let grid = Grid::uniform(-2.0, 2.0, 401, 1).unwrap();
        let phi = GridFunction::from_fn(grid, Domain::Box, |x| x[0].abs()).unwrap();
        let env = polytope_envelope(&phi, &LatticePolytope::unit_interval(), 201).unwrap();
        for (x, v) in env.grid().points().zip(env.values()) {
            assert!((v - x[0].max(0.0)).abs() < 1e-12);
        }
        let twice = polytope_envelope(&env, &LatticePolytope::unit_interval(), 201).unwrap();
        assert!(env.max_abs_diff(&twice).unwrap() < 1e-12);
    }
}
