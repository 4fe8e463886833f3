//! Discrete Legendre transform `f*(ξ) = max_x ⟨ξ,x⟩ − f(x)` over grid nodes.
//!
//! The maximum over a tensor grid factorizes axis by axis, so the 2-D
//! transform is two passes of a 1-D kernel and is exact for arbitrary input.
//! The kernel is the linear-time slope merge when a row is convex and a
//! divide-and-conquer search over the (monotone) argmax otherwise.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::grid::{Domain, Grid, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendreOptions {
    /// Slack allowed between a target slope and the boundary slope of the
    /// source box before coverage is reported as violated.
    pub coverage_tol: f64,
    pub check_coverage: bool,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            coverage_tol: 1e-6,
            check_coverage: true,
        }
    }
}

fn is_convex(xs: &[f64], f: &[f64]) -> bool {
    if f.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..f.len() - 1 {
        let s = (f[i + 1] - f[i]) / (xs[i + 1] - xs[i]);
        if s < prev - 1e-12 * scale / (xs[i + 1] - xs[i]) {
            return false;
        }
        prev = s;
    }
    true
}

/// 1-D transform at ascending `targets`. Values of `f` may be `+∞` (node
/// excluded). Returns values and argmax node indices.
pub fn legendre_1d(xs: &[f64], f: &[f64], targets: &[f64]) -> (Vec<f64>, Vec<usize>) {
    debug_assert_eq!(xs.len(), f.len());
    let mut vals = vec![0.0; targets.len()];
    let mut args = vec![0usize; targets.len()];
    if is_convex(xs, f) {
        merge_kernel(xs, f, targets, &mut vals, &mut args);
    } else {
        dc_kernel(
            xs,
            f,
            targets,
            0,
            targets.len(),
            0,
            xs.len() - 1,
            &mut vals,
            &mut args,
        );
    }
    (vals, args)
}

fn merge_kernel(xs: &[f64], f: &[f64], targets: &[f64], vals: &mut [f64], args: &mut [usize]) {
    let mut i = 0;
    for (j, &xi) in targets.iter().enumerate() {
        // advance while the chord slope to the next node is below ξ
        while i + 1 < xs.len() && (f[i + 1] - f[i]) / (xs[i + 1] - xs[i]) < xi {
            i += 1;
        }
        vals[j] = xi * xs[i] - f[i];
        args[j] = i;
    }
}

#[allow(clippy::too_many_arguments)]
fn dc_kernel(
    xs: &[f64],
    f: &[f64],
    targets: &[f64],
    t_lo: usize,
    t_hi: usize,
    n_lo: usize,
    n_hi: usize,
    vals: &mut [f64],
    args: &mut [usize],
) {
    if t_lo >= t_hi {
        return;
    }
    let mid = (t_lo + t_hi) / 2;
    let xi = targets[mid];
    let (mut best, mut arg) = (f64::NEG_INFINITY, n_lo);
    for i in n_lo..=n_hi {
        let v = xi * xs[i] - f[i];
        if v > best {
            best = v;
            arg = i;
        }
    }
    vals[mid] = best;
    args[mid] = arg;
    dc_kernel(xs, f, targets, t_lo, mid, n_lo, arg, vals, args);
    dc_kernel(xs, f, targets, mid + 1, t_hi, arg, n_hi, vals, args);
}

fn masked_values(f: &GridFunction) -> Vec<f64> {
    match f.domain() {
        Domain::Box => f.values().to_vec(),
        Domain::Polytope(p) => {
            let tol = 1e-12 * p.diameter().max(1.0);
            f.grid()
                .points()
                .zip(f.values())
                .map(|(x, &v)| {
                    if p.contains(&x, tol) {
                        v
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        }
    }
}

/// Transform of `f` sampled on the nodes of `target`.
///
/// When `f` lives on a box and coverage checking is on, a target slope that
/// the box cannot realize (its argmax sits on a box face while the slope
/// points further out) yields [`Error::SlopeCoverage`]. Targets outside a
/// polytope target domain are not checked.
pub fn discrete_legendre(
    f: &GridFunction,
    target: &Grid,
    target_domain: Domain,
    opts: LegendreOptions,
) -> Result<GridFunction> {
    if f.dim() != target.dim() {
        return Err(Error::GridMismatch(
            "source and target dimensions differ".into(),
        ));
    }
    let axes: Vec<Vec<f64>> = target.axes().iter().map(|a| a.nodes()).collect();
    let (out, args) = transform(f, &axes);
    if opts.check_coverage && matches!(f.domain(), Domain::Box) {
        let vals = masked_values(f);
        for (k, arg) in args.iter().enumerate() {
            let xi = target.point(k);
            if let Domain::Polytope(p) = &target_domain {
                if !p.contains(&xi, 1e-12) {
                    continue;
                }
            }
            check_coverage(f.grid(), &vals, &xi, arg, opts.coverage_tol)?;
        }
    }
    GridFunction::new(target.clone(), out, target_domain)
}

/// Transform of `f` at arbitrary slopes `points`, in the given order.
///
/// The slopes are arranged on the product of their distinct coordinates, so
/// the cost is that of one product-grid transform.
pub fn legendre_at_points(
    f: &GridFunction,
    points: &[Vec<f64>],
    opts: LegendreOptions,
) -> Result<Vec<f64>> {
    let dim = f.dim();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::GridMismatch(
            "slope dimension differs from the grid".into(),
        ));
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let mut c: Vec<f64> = points.iter().map(|p| p[a]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    let (out, args) = transform(f, &axes);
    let locate = |a: usize, x: f64| {
        axes[a]
            .binary_search_by(|y| y.total_cmp(&x))
            .expect("coordinate present")
    };
    let vals = masked_values(f);
    let check = opts.check_coverage && matches!(f.domain(), Domain::Box);
    points
        .iter()
        .map(|p| {
            let k = match dim {
                1 => locate(0, p[0]),
                _ => locate(0, p[0]) + axes[0].len() * locate(1, p[1]),
            };
            if check {
                check_coverage(f.grid(), &vals, p, &args[k], opts.coverage_tol)?;
            }
            Ok(out[k])
        })
        .collect()
}

/// Product-grid transform; targets are ascending per axis, output has axis 0
/// varying fastest. Also returns the argmax multi-index per target.
fn transform(f: &GridFunction, targets: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<usize>>) {
    let vals = masked_values(f);
    let src = f.grid();
    match f.dim() {
        1 => {
            let (v, a) = legendre_1d(&src.axis(0).nodes(), &vals, &targets[0]);
            (v, a.into_iter().map(|i| vec![i]).collect())
        }
        _ => transform_2d(src, &vals, &targets[0], &targets[1]),
    }
}

fn transform_2d(src: &Grid, vals: &[f64], t0: &[f64], t1: &[f64]) -> (Vec<f64>, Vec<Vec<usize>>) {
    let (n0, n1) = (src.axis(0).len(), src.axis(1).len());
    let x0 = src.axis(0).nodes();
    let x1 = src.axis(1).nodes();
    let m0 = t0.len();
    // pass 1: along axis 0 for each source row i1
    let pass1: Vec<(Vec<f64>, Vec<usize>)> = (0..n1)
        .into_par_iter()
        .map(|i1| legendre_1d(&x0, &vals[i1 * n0..(i1 + 1) * n0], t0))
        .collect();
    // pass 2: along axis 1 for each target column j0
    let pass2: Vec<(Vec<f64>, Vec<usize>)> = (0..m0)
        .into_par_iter()
        .map(|j0| {
            let col: Vec<f64> = pass1
                .iter()
                .map(|(h, _)| {
                    if h[j0].is_finite() {
                        -h[j0]
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            legendre_1d(&x1, &col, t1)
        })
        .collect();
    let m1 = t1.len();
    let mut out = vec![0.0; m0 * m1];
    let mut args = vec![Vec::new(); m0 * m1];
    for (j0, (v, a1)) in pass2.iter().enumerate() {
        for j1 in 0..m1 {
            let i1 = a1[j1];
            out[j0 + m0 * j1] = v[j1];
            args[j0 + m0 * j1] = vec![pass1[i1].1[j0], i1];
        }
    }
    (out, args)
}

fn check_coverage(src: &Grid, vals: &[f64], xi: &[f64], arg: &[usize], tol: f64) -> Result<()> {
    for axis in 0..src.dim() {
        let n = src.axis(axis).len();
        let h = src.axis(axis).step();
        let at = |i: usize| {
            let mut idx = arg.to_vec();
            idx[axis] = i;
            vals[src.flatten(&idx)]
        };
        let violation = |s: f64| Error::SlopeCoverage {
            target: xi.to_vec(),
            axis,
            boundary_slope: s,
        };
        if arg[axis] == 0 {
            let s = (at(1) - at(0)) / h;
            if s.is_finite() && xi[axis] < s - tol {
                return Err(violation(s));
            }
        }
        if arg[axis] == n - 1 {
            let s = (at(n - 1) - at(n - 2)) / h;
            if s.is_finite() && xi[axis] > s + tol {
                return Err(violation(s));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::polytope::LatticePolytope;

    fn brute(xs: &[f64], f: &[f64], xi: f64) -> f64 {
        xs.iter()
            .zip(f)
            .map(|(x, v)| xi * x - v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn kernels_agree_with_brute_force() {
        let xs: Vec<f64> = (0..101).map(|i| -2.0 + 0.04 * i as f64).collect();
        let convex: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let wavy: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin() + 0.3 * x * x).collect();
        let targets: Vec<f64> = (0..57).map(|j| -5.0 + 10.0 * j as f64 / 56.0).collect();
        for f in [&convex, &wavy] {
            let (v, a) = legendre_1d(&xs, f, &targets);
            for (j, xi) in targets.iter().enumerate() {
                assert!((v[j] - brute(&xs, f, *xi)).abs() < 1e-12);
                assert!((v[j] - (xi * xs[a[j]] - f[a[j]])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_is_self_dual() {
        let grid = Grid::uniform(-6.0, 6.0, 1201, 1).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| 0.5 * x[0] * x[0]).unwrap();
        let target = Grid::uniform(-3.0, 3.0, 61, 1).unwrap();
        let g = discrete_legendre(&f, &target, Domain::Box, LegendreOptions::default()).unwrap();
        for (xi, v) in target.points().zip(g.values()) {
            assert!((v - 0.5 * xi[0] * xi[0]).abs() < 1e-4);
        }
    }

    #[test]
    fn coverage_violation_detected() {
        let grid = Grid::uniform(-1.0, 1.0, 101, 1).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| 0.5 * x[0] * x[0]).unwrap();
        let target = Grid::uniform(-3.0, 3.0, 7, 1).unwrap();
        let err =
            discrete_legendre(&f, &target, Domain::Box, LegendreOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SlopeCoverage { .. }));
        let relaxed = LegendreOptions {
            check_coverage: false,
            ..Default::default()
        };
        assert!(discrete_legendre(&f, &target, Domain::Box, relaxed).is_ok());
    }

    #[test]
    fn scattered_points_match_grid_transform() {
        let grid = Grid::uniform(-4.0, 4.0, 201, 2).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| {
            (1.0 + (2.0 * x[0]).exp() + (2.0 * x[1]).exp()).ln() / 2.0
        })
        .unwrap();
        let pts = vec![
            vec![0.5, 0.25],
            vec![0.0, 0.0],
            vec![0.25, 0.25],
            vec![0.5, 0.0],
        ];
        let at = legendre_at_points(
            &f,
            &pts,
            LegendreOptions {
                check_coverage: false,
                ..Default::default()
            },
        )
        .unwrap();
        for (p, v) in pts.iter().zip(&at) {
            let brute = f
                .grid()
                .points()
                .zip(f.values())
                .map(|(x, fx)| p[0] * x[0] + p[1] * x[1] - fx)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((v - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn two_d_matches_brute_force_on_triangle() {
        let p = LatticePolytope::unit_triangle();
        let grid = Grid::over_polytope(&p, 21).unwrap();
        let g = GridFunction::from_fn(grid.clone(), Domain::Polytope(p.clone()), |x| {
            (x[0] - 0.2).powi(2) + (x[0] * 3.0).cos() * x[1]
        })
        .unwrap();
        let target = Grid::uniform(-3.0, 3.0, 13, 2).unwrap();
        let phi = discrete_legendre(&g, &target, Domain::Box, LegendreOptions::default()).unwrap();
        for (k, xi) in target.points().enumerate() {
            let best = grid
                .points()
                .zip(g.values())
                .filter(|(x, _)| p.contains(x, 1e-12))
                .map(|(x, v)| xi[0] * x[0] + xi[1] * x[1] - v)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((phi.values()[k] - best).abs() < 1e-12);
        }
    }
}
