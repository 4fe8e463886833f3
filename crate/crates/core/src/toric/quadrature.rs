//! Integration over a polytope of functions sampled on a tensor grid.
//!
//! Each grid cell is clipped against `P`; the piecewise (bi)linear
//! interpolant is integrated exactly on the clipped piece. Weights therefore
//! sum to `vol P` up to rounding, and linear functions integrate exactly.

use super::grid::Grid;
use super::polytope::LatticePolytope;

/// Node weights `w` with `∫_P f ≈ Σ w_k f(x_k)` for the (bi)linear
/// interpolant of `f` on `grid`.
pub fn quadrature_weights(grid: &Grid, p: &LatticePolytope) -> Vec<f64> {
    match grid.dim() {
        1 => weights_1d(grid, p),
        _ => weights_2d(grid, p),
    }
}

fn weights_1d(grid: &Grid, p: &LatticePolytope) -> Vec<f64> {
    let (a, b) = p.bounding_box()[0];
    let ax = grid.axis(0);
    let mut w = vec![0.0; ax.len()];
    for i in 0..ax.len() - 1 {
        let (x0, x1) = (ax.node(i), ax.node(i + 1));
        let (c, d) = (x0.max(a), x1.min(b));
        if d <= c {
            continue;
        }
        let h = x1 - x0;
        // ∫_c^d (x1 − x)/h and ∫_c^d (x − x0)/h
        w[i] += ((x1 - c).powi(2) - (x1 - d).powi(2)) / (2.0 * h);
        w[i + 1] += ((d - x0).powi(2) - (c - x0).powi(2)) / (2.0 * h);
    }
    w
}

fn weights_2d(grid: &Grid, p: &LatticePolytope) -> Vec<f64> {
    let (ax, ay) = (grid.axis(0), grid.axis(1));
    let (hx, hy) = (ax.step(), ay.step());
    let mut w = vec![0.0; grid.len()];
    let planes: Vec<([f64; 2], f64)> = p
        .halfspaces()
        .iter()
        .map(|h| {
            (
                [h.normal[0] as f64, h.normal[1] as f64],
                super::polytope::to_f64(h.bound),
            )
        })
        .collect();
    for j in 0..ay.len() - 1 {
        for i in 0..ax.len() - 1 {
            let (x0, y0) = (ax.node(i), ay.node(j));
            let (x1, y1) = (ax.node(i + 1), ay.node(j + 1));
            let mut poly = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
            for (n, b) in &planes {
                poly = clip(&poly, *n, *b);
                if poly.len() < 3 {
                    break;
                }
            }
            if poly.len() < 3 {
                continue;
            }
            let basis = |q: [f64; 2]| {
                let u = (q[0] - x0) / hx;
                let v = (q[1] - y0) / hy;
                [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v]
            };
            let mut acc = [0.0; 4];
            for t in 1..poly.len() - 1 {
                let (a, b, c) = (poly[0], poly[t], poly[t + 1]);
                let area =
                    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
                // edge-midpoint rule, exact for quadratics
                for m in [mid(a, b), mid(b, c), mid(c, a)] {
                    let phi = basis(m);
                    for (s, f) in acc.iter_mut().zip(phi) {
                        *s += area / 3.0 * f;
                    }
                }
            }
            let idx = [
                grid.flatten(&[i, j]),
                grid.flatten(&[i + 1, j]),
                grid.flatten(&[i, j + 1]),
                grid.flatten(&[i + 1, j + 1]),
            ];
            for (k, s) in idx.iter().zip(acc) {
                w[*k] += s;
            }
        }
    }
    w
}

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Sutherland–Hodgman clip of a convex polygon to `n·x ≤ b`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], b: f64) -> Vec<[f64; 2]> {
    let side = |q: [f64; 2]| b - (n[0] * q[0] + n[1] * q[1]);
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// `(1/vol P)·∫_P f` for samples on `grid`.
pub fn mean_over(grid: &Grid, p: &LatticePolytope, values: &[f64]) -> f64 {
    let w = quadrature_weights(grid, p);
    w.iter().zip(values).map(|(a, b)| a * b).sum::<f64>() / p.volume()
}
