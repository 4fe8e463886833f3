//! Quantization of toric metrics.
//!
//! A metric `h = h₀·e^{−2φ}` on a toric line bundle is described by its
//! potential `φ` in logarithmic coordinates or by the symplectic potential
//! `g = φ*` on the moment polytope `P`. At level `k` the monomials `z^α`,
//! `α ∈ kP ∩ ℤⁿ`, diagonalize both the sup-norm (`log‖z^α‖ = k·g(α/k)`) and
//! the L²-norm against any torus-invariant measure.

mod experiments;

pub use experiments::{
    ban_family, bernstein_markov_gap, char_experiment, fit_rate, geodesic_quantization_experiment,
    isometry_experiment, perturbed_family, CharOptions, CharResult, ExperimentRow, RateFit,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normspace::{DiagonalSupNorm, HermitianNorm, Label};
use crate::toric::{
    discrete_legendre, legendre_at_points, Axis, Domain, Grid, GridFunction, LatticePolytope,
    LegendreOptions,
};

/// Which description of the metric was given; the other is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Authority {
    Potential,
    Symplectic,
}

/// Grid sizes for a model. `half_width = None` picks the box automatically:
/// in 1-D from the boundary slopes of the potential, in 2-D by starting at
/// 12 and growing by 1.25 until the discrete Legendre transform covers `P`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelGrid {
    pub box_nodes: usize,
    pub polytope_nodes: usize,
    pub half_width: Option<f64>,
}

impl ModelGrid {
    pub fn default_for(dim: usize) -> Self {
        let n = if dim == 1 { 2048 } else { 256 };
        Self {
            box_nodes: n,
            polytope_nodes: n,
            half_width: None,
        }
    }
}

pub const DEFAULT_HALF_WIDTH_2D: f64 = 12.0;
const MAX_HALF_WIDTH: f64 = 64.0;

/// A torus-invariant metric on the toric line bundle of `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToricBundleModel {
    polytope: LatticePolytope,
    potential: GridFunction,
    symplectic: GridFunction,
    authority: Authority,
}

impl ToricBundleModel {
    /// From a sampled potential on a box; `g` is its Legendre transform on a
    /// grid over `P` with `polytope_nodes` nodes per axis.
    pub fn from_potential(
        polytope: LatticePolytope,
        potential: GridFunction,
        polytope_nodes: usize,
    ) -> Result<Self> {
        if potential.dim() != polytope.dim() {
            return Err(Error::GridMismatch(
                "potential and polytope dimensions differ".into(),
            ));
        }
        if !matches!(potential.domain(), Domain::Box) {
            return Err(Error::GridMismatch("a potential lives on a box".into()));
        }
        let target = Grid::over_polytope(&polytope, polytope_nodes)?;
        let symplectic = discrete_legendre(
            &potential,
            &target,
            Domain::Polytope(polytope.clone()),
            LegendreOptions::default(),
        )?;
        Ok(Self {
            polytope,
            potential,
            symplectic,
            authority: Authority::Potential,
        })
    }

    /// From a closed-form potential; see [`ModelGrid`] for the box.
    pub fn from_potential_fn(
        polytope: LatticePolytope,
        f: impl Fn(&[f64]) -> f64,
        grid: ModelGrid,
    ) -> Result<Self> {
        let dim = polytope.dim();
        let mut half = match grid.half_width {
            Some(r) => r,
            None if dim == 1 => auto_half_width(&polytope, |x| f(&[x])),
            None => DEFAULT_HALF_WIDTH_2D,
        };
        loop {
            let box_grid = Grid::uniform(-half, half, grid.box_nodes, dim)?;
            let phi = GridFunction::from_fn(box_grid, Domain::Box, &f)?;
            match Self::from_potential(polytope.clone(), phi, grid.polytope_nodes) {
                // in 2-D the box grows until the boundary slopes cover P
                Err(Error::SlopeCoverage { .. })
                    if dim > 1 && grid.half_width.is_none() && half < MAX_HALF_WIDTH =>
                {
                    half = (half * 1.25).min(MAX_HALF_WIDTH);
                }
                other => return other,
            }
        }
    }

    /// From a sampled symplectic potential on `P`; `φ = g*` is sampled on
    /// `box_grid`.
    pub fn from_symplectic(symplectic: GridFunction, box_grid: Grid) -> Result<Self> {
        let Domain::Polytope(polytope) = symplectic.domain().clone() else {
            return Err(Error::GridMismatch(
                "a symplectic potential lives on a polytope".into(),
            ));
        };
        let potential = discrete_legendre(
            &symplectic,
            &box_grid,
            Domain::Box,
            LegendreOptions {
                check_coverage: false,
                ..Default::default()
            },
        )?;
        Ok(Self {
            polytope,
            potential,
            symplectic,
            authority: Authority::Symplectic,
        })
    }

    /// From a closed-form symplectic potential. The box defaults to the
    /// larger of 12 and 1.1 times the steepest chord slope of `g`.
    pub fn from_symplectic_fn(
        polytope: LatticePolytope,
        g: impl Fn(&[f64]) -> f64,
        grid: ModelGrid,
    ) -> Result<Self> {
        let pgrid = Grid::over_polytope(&polytope, grid.polytope_nodes)?;
        let sym = GridFunction::from_fn(pgrid, Domain::Polytope(polytope.clone()), g)?;
        let half = grid
            .half_width
            .unwrap_or_else(|| (1.1 * steepest_slope(&sym)).max(12.0));
        let box_grid = Grid::uniform(-half, half, grid.box_nodes, polytope.dim())?;
        Self::from_symplectic(sym, box_grid)
    }

    pub fn polytope(&self) -> &LatticePolytope {
        &self.polytope
    }

    pub fn potential(&self) -> &GridFunction {
        &self.potential
    }

    pub fn symplectic(&self) -> &GridFunction {
        &self.symplectic
    }

    pub fn authority(&self) -> Authority {
        self.authority
    }

    /// `φ ↦ φ + c`
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Ok(Self {
            polytope: self.polytope.clone(),
            potential: self.potential.map(|v| v + c)?,
            symplectic: self.symplectic.map(|v| v - c)?,
            authority: self.authority,
        })
    }
}

/// Grows a symmetric box `[−R, R]`, `R = 4·1.25ⁿ ≤ 64`, until the slopes of
/// the potential at both ends come within `1e-9·width(P)` of the ends of
/// `P` (or overshoot them).
fn auto_half_width(p: &LatticePolytope, f: impl Fn(f64) -> f64) -> f64 {
    let (a, b) = p.bounding_box()[0];
    let w = b - a;
    let mut r = 4.0f64;
    loop {
        let d = 1e-4 * r;
        let left = (f(-r + d) - f(-r)) / d;
        let right = (f(r) - f(r - d)) / d;
        let left_ok = left <= a + 1e-9 * w;
        let right_ok = right >= b - 1e-9 * w;
        if (left_ok && right_ok) || r >= MAX_HALF_WIDTH {
            return r.min(MAX_HALF_WIDTH);
        }
        r *= 1.25;
    }
}

fn steepest_slope(g: &GridFunction) -> f64 {
    let grid = g.grid();
    let mut s = 0.0f64;
    for k in 0..grid.len() {
        let idx = grid.unflatten(k);
        for a in 0..grid.dim() {
            if idx[a] + 1 >= grid.axis(a).len() {
                continue;
            }
            let mut next = idx.clone();
            next[a] += 1;
            let d = (g.values()[grid.flatten(&next)] - g.values()[k]) / grid.axis(a).step();
            if d.is_finite() {
                s = s.max(d.abs());
            }
        }
    }
    s
}

/// Sup-norm of the monomials at level `k`: `log‖z^α‖ = sup_x ⟨α,x⟩ − k·φ(x)`.
pub fn ban_norm(m: &ToricBundleModel, k: u32) -> Result<DiagonalSupNorm> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let labels = m.polytope.lattice_points(k);
    let kf = k as f64;
    let pts: Vec<Vec<f64>> = labels
        .iter()
        .map(|a| a.iter().map(|&x| x as f64 / kf).collect())
        .collect();
    let g = legendre_at_points(&m.potential, &pts, LegendreOptions::default())?;
    DiagonalSupNorm::new(labels, g.into_iter().map(|v| kf * v).collect())
}

/// Torus-invariant reference measure on the box of a model.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Lebesgue,
    /// `½·sech²(x)` per axis, probability density of the Fubini–Study
    /// volume on each ℙ¹ factor in logarithmic coordinates.
    FubiniStudy,
    /// Sampled nonnegative density, zero outside its grid.
    Grid(GridFunction),
}

impl Density {
    fn log_values(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Density::Lebesgue => Ok(vec![0.0; grid.len()]),
            Density::FubiniStudy => Ok(grid
                .points()
                .map(|x| {
                    x.iter()
                        .map(|t| {
                            std::f64::consts::LN_2
                                - 2.0 * (t.abs() + (-2.0 * t.abs()).exp().ln_1p())
                        })
                        .sum()
                })
                .collect()),
            Density::Grid(rho) => {
                if rho.dim() != grid.dim() {
                    return Err(Error::GridMismatch(
                        "density and potential dimensions differ".into(),
                    ));
                }
                if rho.values().iter().any(|v| *v < 0.0) {
                    return Err(Error::InvalidParameter(
                        "density must be nonnegative".into(),
                    ));
                }
                let inside = |x: &[f64]| {
                    x.iter()
                        .zip(rho.grid().axes())
                        .all(|(t, a)| *t >= a.lo() - 1e-12 && *t <= a.hi() + 1e-12)
                };
                Ok(grid
                    .points()
                    .map(|x| {
                        if inside(&x) {
                            rho.interpolate(&x).max(0.0).ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Log trapezoid weights of a box grid.
fn log_box_weights(grid: &Grid) -> Vec<f64> {
    let per_axis: Vec<Vec<f64>> = grid
        .axes()
        .iter()
        .map(|a: &Axis| {
            let h = a.step().ln();
            (0..a.len())
                .map(|i| {
                    if i == 0 || i + 1 == a.len() {
                        h - std::f64::consts::LN_2
                    } else {
                        h
                    }
                })
                .collect()
        })
        .collect();
    (0..grid.len())
        .map(|k| {
            grid.unflatten(k)
                .iter()
                .enumerate()
                .map(|(a, &i)| per_axis[a][i])
                .sum()
        })
        .collect()
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// L²-norm of the monomials at level `k` against `density`, as a diagonal
/// Hermitian norm: `G(α) = ∫ e^{2(⟨α,x⟩ − kφ(x))}·ρ(x) dx` over the box.
pub fn hilb_norm(m: &ToricBundleModel, k: u32, density: &Density) -> Result<HermitianNorm> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let grid = m.potential.grid();
    let log_rho = density.log_values(grid)?;
    let log_w = log_box_weights(grid);
    let base: Vec<f64> = log_rho.iter().zip(&log_w).map(|(r, w)| r + w).collect();
    if log_sum_exp(base.iter().cloned()) == f64::NEG_INFINITY {
        return Err(Error::ZeroMass);
    }
    let kf = k as f64;
    let points: Vec<Vec<f64>> = grid.points().collect();
    let phi = m.potential.values();
    let labels = m.polytope.lattice_points(k);
    let log_norms: Vec<f64> = labels
        .par_iter()
        .map(|alpha| {
            let log_g = log_sum_exp(points.iter().zip(phi).zip(&base).map(|((x, f), b)| {
                let ax: f64 = alpha.iter().zip(x).map(|(a, t)| *a as f64 * t).sum();
                2.0 * (ax - kf * f) + b
            }));
            0.5 * log_g
        })
        .collect();
    if log_norms.iter().any(|v| !v.is_finite()) {
        return Err(Error::ZeroMass);
    }
    HermitianNorm::diagonal(log_norms)
}

/// Sup- and L²-norms at one level over the same labels.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumNorms {
    pub k: u32,
    pub ban: DiagonalSupNorm,
    pub hilb: HermitianNorm,
}

pub fn quantum_norms(m: &ToricBundleModel, k: u32, density: &Density) -> Result<QuantumNorms> {
    Ok(QuantumNorms {
        k,
        ban: ban_norm(m, k)?,
        hilb: hilb_norm(m, k, density)?,
    })
}

/// A diagonal norm on the monomials of level `k`.
#[derive(Clone, Copy, Debug)]
pub enum FsNorm<'a> {
    Sup(&'a DiagonalSupNorm),
    Hermitian {
        norm: &'a HermitianNorm,
        labels: &'a [Label],
    },
}

/// Fubini–Study potential of a diagonal norm at level `k`, sampled on `grid`:
///
/// * sup-norms: `(1/k)·log Σ_α exp(⟨α,x⟩ − w_α)`;
/// * Hermitian norms: `(1/2k)·log Σ_α exp(2(⟨α,x⟩ − w_α))`.
pub fn fs_potential(n: FsNorm<'_>, k: u32, grid: &Grid) -> Result<GridFunction> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (labels, weights, power): (&[Label], &[f64], f64) = match n {
        FsNorm::Sup(d) => (d.labels(), d.log_weights(), 1.0),
        FsNorm::Hermitian { norm, labels } => {
            let w = norm.log_diagonal().ok_or(Error::Unsupported(
                "Fubini–Study potentials need a diagonal Hermitian norm",
            ))?;
            if w.len() != labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: labels.len(),
                    found: w.len(),
                });
            }
            (labels, w, 2.0)
        }
    };
    if labels.is_empty() {
        return Err(Error::InvalidParameter("empty label set".into()));
    }
    if labels.iter().any(|a| a.len() != grid.dim()) {
        return Err(Error::GridMismatch(
            "label and grid dimensions differ".into(),
        ));
    }
    let kf = k as f64;
    let points: Vec<Vec<f64>> = grid.points().collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|x| {
            let lse = log_sum_exp(labels.iter().zip(weights).map(|(a, w)| {
                let ax: f64 = a.iter().zip(x).map(|(ai, t)| *ai as f64 * t).sum();
                power * (ax - w)
            }));
            lse / (power * kf)
        })
        .collect();
    GridFunction::new(grid.clone(), values, Domain::Box)
}

#[cfg(test)]
mod tests;
