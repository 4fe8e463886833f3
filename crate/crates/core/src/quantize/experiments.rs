//! Asymptotic experiments comparing quantized norms with their limits.

use rayon::prelude::*;

use super::{ban_norm, fs_potential, hilb_norm, Density, FsNorm, ToricBundleModel};
use crate::error::{Error, Result};
use crate::graded::GradedFamily;
use crate::normspace::{lp_mean, Label};
use crate::toric::{
    convex_envelope, discrete_legendre, mabuchi_dp, Domain, Grid, GridFunction, LatticePolytope,
    LegendreOptions,
};

const NO_COVERAGE: LegendreOptions = LegendreOptions {
    coverage_tol: 1e-6,
    check_coverage: false,
};

/// Fraction of the diameter of `P` kept clear of the boundary when taking
/// sup-deviations of Legendre transforms.
pub const INTERIOR_MARGIN: f64 = 0.05;

/// One level of an experiment: `gap = |value − limit|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentRow {
    pub k: u32,
    pub value: f64,
    pub limit: f64,
    pub gap: f64,
}

impl ExperimentRow {
    fn new(k: u32, value: f64, limit: f64) -> Self {
        Self {
            k,
            value,
            limit,
            gap: (value - limit).abs(),
        }
    }
}

/// Least-squares fit `gap ≈ a/k + b·log(k)/k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub a: f64,
    pub b: f64,
    pub rms_residual: f64,
}

pub fn fit_rate(rows: &[ExperimentRow]) -> Option<RateFit> {
    if rows.len() < 2 {
        return None;
    }
    let basis = |k: u32| {
        let k = k as f64;
        (1.0 / k, k.ln() / k)
    };
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let (u, v) = basis(r.k);
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        r1 += u * r.gap;
        r2 += v * r.gap;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return None;
    }
    let a = (s22 * r1 - s12 * r2) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let ss: f64 = rows
        .iter()
        .map(|r| {
            let (u, v) = basis(r.k);
            (r.gap - a * u - b * v).powi(2)
        })
        .sum();
    Some(RateFit {
        a,
        b,
        rms_residual: (ss / rows.len() as f64).sqrt(),
    })
}

fn check_same_polytope(m0: &ToricBundleModel, m1: &ToricBundleModel) -> Result<()> {
    if m0.polytope() != m1.polytope() {
        return Err(Error::GridMismatch(
            "models live on different polytopes".into(),
        ));
    }
    if m0.symplectic().grid() != m1.symplectic().grid() {
        return Err(Error::GridMismatch(
            "symplectic potentials sampled on different grids".into(),
        ));
    }
    Ok(())
}

fn check_levels(ks: &[u32]) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidParameter(
            "levels must be a nonempty list of positive integers".into(),
        ));
    }
    Ok(())
}

/// `d_p(Ban_k φ0, Ban_k φ1)/k` against the Mabuchi distance `d_p(φ0, φ1)`.
pub fn isometry_experiment(
    m0: &ToricBundleModel,
    m1: &ToricBundleModel,
    p: f64,
    ks: &[u32],
) -> Result<Vec<ExperimentRow>> {
    check_same_polytope(m0, m1)?;
    check_levels(ks)?;
    let limit = mabuchi_dp(m0.symplectic(), m1.symplectic(), p)?;
    ks.par_iter()
        .map(|&k| {
            let (b0, b1) = (ban_norm(m0, k)?, ban_norm(m1, k)?);
            let diffs: Vec<f64> = b0
                .log_weights()
                .iter()
                .zip(b1.log_weights())
                .map(|(a, b)| b - a)
                .collect();
            Ok(ExperimentRow::new(k, lp_mean(&diffs, p) / k as f64, limit))
        })
        .collect()
}

/// `(1/k)·max_α |log‖z^α‖_Ban − log‖z^α‖_Hilb|`.
pub fn bernstein_markov_gap(m: &ToricBundleModel, k: u32, density: &Density) -> Result<f64> {
    let ban = ban_norm(m, k)?;
    let hilb = hilb_norm(m, k, density)?;
    let h = hilb
        .log_diagonal()
        .ok_or(Error::Unsupported("expected a diagonal L² norm"))?;
    Ok(ban
        .log_weights()
        .iter()
        .zip(h)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / k as f64)
}

fn interior_mask(g: &GridFunction, p: &LatticePolytope) -> Vec<bool> {
    let margin = INTERIOR_MARGIN * p.diameter();
    g.grid().points().map(|x| p.depth(&x) >= margin).collect()
}

/// Sup over the interior of `P` of the difference between the symplectic
/// potential of `FS_k(Hilb_k-geodesic at t)` and `(1−t)·g0 + t·g1`.
pub fn geodesic_quantization_experiment(
    m0: &ToricBundleModel,
    m1: &ToricBundleModel,
    k: u32,
    t: f64,
    density: &Density,
) -> Result<f64> {
    check_same_polytope(m0, m1)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "t must lie in [0, 1], got {t}"
        )));
    }
    let (h0, h1) = (hilb_norm(m0, k, density)?, hilb_norm(m1, k, density)?);
    let (w0, w1) = (
        h0.log_diagonal().unwrap_or_default(),
        h1.log_diagonal().unwrap_or_default(),
    );
    let wt: Vec<f64> = w0
        .iter()
        .zip(w1)
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    let ht = crate::normspace::HermitianNorm::diagonal(wt)?;
    let labels: Vec<Label> = m0.polytope().lattice_points(k);
    let wide = |m: &ToricBundleModel| {
        m.potential().grid().axis(0).hi() - m.potential().grid().axis(0).lo()
    };
    let box_grid = if wide(m1) > wide(m0) {
        m1.potential().grid()
    } else {
        m0.potential().grid()
    };
    let phi = fs_potential(
        FsNorm::Hermitian {
            norm: &ht,
            labels: &labels,
        },
        k,
        box_grid,
    )?;
    let g = discrete_legendre(
        &phi,
        m0.symplectic().grid(),
        Domain::Polytope(m0.polytope().clone()),
        NO_COVERAGE,
    )?;
    let target = m0.symplectic().lerp(m1.symplectic(), t)?;
    let mask = interior_mask(&target, m0.polytope());
    Ok(g.values()
        .iter()
        .zip(target.values())
        .zip(mask)
        .filter(|(_, inside)| *inside)
        .fold(0.0f64, |m, ((a, b), _)| m.max((a - b).abs())))
}

/// Log-weights `log‖z^α‖_Ban` of a model at each of `ks`.
pub fn ban_family(m: &ToricBundleModel, ks: &[u32]) -> Result<GradedFamily> {
    perturbed_family(m, ks, 0.0, 0.0)
}

/// Ban log-weights shifted by `c·k + bump·√k`. A constant gauge `c` keeps
/// the family's limit up to a constant; the bump is sublinear and
/// disappears after dividing by `k`.
pub fn perturbed_family(
    m: &ToricBundleModel,
    ks: &[u32],
    c: f64,
    bump: f64,
) -> Result<GradedFamily> {
    check_levels(ks)?;
    let mut fam = GradedFamily::new();
    for &k in ks {
        let ban = ban_norm(m, k)?;
        let shift = c * k as f64 + bump * (k as f64).sqrt();
        fam.insert_level(
            k,
            ban.labels()
                .iter()
                .cloned()
                .zip(ban.log_weights().iter().map(|w| w + shift)),
        );
    }
    Ok(fam)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharOptions {
    pub p: f64,
    /// Two-sided growth bound `|w_k| ≤ c·k`; `None` skips the check.
    pub bound: Option<f64>,
    /// Slack allowed in `w_{k+l}(α+β) ≤ w_k(α) + w_l(β)`, relative to the
    /// largest weight.
    pub subadditivity_tol: f64,
}

impl Default for CharOptions {
    fn default() -> Self {
        Self {
            p: 2.0,
            bound: None,
            subadditivity_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharResult {
    /// Convexified limit `g` on `(1/K)ℤⁿ ∩ P` for the largest level `K`.
    pub limit: GridFunction,
    /// `value = (⨍_α |w_k(α)/k − g(α/k)|^p)^{1/p}`, `limit = 0`.
    pub rows: Vec<ExperimentRow>,
}

/// Recovers the limit of a submultiplicative graded family of diagonal
/// norms. The raw limit at `ξ = β/K` is the infimum of `w_k(kξ)/k` over
/// levels `k` dividing the top level `K` with `kξ` integral; it is then
/// convexified over `P`.
pub fn char_experiment(
    fam: &GradedFamily,
    polytope: &LatticePolytope,
    opts: CharOptions,
) -> Result<CharResult> {
    let ks: Vec<u32> = fam.levels().collect();
    let top = *ks
        .last()
        .ok_or(Error::InvalidParameter("empty family".into()))?;
    let scale = ks
        .iter()
        .flat_map(|k| fam.level(*k).into_iter().flat_map(|m| m.values()))
        .fold(1.0f64, |m, v| m.max(v.abs()));
    fam.check_subadditive(opts.subadditivity_tol * scale)?;
    if let Some(c) = opts.bound {
        fam.check_bounded(c)?;
    }
    for &k in &ks {
        if polytope
            .lattice_points(k)
            .iter()
            .any(|a| fam.level(k).and_then(|m| m.get(a)).is_none())
        {
            return Err(Error::MissingLevel(k));
        }
    }

    let kf = top as f64;
    let grid = Grid::lattice(polytope, top)?;
    let raw: Vec<f64> = grid
        .points()
        .map(|x| {
            let beta: Label = x.iter().map(|t| (t * kf).round() as i64).collect();
            if !polytope.contains_lattice(&beta, top as i64) {
                return f64::NAN;
            }
            ks.iter()
                .filter(|&&k| top % k == 0)
                .filter_map(|&k| {
                    let d = (top / k) as i64;
                    if beta.iter().any(|b| b % d != 0) {
                        return None;
                    }
                    let alpha: Label = beta.iter().map(|b| b / d).collect();
                    fam.level(k)
                        .and_then(|m| m.get(&alpha))
                        .map(|w| w / k as f64)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    // nodes outside P are masked by the envelope; give them a finite value
    let fill = raw
        .iter()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let raw: Vec<f64> = raw
        .into_iter()
        .map(|v| if v.is_finite() { v } else { fill })
        .collect();
    let limit = convex_envelope(&GridFunction::new(
        grid,
        raw,
        Domain::Polytope(polytope.clone()),
    )?)?
    .into_inner();

    let rows = ks
        .iter()
        .map(|&k| {
            let level = fam.level(k).expect("levels checked above");
            let d = (top / k.max(1)) as i64;
            let diffs: Vec<f64> = level
                .iter()
                .map(|(alpha, w)| {
                    let xi: Vec<f64> = alpha.iter().map(|a| *a as f64 / k as f64).collect();
                    let g = if top % k == 0 {
                        let beta: Vec<usize> = alpha
                            .iter()
                            .zip(limit.grid().axes())
                            .map(|(a, ax)| ((a * d) as f64 / kf - ax.lo()) / ax.step())
                            .map(|i| i.round() as usize)
                            .collect();
                        limit.at(&beta)
                    } else {
                        limit.interpolate(&xi)
                    };
                    w / k as f64 - g
                })
                .collect();
            ExperimentRow::new(k, lp_mean(&diffs, opts.p), 0.0)
        })
        .collect();
    Ok(CharResult { limit, rows })
}
