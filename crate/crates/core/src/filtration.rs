//! Filtrations of section spaces: jumping numbers and measures, rays of
//! norms and the spectral measure of a monomial filtration on a toric model.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::GradedFamily;
use crate::normspace::{DiagonalSupNorm, HermitianNorm, Label};
use crate::quantize::ToricBundleModel;
use crate::toric::{
    convex_envelope, pushforward, pushforward_moments, Domain, Grid, GridFunction, LatticePolytope,
    Measure1D,
};

/// Jump values `e_k(α)` of a filtration by monomials: `z^α ∈ F^t` iff
/// `t ≤ e_k(α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FiltrationSpec {
    /// `e_k(α) = ⟨α, vector⟩ + offset·k`.
    MonomialLinear {
        vector: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// Per-level tables of `(α, e_k(α))`.
    Explicit {
        #[serde(with = "level_keys")]
        levels: BTreeMap<u32, Vec<(Label, f64)>>,
    },
}

/// JSON object keys are strings; levels are written as `"k"`.
mod level_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::normspace::Label;

    type Table = BTreeMap<u32, Vec<(Label, f64)>>;

    pub fn serialize<S: Serializer>(t: &Table, s: S) -> Result<S::Ok, S::Error> {
        t.iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Table, D::Error> {
        BTreeMap::<String, Vec<(Label, f64)>>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.trim().parse::<u32>().map(|k| (k, v)).map_err(|_| {
                    D::Error::custom(format!("level key {k:?} is not a nonnegative integer"))
                })
            })
            .collect()
    }
}

impl FiltrationSpec {
    pub fn linear(vector: Vec<f64>, offset: f64) -> Self {
        Self::MonomialLinear { vector, offset }
    }

    pub fn from_family(fam: &GradedFamily) -> Self {
        let levels = fam
            .levels()
            .map(|k| {
                let mut rows: Vec<(Label, f64)> = fam
                    .level(k)
                    .map(|m| m.iter().map(|(a, e)| (a.clone(), *e)).collect())
                    .unwrap_or_default();
                rows.sort_by(|a, b| a.0.cmp(&b.0));
                (k, rows)
            })
            .collect();
        Self::Explicit { levels }
    }

    /// Jump values at level `k` for every lattice point of `kP`, in the
    /// order of [`LatticePolytope::lattice_points`].
    pub fn jumps(&self, p: &LatticePolytope, k: u32) -> Result<Vec<(Label, f64)>> {
        let labels = p.lattice_points(k);
        match self {
            Self::MonomialLinear { vector, offset } => {
                if vector.len() != p.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: p.dim(),
                        found: vector.len(),
                    });
                }
                Ok(labels
                    .into_iter()
                    .map(|a| {
                        let e = a
                            .iter()
                            .zip(vector)
                            .map(|(x, v)| *x as f64 * v)
                            .sum::<f64>()
                            + offset * k as f64;
                        (a, e)
                    })
                    .collect())
            }
            Self::Explicit { levels } => {
                let table: BTreeMap<&Label, f64> = levels
                    .get(&k)
                    .ok_or(Error::MissingLevel(k))?
                    .iter()
                    .map(|(a, e)| (a, *e))
                    .collect();
                if table.len() != labels.len() {
                    return Err(Error::LabelMismatch);
                }
                labels
                    .into_iter()
                    .map(|a| {
                        table
                            .get(&a)
                            .copied()
                            .map(|e| (a, e))
                            .ok_or(Error::LabelMismatch)
                    })
                    .collect()
            }
        }
    }

    pub fn family(&self, p: &LatticePolytope, ks: &[u32]) -> Result<GradedFamily> {
        let mut fam = GradedFamily::new();
        for &k in ks {
            fam.insert_level(k, self.jumps(p, k)?);
        }
        Ok(fam)
    }

    /// `e_{k+l}(α+β) ≥ e_k(α) + e_l(β)` on the given levels.
    pub fn check_submultiplicative(&self, p: &LatticePolytope, ks: &[u32], tol: f64) -> Result<()> {
        self.family(p, ks)?.negated().check_subadditive(tol)
    }

    /// `|e_k(α)| ≤ c·k` on the given levels.
    pub fn check_bounded(&self, p: &LatticePolytope, ks: &[u32], c: f64) -> Result<()> {
        self.family(p, ks)?.check_bounded(c)
    }

    /// Levels stored in an explicit table; `None` for closed forms.
    pub fn stored_levels(&self) -> Option<Vec<u32>> {
        match self {
            Self::MonomialLinear { .. } => None,
            Self::Explicit { levels } => Some(levels.keys().copied().collect()),
        }
    }
}

/// Jumping numbers `e(1,k) ≥ … ≥ e(n_k,k)` at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpingData {
    k: u32,
    jumps: Vec<f64>,
}

impl JumpingData {
    /// Sorts `jumps` in non-increasing order.
    pub fn new(k: u32, mut jumps: Vec<f64>) -> Result<Self> {
        if jumps.is_empty() || jumps.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(
                "jumping numbers must be finite and nonempty".into(),
            ));
        }
        jumps.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { k, jumps })
    }

    pub fn from_spec(f: &FiltrationSpec, p: &LatticePolytope, k: u32) -> Result<Self> {
        Self::new(k, f.jumps(p, k)?.into_iter().map(|(_, e)| e).collect())
    }

    pub fn level(&self) -> u32 {
        self.k
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }
}

/// `(1/n_k)·Σ_j δ[e(j,k)/k]`.
pub fn jumping_measure(f: &FiltrationSpec, p: &LatticePolytope, k: u32) -> Result<Measure1D> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let data = JumpingData::from_spec(f, p, k)?;
    let w = 1.0 / data.len() as f64;
    Ok(Measure1D::from_atoms(
        data.jumps().iter().map(|e| (e / k as f64, w)).collect(),
    ))
}

/// A basis with a jump value per vector. The flag is
/// `F^λ = span{ b_i : e_i ≥ λ }`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedFlag {
    basis: DMatrix<f64>,
    jumps: Vec<f64>,
}

impl AdaptedFlag {
    /// Columns of `basis` paired with `jumps`.
    pub fn new(basis: DMatrix<f64>, jumps: Vec<f64>) -> Result<Self> {
        if !basis.is_square() || basis.ncols() != jumps.len() {
            return Err(Error::InconsistentFlag(format!(
                "{}×{} basis with {} jump values",
                basis.nrows(),
                basis.ncols(),
                jumps.len()
            )));
        }
        if jumps.iter().any(|e| !e.is_finite()) {
            return Err(Error::InconsistentFlag("jump values must be finite".into()));
        }
        Ok(Self { basis, jumps })
    }

    /// Standard basis with the given jumps.
    pub fn coordinate(jumps: Vec<f64>) -> Self {
        Self {
            basis: DMatrix::identity(jumps.len(), jumps.len()),
            jumps,
        }
    }

    pub fn jumping_data(&self, k: u32) -> Result<JumpingData> {
        JumpingData::new(k, self.jumps.clone())
    }

    /// `h`-orthonormal basis adapted to the flag, by Gram–Schmidt through
    /// descending jumps; returned with the matching jumps.
    fn orthonormalize(&self, g: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
        let v = self.jumps.len();
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by(|a, b| self.jumps[*b].total_cmp(&self.jumps[*a]));
        let mut s = DMatrix::zeros(v, v);
        for (j, &i) in order.iter().enumerate() {
            let mut x: DVector<f64> = self.basis.column(i).into_owned();
            let norm0 = (x.transpose() * g * &x)[0].sqrt();
            for q in 0..j {
                let c = s.column(q);
                let proj = (c.transpose() * g * &x)[0];
                x -= proj * c;
            }
            let n = (x.transpose() * g * &x)[0].sqrt();
            if !(n > 1e-12 * norm0.max(f64::MIN_POSITIVE)) {
                return Err(Error::DependentBasis);
            }
            s.set_column(j, &(x / n));
        }
        Ok((s, order.into_iter().map(|i| self.jumps[i]).collect()))
    }
}

/// Hermitian ray `H_t` from `h0`: the `h0`-orthonormal basis `s_i` adapted
/// to the flag is rescaled to `e^{t·e_i}·s_i` and declared orthonormal,
/// i.e. `G_t = G0·S·diag(e^{−2t·e})·Sᵀ·G0`.
pub fn ray_hermitian(h0: &HermitianNorm, flag: &AdaptedFlag, t: f64) -> Result<HermitianNorm> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t must be finite and nonnegative, got {t}"
        )));
    }
    if h0.dim() != flag.jumps.len() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: flag.jumps.len(),
        });
    }
    if t == 0.0 {
        return Ok(h0.clone());
    }
    let g0 = h0.gram();
    let (s, e) = flag.orthonormalize(&g0)?;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        e.len(),
        e.iter().map(|x| (-2.0 * t * x).exp()),
    ));
    let gs = &g0 * &s;
    let gt = &gs * d * gs.transpose();
    HermitianNorm::new((&gt + gt.transpose()) * 0.5)
}

/// Ray of a diagonal sup-norm under a monomial filtration, recorded by its
/// values on monomials: `log‖z^α‖_t = log‖z^α‖_0 − t·e_k(α)`.
///
/// The returned norm `D_t` agrees with the decomposition-infimum ray `N_t`
/// on monomials and satisfies `D_t ≤ N_t ≤ v·D_t` on all of `V`.
pub fn ray_norm(
    n0: &DiagonalSupNorm,
    f: &FiltrationSpec,
    p: &LatticePolytope,
    k: u32,
    t: f64,
) -> Result<DiagonalSupNorm> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t must be finite and nonnegative, got {t}"
        )));
    }
    let jumps: BTreeMap<Label, f64> = f.jumps(p, k)?.into_iter().collect();
    if jumps.len() != n0.dim() {
        return Err(Error::LabelMismatch);
    }
    let w = n0
        .labels()
        .iter()
        .zip(n0.log_weights())
        .map(|(a, w)| jumps.get(a).map(|e| w - t * e).ok_or(Error::LabelMismatch))
        .collect::<Result<Vec<f64>>>()?;
    n0.with_log_weights(w)
}

/// Asymptotic jump function `λ(ξ) = lim e_k(kξ)/k` on `(1/K)ℤⁿ ∩ P`, before
/// and after taking its concave envelope over `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcaveTransform {
    pub raw: GridFunction,
    pub envelope: GridFunction,
    /// `false` when the last two doubling levels disagree by more than
    /// [`FEKETE_TOL`].
    pub converged: bool,
}

pub const FEKETE_TOL: f64 = 1e-6;
/// Doubling levels `2^j`, `j ≤ MAX_DOUBLING`, used for tabulated filtrations.
pub const MAX_DOUBLING: u32 = 10;

/// Concave transform of a filtration. Linear filtrations are evaluated in
/// closed form on the symplectic grid of `m`. Tabulated ones use their
/// stored doubling levels `2^j`: the Fekete limit is the sup over levels
/// (superadditivity makes `e_k(kξ)/k` nondecreasing along doubling).
pub fn concave_transform(m: &ToricBundleModel, f: &FiltrationSpec) -> Result<ConcaveTransform> {
    let p = m.polytope();
    match f {
        FiltrationSpec::MonomialLinear { vector, offset } => {
            if vector.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    found: vector.len(),
                });
            }
            let lam = GridFunction::from_fn(
                m.symplectic().grid().clone(),
                Domain::Polytope(p.clone()),
                |x| x.iter().zip(vector).map(|(a, b)| a * b).sum::<f64>() + offset,
            )?;
            Ok(ConcaveTransform {
                raw: lam.clone(),
                envelope: lam,
                converged: true,
            })
        }
        FiltrationSpec::Explicit { levels } => {
            let ks: Vec<u32> = (0..=MAX_DOUBLING)
                .map(|j| 1u32 << j)
                .filter(|k| levels.contains_key(k))
                .collect();
            let top = *ks.last().ok_or(Error::InvalidParameter(
                "tabulated filtrations need at least one level of the form 2^j".into(),
            ))?;
            let fam = f.family(p, &ks)?;
            let scale = fam.growth_constant() * top as f64;
            fam.negated().check_subadditive(1e-9 * scale.max(1.0))?;
            let grid = Grid::lattice(p, top)?;
            let limit_at = |levels: &[u32], x: &[f64]| -> f64 {
                let beta: Label = x.iter().map(|t| (t * top as f64).round() as i64).collect();
                levels
                    .iter()
                    .filter_map(|&k| {
                        let d = (top / k) as i64;
                        if beta.iter().any(|b| b % d != 0) {
                            return None;
                        }
                        let alpha: Label = beta.iter().map(|b| b / d).collect();
                        fam.level(k)
                            .and_then(|t| t.get(&alpha))
                            .map(|e| e / k as f64)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let points: Vec<Vec<f64>> = grid.points().collect();
            let inside: Vec<bool> = points
                .iter()
                .map(|x| {
                    let beta: Label = x.iter().map(|t| (t * top as f64).round() as i64).collect();
                    p.contains_lattice(&beta, top as i64)
                })
                .collect();
            let raw: Vec<f64> = points
                .iter()
                .zip(&inside)
                .map(|(x, ok)| if *ok { limit_at(&ks, x) } else { f64::NAN })
                .collect();
            let converged = if ks.len() >= 2 {
                let prev = &ks[..ks.len() - 1];
                points.iter().zip(&inside).zip(&raw).all(|((x, ok), r)| {
                    let q = limit_at(prev, x);
                    !*ok || !q.is_finite() || (r - q).abs() <= FEKETE_TOL
                })
            } else {
                false
            };
            let fill = raw
                .iter()
                .filter(|v| v.is_finite())
                .fold(f64::INFINITY, |a, v| a.min(*v));
            let raw: Vec<f64> = raw
                .into_iter()
                .map(|v| if v.is_finite() { v } else { fill })
                .collect();
            let raw = GridFunction::new(grid, raw, Domain::Polytope(p.clone()))?;
            // concave envelope = −(convex envelope of −λ)
            let neg = raw.map(|v| -v)?;
            let envelope = convex_envelope(&neg)?.into_inner().map(|v| -v)?;
            Ok(ConcaveTransform {
                raw,
                envelope,
                converged,
            })
        }
    }
}

/// Spectral measure: the law of the concave transform under normalized
/// Lebesgue measure on `P`.
pub fn spectral_measure(
    m: &ToricBundleModel,
    f: &FiltrationSpec,
    bins: usize,
) -> Result<Measure1D> {
    pushforward(&concave_transform(m, f)?.envelope, bins)
}

/// Moments of the jumping measure at one level against those of the
/// spectral measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub k: u32,
    /// `moments[j]` is the `(j+1)`-th moment.
    pub moments: Vec<f64>,
    pub limit: Vec<f64>,
    pub gaps: Vec<f64>,
}

/// Moments `1..=max_m` of `μ_{F,k}` for each level, and of the spectral
/// measure (by quadrature of `λ^m` over `P`).
pub fn filtration_spectrum_experiment(
    m: &ToricBundleModel,
    f: &FiltrationSpec,
    ks: &[u32],
    max_m: u32,
) -> Result<Vec<SpectrumRow>> {
    if ks.is_empty() || ks.contains(&0) || max_m == 0 {
        return Err(Error::InvalidParameter(
            "need positive levels and at least one moment".into(),
        ));
    }
    let lam = concave_transform(m, f)?;
    let limit: Vec<f64> = pushforward_moments(&lam.envelope, max_m)?[1..].to_vec();
    ks.par_iter()
        .map(|&k| {
            let data = JumpingData::from_spec(f, m.polytope(), k)?;
            let n = data.len() as f64;
            let moments: Vec<f64> = (1..=max_m)
                .map(|j| {
                    data.jumps()
                        .iter()
                        .map(|e| (e / k as f64).powi(j as i32))
                        .sum::<f64>()
                        / n
                })
                .collect();
            let gaps = moments
                .iter()
                .zip(&limit)
                .map(|(a, b)| (a - b).abs())
                .collect();
            Ok(SpectrumRow {
                k,
                moments,
                limit: limit.clone(),
                gaps,
            })
        })
        .collect()
}
