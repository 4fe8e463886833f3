//! Finite-dimensional norm geometry.
//!
//! Hermitian (quadratic) norms, weighted max norms on labelled bases, and
//! pointwise maxima of these. All distances are built from the logarithmic
//! relative spectrum
//!
//! ```text
//! λ_j(N₀, N₁) = sup_{dim W = j} inf_{w ∈ W∖0} log(‖w‖₁ / ‖w‖₀)
//! ```
//!
//! which for a Hermitian pair is half the log of the generalized eigenvalues
//! of `(G₁, G₀)`, and `d_p = (Σ|λ_j|^p / v)^{1/p}`.

mod diagonal;
mod hermitian;

pub use diagonal::{DiagonalSupNorm, Label};
pub use hermitian::HermitianNorm;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use hermitian::{coordinate_columns, Pencil};

/// A norm of any supported kind.
#[derive(Clone, Debug, PartialEq)]
pub enum NormHandle {
    Hermitian(HermitianNorm),
    DiagonalSup(DiagonalSupNorm),
    /// Pointwise maximum of two norms; evaluation only.
    Max(Box<NormHandle>, Box<NormHandle>),
    /// `x ↦ N(B·x)` for a basis `B` of a subspace; evaluation only.
    Pullback {
        norm: Box<NormHandle>,
        basis: DMatrix<f64>,
    },
}

impl From<HermitianNorm> for NormHandle {
    fn from(n: HermitianNorm) -> Self {
        NormHandle::Hermitian(n)
    }
}

impl From<DiagonalSupNorm> for NormHandle {
    fn from(n: DiagonalSupNorm) -> Self {
        NormHandle::DiagonalSup(n)
    }
}

impl NormHandle {
    pub fn dim(&self) -> usize {
        match self {
            NormHandle::Hermitian(h) => h.dim(),
            NormHandle::DiagonalSup(d) => d.dim(),
            NormHandle::Max(a, _) => a.dim(),
            NormHandle::Pullback { basis, .. } => basis.ncols(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            NormHandle::Hermitian(h) => h.eval(x),
            NormHandle::DiagonalSup(d) => d.eval(x),
            NormHandle::Max(a, b) => a.eval(x).max(b.eval(x)),
            NormHandle::Pullback { norm, basis } => {
                let y = basis * nalgebra::DVector::from_column_slice(x);
                norm.eval(y.as_slice())
            }
        }
    }

    /// A Hermitian norm `H` and radius `r` with `e^{-r}·H ≤ N ≤ e^{r}·H`.
    pub fn hermitian_proxy(&self) -> Result<(HermitianNorm, f64)> {
        match self {
            NormHandle::Hermitian(h) => Ok((h.clone(), 0.0)),
            NormHandle::DiagonalSup(d) => {
                let quarter = 0.25 * (d.dim() as f64).ln();
                Ok((john_ellipsoid(d).scaled(quarter), quarter))
            }
            NormHandle::Max(a, b) => {
                let (ha, ra) = a.hermitian_proxy()?;
                let (hb, rb) = b.hermitian_proxy()?;
                let quarter_log2 = 0.25 * std::f64::consts::LN_2;
                Ok((
                    rooftop(&ha, &hb)?.scaled(-quarter_log2),
                    ra.max(rb) + quarter_log2,
                ))
            }
            NormHandle::Pullback { norm, basis } => {
                let (h, r) = norm.hermitian_proxy()?;
                Ok((h.congruence(basis)?, r))
            }
        }
    }
}

/// Non-increasing list `λ_1 ≥ … ≥ λ_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRelativeSpectrum {
    values: Vec<f64>,
}

impl LogRelativeSpectrum {
    fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite spectrum"));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(Σ|λ_j|^p / v)^{1/p}`; `p = ∞` gives `max |λ_j|`.
    pub fn dp(&self, p: f64) -> f64 {
        lp_mean(&self.values, p)
    }
}

/// Distance value with a certified additive uncertainty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub uncertainty: f64,
}

impl Distance {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            uncertainty: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.uncertainty == 0.0
    }
}

pub(crate) fn lp_mean(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    let s: f64 = values.iter().map(|x| x.abs().powf(p)).sum();
    (s / values.len() as f64).powf(1.0 / p)
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("p must be ≥ 1, got {p}")));
    }
    Ok(())
}

/// Unsorted `½·log μ_j` for the pencil `(G1, G0)`.
fn hermitian_log_ratios(n0: &HermitianNorm, n1: &HermitianNorm) -> Vec<f64> {
    if let (Some(w0), Some(w1)) = (n0.log_diagonal(), n1.log_diagonal()) {
        return w1.iter().zip(w0).map(|(a, b)| a - b).collect();
    }
    Pencil::new(n0, n1)
        .mu
        .iter()
        .map(|m| 0.5 * m.ln())
        .collect()
}

/// The operator `A = G₀⁻¹·G₁`, i.e. `⟨A·x, y⟩₀ = ⟨x, y⟩₁`.
pub fn transfer_map(n0: &HermitianNorm, n1: &HermitianNorm) -> Result<DMatrix<f64>> {
    check_dims(n0.dim(), n1.dim())?;
    if let (Some(w0), Some(w1)) = (n0.log_diagonal(), n1.log_diagonal()) {
        let d: Vec<f64> = w1
            .iter()
            .zip(w0)
            .map(|(a, b)| (2.0 * (a - b)).exp())
            .collect();
        return Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)));
    }
    let chol = n0.gram().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(&n1.gram()))
}

pub fn log_relative_spectrum(n0: &NormHandle, n1: &NormHandle) -> Result<LogRelativeSpectrum> {
    check_dims(n0.dim(), n1.dim())?;
    match (n0, n1) {
        (NormHandle::Hermitian(a), NormHandle::Hermitian(b)) => Ok(
            LogRelativeSpectrum::from_unsorted(hermitian_log_ratios(a, b)),
        ),
        (NormHandle::DiagonalSup(a), NormHandle::DiagonalSup(b)) => {
            if !a.same_labels(b) {
                return Err(Error::LabelMismatch);
            }
            Ok(LogRelativeSpectrum::from_unsorted(
                b.log_weights()
                    .iter()
                    .zip(a.log_weights())
                    .map(|(x, y)| x - y)
                    .collect(),
            ))
        }
        _ => Err(Error::Unsupported(
            "exact relative spectrum needs a Hermitian or a common-label diagonal pair",
        )),
    }
}

/// `d_p(N₀, N₁)`. Exact for Hermitian pairs and common-label diagonal pairs;
/// other pairs go through Hermitian proxies and carry the proxies' radii as
/// uncertainty.
pub fn dp_distance(n0: &NormHandle, n1: &NormHandle, p: f64) -> Result<Distance> {
    check_p(p)?;
    check_dims(n0.dim(), n1.dim())?;
    match (n0, n1) {
        (NormHandle::Hermitian(_), NormHandle::Hermitian(_))
        | (NormHandle::DiagonalSup(_), NormHandle::DiagonalSup(_)) => {
            Ok(Distance::exact(log_relative_spectrum(n0, n1)?.dp(p)))
        }
        _ => {
            let (h0, r0) = n0.hermitian_proxy()?;
            let (h1, r1) = n1.hermitian_proxy()?;
            Ok(Distance {
                value: lp_mean(&hermitian_log_ratios(&h0, &h1), p),
                uncertainty: r0 + r1,
            })
        }
    }
}

/// Hermitian shorthand for [`dp_distance`].
pub fn dp_hermitian(n0: &HermitianNorm, n1: &HermitianNorm, p: f64) -> Result<f64> {
    check_p(p)?;
    check_dims(n0.dim(), n1.dim())?;
    Ok(lp_mean(&hermitian_log_ratios(n0, n1), p))
}

/// `d_∞(N₀, N₁)`: least `C` with `e^{-C}·N₀ ≤ N₁ ≤ e^{C}·N₀`.
///
/// Exact for Hermitian pairs, common-label diagonal pairs and mixed
/// Hermitian/diagonal pairs (vertex enumeration of the max-norm ball, v ≤ 20).
pub fn d_infinity(n0: &NormHandle, n1: &NormHandle) -> Result<f64> {
    check_dims(n0.dim(), n1.dim())?;
    match (n0, n1) {
        (NormHandle::Hermitian(_), NormHandle::Hermitian(_))
        | (NormHandle::DiagonalSup(_), NormHandle::DiagonalSup(_)) => {
            Ok(log_relative_spectrum(n0, n1)?.dp(f64::INFINITY))
        }
        (NormHandle::Hermitian(h), NormHandle::DiagonalSup(d))
        | (NormHandle::DiagonalSup(d), NormHandle::Hermitian(h)) => hermitian_sup_dinf(h, d),
        _ => Err(Error::Unsupported(
            "d_∞ needs Hermitian or diagonal operands",
        )),
    }
}

fn hermitian_sup_dinf(h: &HermitianNorm, d: &DiagonalSupNorm) -> Result<f64> {
    let v = h.dim();
    if v > 20 {
        return Err(Error::Unsupported("vertex enumeration limited to v ≤ 20"));
    }
    let g = h.gram();
    let ginv = g
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .inverse();
    // sup N/H: dual norm of the coordinate functionals
    let up = d
        .log_weights()
        .iter()
        .enumerate()
        .map(|(j, w)| w + 0.5 * ginv[(j, j)].ln())
        .fold(f64::NEG_INFINITY, f64::max);
    // sup H/N: maximum of a convex quadratic over the box |x_j| ≤ e^{-w_j}
    let scale: Vec<f64> = d.log_weights().iter().map(|w| (-w).exp()).collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << (v - 1)) {
        let x: Vec<f64> = (0..v)
            .map(|j| {
                if j > 0 && mask >> (j - 1) & 1 == 1 {
                    -scale[j]
                } else {
                    scale[j]
                }
            })
            .collect();
        best = best.max(h.eval(&x));
    }
    Ok(up.max(best.ln()))
}

/// Hermitian geodesic `t ↦ ⟨A^t·,·⟩₀`, `t ∈ [0, 1]`.
pub fn geodesic(n0: &HermitianNorm, n1: &HermitianNorm, t: f64) -> Result<HermitianNorm> {
    check_dims(n0.dim(), n1.dim())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "t must lie in [0, 1], got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(n0.clone());
    }
    if t == 1.0 {
        return Ok(n1.clone());
    }
    if let (Some(w0), Some(w1)) = (n0.log_diagonal(), n1.log_diagonal()) {
        return HermitianNorm::diagonal(
            w0.iter()
                .zip(w1)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        );
    }
    HermitianNorm::new(Pencil::new(n0, n1).reassemble(|m| m.powf(t)))
}

/// Rooftop norm `N₀ ∨ N₁`: in a basis orthogonal for both, each basis
/// vector gets the larger of its two norms.
pub fn rooftop(n0: &HermitianNorm, n1: &HermitianNorm) -> Result<HermitianNorm> {
    check_dims(n0.dim(), n1.dim())?;
    if n0 == n1 {
        return Ok(n0.clone());
    }
    if let (Some(w0), Some(w1)) = (n0.log_diagonal(), n1.log_diagonal()) {
        return HermitianNorm::diagonal(w0.iter().zip(w1).map(|(a, b)| a.max(*b)).collect());
    }
    HermitianNorm::new(Pencil::new(n0, n1).reassemble(|m| m.max(1.0)))
}

/// Pointwise maximum. Common-label diagonal pairs stay diagonal.
pub fn max_norm(n0: &NormHandle, n1: &NormHandle) -> Result<NormHandle> {
    check_dims(n0.dim(), n1.dim())?;
    if n0 == n1 {
        return Ok(n0.clone());
    }
    if let (NormHandle::DiagonalSup(a), NormHandle::DiagonalSup(b)) = (n0, n1) {
        if a.same_labels(b) {
            let w = a
                .log_weights()
                .iter()
                .zip(b.log_weights())
                .map(|(x, y)| x.max(*y))
                .collect();
            return Ok(NormHandle::DiagonalSup(a.with_log_weights(w)?));
        }
    }
    Ok(NormHandle::Max(Box::new(n0.clone()), Box::new(n1.clone())))
}

/// Hermitian `H` with `H ≤ N ≤ √v·H`: the diagonal norm with log-weights
/// lowered by `½·log v`.
pub fn john_ellipsoid(n: &DiagonalSupNorm) -> HermitianNorm {
    let shift = 0.5 * (n.dim() as f64).ln();
    HermitianNorm::diagonal(n.log_weights().iter().map(|w| w - shift).collect())
        .expect("finite log-weights")
}

/// Restriction to the span of the columns of `basis` (v×e).
pub fn restrict(n: &NormHandle, basis: &DMatrix<f64>) -> Result<NormHandle> {
    check_dims(n.dim(), basis.nrows())?;
    let e = basis.ncols();
    if e == 0 || e > basis.nrows() {
        return Err(Error::DependentBasis);
    }
    let sv = basis.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-10 * smax) {
        return Err(Error::DependentBasis);
    }
    match n {
        NormHandle::Hermitian(h) => Ok(NormHandle::Hermitian(h.congruence(basis)?)),
        NormHandle::DiagonalSup(d) => match coordinate_columns(basis) {
            Some(cols) => {
                let labels = cols
                    .iter()
                    .map(|&(row, _)| d.labels()[row].clone())
                    .collect();
                let w = cols
                    .iter()
                    .map(|&(row, c)| d.log_weights()[row] + c.abs().ln())
                    .collect();
                Ok(NormHandle::DiagonalSup(DiagonalSupNorm::new(labels, w)?))
            }
            None => Ok(NormHandle::Pullback {
                norm: Box::new(n.clone()),
                basis: basis.clone(),
            }),
        },
        NormHandle::Max(a, b) => Ok(NormHandle::Max(
            Box::new(restrict(a, basis)?),
            Box::new(restrict(b, basis)?),
        )),
        NormHandle::Pullback { norm, basis: inner } => Ok(NormHandle::Pullback {
            norm: norm.clone(),
            basis: inner * basis,
        }),
    }
}

/// `log(vol B₀ / vol B₁) = ½·(log det G₁ − log det G₀)`.
pub fn log_volume_ratio(n0: &HermitianNorm, n1: &HermitianNorm) -> Result<f64> {
    check_dims(n0.dim(), n1.dim())?;
    if let (Some(w0), Some(w1)) = (n0.log_diagonal(), n1.log_diagonal()) {
        return Ok(w1.iter().zip(w0).map(|(a, b)| a - b).sum());
    }
    Ok(0.5 * (n1.log_det() - n0.log_det()))
}
