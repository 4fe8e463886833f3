use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_CONDITION: f64 = 1e12;

/// Positive-definite quadratic norm `‖x‖² = xᵀ·G·x` on ℝᵛ.
///
/// Diagonal Grams are kept in log form (`log ‖e_j‖` per basis vector) so
/// that level-k toric norms, whose entries span hundreds of orders of
/// magnitude, stay representable. Dense Grams are validated for symmetry,
/// positivity and a condition number below 1e12.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianNorm {
    repr: Repr,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Dense(DMatrix<f64>),
    Diagonal(Vec<f64>),
}

impl HermitianNorm {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        let v = gram.nrows();
        if v == 0 || gram.ncols() != v {
            return Err(Error::DimensionMismatch {
                expected: v.max(1),
                found: gram.ncols(),
            });
        }
        if gram.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "Gram entries must be finite".into(),
            ));
        }
        let scale = gram.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let asym = (&gram - gram.transpose())
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 || asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(if scale == 0.0 {
                0.0
            } else {
                asym / scale
            }));
        }
        let sym = (&gram + gram.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.max();
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        if max / min > MAX_CONDITION {
            return Err(Error::IllConditioned(max / min));
        }
        Ok(Self {
            repr: Repr::Dense(sym),
        })
    }

    /// Diagonal norm with `‖e_j‖ = exp(log_norms[j])`.
    pub fn diagonal(log_norms: Vec<f64>) -> Result<Self> {
        if log_norms.is_empty() {
            return Err(Error::InvalidParameter("empty diagonal".into()));
        }
        if log_norms.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("log-norms must be finite".into()));
        }
        Ok(Self {
            repr: Repr::Diagonal(log_norms),
        })
    }

    /// Diagonal norm from positive Gram entries `G_jj`.
    pub fn from_diagonal_gram(entries: &[f64]) -> Result<Self> {
        if entries.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        Self::diagonal(entries.iter().map(|g| 0.5 * g.ln()).collect())
    }

    pub fn identity(v: usize) -> Self {
        Self {
            repr: Repr::Diagonal(vec![0.0; v]),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Dense(g) => g.nrows(),
            Repr::Diagonal(w) => w.len(),
        }
    }

    /// Log-norms of the basis vectors when the Gram is diagonal.
    pub fn log_diagonal(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Diagonal(w) => Some(w),
            Repr::Dense(_) => None,
        }
    }

    pub fn gram(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Dense(g) => g.clone(),
            Repr::Diagonal(w) => DMatrix::from_diagonal(&DVector::from_iterator(
                w.len(),
                w.iter().map(|x| (2.0 * x).exp()),
            )),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(
            x.len(),
            self.dim(),
            "vector length must match the norm dimension"
        );
        match &self.repr {
            Repr::Dense(g) => {
                let x = DVector::from_column_slice(x);
                (x.dot(&(g * &x))).max(0.0).sqrt()
            }
            Repr::Diagonal(w) => {
                // max-shifted to survive huge log-norms
                let logs: Vec<f64> = w
                    .iter()
                    .zip(x)
                    .filter(|(_, xi)| **xi != 0.0)
                    .map(|(wi, xi)| wi + xi.abs().ln())
                    .collect();
                match logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) {
                    m if m == f64::NEG_INFINITY => 0.0,
                    m => {
                        m.exp()
                            * logs
                                .iter()
                                .map(|l| (2.0 * (l - m)).exp())
                                .sum::<f64>()
                                .sqrt()
                    }
                }
            }
        }
    }

    /// The norm `e^c · N`.
    pub fn scaled(&self, c: f64) -> Self {
        match &self.repr {
            Repr::Dense(g) => Self {
                repr: Repr::Dense(g * (2.0 * c).exp()),
            },
            Repr::Diagonal(w) => Self {
                repr: Repr::Diagonal(w.iter().map(|x| x + c).collect()),
            },
        }
    }

    /// Lower Cholesky factor `L` with `G = L·Lᵀ`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Diagonal(w) => {
                DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|x| x.exp())))
            }
            Repr::Dense(g) => g
                .clone()
                .cholesky()
                .expect("validated positive definite")
                .l(),
        }
    }

    pub fn log_det(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(w) => 2.0 * w.iter().sum::<f64>(),
            Repr::Dense(_) => {
                let l = self.cholesky_factor();
                2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>()
            }
        }
    }

    /// Congruence `Bᵀ·G·B`; `b` is v×e with independent columns.
    pub(crate) fn congruence(&self, b: &DMatrix<f64>) -> Result<Self> {
        if let Some(w) = self.log_diagonal() {
            if let Some(cols) = coordinate_columns(b) {
                return Self::diagonal(
                    cols.iter().map(|&(row, c)| w[row] + c.abs().ln()).collect(),
                );
            }
        }
        let g = self.gram();
        let r = b.transpose() * g * b;
        Self::new((&r + r.transpose()) * 0.5)
    }

    pub(crate) fn dense_or_materialized(&self) -> DMatrix<f64> {
        self.gram()
    }
}

/// For a matrix whose columns are scaled, distinct standard basis vectors,
/// returns `(row, scale)` per column.
pub(crate) fn coordinate_columns(b: &DMatrix<f64>) -> Option<Vec<(usize, f64)>> {
    let mut seen = vec![false; b.nrows()];
    let mut out = Vec::with_capacity(b.ncols());
    for col in b.column_iter() {
        let mut hit = None;
        for (row, &x) in col.iter().enumerate() {
            if x != 0.0 {
                if hit.is_some() {
                    return None;
                }
                hit = Some((row, x));
            }
        }
        let (row, x) = hit?;
        if seen[row] {
            return None;
        }
        seen[row] = true;
        out.push((row, x));
    }
    Some(out)
}

/// Simultaneous diagonalization of the pencil `(G1, G0)`: `G0 = L·Lᵀ`,
/// `L⁻¹·G1·L⁻ᵀ = Q·diag(μ)·Qᵀ`.
pub(crate) struct Pencil {
    pub l: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub mu: DVector<f64>,
}

impl Pencil {
    pub fn new(n0: &HermitianNorm, n1: &HermitianNorm) -> Self {
        let l = n0.cholesky_factor();
        let g1 = n1.dense_or_materialized();
        let linv_g1 = l
            .clone()
            .solve_lower_triangular(&g1)
            .expect("triangular solve");
        let c = l
            .clone()
            .solve_lower_triangular(&linv_g1.transpose())
            .expect("triangular solve");
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        Self {
            l,
            q: eig.eigenvectors,
            mu: eig.eigenvalues,
        }
    }

    /// `L·Q·diag(f(μ))·Qᵀ·Lᵀ`
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let lq = &self.l * &self.q;
        let d = DMatrix::from_diagonal(&self.mu.map(f));
        let m = &lq * d * lq.transpose();
        (&m + m.transpose()) * 0.5
    }
}
