//! Norms on tensor products and symmetric powers of normed spaces.
//!
//! With `Gᵢ = Lᵢ·Lᵢᵀ`, the coordinates `Lᵢᵀ·x` are Euclidean, so a tensor
//! with coefficient matrix `M` becomes `M' = L₁ᵀ·M·L₂`. The projective norm
//! is then the nuclear norm of `M'` and the injective norm its spectral norm.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normspace::HermitianNorm;

/// Element of `V₁ ⊗ V₂` given by its `v₁×v₂` coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2 {
    coefficients: DMatrix<f64>,
}

impl Tensor2 {
    pub fn new(coefficients: DMatrix<f64>) -> Result<Self> {
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "tensor coefficients must be finite".into(),
            ));
        }
        Ok(Self { coefficients })
    }

    pub fn rank_one(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x) * DVector::from_column_slice(y).transpose())
    }

    pub fn dims(&self) -> (usize, usize) {
        self.coefficients.shape()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coefficients: &self.coefficients * c,
        }
    }
}

fn whitened(t: &Tensor2, n1: &HermitianNorm, n2: &HermitianNorm) -> Result<DMatrix<f64>> {
    let (v1, v2) = t.dims();
    if v1 != n1.dim() {
        return Err(Error::DimensionMismatch {
            expected: n1.dim(),
            found: v1,
        });
    }
    if v2 != n2.dim() {
        return Err(Error::DimensionMismatch {
            expected: n2.dim(),
            found: v2,
        });
    }
    Ok(n1.cholesky_factor().transpose() * t.coefficients() * n2.cholesky_factor())
}

/// `inf Σ ‖xᵢ‖₁·‖yᵢ‖₂` over decompositions `t = Σ xᵢ ⊗ yᵢ`.
pub fn projective_norm2(t: &Tensor2, n1: &HermitianNorm, n2: &HermitianNorm) -> Result<f64> {
    let m = whitened(t, n1, n2)?;
    Ok(m.singular_values().sum())
}

/// `sup |t(φ, ψ)|` over functionals of dual norm at most one.
pub fn injective_norm2(t: &Tensor2, n1: &HermitianNorm, n2: &HermitianNorm) -> Result<f64> {
    let m = whitened(t, n1, n2)?;
    Ok(m.singular_values().max())
}

fn check_full_row_rank(pi: &DMatrix<f64>) -> Result<()> {
    if pi.nrows() == 0 || pi.nrows() > pi.ncols() {
        return Err(Error::RankDeficient);
    }
    let sv = pi.singular_values();
    if !(sv.min() > 1e-10 * sv.max()) {
        return Err(Error::RankDeficient);
    }
    Ok(())
}

/// Quotient norm `‖q‖ = min{‖g‖ : π·g = q}` for a surjection `π` (q×v).
/// Its Gram is `(π·G⁻¹·πᵀ)⁻¹`.
pub fn quotient_norm(n: &HermitianNorm, pi: &DMatrix<f64>) -> Result<HermitianNorm> {
    if pi.ncols() != n.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.dim(),
            found: pi.ncols(),
        });
    }
    check_full_row_rank(pi)?;
    let ginv = n
        .gram()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .inverse();
    let dual = pi * ginv * pi.transpose();
    let g = dual.cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    HermitianNorm::new((&g + g.transpose()) * 0.5)
}

/// Homogeneous polynomial of degree `k` in `v` variables, in monomial form.
#[derive(Clone, Debug, PartialEq)]
pub struct SymPoly {
    degree: u32,
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl SymPoly {
    /// Terms are `(exponents, coefficient)`; every exponent vector has length
    /// `dim` and sums to `degree`.
    pub fn new(degree: u32, dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        for (e, c) in &terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
            if e.iter().sum::<u32>() != degree {
                return Err(Error::InvalidParameter(format!(
                    "monomial {e:?} is not of degree {degree}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter(
                    "coefficients must be finite".into(),
                ));
            }
        }
        Ok(Self { degree, dim, terms })
    }

    /// Quadratic form `uᵀ·S·u` of a symmetric matrix.
    pub fn quadratic(s: &DMatrix<f64>) -> Result<Self> {
        let v = s.nrows();
        let mut terms = Vec::new();
        for i in 0..v {
            for j in i..v {
                let mut e = vec![0; v];
                e[i] += 1;
                e[j] += 1;
                let c = if i == j {
                    s[(i, i)]
                } else {
                    s[(i, j)] + s[(j, i)]
                };
                if c != 0.0 {
                    terms.push((e, c));
                }
            }
        }
        Self::new(2, v, terms)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(u)
                    .map(|(&a, x)| x.powi(a as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (e, c) in &self.terms {
            for (i, gi) in g.iter_mut().enumerate() {
                if e[i] == 0 {
                    continue;
                }
                let d: f64 = e
                    .iter()
                    .zip(u)
                    .enumerate()
                    .map(|(j, (&a, x))| {
                        if j == i {
                            a as f64 * x.powi(a as i32 - 1)
                        } else {
                            x.powi(a as i32)
                        }
                    })
                    .product();
                *gi += c * d;
            }
        }
        g
    }

    /// Symmetric coefficient matrix of a quadratic.
    pub fn symmetric_matrix(&self) -> Result<DMatrix<f64>> {
        if self.degree != 2 {
            return Err(Error::Unsupported("symmetric matrix only for degree 2"));
        }
        let mut s = DMatrix::zeros(self.dim, self.dim);
        for (e, c) in &self.terms {
            let idx: Vec<usize> = e
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| std::iter::repeat_n(i, a as usize))
                .collect();
            let (i, j) = (idx[0], idx[1]);
            if i == j {
                s[(i, i)] += c;
            } else {
                s[(i, j)] += 0.5 * c;
                s[(j, i)] += 0.5 * c;
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymEvOptions {
    pub restarts: usize,
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for SymEvOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            step: 1e-2,
            tol: 1e-8,
            max_iter: 10_000,
            mc_samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymEvEstimate {
    /// Best value found (never below `sampled_lower_bound`).
    pub value: f64,
    /// Spread `max − min` of the restart optima.
    pub spread: f64,
    /// Largest `|P|` over random points of the dual unit sphere.
    pub sampled_lower_bound: f64,
}

fn unit_sphere_point(rng: &mut ChaCha8Rng, v: usize) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..v).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return z.into_iter().map(|x| x / r).collect();
        }
    }
}

fn normalize(z: &mut [f64]) {
    let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    z.iter_mut().for_each(|x| *x /= r);
}

/// Evaluation norm `sup |P(u)|` over the unit sphere of the dual norm,
/// estimated by projected gradient ascent from random starts.
pub fn sym_ev_norm(p: &SymPoly, n: &HermitianNorm, opts: SymEvOptions) -> Result<SymEvEstimate> {
    if p.dim() != n.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.dim(),
            found: p.dim(),
        });
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter(
            "at least one restart is required".into(),
        ));
    }
    let l = n.cholesky_factor();
    let v = p.dim();
    // the dual unit sphere is L·S^{v-1}
    let f = |z: &[f64]| -> f64 {
        let u = &l * DVector::from_column_slice(z);
        p.eval(u.as_slice())
    };
    let grad = |z: &[f64]| -> Vec<f64> {
        let u = &l * DVector::from_column_slice(z);
        let g = DVector::from_vec(p.gradient(u.as_slice()));
        (l.transpose() * g).as_slice().to_vec()
    };
    let optima: Vec<f64> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            let mut z = unit_sphere_point(&mut rng, v);
            let sign = if f(&z) < 0.0 { -1.0 } else { 1.0 };
            let mut val = sign * f(&z);
            let mut eta = opts.step;
            for _ in 0..opts.max_iter {
                let g = grad(&z);
                let radial: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
                let tangent: Vec<f64> = g
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| sign * (a - radial * b))
                    .collect();
                if tangent.iter().map(|x| x * x).sum::<f64>().sqrt() < opts.tol {
                    break;
                }
                loop {
                    let mut trial: Vec<f64> =
                        z.iter().zip(&tangent).map(|(a, b)| a + eta * b).collect();
                    normalize(&mut trial);
                    let tv = sign * f(&trial);
                    if tv >= val {
                        z = trial;
                        val = tv;
                        eta = (eta * 1.5).min(1.0);
                        break;
                    }
                    eta *= 0.5;
                    if eta < 1e-14 {
                        break;
                    }
                }
                if eta < 1e-14 {
                    break;
                }
            }
            val.abs()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let sampled = (0..opts.mc_samples)
        .map(|_| f(&unit_sphere_point(&mut rng, v)).abs())
        .fold(0.0, f64::max);
    let best = optima.iter().cloned().fold(0.0, f64::max);
    let worst = optima.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SymEvEstimate {
        value: best.max(sampled),
        spread: best - worst,
        sampled_lower_bound: sampled,
    })
}

fn whitened_quadratic(p: &SymPoly, n: &HermitianNorm) -> Result<DMatrix<f64>> {
    if p.dim() != n.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.dim(),
            found: p.dim(),
        });
    }
    let s = p.symmetric_matrix()?;
    let l = n.cholesky_factor();
    Ok(l.transpose() * s * l)
}

/// Injective norm of a quadratic viewed as a symmetric tensor in `V ⊗ V`.
pub fn sym_injective_norm2(p: &SymPoly, n: &HermitianNorm) -> Result<f64> {
    Ok(whitened_quadratic(p, n)?.singular_values().max())
}

/// Quotient of the projective norm on `V ⊗ V` under symmetrization. The
/// symmetrization map does not increase nuclear norms, so the infimum is
/// attained at the symmetric tensor itself.
pub fn sym_projective_norm2(p: &SymPoly, n: &HermitianNorm) -> Result<f64> {
    Ok(whitened_quadratic(p, n)?.singular_values().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(v: usize) -> HermitianNorm {
        HermitianNorm::identity(v)
    }

    fn random_pd(rng: &mut ChaCha8Rng, v: usize) -> HermitianNorm {
        let b = DMatrix::from_fn(v, v, |_, _| rng.random_range(-1.0..1.0));
        HermitianNorm::new(&b * b.transpose() + DMatrix::identity(v, v) * 0.3).unwrap()
    }

    #[test]
    fn spec_examples() {
        let t = Tensor2::new(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0])).unwrap();
        assert!((projective_norm2(&t, &euclid(2), &euclid(2)).unwrap() - 4.0).abs() < 1e-12);
        assert!((injective_norm2(&t, &euclid(2), &euclid(2)).unwrap() - 3.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (n1, n2) = (random_pd(&mut rng, 3), random_pd(&mut rng, 2));
        let (x, y) = ([0.3, -1.0, 2.0], [1.5, 0.2]);
        let r1 = Tensor2::rank_one(&x, &y).unwrap();
        let expect = n1.eval(&x) * n2.eval(&y);
        assert!((projective_norm2(&r1, &n1, &n2).unwrap() - expect).abs() < 1e-10);
        assert!((injective_norm2(&r1, &n1, &n2).unwrap() - expect).abs() < 1e-10);
        assert!(
            (projective_norm2(&r1.scaled(-2.5), &n1, &n2).unwrap() - 2.5 * expect).abs() < 1e-9
        );
    }

    /// Two-term decompositions `M = Σ xᵢ⊗yᵢ` parametrized by the directions
    /// of `x₁, x₂`; the optimum over all decompositions is attained by two
    /// terms, so the grid minimum approaches the projective norm from above.
    #[test]
    fn whitening_matches_decomposition_infimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let (n1, n2) = (random_pd(&mut rng, 2), random_pd(&mut rng, 2));
            let m = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let t = Tensor2::new(m.clone()).unwrap();
            let proj = projective_norm2(&t, &n1, &n2).unwrap();
            let steps = 720;
            let mut best = f64::INFINITY;
            for a in 0..steps {
                for b in 0..steps {
                    let (ta, tb) = (
                        std::f64::consts::PI * a as f64 / steps as f64,
                        std::f64::consts::PI * b as f64 / steps as f64,
                    );
                    let x =
                        DMatrix::from_row_slice(2, 2, &[ta.cos(), tb.cos(), ta.sin(), tb.sin()]);
                    let Some(xinv) = x.clone().try_inverse() else {
                        continue;
                    };
                    // M = X·Yᵀ with columns of X the xᵢ
                    let yt = xinv * &m;
                    let cost: f64 = (0..2)
                        .map(|i| {
                            let xi = [x[(0, i)], x[(1, i)]];
                            let yi = [yt[(i, 0)], yt[(i, 1)]];
                            n1.eval(&xi) * n2.eval(&yi)
                        })
                        .sum();
                    best = best.min(cost);
                }
            }
            assert!(best >= proj - 1e-10, "{best} < {proj}");
            assert!(best - proj < 1e-3 * proj.max(1.0), "{best} vs {proj}");

            // injective: sup over dual unit functionals; dual Grams are G⁻¹
            let inj = injective_norm2(&t, &n1, &n2).unwrap();
            let d1 = HermitianNorm::new(n1.gram().try_inverse().unwrap()).unwrap();
            let d2 = HermitianNorm::new(n2.gram().try_inverse().unwrap()).unwrap();
            let mut sup = 0.0f64;
            for a in 0..steps {
                for b in 0..steps {
                    let (ta, tb) = (
                        std::f64::consts::PI * a as f64 / steps as f64,
                        std::f64::consts::PI * b as f64 / steps as f64,
                    );
                    let phi = [ta.cos(), ta.sin()];
                    let psi = [tb.cos(), tb.sin()];
                    let val = (DVector::from_column_slice(&phi).transpose()
                        * &m
                        * DVector::from_column_slice(&psi))[0];
                    sup = sup.max(val.abs() / (d1.eval(&phi) * d2.eval(&psi)));
                }
            }
            assert!(sup <= inj + 1e-10 && inj - sup < 1e-3 * inj.max(1.0));
        }
    }

    #[test]
    fn injective_projective_sandwich_and_norm_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (v1, v2) = (rng.random_range(1..5), rng.random_range(1..5));
            let (n1, n2) = (random_pd(&mut rng, v1), random_pd(&mut rng, v2));
            let a =
                Tensor2::new(DMatrix::from_fn(v1, v2, |_, _| rng.random_range(-1.0..1.0))).unwrap();
            let b =
                Tensor2::new(DMatrix::from_fn(v1, v2, |_, _| rng.random_range(-1.0..1.0))).unwrap();
            let sum = Tensor2::new(a.coefficients() + b.coefficients()).unwrap();
            let inj = injective_norm2(&a, &n1, &n2).unwrap();
            let proj = projective_norm2(&a, &n1, &n2).unwrap();
            assert!(inj <= proj + 1e-12 && proj <= inj * v1.min(v2) as f64 + 1e-12);
            for f in [projective_norm2, injective_norm2] {
                let (fa, fb, fs) = (
                    f(&a, &n1, &n2).unwrap(),
                    f(&b, &n1, &n2).unwrap(),
                    f(&sum, &n1, &n2).unwrap(),
                );
                assert!(fs <= fa + fb + 1e-12);
                assert!((f(&a.scaled(-3.0), &n1, &n2).unwrap() - 3.0 * fa).abs() < 1e-10);
            }
        }
        let t = Tensor2::new(DMatrix::zeros(2, 3)).unwrap();
        assert!(projective_norm2(&t, &euclid(3), &euclid(3)).is_err());
    }

    #[test]
    fn quotient_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = random_pd(&mut rng, 3);
        let q = quotient_norm(&n, &DMatrix::identity(3, 3)).unwrap();
        assert!((q.gram() - n.gram()).abs().max() < 1e-10);
        let proj = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let q = quotient_norm(&euclid(3), &proj).unwrap();
        assert!((q.gram() - DMatrix::identity(2, 2)).abs().max() < 1e-12);
        let row = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let q = quotient_norm(&euclid(2), &row).unwrap();
        assert!((q.eval(&[1.0]) - 0.5f64.sqrt()).abs() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(
            quotient_norm(&euclid(2), &bad).unwrap_err(),
            Error::RankDeficient
        );
    }

    #[test]
    fn quotient_matches_direct_minimization_and_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = random_pd(&mut rng, 4);
            let pi = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
            let rho = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
            let q = quotient_norm(&n, &pi).unwrap();
            // minimum-norm preimage: g = G⁻¹πᵀ(πG⁻¹πᵀ)⁻¹y, perturbed along ker π
            let y = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let ginv = n.gram().try_inverse().unwrap();
            let g =
                &ginv * pi.transpose() * (&pi * &ginv * pi.transpose()).try_inverse().unwrap() * &y;
            assert!((n.eval(g.as_slice()) - q.eval(y.as_slice())).abs() < 1e-9);
            let eig = nalgebra::SymmetricEigen::new(pi.transpose() * &pi);
            let kernel = eig.eigenvectors.column(eig.eigenvalues.imin()).into_owned();
            for s in [-0.3, 0.1, 0.7] {
                let other = &g + &kernel * s;
                assert!(n.eval(other.as_slice()) >= q.eval(y.as_slice()) - 1e-12);
            }
            let two_step = quotient_norm(&q, &rho).unwrap();
            let direct = quotient_norm(&n, &(&rho * &pi)).unwrap();
            assert!(
                (two_step.gram() - direct.gram()).abs().max() < 1e-8 * direct.gram().abs().max()
            );
        }
    }

    #[test]
    fn sym_ev_examples() {
        let x3 = SymPoly::new(3, 2, vec![(vec![3, 0], 1.0)]).unwrap();
        let est = sym_ev_norm(&x3, &euclid(2), SymEvOptions::default()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-8);
        let xy = SymPoly::new(2, 2, vec![(vec![1, 1], 1.0)]).unwrap();
        let est = sym_ev_norm(&xy, &euclid(2), SymEvOptions::default()).unwrap();
        assert!((est.value - 0.5).abs() < 1e-8);
        assert!(est.value >= est.sampled_lower_bound);
        assert!(SymPoly::new(2, 2, vec![(vec![2, 1], 1.0)]).is_err());
    }

    #[test]
    fn sym_chain_at_degree_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let v = rng.random_range(2..5);
            let n = random_pd(&mut rng, v);
            let a = DMatrix::from_fn(v, v, |_, _| rng.random_range(-1.0..1.0));
            let p = SymPoly::quadratic(&((&a + a.transpose()) * 0.5)).unwrap();
            let ev = sym_ev_norm(&p, &n, SymEvOptions::default()).unwrap().value;
            let eps = sym_injective_norm2(&p, &n).unwrap();
            let pi = sym_projective_norm2(&p, &n).unwrap();
            assert!(ev <= eps + 1e-8 && eps <= pi + 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = SymPoly::new(
            3,
            3,
            vec![
                (vec![2, 1, 0], 1.5),
                (vec![0, 1, 2], -0.7),
                (vec![1, 1, 1], 2.0),
            ],
        )
        .unwrap();
        let u = [0.3, -0.8, 1.1];
        let g = p.gradient(&u);
        for i in 0..3 {
            let mut a = u;
            let mut b = u;
            a[i] += 1e-6;
            b[i] -= 1e-6;
            assert!(((p.eval(&a) - p.eval(&b)) / 2e-6 - g[i]).abs() < 1e-6);
        }
    }
}
