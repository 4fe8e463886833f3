//! Level-indexed real functions on lattice points, e.g. log-weights of a
//! graded norm or jump values of a filtration.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::normspace::Label;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradedFamily {
    levels: BTreeMap<u32, BTreeMap<Label, f64>>,
}

impl GradedFamily {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_level(&mut self, k: u32, entries: impl IntoIterator<Item = (Label, f64)>) {
        self.levels.insert(k, entries.into_iter().collect());
    }

    pub fn level(&self, k: u32) -> Option<&BTreeMap<Label, f64>> {
        self.levels.get(&k)
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> + '_ {
        self.levels.keys().copied()
    }

    pub fn negated(&self) -> Self {
        Self {
            levels: self
                .levels
                .iter()
                .map(|(k, m)| (*k, m.iter().map(|(a, v)| (a.clone(), -v)).collect()))
                .collect(),
        }
    }

    /// `w_{k+l}(α+β) ≤ w_k(α) + w_l(β) + tol` for every pair of stored
    /// levels whose sum is stored; the first violation is returned as a
    /// witness.
    pub fn check_subadditive(&self, tol: f64) -> Result<()> {
        let ks: Vec<u32> = self.levels().collect();
        for (i, &k) in ks.iter().enumerate() {
            for &l in &ks[i..] {
                let Some(sum) = self.levels.get(&(k + l)) else {
                    continue;
                };
                let (wk, wl) = (&self.levels[&k], &self.levels[&l]);
                let mut a_sorted: Vec<&Label> = wk.keys().collect();
                a_sorted.sort();
                let mut b_sorted: Vec<&Label> = wl.keys().collect();
                b_sorted.sort();
                for a in &a_sorted {
                    for b in &b_sorted {
                        let ab: Label = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
                        let Some(w) = sum.get(&ab) else { continue };
                        if *w > wk[*a] + wl[*b] + tol {
                            return Err(Error::NotSubmultiplicative {
                                k,
                                l,
                                alpha: (*a).clone(),
                                beta: (*b).clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `|w_k(α)| ≤ c·k` at every stored level.
    pub fn check_bounded(&self, c: f64) -> Result<()> {
        for (k, m) in &self.levels {
            let worst = m.values().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let ratio = worst / *k as f64;
            if ratio > c {
                return Err(Error::Unbounded {
                    k: *k,
                    ratio,
                    bound: c,
                });
            }
        }
        Ok(())
    }

    /// Smallest `c` with `|w_k(α)| ≤ c·k` everywhere.
    pub fn growth_constant(&self) -> f64 {
        self.levels
            .iter()
            .map(|(k, m)| m.values().fold(0.0f64, |acc, v| acc.max(v.abs())) / *k as f64)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_family(f: impl Fn(u32, i64) -> f64, ks: &[u32]) -> GradedFamily {
        let mut fam = GradedFamily::new();
        for &k in ks {
            fam.insert_level(k, (0..=k as i64).map(|a| (vec![a], f(k, a))));
        }
        fam
    }

    #[test]
    fn convex_homogeneous_weights_are_subadditive() {
        let g = |x: f64| (x - 0.3).powi(2);
        let fam = interval_family(
            |k, a| k as f64 * g(a as f64 / k as f64),
            &[1, 2, 3, 4, 6, 8],
        );
        fam.check_subadditive(1e-12).unwrap();
        fam.check_bounded(1.0).unwrap();
    }

    #[test]
    fn violation_reports_witness() {
        let fam = interval_family(|k, a| if k == 2 && a == 1 { 5.0 } else { 0.0 }, &[1, 2]);
        match fam.check_subadditive(0.0) {
            Err(Error::NotSubmultiplicative { k, l, alpha, beta }) => {
                assert_eq!((k, l), (1, 1));
                assert_eq!(alpha[0] + beta[0], 1);
            }
            other => panic!("expected a witness, got {other:?}"),
        }
        assert!(matches!(
            fam.check_bounded(1.0),
            Err(Error::Unbounded { k: 2, .. })
        ));
    }
}
