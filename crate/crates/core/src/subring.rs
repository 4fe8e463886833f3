//! Dimension growth of the subring generated in one degree.
//!
//! On a toric model the monomials of degree `m` are the lattice points of
//! `mP`, and the span of `k`-fold products is indexed by the `k`-fold
//! sumset of those points, a subset of `kmP ∩ ℤⁿ`.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normspace::Label;
use crate::toric::LatticePolytope;

/// Largest lattice-point set the sumset iteration will hold.
pub const MEMORY_GUARD: usize = 10_000_000;

/// `R_k = G + … + G` (`k` times) for `G = mP ∩ ℤⁿ`.
#[derive(Clone, Debug)]
pub struct SumsetState {
    polytope: LatticePolytope,
    m: u32,
    generators: Vec<Label>,
    k: u32,
    reach: HashSet<Label>,
}

impl SumsetState {
    /// State at `k = 1`.
    pub fn new(p: &LatticePolytope, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        let generators = p.lattice_points(m);
        if generators.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{m}P contains no lattice points"
            )));
        }
        Ok(Self {
            polytope: p.clone(),
            m,
            reach: generators.iter().cloned().collect(),
            generators,
            k: 1,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn generators(&self) -> &[Label] {
        &self.generators
    }

    pub fn reach(&self) -> &HashSet<Label> {
        &self.reach
    }

    pub fn len(&self) -> usize {
        self.reach.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reach.is_empty()
    }

    /// `R_{k+1} = R_k + G`.
    pub fn step(&mut self) -> Result<()> {
        let bound = full_dim(&self.polytope, self.m * (self.k + 1))?;
        let mut next = HashSet::with_capacity(bound);
        for r in &self.reach {
            for g in &self.generators {
                next.insert(r.iter().zip(g).map(|(a, b)| a + b).collect::<Label>());
            }
        }
        self.reach = next;
        self.k += 1;
        Ok(())
    }

    pub fn advance_to(&mut self, k: u32) -> Result<()> {
        if k < self.k {
            return Err(Error::InvalidParameter(format!(
                "cannot go back from k = {} to {k}",
                self.k
            )));
        }
        while self.k < k {
            self.step()?;
        }
        Ok(())
    }
}

/// `#(dP ∩ ℤⁿ)`, refusing sets beyond [`MEMORY_GUARD`].
fn full_dim(p: &LatticePolytope, d: u32) -> Result<usize> {
    let box_size: f64 = p
        .bounding_box()
        .iter()
        .map(|(lo, hi)| ((hi - lo) * d as f64).floor() + 1.0)
        .product();
    if box_size > 2.0 * MEMORY_GUARD as f64 {
        return Err(Error::MemoryGuard(box_size as usize));
    }
    let n = p.count_lattice_points(d);
    if n > MEMORY_GUARD {
        return Err(Error::MemoryGuard(n));
    }
    Ok(n)
}

/// `|R_k|`, the dimension of the span of `k`-fold products of degree-`m`
/// monomials.
pub fn component_dim(p: &LatticePolytope, m: u32, k: u32) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut s = SumsetState::new(p, m)?;
    s.advance_to(k)?;
    Ok(s.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub m: u32,
    pub k: u32,
    pub dim_subring: usize,
    pub dim_full: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
    /// For each `ε`, the least `m0` such that every `m ≥ m0` in the range
    /// keeps its ratio `≥ 1 − ε` on the upper half of the `k` range;
    /// `None` if no such `m0` exists in the range.
    pub thresholds: Vec<(f64, Option<u32>)>,
}

impl DensityReport {
    /// CSV with header `m,k,dim_subring,dim_full,ratio`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
        }
        out.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }
}

/// Ratios `|R_k| / #(kmP ∩ ℤⁿ)` over the given ranges; `m` columns run in
/// parallel.
pub fn density_report(
    p: &LatticePolytope,
    ms: &[u32],
    ks: &[u32],
    eps: &[f64],
) -> Result<DensityReport> {
    if ms.is_empty() || ks.is_empty() {
        return Err(Error::InvalidParameter(
            "m and k ranges must be nonempty".into(),
        ));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let columns: Vec<Vec<DensityRow>> = ms
        .par_iter()
        .map(|&m| {
            let mut s = SumsetState::new(p, m)?;
            ks.iter()
                .map(|&k| {
                    let full = full_dim(p, m * k)?;
                    s.advance_to(k)?;
                    Ok(DensityRow {
                        m,
                        k,
                        dim_subring: s.len(),
                        dim_full: full,
                        ratio: s.len() as f64 / full as f64,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let k_tail = ks[(ks.len() - 1) / 2];
    let tail_min = |col: &[DensityRow]| {
        col.iter()
            .filter(|r| r.k >= k_tail)
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min)
    };
    let thresholds = eps
        .iter()
        .map(|&e| {
            let mut m0 = None;
            for (m, col) in ms.iter().zip(&columns).rev() {
                if tail_min(col) >= 1.0 - e {
                    m0 = Some(*m);
                } else {
                    break;
                }
            }
            (e, m0)
        })
        .collect();
    Ok(DensityReport {
        rows: columns.into_iter().flatten().collect(),
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    /// conv{(0,0), (3/2,0), (0,3/2)}: degree-1 generators miss the
    /// points of 3/2·Δ needed for odd degrees.
    fn wide_triangle() -> LatticePolytope {
        LatticePolytope::from_vertices(vec![
            vec![r(0, 1), r(0, 1)],
            vec![r(3, 2), r(0, 1)],
            vec![r(0, 1), r(3, 2)],
        ])
        .unwrap()
    }

    #[test]
    fn interval_saturates() {
        let p = LatticePolytope::unit_interval();
        for k in 1..8 {
            assert_eq!(component_dim(&p, 2, k).unwrap(), 2 * k as usize + 1);
        }
    }

    #[test]
    fn unimodular_triangle_saturates() {
        assert_eq!(
            component_dim(&LatticePolytope::unit_triangle(), 1, 4).unwrap(),
            15
        );
    }

    #[test]
    fn wide_triangle_matches_enumeration() {
        let p = wide_triangle();
        let want = [
            (
                1,
                vec![(3, 3), (6, 10), (10, 15), (15, 28), (21, 36), (28, 55)],
            ),
            (
                3,
                vec![
                    (15, 15),
                    (45, 55),
                    (91, 105),
                    (153, 190),
                    (231, 276),
                    (325, 406),
                ],
            ),
        ];
        for (m, row) in want {
            let rep = density_report(&p, &[m], &[1, 2, 3, 4, 5, 6], &[]).unwrap();
            for (r, (sub, full)) in rep.rows.iter().zip(row) {
                assert_eq!((r.dim_subring, r.dim_full), (sub, full), "m={m} k={}", r.k);
            }
        }
        let rep = density_report(&p, &[2], &[1, 2, 3, 4, 5, 6], &[]).unwrap();
        assert!(rep.rows.iter().all(|r| r.ratio == 1.0));
    }

    #[test]
    fn epsilon_threshold() {
        let ms: Vec<u32> = (1..=10).collect();
        let ks: Vec<u32> = (1..=12).collect();
        let rep = density_report(&wide_triangle(), &ms, &ks, &[0.1, 0.05]).unwrap();
        // m = 6 saturates; every m ≥ 6 stays above 0.9 (m = 5 bottoms out near 0.873)
        assert_eq!(rep.thresholds[0], (0.1, Some(6)));
        assert_eq!(rep.thresholds[1], (0.05, Some(10)));
        assert!(rep.rows.iter().all(|r| r.ratio > 0.0 && r.ratio <= 1.0));
        // at fixed large k, odd m rows improve with m
        let at = |m: u32| {
            rep.rows
                .iter()
                .find(|r| r.m == m && r.k == 12)
                .unwrap()
                .ratio
        };
        assert!(at(1) < at(3) && at(3) < at(5) && at(5) < at(7) && at(7) < at(9));
    }

    #[test]
    fn semigroup_and_translation_monotonicity() {
        let p = wide_triangle();
        let mut states: Vec<SumsetState> = Vec::new();
        let mut s = SumsetState::new(&p, 1).unwrap();
        for k in 1..=5 {
            s.advance_to(k).unwrap();
            states.push(s.clone());
        }
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                if i + j + 2 > 5 {
                    continue;
                }
                let sum = &states[i + j + 1];
                for x in a.reach().iter().take(20) {
                    for y in b.reach().iter().take(20) {
                        let z: Label = x.iter().zip(y).map(|(u, v)| u + v).collect();
                        assert!(sum.reach().contains(&z));
                    }
                }
            }
        }
        let g = &states[0].generators()[0];
        for w in states.windows(2) {
            assert!(w[0].len() <= w[1].len());
            for x in w[0].reach() {
                let shifted: Label = x.iter().zip(g).map(|(a, b)| a + b).collect();
                assert!(w[1].reach().contains(&shifted));
            }
        }
    }

    #[test]
    fn memory_guard() {
        let big = LatticePolytope::from_vertices(vec![
            vec![r(0, 1), r(0, 1)],
            vec![r(100, 1), r(0, 1)],
            vec![r(0, 1), r(100, 1)],
        ])
        .unwrap();
        assert!(matches!(
            component_dim(&big, 50, 2),
            Err(Error::MemoryGuard(_))
        ));
        assert!(component_dim(&LatticePolytope::unit_interval(), 0, 1).is_err());
    }

    #[test]
    fn csv_layout() {
        let rep = density_report(&LatticePolytope::unit_interval(), &[1], &[1, 2], &[]).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "m,k,dim_subring,dim_full,ratio"
        );
        assert_eq!(text.lines().nth(2).unwrap(), "1,2,3,3,1.0");
    }
}
