use crate::error::{Error, Result};

use super::envelope::ConvexGridFunction;
use super::grid::{Domain, GridFunction};
use super::quadrature::quadrature_weights;

/// Piecewise-constant density on contiguous bins.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        let w = (hi - lo) / bins as f64;
        Self {
            edges: (0..=bins)
                .map(|i| if i == bins { hi } else { lo + w * i as f64 })
                .collect(),
            masses: vec![0.0; bins],
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `∫ x^m` with mass spread uniformly inside each bin.
    pub fn moment(&self, m: u32) -> f64 {
        let p = m as i32 + 1;
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| {
                let (a, b) = (self.edges[i], self.edges[i + 1]);
                w * (b.powi(p) - a.powi(p)) / (p as f64 * (b - a))
            })
            .sum()
    }

    /// CSV rows `lo,hi,mass`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, w)| (self.edges[i], self.edges[i + 1], *w))
    }
}

/// Finite measure on ℝ: point masses plus an absolutely continuous part.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Measure1D {
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<Histogram>,
}

impl Measure1D {
    /// Atoms at the given points; coincident points are merged.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Self {
            atoms: merged,
            density: None,
        }
    }

    pub fn dirac(x: f64, mass: f64) -> Self {
        Self::from_atoms(vec![(x, mass)])
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>()
            + self.density.as_ref().map_or(0.0, Histogram::total_mass)
    }

    pub fn moment(&self, m: u32) -> f64 {
        self.atoms
            .iter()
            .map(|(x, w)| w * x.powi(m as i32))
            .sum::<f64>()
            + self.density.as_ref().map_or(0.0, |h| h.moment(m))
    }

    pub fn mean(&self) -> f64 {
        self.moment(1) / self.total_mass()
    }

    /// Smallest interval carrying all mass.
    pub fn support(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (x, w) in &self.atoms {
            if *w > 0.0 {
                lo = lo.min(*x);
                hi = hi.max(*x);
            }
        }
        if let Some(h) = &self.density {
            for (a, b, w) in h.rows() {
                if w > 0.0 {
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// All mass binned on `bins` equal bins over `[lo, hi]` (atoms included).
    pub fn binned(&self, lo: f64, hi: f64, bins: usize) -> Histogram {
        let mut h = Histogram::uniform(lo, hi, bins);
        let width = (hi - lo) / bins as f64;
        let slot = |x: f64| (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        for (x, w) in &self.atoms {
            h.masses[slot(*x)] += w;
        }
        if let Some(d) = &self.density {
            for (a, b, w) in d.rows() {
                h.masses[slot(0.5 * (a + b))] += w;
            }
        }
        h
    }
}

/// Real Monge–Ampère measure `φ''` of a convex 1-D grid function.
///
/// Node masses are the jumps of the chord slope, so the total mass is the
/// slope range `φ'(x_max) − φ'(x_min)` and kinks are never smeared. A node
/// whose mass exceeds `√h` is reported as an atom; the rest form the
/// absolutely continuous part on node-centred bins.
pub fn ma_measure_1d(phi: &ConvexGridFunction) -> Result<Measure1D> {
    if phi.dim() != 1 {
        return Err(Error::Unsupported("Monge–Ampère measures are 1-D only"));
    }
    let ax = phi.grid().axis(0);
    let (n, h) = (ax.len(), ax.step());
    if n < 3 {
        return Ok(Measure1D::default());
    }
    let v = phi.values();
    let slope = |i: usize| (v[i + 1] - v[i]) / h;
    let threshold = h.sqrt();
    let mut atoms = Vec::new();
    let mut hist = Histogram {
        edges: (1..n).map(|i| ax.node(i) - 0.5 * h).collect(),
        masses: vec![0.0; n - 2],
    };
    for i in 1..n - 1 {
        let m = (slope(i) - slope(i - 1)).max(0.0);
        if m > threshold {
            atoms.push((ax.node(i), m));
        } else {
            hist.masses[i - 1] = m;
        }
    }
    let mut out = Measure1D::from_atoms(atoms);
    out.density = Some(hist);
    Ok(out)
}

/// Distribution of `g` under normalized Lebesgue measure on its polytope,
/// as a histogram with `bins` bins over the range of `g` (mass is deposited
/// linearly between the two nearest bins). A constant `g` gives a Dirac mass.
pub fn pushforward(g: &GridFunction, bins: usize) -> Result<Measure1D> {
    let (w, vals) = weighted_samples(g)?;
    let lo = vals
        .iter()
        .zip(&w)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    let hi = vals
        .iter()
        .zip(&w)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        return Ok(Measure1D::dirac(0.5 * (lo + hi), 1.0));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be positive".into()));
    }
    let mut hist = Histogram::uniform(lo, hi, bins);
    let width = (hi - lo) / bins as f64;
    for (v, m) in vals.iter().zip(&w) {
        if *m == 0.0 {
            continue;
        }
        let s = ((v - lo) / width - 0.5).clamp(0.0, (bins - 1) as f64);
        let i = (s.floor() as usize).min(bins.saturating_sub(2));
        let t = if bins == 1 { 0.0 } else { s - i as f64 };
        hist.masses[i] += (1.0 - t) * m;
        if bins > 1 {
            hist.masses[i + 1] += t * m;
        }
    }
    Ok(Measure1D {
        atoms: Vec::new(),
        density: Some(hist),
    })
}

/// Moments `(1/vol P)·∫_P g^m`, `m = 0..=max_m`, by quadrature.
pub fn pushforward_moments(g: &GridFunction, max_m: u32) -> Result<Vec<f64>> {
    let (w, vals) = weighted_samples(g)?;
    Ok((0..=max_m)
        .map(|m| w.iter().zip(&vals).map(|(a, v)| a * v.powi(m as i32)).sum())
        .collect())
}

/// Normalized quadrature weights over the polytope of `g`, and its values.
fn weighted_samples(g: &GridFunction) -> Result<(Vec<f64>, Vec<f64>)> {
    let Domain::Polytope(p) = g.domain() else {
        return Err(Error::InvalidParameter(
            "pushforward needs a function on a polytope".into(),
        ));
    };
    let vol = p.volume();
    let w: Vec<f64> = quadrature_weights(g.grid(), p)
        .into_iter()
        .map(|x| x / vol)
        .collect();
    Ok((w, g.values().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::grid::Grid;
    use crate::toric::polytope::LatticePolytope;

    #[test]
    fn abs_has_unit_atom_at_zero() {
        let grid = Grid::uniform(-1.0, 1.0, 201, 1).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| x[0].abs()).unwrap();
        let mu = ma_measure_1d(&ConvexGridFunction::new(f).unwrap()).unwrap();
        assert_eq!(mu.atoms.len(), 1);
        assert!(mu.atoms[0].0.abs() < 1e-15);
        assert!((mu.atoms[0].1 - 2.0).abs() < 1e-12);
        assert!((mu.total_mass() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_potential_has_density() {
        let grid = Grid::uniform(-1.0, 1.0, 401, 1).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| 0.5 * x[0] * x[0]).unwrap();
        let mu = ma_measure_1d(&ConvexGridFunction::new(f).unwrap()).unwrap();
        assert!(mu.atoms.is_empty());
        // chord slopes span [−1 + h/2, 1 − h/2]
        assert!((mu.total_mass() - (2.0 - 0.005)).abs() < 1e-10);
    }

    #[test]
    fn uniform_pushforward_moments() {
        let p = LatticePolytope::unit_interval();
        let grid = Grid::over_polytope(&p, 4001).unwrap();
        let g = GridFunction::from_fn(grid, Domain::Polytope(p), |x| x[0]).unwrap();
        let mu = pushforward(&g, 400).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        for m in 1..5u32 {
            assert!((mu.moment(m) - 1.0 / (m as f64 + 1.0)).abs() < 1e-3);
        }
        let exact = pushforward_moments(&g, 4).unwrap();
        for (m, v) in exact.iter().enumerate() {
            assert!((v - 1.0 / (m as f64 + 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_pushforward_is_dirac() {
        let p = LatticePolytope::unit_triangle();
        let grid = Grid::over_polytope(&p, 11).unwrap();
        let g = GridFunction::from_fn(grid, Domain::Polytope(p), |_| 0.7).unwrap();
        let mu = pushforward(&g, 50).unwrap();
        assert_eq!(mu.atoms.len(), 1);
        assert!((mu.atoms[0].0 - 0.7).abs() < 1e-15);
        assert!((mu.total_mass() - 1.0).abs() < 1e-15);
    }
}
