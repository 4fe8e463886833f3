use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::polytope::LatticePolytope;

/// Uniform 1-D grid `lo = x_0 < … < x_{n-1} = hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "axis needs at least 2 nodes, got {n}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "invalid axis range [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Cell index `i` and local coordinate `t ∈ [0,1]` of `x`, clamped.
    fn locate(&self, x: f64) -> (usize, f64) {
        let s = ((x - self.lo) / self.step()).clamp(0.0, (self.n - 1) as f64);
        let i = (s.floor() as usize).min(self.n - 2);
        (i, s - i as f64)
    }
}

/// Tensor grid in one or two dimensions; values are stored with axis 0
/// varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if !(axes.len() == 1 || axes.len() == 2) {
            return Err(Error::InvalidParameter(format!(
                "grids are 1-D or 2-D, got {}",
                axes.len()
            )));
        }
        Ok(Self { axes })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize, dim: usize) -> Result<Self> {
        Self::new(
            (0..dim)
                .map(|_| Axis::new(lo, hi, n))
                .collect::<Result<_>>()?,
        )
    }

    /// Bounding-box grid of `P` with `n` nodes per axis.
    pub fn over_polytope(p: &LatticePolytope, n: usize) -> Result<Self> {
        Self::new(
            p.bounding_box()
                .into_iter()
                .map(|(lo, hi)| Axis::new(lo, hi, n))
                .collect::<Result<_>>()?,
        )
    }

    /// Grid of `(1/k)ℤⁿ` over the bounding box of `P`; its nodes inside `P`
    /// are the points `α/k`, `α ∈ kP ∩ ℤⁿ`.
    pub fn lattice(p: &LatticePolytope, k: u32) -> Result<Self> {
        let kf = k as f64;
        Self::new(
            p.bounding_box()
                .into_iter()
                .map(|(lo, hi)| {
                    let (a, b) = ((lo * kf - 1e-9).ceil(), (hi * kf + 1e-9).floor());
                    Axis::new(a / kf, b / kf, (b - a) as usize + 1)
                })
                .collect::<Result<_>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    /// Multi-index of flat index `k`.
    pub fn unflatten(&self, k: usize) -> Vec<usize> {
        let n0 = self.axes[0].len();
        match self.dim() {
            1 => vec![k],
            _ => vec![k % n0, k / n0],
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] + self.axes[0].len() * idx[1],
        }
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.unflatten(k)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.node(i))
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }
}

/// Where a grid function lives: the whole box, or the polytope `P` (nodes
/// of the bounding box outside `P` carry no weight).
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Box,
    Polytope(LatticePolytope),
}

/// Sampled real function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    domain: Domain,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, domain: Domain) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid values must be finite".into()));
        }
        if let Domain::Polytope(p) = &domain {
            if p.dim() != grid.dim() {
                return Err(Error::GridMismatch(
                    "polytope and grid dimensions differ".into(),
                ));
            }
        }
        Ok(Self {
            grid,
            values,
            domain,
        })
    }

    pub fn from_fn(grid: Grid, domain: Domain, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = grid.points().map(|x| f(&x)).collect();
        Self::new(grid, values, domain)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn polytope(&self) -> Option<&LatticePolytope> {
        match &self.domain {
            Domain::Polytope(p) => Some(p),
            Domain::Box => None,
        }
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.grid.flatten(idx)]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.domain.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "functions live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// `(1-t)·self + t·other`
    pub fn lerp(&self, other: &Self, t: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Piecewise (bi)linear interpolation, clamped to the grid box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        match self.dim() {
            1 => {
                let (i, t) = self.grid.axis(0).locate(x[0]);
                (1.0 - t) * self.values[i] + t * self.values[i + 1]
            }
            _ => {
                let (i, s) = self.grid.axis(0).locate(x[0]);
                let (j, t) = self.grid.axis(1).locate(x[1]);
                let v = |a: usize, b: usize| self.at(&[a, b]);
                (1.0 - s) * (1.0 - t) * v(i, j)
                    + s * (1.0 - t) * v(i + 1, j)
                    + (1.0 - s) * t * v(i, j + 1)
                    + s * t * v(i + 1, j + 1)
            }
        }
    }

    /// Writes `axis0[,axis1],value` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::Parse(e.to_string());
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.dim()).map(|a| format!("axis{a}")).collect();
        header.push("value".into());
        wr.write_record(&header).map_err(io)?;
        for (k, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self
                .grid
                .point(k)
                .iter()
                .map(|x| format!("{x:.17e}"))
                .collect();
            row.push(format!("{v:.17e}"));
            wr.write_record(&row).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads the format produced by [`write_csv`](Self::write_csv). Rows may
    /// come in any order but must form a complete uniform tensor grid.
    pub fn read_csv<R: Read>(r: R, domain: Domain) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        let dim = headers.len().saturating_sub(1);
        if !(dim == 1 || dim == 2) || headers.get(dim) != Some("value") {
            return Err(Error::Parse("expected header axis0[,axis1],value".into()));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != dim + 1 {
                return Err(Error::Parse("ragged CSV row".into()));
            }
            rows.push(row);
        }
        let mut axes = Vec::with_capacity(dim);
        for a in 0..dim {
            let mut xs: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
            let axis = Axis::new(
                xs[0],
                *xs.last().ok_or_else(|| Error::Parse("empty grid".into()))?,
                xs.len(),
            )?;
            let h = axis.step();
            if xs
                .iter()
                .enumerate()
                .any(|(i, x)| (x - axis.node(i)).abs() > 1e-9 * h)
            {
                return Err(Error::GridMismatch(
                    "CSV nodes are not uniformly spaced".into(),
                ));
            }
            axes.push(axis);
        }
        let grid = Grid::new(axes)?;
        if rows.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} rows for a full tensor grid, got {}",
                grid.len(),
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; grid.len()];
        for row in &rows {
            let idx: Vec<usize> = (0..dim)
                .map(|a| {
                    let ax = grid.axis(a);
                    ((row[a] - ax.lo()) / ax.step()).round() as usize
                })
                .collect();
            values[grid.flatten(&idx)] = row[dim];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::GridMismatch(
                "duplicate or missing grid nodes".into(),
            ));
        }
        Self::new(grid, values, domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_2d() {
        let grid = Grid::uniform(-1.0, 2.0, 5, 2).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| x[0] * x[0] - 3.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("axis0,axis1,value"));
        let g = GridFunction::read_csv(buf.as_slice(), Domain::Box).unwrap();
        assert!(f.max_abs_diff(&g).unwrap() < 1e-15);
    }

    #[test]
    fn csv_rejects_incomplete_grid() {
        let text = "axis0,axis1,value\n0,0,1\n1,0,2\n0,1,3\n";
        assert!(GridFunction::read_csv(text.as_bytes(), Domain::Box).is_err());
    }

    #[test]
    fn bilinear_interpolation_reproduces_bilinear() {
        let grid = Grid::uniform(0.0, 1.0, 4, 2).unwrap();
        let f = GridFunction::from_fn(grid, Domain::Box, |x| {
            1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]
        })
        .unwrap();
        let x = [0.37, 0.81];
        assert!((f.interpolate(&x) - (1.0 + 0.74 - 0.81 + 0.5 * 0.37 * 0.81)).abs() < 1e-14);
    }

    #[test]
    fn last_node_is_exact() {
        let a = Axis::new(-12.0, 12.0, 257).unwrap();
        assert_eq!(a.node(256), 12.0);
        assert_eq!(a.node(128), 0.0);
    }
}
