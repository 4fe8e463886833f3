use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Full-dimensional rational polytope in ℝⁿ, n ∈ {1, 2}.
///
/// The toric avatar of a big line bundle: sections of the k-th power are
/// spanned by the monomials `z^α`, `α ∈ kP ∩ ℤⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticePolytope {
    dim: usize,
    /// Counter-clockwise hull vertices (2-D) or `[lo, hi]` (1-D).
    vertices: Vec<Vec<Rational>>,
    halfspaces: Vec<HalfSpace>,
}

/// `normal · x ≤ bound` with a primitive integer normal.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<i64>,
    pub bound: Rational,
}

impl HalfSpace {
    fn contains_lattice(&self, x: &[i64], k: i64) -> bool {
        let lhs: i128 = self
            .normal
            .iter()
            .zip(x)
            .map(|(a, b)| *a as i128 * *b as i128)
            .sum();
        lhs * (*self.bound.denom() as i128) <= k as i128 * (*self.bound.numer() as i128)
    }

    /// Signed distance to the boundary, positive inside.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let norm = self
            .normal
            .iter()
            .map(|a| (*a as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        let lhs: f64 = self.normal.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
        (to_f64(self.bound) - lhs) / norm
    }
}

pub fn to_f64(q: Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn cross(o: &[Rational], a: &[Rational], b: &[Rational]) -> Rational {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

impl LatticePolytope {
    /// Convex hull of the given rational points.
    pub fn from_vertices(points: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if !(dim == 1 || dim == 2) {
            return Err(Error::DegeneratePolytope(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DegeneratePolytope(
                "vertices of mixed dimension".into(),
            ));
        }
        match dim {
            1 => {
                let lo = points.iter().map(|p| p[0]).min().expect("nonempty");
                let hi = points.iter().map(|p| p[0]).max().expect("nonempty");
                if lo == hi {
                    return Err(Error::DegeneratePolytope(
                        "zero volume (interval of length 0)".into(),
                    ));
                }
                let halfspaces = vec![
                    HalfSpace {
                        normal: vec![-1],
                        bound: -lo,
                    },
                    HalfSpace {
                        normal: vec![1],
                        bound: hi,
                    },
                ];
                Ok(Self {
                    dim,
                    vertices: vec![vec![lo], vec![hi]],
                    halfspaces,
                })
            }
            _ => {
                let hull = convex_hull(points);
                if hull.len() < 3 {
                    return Err(Error::DegeneratePolytope(
                        "zero volume (collinear vertices)".into(),
                    ));
                }
                let halfspaces = hull
                    .iter()
                    .zip(hull.iter().cycle().skip(1))
                    .map(|(p, q)| edge_halfspace(p, q))
                    .collect();
                Ok(Self {
                    dim,
                    vertices: hull,
                    halfspaces,
                })
            }
        }
    }

    pub fn from_f64_integer_vertices(points: &[Vec<i64>]) -> Result<Self> {
        Self::from_vertices(
            points
                .iter()
                .map(|p| p.iter().map(|&x| Rational::from_integer(x)).collect())
                .collect(),
        )
    }

    pub fn interval(lo: Rational, hi: Rational) -> Result<Self> {
        Self::from_vertices(vec![vec![lo], vec![hi]])
    }

    pub fn unit_interval() -> Self {
        Self::from_f64_integer_vertices(&[vec![0], vec![1]]).expect("valid")
    }

    /// `conv{(0,0), (1,0), (0,1)}`
    pub fn unit_triangle() -> Self {
        Self::from_f64_integer_vertices(&[vec![0, 0], vec![1, 0], vec![0, 1]]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(|q| to_f64(*q)).collect())
            .collect()
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn volume(&self) -> f64 {
        to_f64(self.volume_exact())
    }

    pub fn volume_exact(&self) -> Rational {
        match self.dim {
            1 => self.vertices[1][0] - self.vertices[0][0],
            _ => {
                let n = self.vertices.len();
                let twice = (0..n).fold(Rational::from_integer(0), |acc, i| {
                    let p = &self.vertices[i];
                    let q = &self.vertices[(i + 1) % n];
                    acc + p[0] * q[1] - q[0] * p[1]
                });
                twice / 2
            }
        }
    }

    /// Axis-aligned bounding box as `(lo, hi)` per axis.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|a| {
                let lo = self.vertices.iter().map(|v| v[a]).min().expect("nonempty");
                let hi = self.vertices.iter().map(|v| v[a]).max().expect("nonempty");
                (to_f64(lo), to_f64(hi))
            })
            .collect()
    }

    fn bounding_box_exact(&self) -> Vec<(Rational, Rational)> {
        (0..self.dim)
            .map(|a| {
                let lo = self.vertices.iter().map(|v| v[a]).min().expect("nonempty");
                let hi = self.vertices.iter().map(|v| v[a]).max().expect("nonempty");
                (lo, hi)
            })
            .collect()
    }

    pub fn contains_lattice(&self, x: &[i64], k: i64) -> bool {
        self.halfspaces.iter().all(|h| h.contains_lattice(x, k))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= -tol)
    }

    /// Distance from `x` to `∂P` (negative outside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.slack(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest bounding-box width.
    pub fn diameter(&self) -> f64 {
        self.bounding_box()
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }

    /// Integer points of `kP`, lexicographically ordered.
    pub fn lattice_points(&self, k: u32) -> Vec<Vec<i64>> {
        let k = k as i64;
        let ranges: Vec<(i64, i64)> = self
            .bounding_box_exact()
            .iter()
            .map(|(lo, hi)| {
                (
                    (*lo * k).ceil().to_integer(),
                    (*hi * k).floor().to_integer(),
                )
            })
            .collect();
        let mut out = Vec::new();
        match self.dim {
            1 => {
                for x in ranges[0].0..=ranges[0].1 {
                    out.push(vec![x]);
                }
            }
            _ => {
                for x in ranges[0].0..=ranges[0].1 {
                    for y in ranges[1].0..=ranges[1].1 {
                        let p = [x, y];
                        if self.contains_lattice(&p, k) {
                            out.push(p.to_vec());
                        }
                    }
                }
            }
        }
        out
    }

    /// `#(kP ∩ ℤⁿ)`
    pub fn count_lattice_points(&self, k: u32) -> usize {
        match self.dim {
            1 => {
                let (lo, hi) = self.bounding_box_exact()[0];
                let k = k as i64;
                ((hi * k).floor().to_integer() - (lo * k).ceil().to_integer() + 1).max(0) as usize
            }
            _ => self.lattice_points(k).len(),
        }
    }
}

fn edge_halfspace(p: &[Rational], q: &[Rational]) -> HalfSpace {
    // ccw orientation: interior on the left, outward normal (dy, -dx)
    let nx = q[1] - p[1];
    let ny = -(q[0] - p[0]);
    let den = lcm(*nx.denom(), *ny.denom());
    let mut a = (nx * den).to_integer();
    let mut b = (ny * den).to_integer();
    let g = gcd(a, b);
    a /= g;
    b /= g;
    let bound = p[0] * a + p[1] * b;
    HalfSpace {
        normal: vec![a, b],
        bound,
    }
}

/// Andrew's monotone chain; returns ccw vertices without collinear points.
fn convex_hull(mut pts: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec<Rational>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2
            && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p)
                <= Rational::from_integer(0)
        {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<Rational>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p)
                <= Rational::from_integer(0)
        {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// JSON form: `{"vertices": ["0", "3/2"]}` in 1-D or
/// `{"vertices": [["0","0"], ["1","0"], ["0","1"]]}` in 2-D.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolytopeSpec {
    pub vertices: Vec<VertexSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum VertexSpec {
    Scalar(String),
    Point(Vec<String>),
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| Error::Parse(format!("invalid rational {s:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d == 0 {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(parse(n)?, d))
        }
        None => Ok(Rational::from_integer(parse(s)?)),
    }
}

fn format_rational(q: Rational) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl PolytopeSpec {
    pub fn build(&self) -> Result<LatticePolytope> {
        let pts = self
            .vertices
            .iter()
            .map(|v| match v {
                VertexSpec::Scalar(s) => Ok(vec![parse_rational(s)?]),
                VertexSpec::Point(p) => p.iter().map(|s| parse_rational(s)).collect(),
            })
            .collect::<Result<Vec<_>>>()?;
        LatticePolytope::from_vertices(pts)
    }
}

impl From<&LatticePolytope> for PolytopeSpec {
    fn from(p: &LatticePolytope) -> Self {
        Self {
            vertices: p
                .vertices()
                .iter()
                .map(|v| match v.len() {
                    1 => VertexSpec::Scalar(format_rational(v[0])),
                    _ => VertexSpec::Point(v.iter().map(|q| format_rational(*q)).collect()),
                })
                .collect(),
        }
    }
}

impl LatticePolytope {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: PolytopeSpec =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        spec.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolytopeSpec::from(self)).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn interval_points() {
        let p = LatticePolytope::unit_interval();
        assert_eq!(
            p.lattice_points(3),
            vec![vec![0], vec![1], vec![2], vec![3]]
        );
    }

    #[test]
    fn triangle_counts_match_closed_form() {
        let t = LatticePolytope::unit_triangle();
        for k in 1..20u32 {
            let n = t.lattice_points(k).len();
            assert_eq!(n, ((k + 1) * (k + 2) / 2) as usize);
            // 2·n_k/k² = 1 + 3/k + 2/k²
            let kk = k as f64;
            assert!(
                (2.0 * n as f64 / (kk * kk) - (1.0 + 3.0 / kk + 2.0 / (kk * kk))).abs() < 1e-12
            );
        }
        assert_eq!(t.lattice_points(2).len(), 6);
        assert_eq!(t.volume(), 0.5);
    }

    #[test]
    fn lexicographic_order() {
        let pts = LatticePolytope::unit_triangle().lattice_points(2);
        let mut sorted = pts.clone();
        sorted.sort();
        assert_eq!(pts, sorted);
    }

    #[test]
    fn rational_vertices() {
        let p = LatticePolytope::from_vertices(vec![
            vec![q(0, 1), q(0, 1)],
            vec![q(3, 2), q(0, 1)],
            vec![q(0, 1), q(3, 2)],
        ])
        .unwrap();
        assert_eq!(p.volume_exact(), q(9, 8));
        assert_eq!(p.lattice_points(1).len(), 3);
        assert_eq!(p.lattice_points(2).len(), 10);
        let i = LatticePolytope::interval(q(0, 1), q(3, 2)).unwrap();
        assert_eq!(i.count_lattice_points(3), 5);
        assert_eq!(i.lattice_points(3).len(), 5);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(matches!(
            LatticePolytope::from_f64_integer_vertices(&[vec![0, 0], vec![1, 1], vec![2, 2]]),
            Err(Error::DegeneratePolytope(_))
        ));
        assert!(LatticePolytope::from_f64_integer_vertices(&[vec![1], vec![1]]).is_err());
    }

    #[test]
    fn hull_drops_interior_points() {
        let p = LatticePolytope::from_f64_integer_vertices(&[
            vec![0, 0],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
            vec![2, 2],
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.volume(), 4.0);
    }

    #[test]
    fn json_round_trip() {
        let p = LatticePolytope::from_json(r#"{"vertices": [["0","0"],["3/2","0"],["0","3/2"]]}"#)
            .unwrap();
        assert_eq!(LatticePolytope::from_json(&p.to_json()).unwrap(), p);
        let i = LatticePolytope::from_json(r#"{"vertices": ["0", "1"]}"#).unwrap();
        assert_eq!(i, LatticePolytope::unit_interval());
        assert!(LatticePolytope::from_json(r#"{"vertices": ["0", "1/0"]}"#).is_err());
    }
}
