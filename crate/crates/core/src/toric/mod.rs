//! Convex-analytic side of toric geometry.
//!
//! A torus-invariant metric on a toric line bundle is a convex potential
//! `φ(x)` in logarithmic coordinates, or dually its symplectic potential
//! `g = φ*` on the moment polytope `P`. Everything here works with sampled
//! potentials on uniform grids.

pub mod envelope;
pub mod grid;
pub mod legendre;
pub mod mabuchi;
pub mod measure;
pub mod polytope;
pub mod quadrature;

pub use envelope::{convex_envelope, polytope_envelope, ConvexGridFunction};
pub use grid::{Axis, Domain, Grid, GridFunction};
pub use legendre::{discrete_legendre, legendre_1d, legendre_at_points, LegendreOptions};
pub use mabuchi::{energy_difference, mabuchi_dp};
pub use measure::{ma_measure_1d, pushforward, pushforward_moments, Histogram, Measure1D};
pub use polytope::{parse_rational, HalfSpace, LatticePolytope, PolytopeSpec, Rational};
pub use quadrature::{mean_over, quadrature_weights};
