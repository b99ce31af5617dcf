//! Immersed weak Galerkin (IWG) solver for second-order elliptic interface
//! problems
//!
//! ```text
//!   -div(beta grad u) = f   in Omega- and Omega+
//!                   u = g   on the outer boundary
//!                 [u] = 0,  [beta grad u . n] = 0   across the interface
//! ```
//!
//! with a piecewise constant coefficient `beta`, discretized on uniform
//! Cartesian triangulations that do not follow the interface. Elements cut
//! by the interface carry linear immersed finite element (IFE) shape
//! functions for the interior part of the weak function; every edge carries
//! one constant.
//!
//! The pipeline is
//! [`mesh`] → [`geometry`] → [`ife`] → [`assembly`] → [`solver`] →
//! [`error_analysis`], driven end-to-end by [`study`].

pub mod assembly;
pub mod dense;
pub mod error;
pub mod error_analysis;
pub mod export;
pub mod geometry;
pub mod ife;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
pub use mesh::{Point2, Rect, UniformMesh};
