//! Noncommutative Minkowski phase space: deformed brackets, the deformed
//! geodesic flow, the Hamilton–Jacobi canonical map, the recursion operator
//! in both coordinate systems, its trace constants of motion, and numerical
//! checks of every identity they are supposed to satisfy.

pub mod calculus;
pub mod canonical;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod params;
pub mod point;
pub mod recursion;
pub mod report;
pub mod scalar;
pub mod verify;

pub use canonical::{from_canonical, to_canonical};
pub use error::{Error, Result};
pub use params::{theta, validate_params, DeformationParams, ThetaVector};
pub use point::{sample_points, CanonicalPoint, PhasePoint};
pub use scalar::{Dual, Scalar, DIM};
