//! Verification and construction of spherical t-designs on S^d.
//!
//! A spherical t-design is a finite point set whose equal-weight average
//! integrates every polynomial of degree at most t exactly over the
//! sphere. The crate computes the characterizing quantities A_{N,t} and
//! D_{N,t} from kernel (Gegenbauer) sums, tests fundamental systems by
//! numerical rank, certifies designs along the variational and nonlinear
//! routes, and constructs designs by Riemannian optimization.
//!
//! Everything is generic over the floating scalar through [`Scalar`]
//! (implemented for `f32` and `f64`); the `*F64`/`*F32` aliases below fix
//! the common concrete choices.

pub mod error;
pub mod fundamental;
pub mod geometry;
pub mod harmonics;
pub mod io;
pub mod kahan;
pub mod optimizer;
pub mod quantities;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use geometry::PointSet;
pub use optimizer::{certify, construct, minimize_a, solve_c, Route, Tolerances, Verdict};
pub use quantities::{a_quantity, d_quantity, design_quantities};
pub use scalar::Scalar;
pub use special::SphereDim;

pub type PointSetF64 = geometry::PointSet<f64>;
pub type PointSetF32 = geometry::PointSet<f32>;
pub type DesignQuantitiesF64 = quantities::DesignQuantities<f64>;
pub type DesignQuantitiesF32 = quantities::DesignQuantities<f32>;
pub type TolerancesF64 = optimizer::Tolerances<f64>;
pub type TolerancesF32 = optimizer::Tolerances<f32>;
