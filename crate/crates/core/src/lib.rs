//! Moving-frame numerics for semilinear SPDEs in the semigroup framework.
//!
//! A diagonal contraction semigroup is dilated to a unitary group on a larger
//! gridded space; SPDE paths are transported to SDE paths there and back. On top
//! of that machinery sit the staged Ito-sum approximations and the Monte Carlo
//! experiments around the infinite-dimensional Tanaka equation.

pub mod error;
pub mod experiments;
pub mod ito_approx;
pub mod lab;
pub mod moving_frame;
pub mod noise;
pub mod report;
pub mod semigroups;
pub mod solvers;
pub mod spaces;

pub use error::{FrameError, Result};
