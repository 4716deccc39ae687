//! Difference-quotient seminorms for vector fields, harmonic extension to the
//! upper half-space, and planar singular integrals on grids.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod diffops;
pub mod error;
pub mod fields;
pub mod halfspace;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod seminorms;
pub mod singular;

pub use error::{Error, Result};
pub use fields::{find_entry, make_zoo, ScalarField, VectorField, ZooEntry};
pub use linalg::Matrix;
pub use seminorms::{estimate_seminorm, ProbeConfig, SeminormEstimate, SeminormKind};
