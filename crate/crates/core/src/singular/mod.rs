//! Planar and periodic singular integrals on uniform grids.

pub mod biot_savart;
pub mod cauchy;
pub mod fft;
pub mod grid;
pub mod gridops;
pub mod kernel;
pub mod spectral;

pub use biot_savart::{biot_savart, disk_vorticity, quadrant_vorticity, BiotSavartEvaluator};
pub use cauchy::cauchy_transform;
pub use fft::{SpectralPlan, ZeroMode};
pub use grid::{BoundaryMode, GridField};
pub use gridops::{grid_derivative_bundle, grid_partial};
pub use spectral::{beurling_recover_dbar, beurling_tail_estimate, hodge_check, riesz_transform, HodgeReport};
