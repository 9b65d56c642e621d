//! Nonlinear Lebesgue spaces `L^p_h(M, N)` of mappings from a finite measure
//! space into a metric space, with curve calculus on top.

pub mod cli;
pub mod curve_transport;
pub mod curves;
pub mod error;
pub mod finsler_speed;
pub mod fubini_sections;
pub mod geometry;
pub mod io;
pub mod lebesgue_maps;
pub mod metric;
pub mod sampling;
pub mod smooth;
pub mod suites;
pub mod target_spaces;

pub use error::{Error, Result};
pub use metric::MetricSpace;
