//! The distance interface shared by every ambient space a curve can live in.

use crate::error::Result;

/// A metric space whose points can be stored on curves.
///
/// Implementations must return finite, symmetric, nonnegative distances for
/// points that passed [`MetricSpace::validate`]; callers validate once at
/// construction time and then use [`MetricSpace::dist`] freely.
pub trait MetricSpace: Clone + std::fmt::Debug + Send + Sync {
    type Point: Clone + std::fmt::Debug + Send + Sync;

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> f64;

    fn validate(&self, _point: &Self::Point) -> Result<()> {
        Ok(())
    }

    /// Structural compatibility test used when two curves are compared.
    fn same_space(&self, other: &Self) -> bool;
}
