use crate::error::{Error, Result};
use crate::metric::MetricSpace;

use super::{check_increasing, check_subinterval};

/// Càdlàg piecewise-constant curve on `[a, b]`.
///
/// Piece `i` occupies `[s_i, s_{i+1})`; the value at `b` is the last piece's
/// value, so the curve is also left-continuous at `b`.
#[derive(Clone, Debug)]
pub struct StepCurve<S: MetricSpace> {
    ambient: S,
    breakpoints: Vec<f64>,
    values: Vec<S::Point>,
}

impl<S: MetricSpace> StepCurve<S> {
    pub fn new(ambient: S, breakpoints: Vec<f64>, values: Vec<S::Point>) -> Result<Self> {
        check_increasing(&breakpoints, "step curve breakpoints")?;
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::DimensionMismatch {
                expected: breakpoints.len() - 1,
                found: values.len(),
            });
        }
        for v in &values {
            ambient.validate(v)?;
        }
        Ok(Self {
            ambient,
            breakpoints,
            values,
        })
    }

    pub fn constant(ambient: S, a: f64, b: f64, value: S::Point) -> Result<Self> {
        Self::new(ambient, vec![a, b], vec![value])
    }

    pub(crate) fn from_parts_unchecked(ambient: S, breakpoints: Vec<f64>, values: Vec<S::Point>) -> Self {
        Self {
            ambient,
            breakpoints,
            values,
        }
    }

    pub fn ambient(&self) -> &S {
        &self.ambient
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// One value per piece.
    pub fn values(&self) -> &[S::Point] {
        &self.values
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    /// Index of the piece containing `t` (the last piece for `t = b`).
    pub fn piece_at(&self, t: f64) -> usize {
        let m = self.values.len();
        // number of interior breakpoints <= t
        self.breakpoints[1..m].partition_point(|&s| s <= t)
    }

    pub fn value_at(&self, t: f64) -> &S::Point {
        &self.values[self.piece_at(t)]
    }

    /// `(time, size)` of every jump, in time order.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        self.values
            .windows(2)
            .enumerate()
            .map(|(i, w)| (self.breakpoints[i + 1], self.ambient.dist(&w[0], &w[1])))
            .collect()
    }

    /// Variation on the open interval `(lo, hi)`: the sum of jump sizes at
    /// breakpoints strictly inside it.
    pub fn variation(&self, lo: f64, hi: f64) -> Result<f64> {
        let (a, b) = self.interval();
        check_subinterval(a, b, lo, hi)?;
        Ok(self
            .jumps()
            .iter()
            .filter(|(s, _)| *s > lo && *s < hi)
            .map(|(_, d)| d)
            .sum())
    }

    /// Total variation on `(a, b)`.
    pub fn total_variation(&self) -> f64 {
        self.jumps().iter().map(|(_, d)| d).sum()
    }

    pub fn variation_measure(&self) -> VariationMeasure {
        let (a, b) = self.interval();
        let atoms = self.jumps();
        let mut running = 0.0;
        let cumulative = atoms
            .iter()
            .map(|(_, d)| {
                running += d;
                running
            })
            .collect();
        VariationMeasure {
            interval: (a, b),
            atoms,
            cumulative,
        }
    }

    /// Same curve with an explicit, finer breakpoint list (values repeated).
    pub fn refined(&self, breakpoints: &[f64]) -> Result<Self> {
        check_increasing(breakpoints, "refined breakpoints")?;
        let (a, b) = self.interval();
        if breakpoints[0] != a || breakpoints[breakpoints.len() - 1] != b {
            return Err(Error::InvalidArgument("refinement must keep the interval".into()));
        }
        if self.breakpoints.iter().any(|s| !breakpoints.contains(s)) {
            return Err(Error::InvalidArgument("refinement must contain every breakpoint".into()));
        }
        let values = breakpoints[..breakpoints.len() - 1]
            .iter()
            .map(|&s| self.value_at(s).clone())
            .collect();
        Ok(Self::from_parts_unchecked(self.ambient.clone(), breakpoints.to_vec(), values))
    }
}

/// Lebesgue–Stieltjes measure of the cumulative variation `V(t) = Var(c; (a, t))`
/// of a step curve: point masses at the jumps.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationMeasure {
    interval: (f64, f64),
    atoms: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl VariationMeasure {
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// `(time, mass)` of every atom.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `V(t)`: total mass strictly before `t`.
    pub fn cumulative(&self, t: f64) -> f64 {
        let n = self.atoms.partition_point(|(s, _)| *s < t);
        if n == 0 {
            0.0
        } else {
            self.cumulative[n - 1]
        }
    }

    /// Mass of the open interval `(s, t)`.
    pub fn open_interval(&self, s: f64, t: f64) -> f64 {
        if !(s < t) {
            return 0.0;
        }
        self.atoms
            .iter()
            .filter(|(x, _)| *x > s && *x < t)
            .map(|(_, m)| m)
            .sum()
    }

    /// Mass of the singleton `{s}`.
    pub fn point(&self, s: f64) -> f64 {
        self.atoms.iter().filter(|(x, _)| *x == s).map(|(_, m)| m).sum()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}
