//! Curve calculus in an arbitrary metric space.
//!
//! [`SampledCurve`] holds a continuous curve on a strictly increasing time
//! grid; [`StepCurve`] holds a càdlàg piecewise-constant curve. Both are
//! generic over the ambient [`MetricSpace`], so the same code runs on target
//! spaces and on nonlinear Lebesgue spaces.

mod skorokhod;
mod step;

use std::io::Write;

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

pub use skorokhod::{skorokhod_distance, SkorokhodBounds};
pub use step::{StepCurve, VariationMeasure};

#[derive(Clone, Debug)]
pub struct SampledCurve<S: MetricSpace> {
    ambient: S,
    times: Vec<f64>,
    values: Vec<S::Point>,
}

pub(crate) fn check_increasing(times: &[f64], what: &str) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument(format!("{what} needs at least two nodes")));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("{what} must be finite and strictly increasing")));
    }
    Ok(())
}

impl<S: MetricSpace> SampledCurve<S> {
    pub fn new(ambient: S, times: Vec<f64>, values: Vec<S::Point>) -> Result<Self> {
        check_increasing(&times, "sampled curve")?;
        if values.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        for v in &values {
            ambient.validate(v)?;
        }
        Ok(Self { ambient, times, values })
    }

    /// Samples `f` at the given nodes.
    pub fn from_fn(ambient: S, times: Vec<f64>, f: impl FnMut(f64) -> S::Point) -> Result<Self> {
        let values = times.iter().copied().map(f).collect();
        Self::new(ambient, times, values)
    }

    pub(crate) fn from_parts_unchecked(ambient: S, times: Vec<f64>, values: Vec<S::Point>) -> Self {
        Self { ambient, times, values }
    }

    pub fn ambient(&self) -> &S {
        &self.ambient
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[S::Point] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// Distances between consecutive nodes.
    pub fn chord_lengths(&self) -> Vec<f64> {
        self.values
            .windows(2)
            .map(|w| self.ambient.dist(&w[0], &w[1]))
            .collect()
    }

    /// Difference-quotient estimate of `|c'|(t_i)`: central at interior
    /// nodes, one-sided at the endpoints.
    pub fn metric_derivative(&self) -> Vec<f64> {
        let k = self.len();
        let t = &self.times;
        let v = &self.values;
        (0..k)
            .map(|i| {
                let (lo, hi) = match i {
                    0 => (0, 1),
                    _ if i == k - 1 => (k - 2, k - 1),
                    _ => (i - 1, i + 1),
                };
                self.ambient.dist(&v[lo], &v[hi]) / (t[hi] - t[lo])
            })
            .collect()
    }

    /// Chordal length `sum_i d(c(t_i), c(t_{i+1}))`.
    pub fn length(&self) -> f64 {
        self.chord_lengths().iter().sum()
    }

    /// Discrete `p`-energy `sum_i d_i^p / (t_{i+1} - t_i)^{p-1}`.
    pub fn energy(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidArgument(format!("energy exponent {p} must be in [1, inf)")));
        }
        Ok(self
            .chord_lengths()
            .iter()
            .zip(self.times.windows(2))
            .map(|(d, w)| d.powf(p) / (w[1] - w[0]).powf(p - 1.0))
            .sum())
    }

    /// Re-times the nodes so every cell is traversed at (nearly) the same
    /// speed, keeping the values.
    ///
    /// Node `t_i` moves to `a + (b - a) (L_i + (t_i - a) eps / (b - a)) / (L + eps)`,
    /// with `L_i` the cumulative chordal length. The `eps` term keeps the new
    /// times strictly increasing across stationary stretches.
    pub fn constant_speed_reparam(&self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidArgument(format!("regularization {eps} must be positive")));
        }
        let (a, b) = self.interval();
        let span = b - a;
        let chords = self.chord_lengths();
        let total: f64 = chords.iter().sum();
        let mut cumulative = 0.0;
        let mut times = Vec::with_capacity(self.len());
        times.push(a);
        for (i, c) in chords.iter().enumerate() {
            cumulative += c;
            let t = self.times[i + 1];
            let s = a + span * (cumulative + (t - a) * eps / span) / (total + eps);
            times.push(s);
        }
        *times.last_mut().expect("at least two nodes") = b;
        check_increasing(&times, "reparametrized curve")?;
        Ok(Self {
            ambient: self.ambient.clone(),
            times,
            values: self.values.clone(),
        })
    }

    /// Chordal variation over the nodes lying in `[lo, hi]`.
    pub fn variation(&self, lo: f64, hi: f64) -> Result<f64> {
        let (a, b) = self.interval();
        check_subinterval(a, b, lo, hi)?;
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.times[i] >= lo && self.times[i] <= hi)
            .collect();
        Ok(idx
            .windows(2)
            .map(|w| self.ambient.dist(&self.values[w[0]], &self.values[w[1]]))
            .sum())
    }

    /// Writes `t,metric_derivative` rows.
    pub fn write_derivative_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,metric_derivative")?;
        for (t, m) in self.times.iter().zip(self.metric_derivative()) {
            writeln!(out, "{t},{m}")?;
        }
        Ok(())
    }
}

pub(crate) fn check_subinterval(a: f64, b: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty subinterval ({lo}, {hi})")));
    }
    if lo < a || hi > b {
        return Err(Error::InvalidArgument(format!(
            "subinterval ({lo}, {hi}) not inside [{a}, {b}]"
        )));
    }
    Ok(())
}
