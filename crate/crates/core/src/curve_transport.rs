//! Curves in `L^p_h(M, N)` seen as mappings into curve spaces.
//!
//! On a finite grid the identification is a transpose: fixing an atom turns a
//! curve of mappings into one target-space curve per atom. What carries
//! content is the residual calculus around it. Some identities hold exactly
//! (evaluation, isometry, variation measures of step curves); derivative
//! identities computed with one stencil on both sides are exact as well,
//! while comparisons against true speeds carry the stencil's `O(dt)` or
//! `O(dt^2)` error.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::curves::{SampledCurve, StepCurve};
use crate::error::{Error, Result};
use crate::lebesgue_maps::{Exponent, FiniteMeasureSpace, LebesgueSpace, LpMetric, MetricMapping};
use crate::metric::MetricSpace;
use crate::target_spaces::{TargetPoint, TargetSpace};

/// An AC curve in `L^p_h(M, N)` together with its per-atom curves.
#[derive(Clone, Debug)]
pub struct TransportDecomposition {
    source: SampledCurve<LpMetric>,
    per_atom: Vec<SampledCurve<TargetSpace>>,
    p: f64,
    range_integral: f64,
}

impl TransportDecomposition {
    pub fn source(&self) -> &SampledCurve<LpMetric> {
        &self.source
    }

    pub fn per_atom(&self) -> &[SampledCurve<TargetSpace>] {
        &self.per_atom
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn weights(&self) -> &[f64] {
        self.source.ambient().space().weights()
    }

    /// `sum_j w_j int_I |f_j'|^p dt` with trapezoidal time weights.
    pub fn range_integral(&self) -> f64 {
        self.range_integral
    }
}

fn trapezoid(times: &[f64], f: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

fn per_atom_curves<C, F>(space: &Arc<LebesgueSpace>, build: F) -> Vec<C>
where
    F: Fn(usize) -> C,
{
    (0..space.atom_count()).map(build).collect()
}

/// Splits an AC curve in `L^p_h(M, N)`, `1 < p < inf`, into per-atom curves.
///
/// `p = 1` is refused: the indicator curve `t -> 1_(0,t)` is Lipschitz in
/// `L^1` while every per-atom section jumps (see [`counterexample_p1`]).
pub fn decompose_ac(c: &SampledCurve<LpMetric>) -> Result<TransportDecomposition> {
    let p = match c.ambient().exponent() {
        Exponent::Finite(p) if p > 1.0 => p,
        other => {
            return Err(Error::InvalidArgument(format!(
                "pointwise decomposition of AC curves needs 1 < p < inf (got p = {other}); \
                 for p = 1 the indicator curve t -> 1_(0,t) is a counter-example"
            )))
        }
    };
    let space = c.ambient().space();
    let target = space.target().clone();
    let times = c.times().to_vec();
    let per_atom: Vec<SampledCurve<TargetSpace>> = per_atom_curves(space, |j| {
        let values = c.values().iter().map(|f| f.value(j).clone()).collect();
        SampledCurve::from_parts_unchecked(target.clone(), times.clone(), values)
    });
    let range_integral = space
        .weights()
        .iter()
        .zip(&per_atom)
        .map(|(w, curve)| {
            let md: Vec<f64> = curve.metric_derivative().iter().map(|m| m.powf(p)).collect();
            w * trapezoid(&times, &md)
        })
        .sum();
    Ok(TransportDecomposition {
        source: c.clone(),
        per_atom,
        p,
        range_integral,
    })
}

/// Rebuilds the `L^p` curve from per-atom curves on a shared grid.
pub fn assemble_ac(
    space: &Arc<LebesgueSpace>,
    p: Exponent,
    per_atom: &[SampledCurve<TargetSpace>],
) -> Result<SampledCurve<LpMetric>> {
    if per_atom.len() != space.atom_count() {
        return Err(Error::DimensionMismatch {
            expected: space.atom_count(),
            found: per_atom.len(),
        });
    }
    let times = per_atom[0].times().to_vec();
    if per_atom.iter().any(|c| c.times() != times.as_slice()) {
        return Err(Error::Mismatch("per-atom curves must share their time grid".into()));
    }
    let values = (0..times.len())
        .map(|i| space.mapping(per_atom.iter().map(|c| c.values()[i].clone()).collect()))
        .collect::<Result<Vec<MetricMapping>>>()?;
    SampledCurve::new(LpMetric::new(Arc::clone(space), p), times, values)
}

/// `|c'|_p^p(t_i) - sum_j w_j |f_j'|^p(t_i)`, both sides from the same
/// difference stencil.
pub fn derivative_identity_residual(d: &TransportDecomposition) -> Vec<f64> {
    let per_atom: Vec<Vec<f64>> = d.per_atom.iter().map(|c| c.metric_derivative()).collect();
    residual_against(d, &per_atom)
}

/// Same as [`derivative_identity_residual`] but with per-atom speeds
/// `reference[atom][node]` supplied by the caller (e.g. exact speeds).
pub fn derivative_identity_residual_with_reference(
    d: &TransportDecomposition,
    reference: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if reference.len() != d.per_atom.len() || reference.iter().any(|r| r.len() != d.source.len()) {
        return Err(Error::DimensionMismatch {
            expected: d.per_atom.len() * d.source.len(),
            found: reference.iter().map(Vec::len).sum(),
        });
    }
    Ok(residual_against(d, reference))
}

fn residual_against(d: &TransportDecomposition, per_atom_speed: &[Vec<f64>]) -> Vec<f64> {
    let lhs = d.source.metric_derivative();
    let w = d.weights();
    lhs.iter()
        .enumerate()
        .map(|(i, m)| {
            let rhs: f64 = w
                .iter()
                .zip(per_atom_speed)
                .map(|(wj, s)| wj * s[i].powf(d.p))
                .sum();
            m.powf(d.p) - rhs
        })
        .collect()
}

/// A step curve in `L^1_h(M, N)` with its per-atom step curves.
#[derive(Clone, Debug)]
pub struct BvTransportDecomposition {
    source: StepCurve<LpMetric>,
    per_atom: Vec<StepCurve<TargetSpace>>,
    range_integral: f64,
}

impl BvTransportDecomposition {
    pub fn source(&self) -> &StepCurve<LpMetric> {
        &self.source
    }

    pub fn per_atom(&self) -> &[StepCurve<TargetSpace>] {
        &self.per_atom
    }

    /// `sum_j w_j |D f_j|(I)`, the weighted per-atom total variation.
    pub fn range_integral(&self) -> f64 {
        self.range_integral
    }
}

pub fn decompose_bv(c: &StepCurve<LpMetric>) -> Result<BvTransportDecomposition> {
    if c.ambient().exponent() != Exponent::Finite(1.0) {
        return Err(Error::InvalidArgument(format!(
            "BV decomposition is stated in L^1 (got p = {})",
            c.ambient().exponent()
        )));
    }
    let space = c.ambient().space();
    let target = space.target().clone();
    let breakpoints = c.breakpoints().to_vec();
    let per_atom: Vec<StepCurve<TargetSpace>> = per_atom_curves(space, |j| {
        let values = c.values().iter().map(|f| f.value(j).clone()).collect();
        StepCurve::from_parts_unchecked(target.clone(), breakpoints.clone(), values)
    });
    let range_integral = space
        .weights()
        .iter()
        .zip(&per_atom)
        .map(|(w, curve)| w * curve.total_variation())
        .sum();
    Ok(BvTransportDecomposition {
        source: c.clone(),
        per_atom,
        range_integral,
    })
}

/// `|Dc|_1((lo, hi)) - sum_j w_j |D f_j|((lo, hi))`.
pub fn variation_identity_residual(d: &BvTransportDecomposition, lo: f64, hi: f64) -> Result<f64> {
    let lhs = d.source.variation(lo, hi)?;
    let w = d.source.ambient().space().weights();
    let mut rhs = 0.0;
    for (wj, curve) in w.iter().zip(&d.per_atom) {
        rhs += wj * curve.variation(lo, hi)?;
    }
    Ok(lhs - rhs)
}

/// Outcome of the indicator-curve scenario in `L^1((0,1), R)` discretized
/// by `n` atoms of weight `1/n` at the cell centres.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub n: usize,
    /// Extremes of `D_1(c(s), c(t)) / |s - t|` over all pairs of atom-aligned grid times.
    pub lipschitz_lo: f64,
    pub lipschitz_hi: f64,
    /// Largest one-step oscillation of any per-atom section, one entry per
    /// time-grid refinement level.
    pub atom_modulus_by_level: Vec<f64>,
    pub max_atom_modulus: f64,
    pub jumps_per_atom: Vec<usize>,
    pub max_jump_size: f64,
    /// `|Dc|_1((0,1))` of the càdlàg representative.
    pub total_variation: f64,
    /// `sum_j w_j Var(f_j)`.
    pub weighted_atom_variation: f64,
    pub ac_decomposition_refused: bool,
}

impl CounterexampleReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,lipschitz_lo,lipschitz_hi,max_atom_modulus,total_variation")?;
        writeln!(
            out,
            "{},{},{},{},{}",
            self.n, self.lipschitz_lo, self.lipschitz_hi, self.max_atom_modulus, self.total_variation
        )
    }
}

/// Runs the `p = 1` counter-example with `n` atoms and `levels` dyadic
/// refinements of the time grid.
pub fn counterexample_p1(n: usize, levels: usize) -> Result<CounterexampleReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one atom".into()));
    }
    let line = TargetSpace::euclidean(1)?;
    let base = FiniteMeasureSpace::uniform(n, 1.0 / n as f64)?;
    let space = LebesgueSpace::with_constant_base(base, line.clone(), TargetPoint::vector(&[0.0]))?;
    let centres: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
    let indicator = |t: f64| -> Result<MetricMapping> {
        space.mapping(
            centres
                .iter()
                .map(|&x| TargetPoint::vector(&[if x < t { 1.0 } else { 0.0 }]))
                .collect(),
        )
    };
    let one = Exponent::Finite(1.0);
    let l1 = LpMetric::new(Arc::clone(&space), one);

    // (i) Lipschitz ratio on the atom-aligned grid
    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let curve = SampledCurve::new(l1.clone(), times.clone(), times.iter().map(|&t| indicator(t)).collect::<Result<_>>()?)?;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..times.len() {
        for k in i + 1..times.len() {
            let r = l1.dist(&curve.values()[i], &curve.values()[k]) / (times[k] - times[i]);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let ac_decomposition_refused = decompose_ac(&curve).is_err();

    // (ii) per-atom sections under refinement
    let mut atom_modulus_by_level = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let cells = n << level;
        let ts: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        let mut worst: f64 = 0.0;
        for &x in &centres {
            let section: Vec<f64> = ts.iter().map(|&t| if x < t { 1.0 } else { 0.0 }).collect();
            for w in section.windows(2) {
                worst = worst.max((w[1] - w[0]).abs());
            }
        }
        atom_modulus_by_level.push(worst);
    }
    let max_atom_modulus = atom_modulus_by_level.iter().copied().fold(0.0, f64::max);

    // (iii) càdlàg representative t -> 1_(0,t] and its BV decomposition
    let mut breakpoints = vec![0.0];
    breakpoints.extend(centres.iter().copied());
    breakpoints.push(1.0);
    let values = (0..=n)
        .map(|k| {
            space.mapping(
                (0..n)
                    .map(|j| TargetPoint::vector(&[if j < k { 1.0 } else { 0.0 }]))
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let step = StepCurve::new(l1, breakpoints, values)?;
    let bv = decompose_bv(&step)?;
    let jumps: Vec<Vec<(f64, f64)>> = bv.per_atom().iter().map(|c| c.jumps()).collect();
    let jumps_per_atom = jumps
        .iter()
        .map(|js| js.iter().filter(|(_, d)| *d > 0.0).count())
        .collect();
    let max_jump_size = jumps.iter().flatten().map(|(_, d)| *d).fold(0.0, f64::max);

    Ok(CounterexampleReport {
        n,
        lipschitz_lo: lo,
        lipschitz_hi: hi,
        atom_modulus_by_level,
        max_atom_modulus,
        jumps_per_atom,
        max_jump_size,
        total_variation: step.total_variation(),
        weighted_atom_variation: bv.range_integral(),
        ac_decomposition_refused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_space(weights: &[f64]) -> Arc<LebesgueSpace> {
        LebesgueSpace::with_constant_base(
            FiniteMeasureSpace::from_weights(weights).unwrap(),
            TargetSpace::euclidean(1).unwrap(),
            TargetPoint::vector(&[0.0]),
        )
        .unwrap()
    }

    fn grid(k: usize) -> Vec<f64> {
        (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
    }

    fn linear_curve(space: &Arc<LebesgueSpace>, p: f64, slopes: &[f64], k: usize) -> SampledCurve<LpMetric> {
        let times = grid(k);
        let values = times
            .iter()
            .map(|&t| space.mapping(slopes.iter().map(|v| TargetPoint::vector(&[t * v])).collect()).unwrap())
            .collect();
        SampledCurve::new(LpMetric::new(space.clone(), Exponent::Finite(p)), times, values).unwrap()
    }

    #[test]
    fn constant_curve_decomposes_to_constants() {
        let s = line_space(&[1.0, 2.0]);
        let c = linear_curve(&s, 2.0, &[0.0, 0.0], 9);
        let d = decompose_ac(&c).unwrap();
        for curve in d.per_atom() {
            assert!(curve.values().iter().all(|y| *y == TargetPoint::vector(&[0.0])));
        }
        assert!(derivative_identity_residual(&d).iter().all(|r| *r == 0.0));
        assert_eq!(d.range_integral(), 0.0);
    }

    #[test]
    fn linear_curves_are_recovered_exactly() {
        let s = line_space(&[1.0, 0.5, 2.0]);
        let slopes = [1.0, -2.0, 0.5];
        let c = linear_curve(&s, 2.0, &slopes, 17);
        let d = decompose_ac(&c).unwrap();
        for (j, curve) in d.per_atom().iter().enumerate() {
            for (t, y) in curve.times().iter().zip(curve.values()) {
                assert_eq!(*y, TargetPoint::vector(&[t * slopes[j]]));
            }
        }
        for r in derivative_identity_residual(&d) {
            assert!(r.abs() < 1e-12);
        }
        // sum_j w_j |v_j|^2 over a unit interval
        assert!((d.range_integral() - (1.0 + 0.5 * 4.0 + 2.0 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn p_one_and_infinity_are_refused() {
        let s = line_space(&[1.0]);
        let c = linear_curve(&s, 1.0, &[1.0], 5);
        assert!(matches!(decompose_ac(&c), Err(Error::InvalidArgument(_))));
        let times = grid(3);
        let values = times.iter().map(|_| s.base_mapping()).collect();
        let c = SampledCurve::new(LpMetric::new(s.clone(), Exponent::Infinite), times, values).unwrap();
        assert!(decompose_ac(&c).is_err());
    }

    #[test]
    fn assemble_inverts_decompose() {
        let s = line_space(&[1.0, 2.0]);
        let c = linear_curve(&s, 3.0, &[1.0, -1.0], 6);
        let d = decompose_ac(&c).unwrap();
        let back = assemble_ac(&s, Exponent::Finite(3.0), d.per_atom()).unwrap();
        assert_eq!(back.values(), c.values());
    }

    fn step_curve(space: &Arc<LebesgueSpace>, bps: Vec<f64>, rows: &[&[f64]]) -> StepCurve<LpMetric> {
        let values = rows
            .iter()
            .map(|r| space.mapping(r.iter().map(|x| TargetPoint::vector(&[*x])).collect()).unwrap())
            .collect();
        StepCurve::new(LpMetric::new(space.clone(), Exponent::Finite(1.0)), bps, values).unwrap()
    }

    #[test]
    fn bv_examples() {
        let s = line_space(&[1.0, 3.0]);
        let constant = step_curve(&s, vec![0.0, 1.0], &[&[1.0, 2.0]]);
        let d = decompose_bv(&constant).unwrap();
        assert_eq!(variation_identity_residual(&d, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(d.range_integral(), 0.0);

        let jump = step_curve(&s, vec![0.0, 0.4, 1.0], &[&[0.0, 0.0], &[2.0, -1.0]]);
        let d = decompose_bv(&jump).unwrap();
        assert_eq!(d.per_atom()[0].jumps(), vec![(0.4, 2.0)]);
        assert_eq!(d.per_atom()[1].jumps(), vec![(0.4, 1.0)]);
        assert_eq!(variation_identity_residual(&d, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(d.range_integral(), 5.0);

        let wrong_p = StepCurve::constant(LpMetric::new(s.clone(), Exponent::Finite(2.0)), 0.0, 1.0, s.base_mapping()).unwrap();
        assert!(decompose_bv(&wrong_p).is_err());
    }

    #[test]
    fn counterexample_small() {
        let r = counterexample_p1(4, 3).unwrap();
        assert_eq!(r.jumps_per_atom, vec![1; 4]);
        assert_eq!(r.max_jump_size, 1.0);
        assert_eq!(r.atom_modulus_by_level, vec![1.0; 4]);
        assert!(r.ac_decomposition_refused);
        assert_eq!(r.total_variation, 1.0);
    }

    #[test]
    fn counterexample_64() {
        let r = counterexample_p1(64, 4).unwrap();
        assert!(r.lipschitz_lo >= 1.0 - 2.0 / 64.0 && r.lipschitz_hi <= 1.0 + 2.0 / 64.0);
        assert_eq!(r.weighted_atom_variation, 1.0);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",1"));
    }
}
