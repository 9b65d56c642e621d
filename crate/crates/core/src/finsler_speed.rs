//! Tangent-level speed of curves in `L^p_h(M, N)`.
//!
//! Each implemented manifold has one global chart (exp/log), so the velocity
//! of the per-atom curves is read off from log maps and aggregated with the
//! `L^p` bundle norm `B_p`.

use std::io::Write;

use crate::curve_transport::TransportDecomposition;
use crate::curves::SampledCurve;
use crate::error::{Error, Result};
use crate::lebesgue_maps::{Exponent, LpMetric};
use crate::target_spaces::TangentVector;

/// Velocity field of a curve in `L^p_h(M, N)`: one tangent vector per node
/// and atom, based at the curve's value there.
#[derive(Clone, Debug)]
pub struct SpeedField {
    curve: SampledCurve<LpMetric>,
    velocities: Vec<Vec<TangentVector>>,
}

impl SpeedField {
    pub fn curve(&self) -> &SampledCurve<LpMetric> {
        &self.curve
    }

    /// `velocity(node, atom)`.
    pub fn velocity(&self, node: usize, atom: usize) -> &TangentVector {
        &self.velocities[node][atom]
    }

    /// Velocities at one node, by atom.
    pub fn at(&self, node: usize) -> &[TangentVector] {
        &self.velocities[node]
    }

    pub fn exponent(&self) -> Exponent {
        self.curve.ambient().exponent()
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }
}

/// Forward log-map velocities; the last node uses the backward difference.
pub fn compute_speed(d: &TransportDecomposition) -> Result<SpeedField> {
    let curve = d.source();
    let space = curve.ambient().space();
    let target = space.target();
    if !target.has_chart() {
        return Err(Error::Unsupported(format!("{} has no exp/log chart", target.name())));
    }
    let t = curve.times();
    let v = curve.values();
    let k = t.len();
    let velocities = (0..k)
        .map(|i| {
            (0..space.atom_count())
                .map(|j| {
                    let here = v[i].value(j);
                    if i + 1 < k {
                        let log = target.log_unchecked(here, v[i + 1].value(j))?;
                        Ok(log.scaled(1.0 / (t[i + 1] - t[i])))
                    } else {
                        let log = target.log_unchecked(here, v[i - 1].value(j))?;
                        Ok(log.scaled(-1.0 / (t[i] - t[i - 1])))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpeedField {
        curve: curve.clone(),
        velocities,
    })
}

/// `B_p` at a node: `(sum_j w_j |v_j|^p)^{1/p}`, or the largest norm over
/// positive-weight atoms for `p = inf`.
pub fn bundle_norm(s: &SpeedField, node: usize) -> f64 {
    let space = s.curve.ambient().space();
    let target = space.target();
    let norms: Vec<f64> = s.velocities[node].iter().map(|v| target.tangent_norm_unchecked(v)).collect();
    s.exponent().aggregate(space.weights(), &norms)
}

/// `| |c'|_p(t_i) - B_p(c'(t_i)) |` per node.
pub fn speed_identity_residual(s: &SpeedField) -> Vec<f64> {
    s.curve
        .metric_derivative()
        .iter()
        .enumerate()
        .map(|(i, m)| (m - bundle_norm(s, i)).abs())
        .collect()
}

/// Largest `| |f_j'|(t_i) - |v_j(t_i)| |` over positive-weight atoms and nodes.
pub fn atom_speed_residual(s: &SpeedField, d: &TransportDecomposition) -> f64 {
    let space = s.curve.ambient().space();
    let target = space.target();
    let mut worst: f64 = 0.0;
    for (j, (w, c)) in space.weights().iter().zip(d.per_atom()).enumerate() {
        if *w <= 0.0 {
            continue;
        }
        for (i, m) in c.metric_derivative().iter().enumerate() {
            worst = worst.max((m - target.tangent_norm_unchecked(&s.velocities[i][j])).abs());
        }
    }
    worst
}

/// Writes `t,metric_derivative,bundle_norm,residual` rows.
pub fn write_speed_csv<W: Write>(s: &SpeedField, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,metric_derivative,bundle_norm,residual")?;
    let md = s.curve.metric_derivative();
    for (i, (t, m)) in s.curve.times().iter().zip(&md).enumerate() {
        let b = bundle_norm(s, i);
        writeln!(out, "{t},{m},{b},{}", (m - b).abs())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::curve_transport::decompose_ac;
    use crate::lebesgue_maps::{FiniteMeasureSpace, LebesgueSpace, MetricMapping};
    use crate::target_spaces::{TargetPoint, TargetSpace, TreeEdge};

    fn grid(k: usize) -> Vec<f64> {
        (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
    }

    fn curve_in(
        target: TargetSpace,
        weights: &[f64],
        k: usize,
        f: impl Fn(usize, f64) -> TargetPoint,
    ) -> SampledCurve<LpMetric> {
        let h = f(0, 0.0);
        let space = LebesgueSpace::with_constant_base(FiniteMeasureSpace::from_weights(weights).unwrap(), target, h).unwrap();
        let times = grid(k);
        let values: Vec<MetricMapping> = times
            .iter()
            .map(|&t| space.mapping((0..weights.len()).map(|j| f(j, t)).collect()).unwrap())
            .collect();
        SampledCurve::new(LpMetric::new(Arc::clone(&space), Exponent::Finite(2.0)), times, values).unwrap()
    }

    #[test]
    fn constant_curve_has_zero_field() {
        let c = curve_in(TargetSpace::sphere(3).unwrap(), &[1.0, 1.0], 9, |_, _| TargetPoint::vector(&[0.0, 1.0, 0.0]));
        let s = compute_speed(&decompose_ac(&c).unwrap()).unwrap();
        assert!((0..s.len()).all(|i| bundle_norm(&s, i) == 0.0));
        assert!(speed_identity_residual(&s).iter().all(|r| *r == 0.0));
    }

    #[test]
    fn linear_euclidean_field_is_exact() {
        let c = curve_in(TargetSpace::euclidean(1).unwrap(), &[1.0, 3.0], 9, |_, t| TargetPoint::vector(&[2.0 * t]));
        let s = compute_speed(&decompose_ac(&c).unwrap()).unwrap();
        for i in 0..s.len() {
            assert!((bundle_norm(&s, i) - 4.0).abs() < 1e-12);
            assert_eq!(s.velocity(i, 0).base, c.values()[i].value(0).clone());
        }
        assert!(speed_identity_residual(&s).iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn single_atom_bundle_norm_is_tangent_norm() {
        let c = curve_in(TargetSpace::euclidean(2).unwrap(), &[1.0], 5, |_, t| TargetPoint::vector(&[3.0 * t, -4.0 * t]));
        let s = compute_speed(&decompose_ac(&c).unwrap()).unwrap();
        assert!((bundle_norm(&s, 2) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn great_circle_speed() {
        let omega = 1.7;
        let c = curve_in(TargetSpace::sphere(3).unwrap(), &[1.0], 129, |_, t| {
            TargetPoint::vector(&[(omega * t).cos(), (omega * t).sin(), 0.0])
        });
        let s = compute_speed(&decompose_ac(&c).unwrap()).unwrap();
        let target = TargetSpace::sphere(3).unwrap();
        for i in 0..s.len() {
            assert!((target.tangent_norm(s.velocity(i, 0)).unwrap() - omega).abs() < 1e-3);
        }
    }

    #[test]
    fn trees_are_unsupported() {
        let tree = TargetSpace::metric_tree(vec![TreeEdge { from: 0, to: 1, length: 1.0 }]).unwrap();
        let c = curve_in(tree, &[1.0], 4, |_, t| TargetPoint::tree(0, t));
        assert!(matches!(compute_speed(&decompose_ac(&c).unwrap()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let c = curve_in(TargetSpace::euclidean(1).unwrap(), &[1.0], 5, |_, t| TargetPoint::vector(&[t * t]));
        let s = compute_speed(&decompose_ac(&c).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_speed_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("t,metric_derivative,bundle_norm,residual\n"));
    }
}
