//! Geodesics in `L^p_h(M, N)` assembled from pointwise geodesics, length
//! certificates, and Alexandrov comparison in `L^2`.
//!
//! Over a finite base the measurable selection of pointwise geodesics is
//! just a choice per atom, so uniqueness questions reduce to the target.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::SampledCurve;
use crate::error::{Error, Result};
use crate::lebesgue_maps::{d_p_unchecked, Exponent, FiniteMeasureSpace, LebesgueSpace, LpMetric, MetricMapping};
use crate::metric::MetricSpace;
use crate::sampling::{random_mapping, random_point, trial_rng};
use crate::target_spaces::{comparison_formula, CurvatureClass, TargetPoint, TargetSpace};

/// Default `kappa` for quasi-geodesic certificates on geodesic targets.
pub const DEFAULT_KAPPA: f64 = 1.0 + 1e-6;

/// A constant-speed geodesic in `L^p_h(M, N)` sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct LpGeodesic {
    f: MetricMapping,
    g: MetricMapping,
    curve: SampledCurve<LpMetric>,
    per_atom: Vec<SampledCurve<TargetSpace>>,
}

impl LpGeodesic {
    pub fn endpoints(&self) -> (&MetricMapping, &MetricMapping) {
        (&self.f, &self.g)
    }

    pub fn times(&self) -> &[f64] {
        self.curve.times()
    }

    pub fn curve(&self) -> &SampledCurve<LpMetric> {
        &self.curve
    }

    pub fn per_atom(&self) -> &[SampledCurve<TargetSpace>] {
        &self.per_atom
    }

    pub fn exponent(&self) -> Exponent {
        self.curve.ambient().exponent()
    }

    /// `D_p(f, g)`.
    pub fn endpoint_distance(&self) -> f64 {
        d_p_unchecked(&self.f, &self.g, self.exponent())
    }

    /// Largest `|D_p(c(t_i), c(t_k)) - |t_k - t_i| / (b - a) * D_p(f, g)|` over node pairs.
    pub fn pair_residual(&self) -> f64 {
        let (a, b) = self.curve.interval();
        let d = self.endpoint_distance();
        let ambient = self.curve.ambient();
        let t = self.curve.times();
        let v = self.curve.values();
        let mut worst: f64 = 0.0;
        for i in 0..t.len() {
            for k in i + 1..t.len() {
                let expected = (t[k] - t[i]) / (b - a) * d;
                worst = worst.max((ambient.dist(&v[i], &v[k]) - expected).abs());
            }
        }
        worst
    }

    /// `|length(c) - D_p(f, g)| / D_p(f, g)` (absolute when `f = g`).
    pub fn length_residual(&self) -> f64 {
        let d = self.endpoint_distance();
        let gap = (self.curve.length() - d).abs();
        if d > 0.0 {
            gap / d
        } else {
            gap
        }
    }

    /// Per-atom `max_i | |f_j'|(t_i) - d_N(f_j, g_j) / (b - a) |`, zero on
    /// null atoms.
    pub fn per_atom_speed_residuals(&self) -> Vec<f64> {
        let (a, b) = self.curve.interval();
        let target = self.f.space().target();
        self.per_atom
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if self.f.space().weights()[j] <= 0.0 {
                    return 0.0;
                }
                let speed = target.dist_unchecked(self.f.value(j), self.g.value(j)) / (b - a);
                c.metric_derivative()
                    .iter()
                    .map(|m| (m - speed).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Geodesic from `f` to `g` on `[0, 1]` with `grid_size` nodes.
pub fn lp_geodesic(f: &MetricMapping, g: &MetricMapping, p: Exponent, grid_size: usize) -> Result<LpGeodesic> {
    lp_geodesic_on(f, g, p, 0.0, 1.0, grid_size)
}

/// Geodesic from `f` to `g` parametrized over `[a, b]`.
///
/// Node `i` sits at `a + (b - a) i / (K - 1)` and takes the geodesic
/// fraction `i / (K - 1)` on every atom, so the values do not depend on the
/// interval. On a null atom whose endpoints have no unique geodesic the
/// curve stays at `f` and switches to `g` at the last node; that atom never
/// enters `D_p`.
pub fn lp_geodesic_on(
    f: &MetricMapping,
    g: &MetricMapping,
    p: Exponent,
    a: f64,
    b: f64,
    grid_size: usize,
) -> Result<LpGeodesic> {
    if !LebesgueSpace::compatible(f.space(), g.space()) {
        return Err(Error::Mismatch("endpoints live in different Lebesgue spaces".into()));
    }
    if grid_size < 2 {
        return Err(Error::InvalidArgument("a geodesic needs at least two nodes".into()));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidArgument(format!("invalid interval [{a}, {b}]")));
    }
    let space = f.space();
    let target = space.target();
    let k = grid_size - 1;
    let fractions: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
    let mut times: Vec<f64> = fractions.iter().map(|s| a + (b - a) * s).collect();
    times[k] = b;

    let mut per_atom_values = Vec::with_capacity(space.atom_count());
    for (j, w) in space.weights().iter().enumerate() {
        let (x, y) = (f.value(j), g.value(j));
        let path: Result<Vec<TargetPoint>> = fractions.iter().map(|&s| target.geodesic_unchecked(x, y, s)).collect();
        let path = match path {
            Ok(path) => path,
            Err(Error::NonUniqueGeodesic(_)) if *w <= 0.0 => {
                let mut path = vec![x.clone(); k];
                path.push(y.clone());
                path
            }
            Err(Error::NonUniqueGeodesic(msg)) => {
                let id = &space.base_space().atoms()[j].id;
                return Err(Error::NonUniqueGeodesic(format!("atom {j} ({id}): {msg}")));
            }
            Err(e) => return Err(e),
        };
        per_atom_values.push(path);
    }

    let mappings = (0..=k)
        .map(|i| {
            MetricMapping::from_parts_unchecked(
                Arc::clone(space),
                per_atom_values.iter().map(|path| path[i].clone()).collect(),
            )
        })
        .collect();
    let per_atom = per_atom_values
        .into_iter()
        .map(|path| SampledCurve::from_parts_unchecked(target.clone(), times.clone(), path))
        .collect();
    Ok(LpGeodesic {
        f: f.clone(),
        g: g.clone(),
        curve: SampledCurve::from_parts_unchecked(LpMetric::new(Arc::clone(space), p), times, mappings),
        per_atom,
    })
}

/// Largest deviation of the per-atom difference-quotient speed from
/// `d_N(f_j, g_j) / (b - a)`, over positive-weight atoms and all nodes.
pub fn geodesic_speed_check(geo: &LpGeodesic) -> f64 {
    geo.per_atom_speed_residuals().into_iter().fold(0.0, f64::max)
}

/// One sampled comparison residual.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceRow {
    pub trial: usize,
    pub t: f64,
    pub residual: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "trial,t,residual")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.trial, r.t, r.residual)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub target: String,
    pub curvature: CurvatureClass,
    pub note: &'static str,
    pub trials: usize,
    /// Residuals of random triangles in `L^2_h(M, N)`.
    pub residual_min: f64,
    pub residual_max: f64,
    /// Residuals of triangles of constant mappings, i.e. target triangles
    /// carried into `L^2` by the constant embedding.
    pub embedded_residual_min: f64,
    pub embedded_residual_max: f64,
    /// Largest `|embedded residual - total_mass * target residual|`.
    pub embedding_mismatch: f64,
    pub traces: Vec<TraceRow>,
    pub embedded_traces: Vec<TraceRow>,
}

const SELECTION_NOTE: &str = "per-atom geodesics chosen directly; no measurable selection needed on a finite base";

impl CurvatureReport {
    /// Whether both residual ranges have the sign the curvature class predicts.
    pub fn sign_consistent(&self, sign_tol: f64, flat_tol: f64) -> bool {
        sign_ok(self.curvature, self.residual_min, self.residual_max, sign_tol, flat_tol)
            && sign_ok(
                self.curvature,
                self.embedded_residual_min,
                self.embedded_residual_max,
                sign_tol,
                flat_tol,
            )
    }
}

pub fn sign_ok(class: CurvatureClass, min: f64, max: f64, sign_tol: f64, flat_tol: f64) -> bool {
    match class {
        CurvatureClass::Flat => min >= -flat_tol && max <= flat_tol,
        CurvatureClass::GlobalNpc => max <= sign_tol,
        CurvatureClass::GlobalNnc => min >= -sign_tol,
        CurvatureClass::Unknown => false,
    }
}

fn nontrivial_space(target: &TargetSpace, base: &FiniteMeasureSpace, seed: u64) -> Result<Arc<LebesgueSpace>> {
    if !base.has_positive_mass() {
        return Err(Error::InvalidSpace(
            "every atom has zero weight, so the Lebesgue space is the single class [h]".into(),
        ));
    }
    let h = random_point(target, &mut trial_rng(seed, "base-mapping", 0));
    LebesgueSpace::with_constant_base(base.clone(), target.clone(), h)
}

/// Draws `g` until the pointwise geodesic from `f` exists.
fn geodesic_partner<R: Rng + ?Sized>(space: &Arc<LebesgueSpace>, f: &MetricMapping, rng: &mut R) -> MetricMapping {
    loop {
        let g = random_mapping(space, rng);
        let target = space.target();
        if (0..space.atom_count()).all(|j| target.geodesic_unchecked(f.value(j), g.value(j), 0.5).is_ok()) {
            return g;
        }
    }
}

fn target_partner<R: Rng + ?Sized>(target: &TargetSpace, a: &TargetPoint, rng: &mut R) -> TargetPoint {
    loop {
        let b = random_point(target, rng);
        if target.geodesic_unchecked(a, &b, 0.5).is_ok() {
            return b;
        }
    }
}

/// Comparison residuals in `L^2_h(M, N)` for `trials` random triangles, and
/// for as many triangles of constant mappings.
pub fn curvature_comparison_suite(
    target: &TargetSpace,
    base: &FiniteMeasureSpace,
    trials: usize,
    seed: u64,
) -> Result<CurvatureReport> {
    let class = target.curvature_class();
    if class == CurvatureClass::Unknown {
        return Err(Error::Unsupported(format!(
            "{} has no declared curvature class; refusing to compare",
            target.name()
        )));
    }
    let space = nontrivial_space(target, base, seed)?;
    let two = Exponent::Finite(2.0);
    let mass = base.total_mass();

    let samples: Vec<(TraceRow, TraceRow, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, "curvature", trial as u64);
            let z = random_mapping(&space, &mut rng);
            let f = random_mapping(&space, &mut rng);
            let g = geodesic_partner(&space, &f, &mut rng);
            let t: f64 = rng.random();
            let ct = MetricMapping::from_parts_unchecked(
                Arc::clone(&space),
                (0..space.atom_count())
                    .map(|j| {
                        target
                            .geodesic_unchecked(f.value(j), g.value(j), t)
                            .expect("partner admits geodesics")
                    })
                    .collect(),
            );
            let d = |x: &MetricMapping, y: &MetricMapping| d_p_unchecked(x, y, two).powi(2);
            let residual = comparison_formula(d(&z, &ct), d(&z, &f), d(&z, &g), d(&f, &g), t);

            // target triangle through the constant embedding
            let zy = random_point(target, &mut rng);
            let ay = random_point(target, &mut rng);
            let by = target_partner(target, &ay, &mut rng);
            let s: f64 = rng.random();
            let gy = target.geodesic_unchecked(&ay, &by, s).expect("partner admits geodesics");
            let iota = |y: &TargetPoint| MetricMapping::from_parts_unchecked(Arc::clone(&space), vec![y.clone(); space.atom_count()]);
            let (iz, ia, ib, ig) = (iota(&zy), iota(&ay), iota(&by), iota(&gy));
            let embedded = comparison_formula(d(&iz, &ig), d(&iz, &ia), d(&iz, &ib), d(&ia, &ib), s);
            let direct = target.comparison_residual(&zy, &ay, &by, s)?;
            Ok((
                TraceRow { trial, t, residual },
                TraceRow {
                    trial,
                    t: s,
                    residual: embedded,
                },
                (embedded - mass * direct).abs(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let fold = |rows: &[TraceRow]| {
        rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.residual), hi.max(r.residual))
        })
    };
    let traces: Vec<TraceRow> = samples.iter().map(|s| s.0.clone()).collect();
    let embedded_traces: Vec<TraceRow> = samples.iter().map(|s| s.1.clone()).collect();
    let (residual_min, residual_max) = fold(&traces);
    let (embedded_residual_min, embedded_residual_max) = fold(&embedded_traces);
    let embedding_mismatch = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    Ok(CurvatureReport {
        target: target.name(),
        curvature: class,
        note: SELECTION_NOTE,
        trials,
        residual_min,
        residual_max,
        embedded_residual_min,
        embedded_residual_max,
        embedding_mismatch,
        traces,
        embedded_traces,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LengthReport {
    pub target: String,
    pub p: f64,
    pub kappa: f64,
    pub trials: usize,
    pub grid: usize,
    /// Largest `(b - a)^{p-1} E_p(c) / (kappa^p D_p(f, g)^p)`; at most 1 for a certificate.
    pub max_certificate_ratio: f64,
    /// Largest `|(b - a)^{p-1} E_p(c) - D_p(f, g)^p| / D_p(f, g)^p`.
    pub max_relative_gap: f64,
}

impl LengthReport {
    pub fn certified(&self, relative_tol: f64) -> bool {
        self.max_certificate_ratio <= 1.0 && self.max_relative_gap <= relative_tol
    }
}

/// Energy certificates for pointwise geodesics between random mappings.
pub fn length_space_check(
    target: &TargetSpace,
    base: &FiniteMeasureSpace,
    p: f64,
    kappa: f64,
    trials: usize,
    grid: usize,
    seed: u64,
) -> Result<LengthReport> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidArgument(format!("length certificates need 1 < p < inf (got {p})")));
    }
    if !(kappa.is_finite() && kappa > 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must exceed 1 (got {kappa})")));
    }
    let space = nontrivial_space(target, base, seed)?;
    let exponent = Exponent::Finite(p);
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, "length", trial as u64);
            let f = random_mapping(&space, &mut rng);
            let g = geodesic_partner(&space, &f, &mut rng);
            let geo = lp_geodesic(&f, &g, exponent, grid)?;
            let (a, b) = geo.curve().interval();
            let lhs = (b - a).powf(p - 1.0) * geo.curve().energy(p)?;
            let rhs = geo.endpoint_distance().powf(p);
            let ratio = if rhs > 0.0 { lhs / (kappa.powf(p) * rhs) } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
            let gap = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { lhs };
            Ok((ratio, gap))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LengthReport {
        target: target.name(),
        p,
        kappa,
        trials,
        grid,
        max_certificate_ratio: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        max_relative_gap: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::trial_rng;
    use crate::target_spaces::TreeEdge;

    fn space(target: TargetSpace, weights: &[f64]) -> Arc<LebesgueSpace> {
        let h = random_point(&target, &mut trial_rng(0, "h", 0));
        LebesgueSpace::with_constant_base(FiniteMeasureSpace::from_weights(weights).unwrap(), target, h).unwrap()
    }

    #[test]
    fn constant_geodesic() {
        let s = space(TargetSpace::sphere(3).unwrap(), &[1.0, 2.0]);
        let f = random_mapping(&s, &mut trial_rng(1, "t", 0));
        let geo = lp_geodesic(&f, &f, Exponent::Finite(2.0), 9).unwrap();
        assert_eq!(geo.endpoint_distance(), 0.0);
        assert_eq!(geodesic_speed_check(&geo), 0.0);
        assert_eq!(geo.pair_residual(), 0.0);
    }

    #[test]
    fn euclidean_geodesic_is_linear() {
        let s = space(TargetSpace::euclidean(2).unwrap(), &[1.0, 1.0]);
        let f = s.mapping(vec![TargetPoint::vector(&[0.0, 0.0]), TargetPoint::vector(&[1.0, 1.0])]).unwrap();
        let g = s.mapping(vec![TargetPoint::vector(&[2.0, 0.0]), TargetPoint::vector(&[1.0, 5.0])]).unwrap();
        let geo = lp_geodesic(&f, &g, Exponent::Finite(2.0), 5).unwrap();
        assert!(geodesic_speed_check(&geo) < 1e-14);
        assert_eq!(geo.curve().values()[2].value(0), &TargetPoint::vector(&[1.0, 0.0]));
    }

    #[test]
    fn single_atom_matches_target_geodesic() {
        let target = TargetSpace::spd(2).unwrap();
        let s = space(target.clone(), &[1.0]);
        let mut rng = trial_rng(2, "t", 0);
        let (f, g) = (random_mapping(&s, &mut rng), random_mapping(&s, &mut rng));
        let geo = lp_geodesic(&f, &g, Exponent::Finite(2.0), 5).unwrap();
        let mid = target.geodesic_point(f.value(0), g.value(0), 0.5).unwrap();
        assert_eq!(geo.per_atom()[0].values()[2], mid);
    }

    #[test]
    fn spd_three_atoms() {
        let s = space(TargetSpace::spd(2).unwrap(), &[1.0, 2.0, 1.0]);
        let mut rng = trial_rng(3, "t", 0);
        for _ in 0..5 {
            let (f, g) = (random_mapping(&s, &mut rng), random_mapping(&s, &mut rng));
            let geo = lp_geodesic(&f, &g, Exponent::Finite(2.0), 33).unwrap();
            assert!(geodesic_speed_check(&geo) < 1e-9);
            assert!(geo.pair_residual() < 1e-9);
            assert!(geo.length_residual() < 1e-9);
        }
    }

    #[test]
    fn antipodal_atom_is_named() {
        let s = space(TargetSpace::sphere(3).unwrap(), &[1.0, 1.0]);
        let n = TargetPoint::vector(&[0.0, 0.0, 1.0]);
        let south = TargetPoint::vector(&[0.0, 0.0, -1.0]);
        let f = s.mapping(vec![n.clone(), n.clone()]).unwrap();
        let g = s.mapping(vec![n.clone(), south.clone()]).unwrap();
        match lp_geodesic(&f, &g, Exponent::Finite(2.0), 5) {
            Err(Error::NonUniqueGeodesic(msg)) => assert!(msg.contains("atom 1")),
            other => panic!("expected an error, got {other:?}"),
        }
        // on a null atom the pair is harmless
        let s0 = space(TargetSpace::sphere(3).unwrap(), &[1.0, 0.0]);
        let f = s0.mapping(vec![n.clone(), n.clone()]).unwrap();
        let g = s0.mapping(vec![n, south]).unwrap();
        let geo = lp_geodesic(&f, &g, Exponent::Finite(2.0), 5).unwrap();
        assert_eq!(geo.endpoint_distance(), 0.0);
        assert!(geo.pair_residual() == 0.0);
    }

    #[test]
    fn time_rescaling_keeps_values() {
        let s = space(TargetSpace::sphere(3).unwrap(), &[0.5, 1.5]);
        let mut rng = trial_rng(4, "t", 0);
        let (f, g) = (random_mapping(&s, &mut rng), random_mapping(&s, &mut rng));
        let unit = lp_geodesic(&f, &g, Exponent::Finite(3.0), 17).unwrap();
        let long = lp_geodesic_on(&f, &g, Exponent::Finite(3.0), -2.0, 3.0, 17).unwrap();
        assert_eq!(unit.curve().values(), long.curve().values());
        assert!((unit.pair_residual() - long.pair_residual()).abs() < 1e-12);
        assert!((geodesic_speed_check(&unit) - 5.0 * geodesic_speed_check(&long)).abs() < 1e-12);
    }

    #[test]
    fn curvature_refuses_unknown_and_trivial() {
        let base = FiniteMeasureSpace::from_weights(&[1.0, 1.0]).unwrap();
        let unknown = TargetSpace::sphere(3).unwrap().with_unknown_curvature();
        assert!(matches!(curvature_comparison_suite(&unknown, &base, 3, 0), Err(Error::Unsupported(_))));
        let null = FiniteMeasureSpace::from_weights(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            curvature_comparison_suite(&TargetSpace::euclidean(2).unwrap(), &null, 3, 0),
            Err(Error::InvalidSpace(_))
        ));
    }

    #[test]
    fn curvature_signs() {
        let base = FiniteMeasureSpace::from_weights(&[1.0, 2.0, 0.5]).unwrap();
        let flat = curvature_comparison_suite(&TargetSpace::euclidean(3).unwrap(), &base, 50, 1).unwrap();
        assert!(flat.residual_min.abs() < 1e-10 && flat.residual_max.abs() < 1e-10);
        let npc = curvature_comparison_suite(&TargetSpace::spd(2).unwrap(), &base, 50, 1).unwrap();
        assert!(npc.sign_consistent(1e-8, 1e-10));
        assert!(npc.embedding_mismatch < 1e-10);
        let nnc = curvature_comparison_suite(&TargetSpace::sphere(3).unwrap(), &base, 50, 1).unwrap();
        assert!(nnc.sign_consistent(1e-8, 1e-10));
        assert_eq!(nnc.traces.len(), 50);
    }

    #[test]
    fn tree_lengths_are_exact() {
        let tree = TargetSpace::metric_tree(vec![
            TreeEdge { from: 0, to: 1, length: 1.0 },
            TreeEdge { from: 1, to: 2, length: 2.0 },
            TreeEdge { from: 1, to: 3, length: 0.5 },
        ])
        .unwrap();
        let base = FiniteMeasureSpace::from_weights(&[1.0, 1.0, 2.0]).unwrap();
        let r = length_space_check(&tree, &base, 2.0, DEFAULT_KAPPA, 20, 17, 5).unwrap();
        assert!(r.certified(1e-9), "{r:?}");
        let r = length_space_check(&TargetSpace::euclidean(2).unwrap(), &base, 3.0, DEFAULT_KAPPA, 20, 17, 5).unwrap();
        assert!(r.max_relative_gap < 1e-12);
        assert!(length_space_check(&tree, &base, 1.0, DEFAULT_KAPPA, 1, 5, 0).is_err());
    }
}
