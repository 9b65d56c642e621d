//! Experiment suites behind the command-line tool.
//!
//! Every suite draws its randomness from `trial_rng(seed, suite, trial)`,
//! runs trials in parallel, collects them in trial order and reduces
//! sequentially, so reports depend only on the settings.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve_transport::{
    counterexample_p1, decompose_ac, decompose_bv, derivative_identity_residual,
    derivative_identity_residual_with_reference, variation_identity_residual,
};
use crate::curves::{skorokhod_distance, SampledCurve, StepCurve};
use crate::error::{Error, Result};
use crate::finsler_speed::{atom_speed_residual, bundle_norm, compute_speed, speed_identity_residual, write_speed_csv};
use crate::fubini_sections::{
    curve_of_mappings_distance, mapping_of_curves_distance, sec_i, sec_i_inverse, sec_m, sec_m_inverse,
};
use crate::geometry::{
    curvature_comparison_suite, geodesic_speed_check, length_space_check, lp_geodesic, sign_ok, write_trace_csv,
    LpGeodesic,
};
use crate::lebesgue_maps::{
    product_distance, Exponent, FiniteMeasureSpace, LebesgueSpace, LpMetric, MetricMapping, ProductGridMapping,
    TimeGrid, TimeRule,
};
use crate::sampling::{random_mapping, random_point, trial_rng};
use crate::smooth::SmoothCurve;
use crate::target_spaces::{CurvatureClass, TargetPoint, TargetSpace, TreeEdge};

/// Named tolerances with their defaults.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("fubini_relative", 1e-13),
    ("ac_same_stencil", 1e-12),
    ("ac_residual", 2e-3),
    ("ac_order", 0.9),
    ("bv_identity", 1e-12),
    ("counterexample_variation", 1e-12),
    ("geodesic_speed", 1e-9),
    ("geodesic_pairs", 1e-9),
    ("geodesic_length", 1e-9),
    ("curvature_sign", 1e-8),
    ("curvature_flat", 1e-10),
    ("curvature_embedding", 1e-10),
    ("length_relative", 1e-8),
    ("length_kappa", 1.0 + 1e-6),
    ("energy_epsilon", 1e-6),
    ("speed_residual", 2e-3),
    ("speed_order", 0.9),
    ("speed_atom", 5e-3),
    ("speed_consistency", 5e-3),
    ("skorokhod_example", 1e-3),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.0.contains_key(name) {
            let known: Vec<&str> = TOLERANCES.iter().map(|(k, _)| *k).collect();
            return Err(Error::InvalidArgument(format!(
                "unknown tolerance '{name}' (known: {})",
                known.join(", ")
            )));
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance '{name}' must be positive and finite")));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }
}

/// Inputs shared by every suite; unset fields fall back to suite defaults.
#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub target: Option<TargetSpace>,
    pub base: Option<FiniteMeasureSpace>,
    pub p: Option<Exponent>,
    pub grid: Option<usize>,
    pub trials: Option<usize>,
    pub tolerances: Tolerances,
}

impl Settings {
    pub fn new(seed: u64) -> Self {
        Settings {
            seed,
            target: None,
            base: None,
            p: None,
            grid: None,
            trials: None,
            tolerances: Tolerances::default(),
        }
    }

    fn tol(&self, name: &str) -> f64 {
        self.tolerances.get(name)
    }

    fn targets(&self, defaults: Vec<TargetSpace>) -> Vec<TargetSpace> {
        match &self.target {
            Some(t) => vec![t.clone()],
            None => defaults,
        }
    }

    fn exponents(&self, defaults: &[f64]) -> Vec<Exponent> {
        match self.p {
            Some(p) => vec![p],
            None => defaults.iter().map(|&p| Exponent::Finite(p)).collect(),
        }
    }

    fn base_or(&self, suite: &str, atoms: usize) -> FiniteMeasureSpace {
        self.base.clone().unwrap_or_else(|| random_weights(self.seed, suite, atoms))
    }

    fn trials_or(&self, n: usize) -> usize {
        self.trials.unwrap_or(n)
    }
}

/// One asserted invariant.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    /// What the invariant states.
    pub invariant: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, invariant: &str, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Check {
            name: name.into(),
            invariant: invariant.to_string(),
            value,
            lower,
            upper,
            passed,
        }
    }

    pub fn at_most(name: impl Into<String>, invariant: &str, value: f64, upper: f64) -> Self {
        Self::new(name, invariant, value, None, Some(upper))
    }

    pub fn at_least(name: impl Into<String>, invariant: &str, value: f64, lower: f64) -> Self {
        Self::new(name, invariant, value, Some(lower), None)
    }

    pub fn within(name: impl Into<String>, invariant: &str, value: f64, lower: f64, upper: f64) -> Self {
        Self::new(name, invariant, value, Some(lower), Some(upper))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    /// `(file name, contents)` of CSV artifacts.
    #[serde(skip)]
    pub csv: Vec<(String, String)>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            passed: true,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            csv: Vec::new(),
        }
    }

    fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    fn metric(&mut self, key: String, value: f64) {
        self.metrics.insert(key, value);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn slug(s: &str) -> String {
    let raw: String = s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    raw.split('_').filter(|x| !x.is_empty()).collect::<Vec<_>>().join("_")
}

fn key(prefix: &Option<String>, name: &str) -> String {
    match prefix {
        Some(p) => format!("{p}.{name}"),
        None => name.to_string(),
    }
}

fn prefix_for(label: String, many: bool) -> Option<String> {
    many.then_some(label)
}

fn random_weights(seed: u64, suite: &str, atoms: usize) -> FiniteMeasureSpace {
    let mut rng = trial_rng(seed, &format!("weights/{suite}"), 0);
    let w: Vec<f64> = (0..atoms).map(|_| 0.25 + rng.random::<f64>()).collect();
    FiniteMeasureSpace::from_weights(&w).expect("positive weights")
}

fn probability_weights(seed: u64, suite: &str, atoms: usize) -> FiniteMeasureSpace {
    let raw = random_weights(seed, suite, atoms);
    let total = raw.total_mass();
    FiniteMeasureSpace::from_weights(&raw.weights().iter().map(|w| w / total).collect::<Vec<_>>()).expect("positive weights")
}

fn lebesgue(target: &TargetSpace, base: &FiniteMeasureSpace, seed: u64) -> Result<Arc<LebesgueSpace>> {
    let h = random_point(target, &mut trial_rng(seed, "base-mapping", 0));
    LebesgueSpace::with_constant_base(base.clone(), target.clone(), h)
}

pub fn default_tree() -> TargetSpace {
    TargetSpace::metric_tree(vec![
        TreeEdge { from: 0, to: 1, length: 1.0 },
        TreeEdge { from: 1, to: 2, length: 0.5 },
        TreeEdge { from: 1, to: 3, length: 2.0 },
        TreeEdge { from: 3, to: 4, length: 0.75 },
    ])
    .expect("valid tree")
}

fn relative(x: f64, reference: f64) -> f64 {
    let gap = (x - reference).abs();
    if reference > 0.0 {
        gap / reference
    } else {
        gap
    }
}

fn uniform_times(k: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    t[k - 1] = 1.0;
    t
}

/// Smallest `log2(r_k / r_{k+1})` over consecutive grid doublings; exact
/// zeros count as arbitrarily fast decay.
pub fn empirical_order(residuals: &[f64]) -> f64 {
    residuals
        .windows(2)
        .map(|w| {
            if w[1] == 0.0 {
                f64::INFINITY
            } else {
                (w[0] / w[1]).log2()
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

fn refinement_grids(s: &Settings) -> Vec<usize> {
    let g = s.grid.unwrap_or(65).max(3);
    vec![g, 2 * g - 1, 4 * g - 3]
}

fn smooth_lp_curve(
    space: &Arc<LebesgueSpace>,
    p: Exponent,
    curves: &[SmoothCurve],
    times: Vec<f64>,
) -> Result<SampledCurve<LpMetric>> {
    let values = times
        .iter()
        .map(|&t| space.mapping(curves.iter().map(|c| c.point(t)).collect()))
        .collect::<Result<Vec<MetricMapping>>>()?;
    SampledCurve::new(LpMetric::new(Arc::clone(space), p), times, values)
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 csv")
}

/// Section isometries on random product mappings.
pub fn fubini(s: &Settings) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("fubini");
    let target = s.target.clone().unwrap_or_else(|| TargetSpace::spd(2).expect("spd(2)"));
    let base = s.base_or("fubini", 8);
    let space = lebesgue(&target, &base, s.seed)?;
    let nodes = s.grid.unwrap_or(16).max(2);
    let trials = s.trials_or(100);
    let exponents = match s.p {
        Some(p) => vec![p],
        None => vec![Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Finite(3.0), Exponent::Infinite],
    };
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(s.seed, "fubini", trial as u64);
            let rule = if trial % 2 == 0 { TimeRule::Trapezoid } else { TimeRule::Step };
            let grid = TimeGrid::uniform(0.0, 1.0, nodes, rule)?;
            let mut draw = || -> Result<ProductGridMapping> {
                let values = (0..nodes)
                    .map(|_| (0..base.len()).map(|_| random_point(&target, &mut rng)).collect())
                    .collect();
                ProductGridMapping::new(grid.clone(), Arc::clone(&space), values)
            };
            let (c1, c2) = (draw()?, draw()?);
            let roundtrip = sec_i_inverse(&sec_i(&c1)) == c1 && sec_m_inverse(&sec_m(&c1)) == c1;
            let mut worst = (0.0f64, 0.0f64);
            for &p in &exponents {
                let flat = product_distance(&c1, &c2, p)?;
                let time_outer = curve_of_mappings_distance(&sec_i(&c1), &sec_i(&c2), p)?;
                let atom_outer = mapping_of_curves_distance(&sec_m(&c1), &sec_m(&c2), p)?;
                worst.0 = worst.0.max(relative(time_outer, flat));
                worst.1 = worst.1.max(relative(atom_outer, flat));
            }
            Ok((worst, roundtrip))
        })
        .collect::<Result<Vec<_>>>()?;
    let time_outer = rows.iter().map(|r| r.0 .0).fold(0.0, f64::max);
    let atom_outer = rows.iter().map(|r| r.0 .1).fold(0.0, f64::max);
    let broken = rows.iter().filter(|r| !r.1).count() as f64;
    report.metric("max_relative_time_outer".into(), time_outer);
    report.metric("max_relative_atom_outer".into(), atom_outer);
    report.metric("trials".into(), trials as f64);
    let tol = s.tol("fubini_relative");
    report.check(Check::at_most(
        "fubini_time_sections",
        "Fubini section isometry: product distance equals the time-outer iterated distance",
        time_outer,
        tol,
    ));
    report.check(Check::at_most(
        "fubini_atom_sections",
        "Fubini section isometry: product distance equals the atom-outer iterated distance",
        atom_outer,
        tol,
    ));
    report.check(Check::at_most(
        "fubini_roundtrip",
        "section maps invert each other",
        broken,
        0.0,
    ));
    Ok(report)
}

/// Pointwise derivative identity for AC curves and the variation identity
/// for step curves.
pub fn transport(s: &Settings) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("transport");
    let targets = s.targets(vec![TargetSpace::sphere(3)?, TargetSpace::spd(2)?]);
    let many = targets.len() > 1;
    for target in &targets {
        let prefix = prefix_for(slug(&target.name()), many);
        if target.has_chart() {
            transport_ac(s, target, &prefix, &mut report)?;
        }
        transport_bv(s, target, &prefix, &mut report)?;
    }
    Ok(report)
}

fn transport_ac(s: &Settings, target: &TargetSpace, prefix: &Option<String>, report: &mut SuiteReport) -> Result<()> {
    let p = s.p.unwrap_or(Exponent::Finite(2.0));
    let base = s.base_or("transport", 4);
    let space = lebesgue(target, &base, s.seed)?;
    let grids = refinement_grids(s);
    let trials = s.trials_or(20);
    let suite = format!("transport-ac/{}", target.name());
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(s.seed, &suite, trial as u64);
            let curves = (0..base.len())
                .map(|_| SmoothCurve::random(target, 1.0, 1.0, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let mut same_stencil: f64 = 0.0;
            let mut interior = Vec::with_capacity(grids.len());
            for &k in &grids {
                let times = uniform_times(k);
                let c = smooth_lp_curve(&space, p, &curves, times.clone())?;
                let d = decompose_ac(&c)?;
                let lhs: Vec<f64> = c.metric_derivative().iter().map(|m| m.powf(p.value())).collect();
                for (r, l) in derivative_identity_residual(&d).iter().zip(&lhs) {
                    same_stencil = same_stencil.max(r.abs() / l.max(1.0));
                }
                let reference: Vec<Vec<f64>> = curves
                    .iter()
                    .map(|curve| times.iter().map(|&t| curve.speed(t)).collect())
                    .collect();
                let r = derivative_identity_residual_with_reference(&d, &reference)?;
                interior.push(r[1..k - 1].iter().map(|x| x.abs()).fold(0.0, f64::max));
            }
            Ok((same_stencil, interior))
        })
        .collect::<Result<Vec<_>>>()?;
    let same = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let finest = rows.iter().map(|r| r.1[grids.len() - 1]).fold(0.0, f64::max);
    let order = rows.iter().map(|r| empirical_order(&r.1)).fold(f64::INFINITY, f64::min);
    report.metric(key(prefix, "ac_same_stencil_max"), same);
    report.metric(key(prefix, "ac_residual_finest"), finest);
    report.metric(key(prefix, "ac_order_min"), finite(order));
    report.check(Check::at_most(
        key(prefix, "ac_same_stencil"),
        "AC characterization: |c'|_p^p equals the weighted sum of per-atom |f'|^p on a common stencil",
        same,
        s.tol("ac_same_stencil"),
    ));
    report.check(Check::at_most(
        key(prefix, "ac_residual"),
        "AC characterization: derivative identity against exact per-atom speeds at the finest grid",
        finest,
        s.tol("ac_residual"),
    ));
    report.check(Check::at_least(
        key(prefix, "ac_order"),
        "AC characterization: derivative identity residual decays under refinement",
        order,
        s.tol("ac_order"),
    ));
    Ok(())
}

fn random_step_curve<R: Rng + ?Sized>(
    space: &Arc<LebesgueSpace>,
    p: Exponent,
    pieces: usize,
    rng: &mut R,
) -> Result<StepCurve<LpMetric>> {
    let mut inner: Vec<f64> = (0..pieces - 1).map(|_| rng.random::<f64>()).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let mut breakpoints = vec![0.0];
    breakpoints.extend(inner.into_iter().filter(|&x| x > 0.0 && x < 1.0));
    breakpoints.push(1.0);
    let mut values = vec![random_mapping(space, rng)];
    for _ in 1..breakpoints.len() - 1 {
        let prev = values.last().expect("nonempty").clone();
        let mut next = Vec::with_capacity(space.atom_count());
        for j in 0..space.atom_count() {
            if rng.random::<f64>() < 0.5 {
                next.push(prev.value(j).clone());
            } else {
                next.push(random_point(space.target(), rng));
            }
        }
        values.push(space.mapping(next)?);
    }
    StepCurve::new(LpMetric::new(Arc::clone(space), p), breakpoints, values)
}

fn transport_bv(s: &Settings, target: &TargetSpace, prefix: &Option<String>, report: &mut SuiteReport) -> Result<()> {
    let base = s.base_or("transport", 4);
    let space = lebesgue(target, &base, s.seed)?;
    let trials = s.trials_or(100);
    let suite = format!("transport-bv/{}", target.name());
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(s.seed, &suite, trial as u64);
            let pieces = rng.random_range(1..=8);
            let c = random_step_curve(&space, Exponent::Finite(1.0), pieces, &mut rng)?;
            let d = decompose_bv(&c)?;
            let measure = c.variation_measure();
            let bps = c.breakpoints().to_vec();
            let mut intervals = vec![(0.0, 1.0)];
            for w in bps.windows(3) {
                intervals.push((w[0], w[2]));
            }
            for _ in 0..20 {
                let (x, y): (f64, f64) = (rng.random(), rng.random());
                if x != y {
                    intervals.push((x.min(y), x.max(y)));
                }
            }
            let mut worst: f64 = 0.0;
            let mut measure_gap: f64 = 0.0;
            for (lo, hi) in intervals {
                worst = worst.max(variation_identity_residual(&d, lo, hi)?.abs());
                measure_gap = measure_gap.max((measure.open_interval(lo, hi) - c.variation(lo, hi)?).abs());
            }
            Ok((worst, measure_gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let gap = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    report.metric(key(prefix, "bv_residual_max"), worst);
    report.metric(key(prefix, "bv_measure_gap"), gap);
    report.check(Check::at_most(
        key(prefix, "bv_identity"),
        "BV characterization: variation measure equals the weighted per-atom variation measures",
        worst,
        s.tol("bv_identity"),
    ));
    report.check(Check::at_most(
        key(prefix, "bv_measure"),
        "variation measure of an open interval equals the variation there",
        gap,
        s.tol("bv_identity"),
    ));
    Ok(())
}

/// The indicator-curve scenario for `p = 1`.
pub fn counterexample(s: &Settings, n: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("counterexample_p1");
    let r = counterexample_p1(n, 4)?;
    let slack = 2.0 / n as f64;
    report.metric("n".into(), n as f64);
    report.metric("lipschitz_lo".into(), r.lipschitz_lo);
    report.metric("lipschitz_hi".into(), r.lipschitz_hi);
    report.metric("max_atom_modulus".into(), r.max_atom_modulus);
    report.metric("total_variation".into(), r.total_variation);
    report.metric("weighted_atom_variation".into(), r.weighted_atom_variation);
    let invariant = "p = 1 counter-example: the indicator curve is Lipschitz in L^1";
    report.check(Check::within("lipschitz_lo", invariant, r.lipschitz_lo, 1.0 - slack, 1.0 + slack));
    report.check(Check::within("lipschitz_hi", invariant, r.lipschitz_hi, 1.0 - slack, 1.0 + slack));
    let min_modulus = r.atom_modulus_by_level.iter().copied().fold(f64::INFINITY, f64::min);
    report.check(Check::within(
        "atom_modulus",
        "p = 1 counter-example: every per-atom section keeps a unit jump under refinement",
        min_modulus.min(r.max_atom_modulus),
        1.0,
        1.0,
    ));
    report.check(Check::at_most(
        "weighted_variation",
        "p = 1 counter-example: weighted per-atom variation is 1",
        (r.weighted_atom_variation - 1.0).abs(),
        s.tol("counterexample_variation"),
    ));
    report.check(Check::at_most(
        "ac_refused",
        "p = 1 counter-example: pointwise AC decomposition is refused",
        if r.ac_decomposition_refused { 0.0 } else { 1.0 },
        0.0,
    ));
    report.csv.push(("counterexample_p1.csv".into(), csv_string(|w| r.write_csv(w))));
    Ok(report)
}

fn geodesic_trace(geo: &LpGeodesic) -> String {
    let (a, b) = geo.curve().interval();
    let expected = geo.endpoint_distance() / (b - a);
    let md = geo.curve().metric_derivative();
    let space = geo.endpoints().0.space();
    let target = space.target();
    let (f, g) = geo.endpoints();
    let atom_md: Vec<Vec<f64>> = geo.per_atom().iter().map(|c| c.metric_derivative()).collect();
    csv_string(|out| {
        use std::io::Write;
        writeln!(out, "t,metric_derivative,expected_speed,residual")?;
        for (i, t) in geo.times().iter().enumerate() {
            let mut r: f64 = 0.0;
            for (j, w) in space.weights().iter().enumerate() {
                if *w > 0.0 {
                    let speed = target.dist_unchecked(f.value(j), g.value(j)) / (b - a);
                    r = r.max((atom_md[j][i] - speed).abs());
                }
            }
            writeln!(out, "{t},{},{expected},{r}", md[i])?;
        }
        Ok(())
    })
}

/// Pointwise-assembled geodesics in `L^p`.
pub fn geodesic(s: &Settings) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("geodesic");
    let targets = s.targets(vec![TargetSpace::sphere(3)?, TargetSpace::spd(2)?, default_tree()]);
    let exponents = s.exponents(&[1.5, 2.0, 3.0]);
    let base = s.base.clone().unwrap_or_else(|| FiniteMeasureSpace::from_weights(&[1.0, 2.0, 1.0]).expect("weights"));
    let grid = s.grid.unwrap_or(33).max(2);
    let trials = s.trials_or(10);
    let many = targets.len() > 1;
    for target in &targets {
        let prefix = prefix_for(slug(&target.name()), many);
        let space = lebesgue(target, &base, s.seed)?;
        let suite = format!("geodesic/{}", target.name());
        let rows = (0..trials * exponents.len())
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(s.seed, &suite, trial as u64);
                let p = exponents[trial % exponents.len()];
                let f = random_mapping(&space, &mut rng);
                let g = loop {
                    let g = random_mapping(&space, &mut rng);
                    match lp_geodesic(&f, &g, p, grid) {
                        Err(Error::NonUniqueGeodesic(_)) => continue,
                        other => break other,
                    }
                }?;
                let trace = (trial == 0).then(|| geodesic_trace(&g));
                Ok((geodesic_speed_check(&g), g.pair_residual(), g.length_residual(), trace))
            })
            .collect::<Result<Vec<_>>>()?;
        let speed = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let pairs = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let length = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        report.metric(key(&prefix, "speed_residual_max"), speed);
        report.metric(key(&prefix, "pair_residual_max"), pairs);
        report.metric(key(&prefix, "length_residual_max"), length);
        report.check(Check::at_most(
            key(&prefix, "constant_speed"),
            "geodesic characterization: per-atom curves are constant-speed geodesics",
            speed,
            s.tol("geodesic_speed"),
        ));
        report.check(Check::at_most(
            key(&prefix, "pair_distances"),
            "geodesic characterization: D_p(c(s), c(t)) = |t - s| D_p(f, g)",
            pairs,
            s.tol("geodesic_pairs"),
        ));
        report.check(Check::at_most(
            key(&prefix, "length"),
            "geodesic space: length of the assembled curve equals D_p(f, g)",
            length,
            s.tol("geodesic_length"),
        ));
        if let Some(trace) = rows.into_iter().next().and_then(|r| r.3) {
            let name = match &prefix {
                Some(p) => format!("geodesic_{p}.csv"),
                None => "geodesic.csv".to_string(),
            };
            report.csv.push((name, trace));
        }
    }
    Ok(report)
}

/// Alexandrov comparison in `L^2` and through the constant embedding.
pub fn curvature(s: &Settings) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("curvature");
    let targets = s.targets(vec![TargetSpace::spd(2)?, TargetSpace::sphere(3)?, TargetSpace::euclidean(3)?]);
    let base = s.base.clone().unwrap_or_else(|| FiniteMeasureSpace::from_weights(&[1.0, 0.5, 2.0]).expect("weights"));
    let trials = s.trials_or(500);
    let many = targets.len() > 1;
    let (sign_tol, flat_tol) = (s.tol("curvature_sign"), s.tol("curvature_flat"));
    for target in &targets {
        let prefix = prefix_for(slug(&target.name()), many);
        let r = curvature_comparison_suite(target, &base, trials, s.seed)?;
        report.metric(key(&prefix, "residual_min"), r.residual_min);
        report.metric(key(&prefix, "residual_max"), r.residual_max);
        report.metric(key(&prefix, "embedded_residual_min"), r.embedded_residual_min);
        report.metric(key(&prefix, "embedded_residual_max"), r.embedded_residual_max);
        report.metric(key(&prefix, "embedding_mismatch"), r.embedding_mismatch);
        let class = r.curvature;
        let violation = |lo: f64, hi: f64| match class {
            CurvatureClass::Flat => lo.abs().max(hi.abs()),
            CurvatureClass::GlobalNpc => hi.max(0.0),
            CurvatureClass::GlobalNnc => (-lo).max(0.0),
            CurvatureClass::Unknown => f64::INFINITY,
        };
        let limit = if class == CurvatureClass::Flat { flat_tol } else { sign_tol };
        let lifted = violation(r.residual_min, r.residual_max);
        let embedded = violation(r.embedded_residual_min, r.embedded_residual_max);
        debug_assert_eq!(lifted <= limit, sign_ok(class, r.residual_min, r.residual_max, sign_tol, flat_tol));
        report.check(Check::at_most(
            key(&prefix, "lebesgue_sign"),
            "curvature transfer: L^2 comparison residuals have the target's sign",
            lifted,
            limit,
        ));
        report.check(Check::at_most(
            key(&prefix, "embedded_sign"),
            "curvature transfer (converse): embedded target triangles keep the L^2 sign",
            embedded,
            limit,
        ));
        report.check(Check::at_most(
            key(&prefix, "embedding_isometry"),
            "constant mappings embed the target isometrically up to total mass",
            r.embedding_mismatch,
            s.tol("curvature_embedding"),
        ));
        let name = match &prefix {
            Some(p) => format!("curvature_{p}.csv"),
            None => "curvature.csv".to_string(),
        };
        report.csv.push((name, csv_string(|w| write_trace_csv(&r.traces, w))));
    }
    Ok(report)
}

/// Quasi-geodesic energy certificates and the constant-speed energy bound.
pub fn length(s: &Settings) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("length");
    let targets = s.targets(vec![
        TargetSpace::euclidean(2)?,
        TargetSpace::sphere(3)?,
        TargetSpace::spd(2)?,
        default_tree(),
    ]);
    let exponents = s.exponents(&[1.5, 2.0, 3.0]);
    if exponents.iter().any(|p| !(p.is_finite() && p.value() > 1.0)) {
        return Err(Error::InvalidArgument("length certificates need 1 < p < inf".into()));
    }
    let base = s.base_or("length", 3);
    let kappa = s.tol("length_kappa");
    let trials = s.trials_or(20);
    let grid = s.grid.unwrap_or(17).max(2);
    let many = targets.len() * exponents.len() > 1;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for target in &targets {
        for p in &exponents {
            let r = length_space_check(target, &base, p.value(), kappa, trials, grid, s.seed)?;
            let prefix = prefix_for(format!("{}.p{}", slug(&target.name()), p), many);
            report.metric(key(&prefix, "certificate_ratio_max"), r.max_certificate_ratio);
            report.metric(key(&prefix, "relative_gap_max"), r.max_relative_gap);
            worst_ratio = worst_ratio.max(r.max_certificate_ratio);
            worst_gap = worst_gap.max(r.max_relative_gap);
        }
    }
    report.check(Check::at_most(
        "quasi_geodesic",
        "length space: (b - a)^{p-1} E_p <= kappa^p D_p(f, g)^p for pointwise geodesics",
        worst_ratio,
        1.0,
    ));
    report.check(Check::at_most(
        "geodesic_energy",
        "geodesic space: pointwise geodesics attain the energy bound",
        worst_gap,
        s.tol("length_relative"),
    ));
    energy(s, &exponents, &mut report)?;
    Ok(report)
}

fn energy(s: &Settings, exponents: &[Exponent], report: &mut SuiteReport) -> Result<()> {
    let target = match &s.target {
        Some(t) if t.has_chart() => t.clone(),
        _ => TargetSpace::sphere(3)?,
    };
    let base = s.base_or("energy", 3);
    let space = lebesgue(&target, &base, s.seed)?;
    let eps = s.tol("energy_epsilon");
    let trials = s.trials.unwrap_or(50);
    let nodes = s.grid.unwrap_or(65).max(3);
    let rows = (0..trials * exponents.len())
        .into_par_iter()
        .map(|trial| {
            let p = exponents[trial % exponents.len()];
            let mut rng = trial_rng(s.seed, "energy", trial as u64);
            loop {
                let curves = (0..base.len())
                    .map(|_| SmoothCurve::random(&target, 2.0, 1.0, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                let mut times: Vec<f64> = (0..nodes - 2).map(|_| rng.random::<f64>()).collect();
                times.push(0.0);
                times.push(1.0);
                times.sort_by(f64::total_cmp);
                times.dedup();
                let c = smooth_lp_curve(&space, p, &curves, times)?;
                let len = c.length();
                // the bound (1 + eps / L)^{p-1} <= (1 + eps)^p needs L >= 1
                if len < 1.0 {
                    continue;
                }
                let r = c.constant_speed_reparam(eps)?;
                let (a, b) = r.interval();
                let q = p.value();
                let ratio = (b - a).powf(q - 1.0) * r.energy(q)? / len.powf(q);
                let before = (b - a).powf(q - 1.0) * c.energy(q)? / len.powf(q);
                let bound = (1.0 + eps).powf(q);
                return Ok((ratio, bound, before, relative(r.length(), len)));
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let min_ratio = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let excess = rows.iter().map(|r| r.0 / r.1).fold(0.0, f64::max);
    let before = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let drift = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    report.metric("energy_ratio_min".into(), min_ratio);
    report.metric("energy_ratio_over_bound_max".into(), excess);
    report.metric("energy_ratio_before_max".into(), before);
    report.metric("energy_length_drift".into(), drift);
    report.check(Check::at_least(
        "energy_lower",
        "energy/length: length^p <= (b - a)^{p-1} E_p",
        min_ratio,
        1.0 - 1e-12,
    ));
    report.check(Check::at_most(
        "energy_upper",
        "energy/length: constant-speed reparametrization attains length^p within (1 + eps)^p",
        excess,
        1.0,
    ));
    report.check(Check::at_most(
        "reparam_length",
        "reparametrization keeps the length",
        drift,
        1e-10,
    ));
    Ok(())
}

/// Coefficient norms of the smooth curves in the speed suite. The forward
/// log velocity differs from the central metric derivative by about
/// `dt / 2 * |d/dt |c'||`, so the absolute thresholds presume curves of
/// unit scale on a probability base.
const SPEED_VELOCITY: f64 = 1.0;
const SPEED_ACCELERATION: f64 = 0.25;

/// Speed identity `|c'|_p = B_p(c')` for smooth curves under refinement.
pub fn speed(s: &Settings) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("speed");
    let targets = s.targets(vec![TargetSpace::euclidean(2)?, TargetSpace::sphere(3)?, TargetSpace::spd(2)?]);
    let p = s.p.unwrap_or(Exponent::Finite(2.0));
    let base = s.base.clone().unwrap_or_else(|| probability_weights(s.seed, "speed", 4));
    let grids = refinement_grids(s);
    let trials = s.trials_or(50);
    let many = targets.len() > 1;
    for target in &targets {
        if !target.has_chart() {
            return Err(Error::Unsupported(format!("{} has no exp/log chart", target.name())));
        }
        let prefix = prefix_for(slug(&target.name()), many);
        let space = lebesgue(target, &base, s.seed)?;
        let suite = format!("speed/{}", target.name());
        let rows = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(s.seed, &suite, trial as u64);
                let curves = (0..base.len())
                    .map(|_| SmoothCurve::random(target, SPEED_VELOCITY, SPEED_ACCELERATION, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                let mut residuals = Vec::new();
                let mut atom = Vec::new();
                let mut consistency: f64 = 0.0;
                let mut trace = None;
                for (level, &k) in grids.iter().enumerate() {
                    let c = smooth_lp_curve(&space, p, &curves, uniform_times(k))?;
                    let d = decompose_ac(&c)?;
                    let field = compute_speed(&d)?;
                    residuals.push(speed_identity_residual(&field).into_iter().fold(0.0, f64::max));
                    atom.push(atom_speed_residual(&field, &d));
                    if level + 1 == grids.len() {
                        let per_atom: Vec<Vec<f64>> = d.per_atom().iter().map(|c| c.metric_derivative()).collect();
                        for i in 0..k {
                            let b = bundle_norm(&field, i).powf(p.value());
                            let sum: f64 = space
                                .weights()
                                .iter()
                                .zip(&per_atom)
                                .map(|(w, m)| w * m[i].powf(p.value()))
                                .sum();
                            consistency = consistency.max(relative(b, sum));
                        }
                    }
                    if trial == 0 && level + 1 == grids.len() {
                        trace = Some(csv_string(|w| write_speed_csv(&field, w)));
                    }
                }
                Ok((residuals, atom, consistency, trace))
            })
            .collect::<Result<Vec<_>>>()?;
        let finest = rows.iter().map(|r| r.0[grids.len() - 1]).fold(0.0, f64::max);
        let order = rows.iter().map(|r| empirical_order(&r.0)).fold(f64::INFINITY, f64::min);
        let atom = rows.iter().map(|r| r.1[1]).fold(0.0, f64::max);
        let atom_order = rows.iter().map(|r| empirical_order(&r.1)).fold(f64::INFINITY, f64::min);
        let consistency = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        report.metric(key(&prefix, "residual_finest"), finest);
        report.metric(key(&prefix, "order_min"), finite(order));
        report.metric(key(&prefix, "atom_residual_mid"), atom);
        report.metric(key(&prefix, "atom_order_min"), finite(atom_order));
        report.metric(key(&prefix, "consistency_finest"), consistency);
        report.check(Check::at_most(
            key(&prefix, "speed_identity"),
            "Finsler speed: |c'|_p(t) = B_p(c'(t)) at the finest grid",
            finest,
            s.tol("speed_residual"),
        ));
        report.check(Check::at_least(
            key(&prefix, "speed_order"),
            "Finsler speed: identity residual decays under refinement",
            order,
            s.tol("speed_order"),
        ));
        report.check(Check::at_most(
            key(&prefix, "atom_speed"),
            "per-atom speed equals the tangent norm of the log velocity",
            atom,
            s.tol("speed_atom"),
        ));
        report.check(Check::at_least(
            key(&prefix, "atom_order"),
            "per-atom speed residual decays under refinement",
            atom_order,
            s.tol("speed_order"),
        ));
        report.check(Check::at_most(
            key(&prefix, "bundle_consistency"),
            "B_p^p agrees with the weighted per-atom metric derivatives",
            consistency,
            s.tol("speed_consistency"),
        ));
        if let Some(trace) = rows.into_iter().next().and_then(|r| r.3) {
            let name = match &prefix {
                Some(p) => format!("speed_{p}.csv"),
                None => "speed.csv".to_string(),
            };
            report.csv.push((name, trace));
        }
    }
    Ok(report)
}

fn line_step(jump_at: f64, lo: f64, hi: f64) -> Result<StepCurve<TargetSpace>> {
    StepCurve::new(
        TargetSpace::euclidean(1)?,
        vec![0.0, jump_at, 1.0],
        vec![TargetPoint::vector(&[lo]), TargetPoint::vector(&[hi])],
    )
}

/// Skorokhod bounds: worked examples, bound ordering and refinement.
pub fn skorokhod(s: &Settings) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("skorokhod");
    let tol = s.tol("skorokhod_example");
    let c = StepCurve::new(
        TargetSpace::euclidean(1)?,
        vec![0.0, 0.3, 0.8, 1.0],
        vec![TargetPoint::vector(&[0.0]), TargetPoint::vector(&[2.0]), TargetPoint::vector(&[-1.0])],
    )?;
    let self_distance = skorokhod_distance(&c, &c, 64)?.upper;
    let same_jump = skorokhod_distance(&line_step(0.5, 0.0, 1.0)?, &line_step(0.5, 0.0, 1.0)?, 64)?.upper;
    let shifted = skorokhod_distance(&line_step(0.5, 0.0, 1.0)?, &line_step(0.6, 0.0, 1.0)?, 64)?.upper;
    report.metric("self_distance".into(), self_distance);
    report.metric("same_jump".into(), same_jump);
    report.metric("shifted_jump".into(), shifted);
    let invariant = "Skorokhod distance worked example";
    report.check(Check::at_most("example_self", invariant, self_distance, tol));
    report.check(Check::at_most("example_same_jump", invariant, same_jump, tol));
    report.check(Check::at_most("example_shifted_jump", invariant, (shifted - 1.25f64.ln()).abs(), tol));

    let target = s.target.clone().unwrap_or_else(|| TargetSpace::euclidean(1).expect("line"));
    let trials = s.trials_or(200);
    let grids = [8usize, 16, 32, 64];
    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(s.seed, "skorokhod", trial as u64);
            let curve = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<StepCurve<TargetSpace>> {
                let pieces = rng.random_range(1..=4);
                let mut inner: Vec<f64> = (0..pieces - 1).map(|_| rng.random::<f64>()).collect();
                inner.sort_by(f64::total_cmp);
                inner.dedup();
                let mut bps = vec![0.0];
                bps.extend(inner.into_iter().filter(|&x| x > 0.0 && x < 1.0));
                bps.push(1.0);
                let values = (0..bps.len() - 1).map(|_| random_point(&target, rng)).collect();
                StepCurve::new(target.clone(), bps, values)
            };
            let (c, g) = (curve(&mut rng)?, curve(&mut rng)?);
            let mut disordered = 0usize;
            let mut increases = 0usize;
            let mut prev = f64::INFINITY;
            for &w in &grids {
                let b = skorokhod_distance(&c, &g, w)?;
                if b.lower > b.upper {
                    disordered += 1;
                }
                if b.upper > prev {
                    increases += 1;
                }
                prev = b.upper;
            }
            Ok((disordered, increases))
        })
        .collect::<Result<Vec<_>>>()?;
    let disordered = rows.iter().map(|r| r.0).sum::<usize>() as f64;
    let increases = rows.iter().map(|r| r.1).sum::<usize>() as f64;
    report.metric("bound_order_violations".into(), disordered);
    report.metric("refinement_increases".into(), increases);
    report.check(Check::at_most("bound_order", "Skorokhod lower bound never exceeds upper bound", disordered, 0.0));
    report.check(Check::at_most(
        "refinement_monotone",
        "Skorokhod upper bound does not increase as the warp grid doubles",
        increases,
        0.0,
    ));
    Ok(report)
}

/// Every suite at its acceptance settings.
pub fn all(s: &Settings) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        fubini(s)?,
        transport(s)?,
        counterexample(s, 64)?,
        geodesic(s)?,
        curvature(s)?,
        length(s)?,
        speed(s)?,
        skorokhod(s)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_reject_unknown_names() {
        let mut t = Tolerances::default();
        assert!(t.set("fubini_relative", 1e-10).is_ok());
        assert_eq!(t.get("fubini_relative"), 1e-10);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("ac_order", -1.0).is_err());
    }

    #[test]
    fn order_of_halving_sequence() {
        assert!((empirical_order(&[4.0, 2.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(empirical_order(&[0.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn checks_respect_bounds() {
        assert!(Check::at_most("a", "", 1.0, 1.0).passed);
        assert!(!Check::at_most("a", "", f64::NAN, 1.0).passed);
        assert!(!Check::within("a", "", 0.5, 0.6, 1.0).passed);
    }

    #[test]
    fn small_suites_pass() {
        let mut s = Settings::new(3);
        s.trials = Some(4);
        for r in [fubini(&s).unwrap(), counterexample(&s, 8).unwrap(), skorokhod(&s).unwrap()] {
            assert!(r.passed, "{r:?}");
        }
    }
}
