//! Finite measure spaces and nonlinear Lebesgue spaces `L^p_h(M, N)` over them.
//!
//! The base space is a finite list of weighted atoms with the power set as
//! sigma-algebra, so "almost everywhere" means "on every atom of positive
//! weight". A [`LebesgueSpace`] fixes the atoms, the target and the base
//! mapping `h`; mappings hold one target point per atom and share their space
//! through an `Arc`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::target_spaces::{TargetPoint, TargetSpace};

/// Integrability exponent `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            return Ok(Self::Infinite);
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidArgument(format!("exponent p = {p} must satisfy p >= 1")));
        }
        Ok(Self::Finite(p))
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Finite(p) => p,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    /// Weighted `l^p` aggregation of pointwise distances, in index order.
    ///
    /// For `p = inf` this is the maximum over positive-weight entries.
    pub fn aggregate(self, weights: &[f64], dists: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), dists.len());
        match self {
            Self::Finite(p) => {
                let s: f64 = weights.iter().zip(dists).map(|(w, d)| w * d.powf(p)).sum();
                s.powf(1.0 / p)
            }
            Self::Infinite => weights
                .iter()
                .zip(dists)
                .filter(|(w, _)| **w > 0.0)
                .map(|(_, d)| *d)
                .fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(Self::Infinite),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("cannot parse exponent '{other}'")))?;
                Self::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(p) => s.serialize_f64(*p),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub id: String,
    pub weight: f64,
}

/// A finite measure space: labelled atoms with nonnegative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasureSpace {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
}

impl FiniteMeasureSpace {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("measure space needs at least one atom".into()));
        }
        for a in &atoms {
            if !(a.weight.is_finite() && a.weight >= 0.0) {
                return Err(Error::InvalidSpace(format!(
                    "atom '{}' has invalid weight {}",
                    a.id, a.weight
                )));
            }
        }
        let weights = atoms.iter().map(|a| a.weight).collect();
        Ok(Self { atoms, weights })
    }

    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Self::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Atom {
                    id: format!("x{i}"),
                    weight: w,
                })
                .collect(),
        )
    }

    pub fn uniform(count: usize, weight: f64) -> Result<Self> {
        Self::from_weights(&vec![weight; count])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn has_positive_mass(&self) -> bool {
        self.weights.iter().any(|&w| w > 0.0)
    }
}

/// `L^p_h(M, N)` without the exponent: atoms, target and base mapping `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct LebesgueSpace {
    base: FiniteMeasureSpace,
    target: TargetSpace,
    h: Vec<TargetPoint>,
}

impl LebesgueSpace {
    pub fn new(base: FiniteMeasureSpace, target: TargetSpace, h: Vec<TargetPoint>) -> Result<Arc<Self>> {
        if h.len() != base.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                found: h.len(),
            });
        }
        for y in &h {
            target.validate_point(y)?;
        }
        Ok(Arc::new(Self { base, target, h }))
    }

    /// Space whose base mapping is constant equal to `y`.
    pub fn with_constant_base(base: FiniteMeasureSpace, target: TargetSpace, y: TargetPoint) -> Result<Arc<Self>> {
        let h = vec![y; base.len()];
        Self::new(base, target, h)
    }

    pub fn base_space(&self) -> &FiniteMeasureSpace {
        &self.base
    }

    pub fn target(&self) -> &TargetSpace {
        &self.target
    }

    pub fn weights(&self) -> &[f64] {
        self.base.weights()
    }

    pub fn atom_count(&self) -> usize {
        self.base.len()
    }

    pub fn h(&self) -> &[TargetPoint] {
        &self.h
    }

    /// Whether the space contains a class other than `[h]`.
    ///
    /// Every implemented target has at least two points, so this reduces to
    /// the base space carrying positive mass.
    pub fn is_nontrivial(&self) -> bool {
        self.base.has_positive_mass()
    }

    pub fn mapping(self: &Arc<Self>, values: Vec<TargetPoint>) -> Result<MetricMapping> {
        if values.len() != self.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: self.atom_count(),
                found: values.len(),
            });
        }
        for y in &values {
            self.target.validate_point(y)?;
        }
        Ok(MetricMapping {
            space: Arc::clone(self),
            values,
        })
    }

    pub fn base_mapping(self: &Arc<Self>) -> MetricMapping {
        MetricMapping {
            space: Arc::clone(self),
            values: self.h.clone(),
        }
    }

    /// The constant mapping `x -> y`; an isometric embedding of `N` up to the
    /// factor `total_mass^{1/p}`.
    pub fn constant_mapping(self: &Arc<Self>, y: TargetPoint) -> Result<MetricMapping> {
        self.mapping(vec![y; self.atom_count()])
    }

    pub fn compatible(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }
}

/// An element of `L^p_h(M, N)`: one target point per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricMapping {
    space: Arc<LebesgueSpace>,
    values: Vec<TargetPoint>,
}

impl MetricMapping {
    pub fn space(&self) -> &Arc<LebesgueSpace> {
        &self.space
    }

    pub fn values(&self) -> &[TargetPoint] {
        &self.values
    }

    pub fn value(&self, atom: usize) -> &TargetPoint {
        &self.values[atom]
    }

    /// Copy with the value on one atom replaced.
    pub fn with_value(&self, atom: usize, y: TargetPoint) -> Result<Self> {
        let mut values = self.values.clone();
        *values
            .get_mut(atom)
            .ok_or_else(|| Error::InvalidArgument(format!("atom index {atom} out of range")))? = y;
        self.space.mapping(values)
    }

    pub(crate) fn from_parts_unchecked(space: Arc<LebesgueSpace>, values: Vec<TargetPoint>) -> Self {
        Self { space, values }
    }

    /// Pointwise target distances to `other`, in atom order.
    pub fn pointwise_distances(&self, other: &Self) -> Vec<f64> {
        let target = self.space.target();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| target.dist_unchecked(a, b))
            .collect()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !LebesgueSpace::compatible(&self.space, &other.space) {
            return Err(Error::Mismatch(
                "mappings belong to different Lebesgue spaces".into(),
            ));
        }
        Ok(())
    }
}

/// The `D_p` distance `(sum_j w_j d_N(f_j, g_j)^p)^{1/p}`; for `p = inf` the
/// maximum over positive-weight atoms.
pub fn d_p(f: &MetricMapping, g: &MetricMapping, p: Exponent) -> Result<f64> {
    f.check_compatible(g)?;
    Ok(d_p_unchecked(f, g, p))
}

pub(crate) fn d_p_unchecked(f: &MetricMapping, g: &MetricMapping, p: Exponent) -> f64 {
    p.aggregate(f.space.weights(), &f.pointwise_distances(g))
}

/// Equality almost everywhere: agreement on every positive-weight atom.
pub fn ae_equal(f: &MetricMapping, g: &MetricMapping) -> Result<bool> {
    f.check_compatible(g)?;
    let target = f.space.target();
    Ok(f
        .space
        .weights()
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .all(|(w, (a, b))| *w == 0.0 || target.points_equal(a, b)))
}

/// `L^p_h(M, N)` with a fixed exponent, viewed as a metric space.
#[derive(Clone, Debug)]
pub struct LpMetric {
    space: Arc<LebesgueSpace>,
    p: Exponent,
}

impl LpMetric {
    pub fn new(space: Arc<LebesgueSpace>, p: Exponent) -> Self {
        Self { space, p }
    }

    pub fn space(&self) -> &Arc<LebesgueSpace> {
        &self.space
    }

    pub fn exponent(&self) -> Exponent {
        self.p
    }
}

impl MetricSpace for LpMetric {
    type Point = MetricMapping;

    fn dist(&self, a: &MetricMapping, b: &MetricMapping) -> f64 {
        d_p_unchecked(a, b, self.p)
    }

    fn validate(&self, f: &MetricMapping) -> Result<()> {
        if !LebesgueSpace::compatible(&self.space, &f.space) {
            return Err(Error::Mismatch("mapping does not belong to this Lebesgue space".into()));
        }
        Ok(())
    }

    fn same_space(&self, other: &Self) -> bool {
        self.p == other.p && LebesgueSpace::compatible(&self.space, &other.space)
    }
}

/// How grid data is integrated in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRule {
    /// Node `i` carries `[t_i, t_{i+1})`; the final node is a null set.
    /// Exact for piecewise-constant-in-time data.
    Step,
    /// Trapezoidal weights; second-order for smooth data.
    Trapezoid,
}

/// Strictly increasing time nodes on `[a, b]` with an integration rule.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    rule: TimeRule,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>, rule: TimeRule) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("time grid needs at least two nodes".into()));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("time grid must be finite and strictly increasing".into()));
        }
        let k = nodes.len();
        let weights = match rule {
            TimeRule::Step => (0..k)
                .map(|i| if i + 1 < k { nodes[i + 1] - nodes[i] } else { 0.0 })
                .collect(),
            TimeRule::Trapezoid => (0..k)
                .map(|i| {
                    let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
                    let right = if i + 1 < k { nodes[i + 1] - nodes[i] } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect(),
        };
        Ok(Self { nodes, rule, weights })
    }

    pub fn uniform(a: f64, b: f64, count: usize, rule: TimeRule) -> Result<Self> {
        if !(a < b) || count < 2 {
            return Err(Error::InvalidArgument(format!(
                "uniform grid needs a < b and at least two nodes (got [{a}, {b}], {count})"
            )));
        }
        let h = (b - a) / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| a + h * i as f64).collect();
        nodes[count - 1] = b;
        Self::new(nodes, rule)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn rule(&self) -> TimeRule {
        self.rule
    }

    /// Quadrature weight of each node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }
}

/// A mapping on the product `I x M`, sampled on `time grid x atoms`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductGridMapping {
    grid: TimeGrid,
    space: Arc<LebesgueSpace>,
    // values[node][atom]
    values: Vec<Vec<TargetPoint>>,
}

impl ProductGridMapping {
    pub fn new(grid: TimeGrid, space: Arc<LebesgueSpace>, values: Vec<Vec<TargetPoint>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        for row in &values {
            if row.len() != space.atom_count() {
                return Err(Error::DimensionMismatch {
                    expected: space.atom_count(),
                    found: row.len(),
                });
            }
            for y in row {
                space.target().validate_point(y)?;
            }
        }
        Ok(Self { grid, space, values })
    }

    pub(crate) fn from_parts_unchecked(grid: TimeGrid, space: Arc<LebesgueSpace>, values: Vec<Vec<TargetPoint>>) -> Self {
        Self { grid, space, values }
    }

    /// The base mapping `(t, x) -> h(x)`.
    pub fn base(grid: TimeGrid, space: Arc<LebesgueSpace>) -> Self {
        let values = vec![space.h().to_vec(); grid.len()];
        Self { grid, space, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &Arc<LebesgueSpace> {
        &self.space
    }

    pub fn value(&self, node: usize, atom: usize) -> &TargetPoint {
        &self.values[node][atom]
    }

    pub fn rows(&self) -> &[Vec<TargetPoint>] {
        &self.values
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Mismatch("product mappings live on different time grids".into()));
        }
        if !LebesgueSpace::compatible(&self.space, &other.space) {
            return Err(Error::Mismatch("product mappings have different base spaces".into()));
        }
        Ok(())
    }

    /// Pointwise distances `d[node][atom]`.
    pub(crate) fn cell_distances(&self, other: &Self) -> Vec<Vec<f64>> {
        let target = self.space.target();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(a, b)| target.dist_unchecked(a, b)).collect())
            .collect()
    }
}

/// A block `nodes x atoms` of a product grid carrying one target point.
#[derive(Clone, Debug, PartialEq)]
pub struct Rectangle {
    pub nodes: Range<usize>,
    pub atoms: Vec<usize>,
    pub value: TargetPoint,
}

/// Builds the mapping equal to each rectangle's point on its cells and to
/// `h(x)` everywhere else.
pub fn rectangular_simple(
    grid: TimeGrid,
    space: &Arc<LebesgueSpace>,
    rectangles: &[Rectangle],
) -> Result<ProductGridMapping> {
    let k = grid.len();
    let n = space.atom_count();
    let mut owner: Vec<Option<usize>> = vec![None; k * n];
    let mut values = vec![space.h().to_vec(); k];
    for (r, rect) in rectangles.iter().enumerate() {
        if rect.nodes.end > k || rect.nodes.start > rect.nodes.end {
            return Err(Error::InvalidArgument(format!(
                "rectangle {r} node range {:?} outside grid of {k} nodes",
                rect.nodes
            )));
        }
        space.target().validate_point(&rect.value)?;
        for i in rect.nodes.clone() {
            for &j in &rect.atoms {
                if j >= n {
                    return Err(Error::InvalidArgument(format!(
                        "rectangle {r} references atom {j} of {n}"
                    )));
                }
                let cell = &mut owner[i * n + j];
                if let Some(prev) = *cell {
                    return Err(Error::Overlap(format!(
                        "rectangles {prev} and {r} share cell (node {i}, atom {j})"
                    )));
                }
                *cell = Some(r);
                values[i][j] = rect.value.clone();
            }
        }
    }
    Ok(ProductGridMapping::from_parts_unchecked(grid, Arc::clone(space), values))
}

/// Order of the iterated sum defining the product distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrationOrder {
    /// Integrate over time first, then over atoms.
    TimeInner,
    /// Integrate over atoms first, then over time.
    AtomInner,
}

/// The product distance `D^_p` under the measure (time weights) x (atom weights).
pub fn product_distance(c: &ProductGridMapping, c2: &ProductGridMapping, p: Exponent) -> Result<f64> {
    product_distance_iterated(c, c2, p, IntegrationOrder::AtomInner)
}

/// [`product_distance`] evaluated as an iterated sum in the given order.
pub fn product_distance_iterated(
    c: &ProductGridMapping,
    c2: &ProductGridMapping,
    p: Exponent,
    order: IntegrationOrder,
) -> Result<f64> {
    c.check_compatible(c2)?;
    let d = c.cell_distances(c2);
    let tw = c.grid.weights();
    let aw = c.space.weights();
    Ok(match p {
        Exponent::Infinite => {
            let mut m = 0.0f64;
            for (i, row) in d.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    if tw[i] > 0.0 && aw[j] > 0.0 {
                        m = m.max(*x);
                    }
                }
            }
            m
        }
        Exponent::Finite(q) => {
            let s = match order {
                IntegrationOrder::AtomInner => d
                    .iter()
                    .zip(tw)
                    .map(|(row, ti)| ti * row.iter().zip(aw).map(|(x, w)| w * x.powf(q)).sum::<f64>())
                    .sum::<f64>(),
                IntegrationOrder::TimeInner => aw
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * d.iter().zip(tw).map(|(row, ti)| ti * row[j].powf(q)).sum::<f64>())
                    .sum::<f64>(),
            };
            s.powf(1.0 / q)
        }
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

    fn pts(xs: &[f64]) -> Vec<TargetPoint> {
        xs.iter().map(|x| TargetPoint::vector(&[*x])).collect()
    }

    #[test]
    fn d_p_examples() {
        let s = line_space(&[1.0, 1.0]);
        let f = s.mapping(pts(&[0.0, 0.0])).unwrap();
        let g = s.mapping(pts(&[3.0, 4.0])).unwrap();
        assert_eq!(d_p(&f, &f, Exponent::new(2.0).unwrap()).unwrap(), 0.0);
        assert_eq!(d_p(&f, &g, Exponent::new(2.0).unwrap()).unwrap(), 5.0);
        assert_eq!(d_p(&f, &g, Exponent::Infinite).unwrap(), 4.0);
        assert_eq!(d_p(&f, &g, Exponent::new(1.0).unwrap()).unwrap(), 7.0);
    }

    #[test]
    fn sup_ignores_null_atoms() {
        let s = line_space(&[1.0, 0.0]);
        let f = s.mapping(pts(&[0.0, 0.0])).unwrap();
        let g = s.mapping(pts(&[1.0, 100.0])).unwrap();
        assert_eq!(d_p(&f, &g, Exponent::Infinite).unwrap(), 1.0);
    }

    #[test]
    fn ae_equal_examples() {
        let s = line_space(&[1.0, 0.0, 2.0]);
        let f = s.mapping(pts(&[1.0, 2.0, 3.0])).unwrap();
        assert!(ae_equal(&f, &f).unwrap());
        let g = f.with_value(1, TargetPoint::vector(&[-5.0])).unwrap();
        assert!(ae_equal(&f, &g).unwrap());
        let h = f.with_value(2, TargetPoint::vector(&[3.5])).unwrap();
        assert!(!ae_equal(&f, &h).unwrap());
        for p in [1.0, 2.0, 3.5] {
            assert!(d_p(&f, &h, Exponent::new(p).unwrap()).unwrap() > 0.0);
        }
        assert!(d_p(&f, &h, Exponent::Infinite).unwrap() > 0.0);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = line_space(&[1.0]);
        let b = line_space(&[2.0]);
        let f = a.mapping(pts(&[0.0])).unwrap();
        let g = b.mapping(pts(&[0.0])).unwrap();
        assert!(matches!(d_p(&f, &g, Exponent::Infinite), Err(Error::Mismatch(_))));
        assert!(ae_equal(&f, &g).is_err());
    }

    #[test]
    fn exponent_parsing_and_validation() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinite);
        assert_eq!("2.5".parse::<Exponent>().unwrap(), Exponent::Finite(2.5));
        assert!(Exponent::new(0.5).is_err());
        assert!(Exponent::new(f64::NAN).is_err());
        let p: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(p, Exponent::Infinite);
        let p: Exponent = serde_json::from_str("3").unwrap();
        assert_eq!(p, Exponent::Finite(3.0));
        assert!(serde_json::from_str::<Exponent>("0.2").is_err());
    }

    #[test]
    fn measure_space_validation() {
        assert!(FiniteMeasureSpace::from_weights(&[]).is_err());
        assert!(FiniteMeasureSpace::from_weights(&[1.0, -0.1]).is_err());
        assert!(FiniteMeasureSpace::from_weights(&[0.0]).is_ok());
    }

    #[test]
    fn nontriviality_needs_positive_mass() {
        assert!(!line_space(&[0.0, 0.0]).is_nontrivial());
        let s = line_space(&[0.0, 0.5]);
        assert!(s.is_nontrivial());
        // witness: a mapping not equal to h almost everywhere
        let f = s.base_mapping().with_value(1, TargetPoint::vector(&[1.0])).unwrap();
        assert!(!ae_equal(&f, &s.base_mapping()).unwrap());
    }

    fn two_by_two() -> (TimeGrid, Arc<LebesgueSpace>) {
        (
            TimeGrid::new(vec![0.0, 0.5, 1.0], TimeRule::Step).unwrap(),
            line_space(&[1.0, 2.0]),
        )
    }

    #[test]
    fn rectangular_simple_examples() {
        let (grid, s) = two_by_two();
        let empty = rectangular_simple(grid.clone(), &s, &[]).unwrap();
        assert_eq!(empty, ProductGridMapping::base(grid.clone(), s.clone()));

        let y = TargetPoint::vector(&[7.0]);
        let all = rectangular_simple(
            grid.clone(),
            &s,
            &[Rectangle {
                nodes: 0..3,
                atoms: vec![0, 1],
                value: y.clone(),
            }],
        )
        .unwrap();
        assert!(all.rows().iter().flatten().all(|v| *v == y));

        let r = rectangular_simple(
            grid.clone(),
            &s,
            &[
                Rectangle { nodes: 0..1, atoms: vec![0], value: TargetPoint::vector(&[1.0]) },
                Rectangle { nodes: 1..3, atoms: vec![1], value: TargetPoint::vector(&[2.0]) },
            ],
        )
        .unwrap();
        let expect = [[1.0, 0.0], [0.0, 2.0], [0.0, 2.0]];
        for (i, row) in expect.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*r.value(i, j), TargetPoint::vector(&[*v]));
            }
        }

        let overlap = rectangular_simple(
            grid,
            &s,
            &[
                Rectangle { nodes: 0..2, atoms: vec![0], value: y.clone() },
                Rectangle { nodes: 1..3, atoms: vec![0, 1], value: y },
            ],
        );
        assert!(matches!(overlap, Err(Error::Overlap(_))));
    }

    #[test]
    fn product_distance_examples() {
        let s = line_space(&[1.0]);
        let grid = TimeGrid::new(vec![0.0, 0.25, 1.0], TimeRule::Step).unwrap();
        let h = ProductGridMapping::base(grid.clone(), s.clone());
        assert_eq!(product_distance(&h, &h, Exponent::Finite(2.0)).unwrap(), 0.0);
        let one = rectangular_simple(
            grid,
            &s,
            &[Rectangle { nodes: 0..3, atoms: vec![0], value: TargetPoint::vector(&[1.0]) }],
        )
        .unwrap();
        for p in [1.0, 2.0, 3.0, 7.5] {
            let d = product_distance(&one, &h, Exponent::Finite(p)).unwrap();
            assert!((d - 1.0).abs() < 1e-15);
        }
        assert_eq!(product_distance(&one, &h, Exponent::Infinite).unwrap(), 1.0);
    }

    #[test]
    fn product_distance_both_orders_hand_sums() {
        // cells of length 0.5 and 0.5, atoms of weight 1 and 2
        let (grid, s) = two_by_two();
        let c = ProductGridMapping::new(
            grid.clone(),
            s.clone(),
            vec![pts(&[1.0, 2.0]), pts(&[3.0, -1.0]), pts(&[3.0, -1.0])],
        )
        .unwrap();
        let h = ProductGridMapping::base(grid, s);
        // p = 2: 0.5*(1*1 + 2*4) + 0.5*(1*9 + 2*1) = 4.5 + 5.5 = 10
        for order in [IntegrationOrder::AtomInner, IntegrationOrder::TimeInner] {
            let d = product_distance_iterated(&c, &h, Exponent::Finite(2.0), order).unwrap();
            assert!((d - 10f64.sqrt()).abs() < 1e-15);
        }
        // p = 1: 0.5*(1 + 4) + 0.5*(3 + 2) = 5
        let d = product_distance(&c, &h, Exponent::Finite(1.0)).unwrap();
        assert!((d - 5.0).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let g = TimeGrid::uniform(0.0, 2.0, 9, TimeRule::Trapezoid).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-15);
        assert!(TimeGrid::new(vec![0.0, 0.0, 1.0], TimeRule::Step).is_err());
    }
}
