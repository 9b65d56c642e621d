//! Metric target spaces: Euclidean space, round spheres, SPD matrices with the
//! affine-invariant metric and finite metric trees.
//!
//! Every space exposes distances and constant-speed geodesics. The smooth
//! ones additionally expose log/exp charts and a tangent norm; trees report
//! [`Error::Unsupported`] for chart operations.

mod spd;
mod tree;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

pub use tree::{MetricTree, TreeEdge, TreePoint};

/// Two points are equal when they agree to this tolerance in their native chart.
pub const POINT_EQ_TOL: f64 = 1e-12;
/// Sphere points must have unit norm to this tolerance.
pub const SPHERE_NORM_TOL: f64 = 1e-12;
/// Sphere tangents must be orthogonal to their base to this tolerance.
pub const SPHERE_TANGENT_TOL: f64 = 1e-10;
pub const SPD_SYMMETRY_TOL: f64 = 1e-12;
pub const SPD_MIN_EIGENVALUE: f64 = 1e-10;
/// Sphere pairs closer than this to antipodal have no unique geodesic.
pub const ANTIPODAL_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureClass {
    Flat,
    GlobalNpc,
    GlobalNnc,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceKind {
    Euclidean { dim: usize },
    /// Unit sphere in `R^dim`.
    Sphere { dim: usize },
    /// `dim x dim` SPD matrices.
    Spd { dim: usize },
    MetricTree(Arc<MetricTree>),
}

/// Structured description of a target space, as read from configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Euclidean {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        curvature: Option<CurvatureClass>,
    },
    Sphere {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        curvature: Option<CurvatureClass>,
    },
    Spd {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        curvature: Option<CurvatureClass>,
    },
    MetricTree {
        edges: Vec<TreeEdge>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        curvature: Option<CurvatureClass>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpace {
    kind: SpaceKind,
    curvature: CurvatureClass,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetPoint {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
    Tree(TreePoint),
}

impl TargetPoint {
    pub fn vector(coords: &[f64]) -> Self {
        Self::Vector(DVector::from_column_slice(coords))
    }

    /// Row-major square matrix.
    pub fn matrix(dim: usize, row_major: &[f64]) -> Self {
        Self::Matrix(DMatrix::from_row_slice(dim, dim, row_major))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::Matrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn tree(edge: usize, offset: f64) -> Self {
        Self::Tree(TreePoint { edge, offset })
    }

    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            Self::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            Self::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TangentComponents {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

impl TangentComponents {
    pub fn scale(&self, s: f64) -> Self {
        match self {
            Self::Vector(v) => Self::Vector(v * s),
            Self::Matrix(m) => Self::Matrix(m * s),
        }
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: TargetPoint,
    pub components: TangentComponents,
}

impl TangentVector {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            components: self.components.scale(s),
        }
    }
}

fn sphere_angle(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    // accurate for both nearby and nearly antipodal points
    2.0 * (x - y).norm().atan2((x + y).norm())
}

impl TargetSpace {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("euclidean dimension must be positive".into()));
        }
        Ok(Self {
            kind: SpaceKind::Euclidean { dim },
            curvature: CurvatureClass::Flat,
        })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidSpace(
                "sphere needs ambient dimension at least 2".into(),
            ));
        }
        Ok(Self {
            kind: SpaceKind::Sphere { dim },
            curvature: CurvatureClass::GlobalNnc,
        })
    }

    pub fn spd(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("spd dimension must be positive".into()));
        }
        // SPD(1) is isometric to the real line
        let curvature = if dim == 1 {
            CurvatureClass::Flat
        } else {
            CurvatureClass::GlobalNpc
        };
        Ok(Self {
            kind: SpaceKind::Spd { dim },
            curvature,
        })
    }

    pub fn metric_tree(edges: Vec<TreeEdge>) -> Result<Self> {
        Ok(Self {
            kind: SpaceKind::MetricTree(Arc::new(MetricTree::new(edges)?)),
            curvature: CurvatureClass::GlobalNpc,
        })
    }

    /// Builds a space from its configuration record.
    ///
    /// The curvature class may only be overridden to `unknown`; every other
    /// class is determined by the space kind.
    pub fn from_spec(spec: &TargetSpec) -> Result<Self> {
        let (space, curvature) = match spec {
            TargetSpec::Euclidean { dim, curvature } => (Self::euclidean(*dim)?, *curvature),
            TargetSpec::Sphere { dim, curvature } => (Self::sphere(*dim)?, *curvature),
            TargetSpec::Spd { dim, curvature } => (Self::spd(*dim)?, *curvature),
            TargetSpec::MetricTree { edges, curvature } => {
                (Self::metric_tree(edges.clone())?, *curvature)
            }
        };
        match curvature {
            None => Ok(space),
            Some(c) if c == space.curvature => Ok(space),
            Some(CurvatureClass::Unknown) => Ok(space.with_unknown_curvature()),
            Some(c) => Err(Error::InvalidSpace(format!(
                "curvature class {c:?} is inconsistent with {}",
                space.name()
            ))),
        }
    }

    pub fn to_spec(&self) -> TargetSpec {
        let curvature = (self.curvature == CurvatureClass::Unknown).then_some(CurvatureClass::Unknown);
        match &self.kind {
            SpaceKind::Euclidean { dim } => TargetSpec::Euclidean { dim: *dim, curvature },
            SpaceKind::Sphere { dim } => TargetSpec::Sphere { dim: *dim, curvature },
            SpaceKind::Spd { dim } => TargetSpec::Spd { dim: *dim, curvature },
            SpaceKind::MetricTree(t) => TargetSpec::MetricTree {
                edges: t.edges().to_vec(),
                curvature,
            },
        }
    }

    /// Forgets the curvature classification.
    pub fn with_unknown_curvature(mut self) -> Self {
        self.curvature = CurvatureClass::Unknown;
        self
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn curvature_class(&self) -> CurvatureClass {
        self.curvature
    }

    pub fn has_chart(&self) -> bool {
        !matches!(self.kind, SpaceKind::MetricTree(_))
    }

    pub fn name(&self) -> String {
        match &self.kind {
            SpaceKind::Euclidean { dim } => format!("euclidean({dim})"),
            SpaceKind::Sphere { dim } => format!("sphere({dim})"),
            SpaceKind::Spd { dim } => format!("spd({dim})"),
            SpaceKind::MetricTree(t) => format!("metric_tree({} edges)", t.edges().len()),
        }
    }

    pub fn validate_point(&self, p: &TargetPoint) -> Result<()> {
        match (&self.kind, p) {
            (SpaceKind::Euclidean { dim }, TargetPoint::Vector(v)) => {
                check_len(*dim, v.len())?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidPoint("non-finite coordinate".into()));
                }
                Ok(())
            }
            (SpaceKind::Sphere { dim }, TargetPoint::Vector(v)) => {
                check_len(*dim, v.len())?;
                let n = v.norm();
                if !((n - 1.0).abs() <= SPHERE_NORM_TOL) {
                    return Err(Error::InvalidPoint(format!(
                        "sphere point has norm {n}, expected 1"
                    )));
                }
                Ok(())
            }
            (SpaceKind::Spd { dim }, TargetPoint::Matrix(m)) => {
                if m.nrows() != *dim || m.ncols() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        found: m.nrows().max(m.ncols()),
                    });
                }
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidPoint("non-finite matrix entry".into()));
                }
                let asym = spd::max_asymmetry(m);
                if asym > SPD_SYMMETRY_TOL {
                    return Err(Error::InvalidPoint(format!(
                        "matrix is not symmetric (max deviation {asym})"
                    )));
                }
                let min_eig = spd::sym_eigenvalues(m).min();
                if !(min_eig > SPD_MIN_EIGENVALUE) {
                    return Err(Error::InvalidPoint(format!(
                        "matrix is not positive definite (min eigenvalue {min_eig})"
                    )));
                }
                Ok(())
            }
            (SpaceKind::MetricTree(t), TargetPoint::Tree(tp)) => t.validate(tp),
            _ => Err(Error::InvalidPoint(format!(
                "point representation does not match {}",
                self.name()
            ))),
        }
    }

    fn validate_tangent(&self, v: &TangentVector) -> Result<()> {
        self.validate_point(&v.base)
            .map_err(|e| Error::InvalidTangent(format!("base point: {e}")))?;
        match (&self.kind, &v.base, &v.components) {
            (SpaceKind::Euclidean { dim }, _, TangentComponents::Vector(c)) => check_len(*dim, c.len()),
            (SpaceKind::Sphere { dim }, TargetPoint::Vector(b), TangentComponents::Vector(c)) => {
                check_len(*dim, c.len())?;
                let dot = b.dot(c);
                if dot.abs() > SPHERE_TANGENT_TOL {
                    return Err(Error::InvalidTangent(format!(
                        "sphere tangent not orthogonal to base (inner product {dot})"
                    )));
                }
                Ok(())
            }
            (SpaceKind::Spd { dim }, _, TangentComponents::Matrix(c)) => {
                if c.nrows() != *dim || c.ncols() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        found: c.nrows().max(c.ncols()),
                    });
                }
                if spd::max_asymmetry(c) > SPD_SYMMETRY_TOL {
                    return Err(Error::InvalidTangent("spd tangent is not symmetric".into()));
                }
                Ok(())
            }
            (SpaceKind::MetricTree(_), _, _) => Err(self.no_chart()),
            _ => Err(Error::InvalidTangent(format!(
                "tangent representation does not match {}",
                self.name()
            ))),
        }
    }

    fn no_chart(&self) -> Error {
        Error::Unsupported(format!("{} has no smooth chart", self.name()))
    }

    /// Distance for points already known to be valid.
    pub(crate) fn dist_unchecked(&self, a: &TargetPoint, b: &TargetPoint) -> f64 {
        match (&self.kind, a, b) {
            (SpaceKind::Euclidean { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => (x - y).norm(),
            (SpaceKind::Sphere { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => sphere_angle(x, y),
            (SpaceKind::Spd { .. }, TargetPoint::Matrix(x), TargetPoint::Matrix(y)) => {
                if x == y {
                    0.0
                } else {
                    spd::distance(x, y)
                }
            }
            (SpaceKind::MetricTree(t), TargetPoint::Tree(p), TargetPoint::Tree(q)) => t.distance(p, q),
            _ => f64::NAN,
        }
    }

    pub fn distance(&self, a: &TargetPoint, b: &TargetPoint) -> Result<f64> {
        self.validate_point(a)?;
        self.validate_point(b)?;
        Ok(self.dist_unchecked(a, b))
    }

    /// Equality up to [`POINT_EQ_TOL`] in the native chart (path distance for trees).
    pub fn points_equal(&self, a: &TargetPoint, b: &TargetPoint) -> bool {
        match (a, b) {
            (TargetPoint::Vector(x), TargetPoint::Vector(y)) => {
                x.len() == y.len() && (x - y).amax() <= POINT_EQ_TOL
            }
            (TargetPoint::Matrix(x), TargetPoint::Matrix(y)) => {
                x.shape() == y.shape() && (x - y).amax() <= POINT_EQ_TOL
            }
            (TargetPoint::Tree(_), TargetPoint::Tree(_)) => self.dist_unchecked(a, b) <= POINT_EQ_TOL,
            _ => false,
        }
    }

    pub(crate) fn geodesic_unchecked(&self, a: &TargetPoint, b: &TargetPoint, t: f64) -> Result<TargetPoint> {
        if t == 0.0 {
            return Ok(a.clone());
        }
        if t == 1.0 {
            return Ok(b.clone());
        }
        match (&self.kind, a, b) {
            (SpaceKind::Euclidean { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => {
                Ok(TargetPoint::Vector(x * (1.0 - t) + y * t))
            }
            (SpaceKind::Sphere { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => {
                let theta = sphere_angle(x, y);
                if theta >= PI - ANTIPODAL_MARGIN {
                    return Err(Error::NonUniqueGeodesic(format!(
                        "sphere points at angle {theta} are (nearly) antipodal"
                    )));
                }
                if theta == 0.0 {
                    return Ok(a.clone());
                }
                let s = theta.sin();
                let w = x * (((1.0 - t) * theta).sin() / s) + y * ((t * theta).sin() / s);
                let n = w.norm();
                Ok(TargetPoint::Vector(w / n))
            }
            (SpaceKind::Spd { .. }, TargetPoint::Matrix(x), TargetPoint::Matrix(y)) => {
                Ok(TargetPoint::Matrix(spd::geodesic(x, y, t)))
            }
            (SpaceKind::MetricTree(tree), TargetPoint::Tree(p), TargetPoint::Tree(q)) => {
                Ok(TargetPoint::Tree(tree.geodesic_point(p, q, t)))
            }
            _ => Err(Error::InvalidPoint("point representation mismatch".into())),
        }
    }

    /// Point at fraction `t` along the constant-speed geodesic from `a` to `b`.
    pub fn geodesic_point(&self, a: &TargetPoint, b: &TargetPoint, t: f64) -> Result<TargetPoint> {
        self.validate_point(a)?;
        self.validate_point(b)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("geodesic parameter {t} outside [0, 1]")));
        }
        self.geodesic_unchecked(a, b, t)
    }

    pub fn log_map(&self, base: &TargetPoint, y: &TargetPoint) -> Result<TangentVector> {
        if !self.has_chart() {
            return Err(self.no_chart());
        }
        self.validate_point(base)?;
        self.validate_point(y)?;
        self.log_unchecked(base, y)
    }

    pub(crate) fn log_unchecked(&self, base: &TargetPoint, y: &TargetPoint) -> Result<TangentVector> {
        let components = match (&self.kind, base, y) {
            (SpaceKind::Euclidean { .. }, TargetPoint::Vector(x), TargetPoint::Vector(z)) => {
                TangentComponents::Vector(z - x)
            }
            (SpaceKind::Sphere { .. }, TargetPoint::Vector(x), TargetPoint::Vector(z)) => {
                let theta = sphere_angle(x, z);
                if theta >= PI - ANTIPODAL_MARGIN {
                    return Err(Error::NonUniqueGeodesic(format!(
                        "log map undefined at angle {theta} (antipodal)"
                    )));
                }
                let u = z - x * x.dot(z);
                let nu = u.norm();
                if nu == 0.0 || theta == 0.0 {
                    TangentComponents::Vector(DVector::zeros(x.len()))
                } else {
                    TangentComponents::Vector(u * (theta / nu))
                }
            }
            (SpaceKind::Spd { .. }, TargetPoint::Matrix(x), TargetPoint::Matrix(z)) => {
                TangentComponents::Matrix(spd::log_map(x, z))
            }
            (SpaceKind::MetricTree(_), _, _) => return Err(self.no_chart()),
            _ => return Err(Error::InvalidPoint("point representation mismatch".into())),
        };
        Ok(TangentVector {
            base: base.clone(),
            components,
        })
    }

    pub fn exp_map(&self, v: &TangentVector) -> Result<TargetPoint> {
        self.validate_tangent(v)?;
        match (&self.kind, &v.base, &v.components) {
            (SpaceKind::Euclidean { .. }, TargetPoint::Vector(x), TangentComponents::Vector(c)) => {
                Ok(TargetPoint::Vector(x + c))
            }
            (SpaceKind::Sphere { .. }, TargetPoint::Vector(x), TangentComponents::Vector(c)) => {
                let n = c.norm();
                if n == 0.0 {
                    return Ok(v.base.clone());
                }
                let w = x * n.cos() + c * (n.sin() / n);
                let wn = w.norm();
                Ok(TargetPoint::Vector(w / wn))
            }
            (SpaceKind::Spd { .. }, TargetPoint::Matrix(x), TangentComponents::Matrix(c)) => {
                Ok(TargetPoint::Matrix(spd::exp_map(x, c)))
            }
            _ => Err(self.no_chart()),
        }
    }

    pub fn zero_tangent(&self, base: &TargetPoint) -> Result<TangentVector> {
        self.validate_point(base)?;
        let components = match base {
            TargetPoint::Vector(x) => TangentComponents::Vector(DVector::zeros(x.len())),
            TargetPoint::Matrix(m) => TangentComponents::Matrix(DMatrix::zeros(m.nrows(), m.ncols())),
            TargetPoint::Tree(_) => return Err(self.no_chart()),
        };
        Ok(TangentVector {
            base: base.clone(),
            components,
        })
    }

    /// The norm of the tangent space at `v.base`.
    pub fn tangent_norm(&self, v: &TangentVector) -> Result<f64> {
        self.validate_tangent(v)?;
        Ok(self.tangent_norm_unchecked(v))
    }

    pub(crate) fn tangent_norm_unchecked(&self, v: &TangentVector) -> f64 {
        match (&self.kind, &v.base, &v.components) {
            (SpaceKind::Spd { .. }, TargetPoint::Matrix(x), TangentComponents::Matrix(c)) => {
                spd::tangent_norm(x, c)
            }
            (_, _, TangentComponents::Vector(c)) => c.norm(),
            (_, _, TangentComponents::Matrix(c)) => c.norm(),
        }
    }

    /// Alexandrov comparison residual
    /// `d(z,g(t))^2 - [(1-t) d(z,a)^2 + t d(z,b)^2 - (1-t) t d(a,b)^2]`
    /// along the geodesic `g` from `a` to `b`.
    ///
    /// Nonnegative on NNC spaces, nonpositive on NPC spaces, zero on flat ones.
    pub fn comparison_residual(
        &self,
        z: &TargetPoint,
        a: &TargetPoint,
        b: &TargetPoint,
        t: f64,
    ) -> Result<f64> {
        self.validate_point(z)?;
        let g = self.geodesic_point(a, b, t)?;
        if t == 0.0 || t == 1.0 {
            return Ok(0.0);
        }
        let d2 = |x: &TargetPoint, y: &TargetPoint| self.dist_unchecked(x, y).powi(2);
        Ok(comparison_formula(d2(z, &g), d2(z, a), d2(z, b), d2(a, b), t))
    }
}

/// `dzg - [(1-t) dza + t dzb - (1-t) t dab]` with all inputs squared distances.
pub fn comparison_formula(dzg: f64, dza: f64, dzb: f64, dab: f64, t: f64) -> f64 {
    dzg - ((1.0 - t) * dza + t * dzb - (1.0 - t) * t * dab)
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl MetricSpace for TargetSpace {
    type Point = TargetPoint;

    fn dist(&self, a: &TargetPoint, b: &TargetPoint) -> f64 {
        self.dist_unchecked(a, b)
    }

    fn validate(&self, p: &TargetPoint) -> Result<()> {
        self.validate_point(p)
    }

    fn same_space(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_1_SQRT_2, FRAC_PI_2, SQRT_2};

    #[test]
    fn euclidean_pythagoras() {
        let s = TargetSpace::euclidean(2).unwrap();
        let d = s
            .distance(&TargetPoint::vector(&[0.0, 0.0]), &TargetPoint::vector(&[3.0, 4.0]))
            .unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn sphere_quarter_circle() {
        let s = TargetSpace::sphere(3).unwrap();
        let d = s
            .distance(&TargetPoint::vector(&[0.0, 0.0, 1.0]), &TargetPoint::vector(&[1.0, 0.0, 0.0]))
            .unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn spd_scaled_identity_distance() {
        let s = TargetSpace::spd(2).unwrap();
        let d = s
            .distance(&TargetPoint::diagonal(&[1.0, 1.0]), &TargetPoint::diagonal(&[E * E, E * E]))
            .unwrap();
        assert!((d - 2.0 * SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn dimension_and_validity_errors() {
        let s = TargetSpace::euclidean(2).unwrap();
        assert!(matches!(
            s.distance(&TargetPoint::vector(&[0.0]), &TargetPoint::vector(&[1.0, 1.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        let spd = TargetSpace::spd(2).unwrap();
        let not_pd = TargetPoint::diagonal(&[1.0, -1.0]);
        assert!(matches!(
            spd.distance(&not_pd, &TargetPoint::diagonal(&[1.0, 1.0])),
            Err(Error::InvalidPoint(_))
        ));
        let asym = TargetPoint::matrix(2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(spd.validate_point(&asym).is_err());
        let sphere = TargetSpace::sphere(3).unwrap();
        assert!(sphere.validate_point(&TargetPoint::vector(&[1.0, 1.0, 0.0])).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let e = TargetSpace::euclidean(2).unwrap();
        let m = e
            .geodesic_point(&TargetPoint::vector(&[0.0, 0.0]), &TargetPoint::vector(&[2.0, 0.0]), 0.5)
            .unwrap();
        assert_eq!(m, TargetPoint::vector(&[1.0, 0.0]));

        let s = TargetSpace::sphere(3).unwrap();
        let m = s
            .geodesic_point(&TargetPoint::vector(&[1.0, 0.0, 0.0]), &TargetPoint::vector(&[0.0, 1.0, 0.0]), 0.5)
            .unwrap();
        let v = m.as_vector().unwrap();
        assert!((v[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((v[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(v[2].abs() < 1e-15);
    }

    #[test]
    fn spd_geodesic_midpoint_and_speed() {
        let s = TargetSpace::spd(2).unwrap();
        let a = TargetPoint::diagonal(&[1.0, 1.0]);
        let b = TargetPoint::diagonal(&[4.0, 4.0]);
        let m = s.geodesic_point(&a, &b, 0.5).unwrap();
        assert!((m.as_matrix().unwrap() - DMatrix::from_diagonal_element(2, 2, 2.0)).amax() < 1e-14);
        let total = s.distance(&a, &b).unwrap();
        let grid: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let pts: Vec<_> = grid.iter().map(|&t| s.geodesic_point(&a, &b, t).unwrap()).collect();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                let d = s.distance(&pts[i], &pts[j]).unwrap();
                assert!((d - (grid[i] - grid[j]).abs() * total).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn antipodal_points_have_no_geodesic() {
        let s = TargetSpace::sphere(3).unwrap();
        let a = TargetPoint::vector(&[0.0, 0.0, 1.0]);
        let b = TargetPoint::vector(&[0.0, 0.0, -1.0]);
        assert!(matches!(s.geodesic_point(&a, &b, 0.3), Err(Error::NonUniqueGeodesic(_))));
        assert!(matches!(s.log_map(&a, &b), Err(Error::NonUniqueGeodesic(_))));
    }

    #[test]
    fn log_map_examples() {
        let e = TargetSpace::euclidean(2).unwrap();
        let v = e
            .log_map(&TargetPoint::vector(&[1.0, 1.0]), &TargetPoint::vector(&[2.0, 3.0]))
            .unwrap();
        assert_eq!(v.components, TangentComponents::Vector(DVector::from_vec(vec![1.0, 2.0])));

        let s = TargetSpace::sphere(3).unwrap();
        let base = TargetPoint::vector(&[1.0, 0.0, 0.0]);
        let v = s.log_map(&base, &TargetPoint::vector(&[0.0, 1.0, 0.0])).unwrap();
        let TangentComponents::Vector(c) = &v.components else { panic!() };
        assert!(c[0].abs() < 1e-15 && (c[1] - FRAC_PI_2).abs() < 1e-15 && c[2].abs() < 1e-15);

        for space in [TargetSpace::euclidean(3).unwrap(), TargetSpace::sphere(3).unwrap()] {
            let p = TargetPoint::vector(&[0.0, 0.6, 0.8]);
            let v = space.log_map(&p, &p).unwrap();
            assert_eq!(space.tangent_norm(&v).unwrap(), 0.0);
        }
        let spd = TargetSpace::spd(2).unwrap();
        let p = TargetPoint::matrix(2, &[2.0, 0.3, 0.3, 1.0]);
        let v = spd.log_map(&p, &p).unwrap();
        assert!(spd.tangent_norm(&v).unwrap() < 1e-14);
    }

    #[test]
    fn tree_has_no_chart() {
        let t = TargetSpace::metric_tree(vec![TreeEdge { from: 0, to: 1, length: 1.0 }]).unwrap();
        let p = TargetPoint::tree(0, 0.2);
        assert!(matches!(t.log_map(&p, &p), Err(Error::Unsupported(_))));
        assert!(matches!(t.zero_tangent(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tangent_norm_examples() {
        let e = TargetSpace::euclidean(2).unwrap();
        let v = TangentVector {
            base: TargetPoint::vector(&[0.0, 0.0]),
            components: TangentComponents::Vector(DVector::from_vec(vec![3.0, 4.0])),
        };
        assert_eq!(e.tangent_norm(&v).unwrap(), 5.0);

        let spd = TargetSpace::spd(2).unwrap();
        let base = TargetPoint::diagonal(&[4.0, 4.0]);
        let v = TangentVector {
            base: base.clone(),
            components: TangentComponents::Matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.0]))),
        };
        let n = spd.tangent_norm(&v).unwrap();
        assert!((n - 1.0).abs() < 1e-15);
        // the norm is the derivative of the distance along exp
        for eps in [1e-4, 1e-6] {
            let moved = spd.exp_map(&v.scaled(eps)).unwrap();
            let q = spd.distance(&base, &moved).unwrap() / eps;
            assert!((q - n).abs() < 1e-8);
        }

        let bad = TangentVector {
            base: TargetPoint::vector(&[1.0, 0.0, 0.0]),
            components: TangentComponents::Vector(DVector::from_vec(vec![1.0, 0.0, 0.0])),
        };
        assert!(matches!(
            TargetSpace::sphere(3).unwrap().tangent_norm(&bad),
            Err(Error::InvalidTangent(_))
        ));
    }

    #[test]
    fn comparison_residual_examples() {
        let s = TargetSpace::sphere(3).unwrap();
        let z = TargetPoint::vector(&[0.0, 0.0, 1.0]);
        let a = TargetPoint::vector(&[1.0, 0.0, 0.0]);
        let b = TargetPoint::vector(&[0.0, 1.0, 0.0]);
        let r = s.comparison_residual(&z, &a, &b, 0.5).unwrap();
        assert!((r - 0.25 * FRAC_PI_2 * FRAC_PI_2).abs() < 1e-14);
        assert!((r - 0.6169).abs() < 1e-4);
        assert_eq!(s.comparison_residual(&z, &a, &b, 0.0).unwrap(), 0.0);
        assert_eq!(s.comparison_residual(&z, &a, &b, 1.0).unwrap(), 0.0);

        let e = TargetSpace::euclidean(2).unwrap();
        let r = e
            .comparison_residual(
                &TargetPoint::vector(&[0.3, -2.0]),
                &TargetPoint::vector(&[1.0, 5.0]),
                &TargetPoint::vector(&[-4.0, 0.5]),
                0.5,
            )
            .unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn curvature_classes() {
        assert_eq!(TargetSpace::euclidean(3).unwrap().curvature_class(), CurvatureClass::Flat);
        assert_eq!(TargetSpace::sphere(3).unwrap().curvature_class(), CurvatureClass::GlobalNnc);
        assert_eq!(TargetSpace::spd(2).unwrap().curvature_class(), CurvatureClass::GlobalNpc);
        let spec = TargetSpec::Sphere {
            dim: 3,
            curvature: Some(CurvatureClass::GlobalNpc),
        };
        assert!(TargetSpace::from_spec(&spec).is_err());
        let spec = TargetSpec::Sphere {
            dim: 3,
            curvature: Some(CurvatureClass::Unknown),
        };
        assert_eq!(TargetSpace::from_spec(&spec).unwrap().curvature_class(), CurvatureClass::Unknown);
    }
}
