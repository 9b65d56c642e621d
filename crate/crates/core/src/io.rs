//! JSON records for mappings and curves.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so
//! every record survives a write/read cycle bit for bit.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curves::{SampledCurve, StepCurve};
use crate::error::{Error, Result};
use crate::lebesgue_maps::{Atom, FiniteMeasureSpace, LebesgueSpace, MetricMapping};
use crate::target_spaces::{TargetPoint, TargetSpace, TargetSpec};

/// A target point: a coordinate list, a nested row-major matrix, or a tree
/// location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRecord {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Tree { edge: usize, offset: f64 },
}

impl From<&TargetPoint> for PointRecord {
    fn from(p: &TargetPoint) -> Self {
        match p {
            TargetPoint::Vector(v) => PointRecord::Vector(v.iter().copied().collect()),
            TargetPoint::Matrix(m) => {
                PointRecord::Matrix((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
            }
            TargetPoint::Tree(t) => PointRecord::Tree {
                edge: t.edge,
                offset: t.offset,
            },
        }
    }
}

impl PointRecord {
    pub fn to_point(&self) -> Result<TargetPoint> {
        match self {
            PointRecord::Vector(v) => Ok(TargetPoint::vector(v)),
            PointRecord::Matrix(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidPoint("matrix record must be square".into()));
                }
                Ok(TargetPoint::Matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
            }
            PointRecord::Tree { edge, offset } => Ok(TargetPoint::tree(*edge, *offset)),
        }
    }
}

fn points(records: &[PointRecord]) -> Result<Vec<TargetPoint>> {
    records.iter().map(PointRecord::to_point).collect()
}

fn records(points: &[TargetPoint]) -> Vec<PointRecord> {
    points.iter().map(PointRecord::from).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingRecord {
    pub atoms: Vec<Atom>,
    pub target: TargetSpec,
    pub values: Vec<PointRecord>,
    pub base: Vec<PointRecord>,
}

impl From<&MetricMapping> for MappingRecord {
    fn from(f: &MetricMapping) -> Self {
        let space = f.space();
        MappingRecord {
            atoms: space.base_space().atoms().to_vec(),
            target: space.target().to_spec(),
            values: records(f.values()),
            base: records(space.h()),
        }
    }
}

impl MappingRecord {
    /// Rebuilds the space and the mapping, validating every point.
    pub fn to_mapping(&self) -> Result<MetricMapping> {
        let target = TargetSpace::from_spec(&self.target)?;
        let base = FiniteMeasureSpace::new(self.atoms.clone())?;
        let space = LebesgueSpace::new(base, target, points(&self.base)?)?;
        space.mapping(points(&self.values)?)
    }

    /// Rebuilds the mapping inside an existing space, which must match.
    pub fn to_mapping_in(&self, space: &Arc<LebesgueSpace>) -> Result<MetricMapping> {
        let other = self.to_mapping()?;
        if !LebesgueSpace::compatible(other.space(), space) {
            return Err(Error::Mismatch("record describes a different Lebesgue space".into()));
        }
        space.mapping(other.values().to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledCurveRecord {
    pub interval: (f64, f64),
    pub times: Vec<f64>,
    pub values: Vec<PointRecord>,
}

impl From<&SampledCurve<TargetSpace>> for SampledCurveRecord {
    fn from(c: &SampledCurve<TargetSpace>) -> Self {
        SampledCurveRecord {
            interval: c.interval(),
            times: c.times().to_vec(),
            values: records(c.values()),
        }
    }
}

impl SampledCurveRecord {
    pub fn to_curve(&self, target: &TargetSpace) -> Result<SampledCurve<TargetSpace>> {
        let c = SampledCurve::new(target.clone(), self.times.clone(), points(&self.values)?)?;
        check_interval(c.interval(), self.interval)?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepCurveRecord {
    pub interval: (f64, f64),
    pub breakpoints: Vec<f64>,
    pub values: Vec<PointRecord>,
}

impl From<&StepCurve<TargetSpace>> for StepCurveRecord {
    fn from(c: &StepCurve<TargetSpace>) -> Self {
        StepCurveRecord {
            interval: c.interval(),
            breakpoints: c.breakpoints().to_vec(),
            values: records(c.values()),
        }
    }
}

impl StepCurveRecord {
    pub fn to_curve(&self, target: &TargetSpace) -> Result<StepCurve<TargetSpace>> {
        let c = StepCurve::new(target.clone(), self.breakpoints.clone(), points(&self.values)?)?;
        check_interval(c.interval(), self.interval)?;
        Ok(c)
    }
}

fn check_interval(found: (f64, f64), declared: (f64, f64)) -> Result<()> {
    if found != declared {
        return Err(Error::InvalidArgument(format!(
            "declared interval {declared:?} does not match nodes spanning {found:?}"
        )));
    }
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("records serialize")
}

pub fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed record: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_mapping, random_point, trial_rng};
    use crate::target_spaces::TreeEdge;

    fn roundtrip(target: TargetSpace, seed: u64) {
        let mut rng = trial_rng(seed, "io", 0);
        let h = random_point(&target, &mut rng);
        let base = FiniteMeasureSpace::from_weights(&[0.25, 1.0 / 3.0, 0.0]).unwrap();
        let space = LebesgueSpace::with_constant_base(base, target, h).unwrap();
        let f = random_mapping(&space, &mut rng);
        let text = to_json(&MappingRecord::from(&f));
        let back: MappingRecord = from_json(&text).unwrap();
        let g = back.to_mapping().unwrap();
        assert_eq!(g.values(), f.values());
        assert_eq!(**g.space(), **f.space());
        assert_eq!(to_json(&MappingRecord::from(&g)), text);
    }

    #[test]
    fn mappings_roundtrip_bitwise() {
        roundtrip(TargetSpace::euclidean(3).unwrap(), 1);
        roundtrip(TargetSpace::sphere(4).unwrap(), 2);
        roundtrip(TargetSpace::spd(3).unwrap(), 3);
        roundtrip(
            TargetSpace::metric_tree(vec![
                TreeEdge { from: 0, to: 1, length: 0.3 },
                TreeEdge { from: 1, to: 2, length: 1.7 },
            ])
            .unwrap(),
            4,
        );
    }

    #[test]
    fn point_record_shapes() {
        let v: PointRecord = from_json("[1.0, 2.5]").unwrap();
        assert_eq!(v, PointRecord::Vector(vec![1.0, 2.5]));
        let m: PointRecord = from_json("[[2.0, 0.0], [0.0, 1.0]]").unwrap();
        assert_eq!(m.to_point().unwrap(), TargetPoint::diagonal(&[2.0, 1.0]));
        let t: PointRecord = from_json(r#"{"edge": 1, "offset": 0.5}"#).unwrap();
        assert_eq!(t.to_point().unwrap(), TargetPoint::tree(1, 0.5));
        let bad: PointRecord = from_json("[[1.0, 2.0]]").unwrap();
        assert!(bad.to_point().is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let text = r#"{"atoms":[{"id":"a","weight":1.0}],"target":{"kind":"sphere","dim":2},
                      "values":[[1.0,1.0]],"base":[[1.0,0.0]]}"#;
        let rec: MappingRecord = from_json(text).unwrap();
        assert!(rec.to_mapping().is_err());
        assert!(from_json::<MappingRecord>(r#"{"atoms":[],"extra":1}"#).is_err());
    }

    #[test]
    fn curves_roundtrip() {
        let line = TargetSpace::euclidean(1).unwrap();
        let c = SampledCurve::from_fn(line.clone(), vec![0.0, 0.1, 0.7, 1.0], |t| TargetPoint::vector(&[t.sin()])).unwrap();
        let rec: SampledCurveRecord = from_json(&to_json(&SampledCurveRecord::from(&c))).unwrap();
        assert_eq!(rec.to_curve(&line).unwrap().values(), c.values());
        let s = StepCurve::new(line.clone(), vec![0.0, 0.5, 1.0], vec![TargetPoint::vector(&[0.0]), TargetPoint::vector(&[1.0 / 3.0])]).unwrap();
        let rec: StepCurveRecord = from_json(&to_json(&StepCurveRecord::from(&s))).unwrap();
        assert_eq!(rec.to_curve(&line).unwrap().values(), s.values());
        let mut wrong = rec.clone();
        wrong.interval = (0.0, 2.0);
        assert!(wrong.to_curve(&line).is_err());
    }
}
