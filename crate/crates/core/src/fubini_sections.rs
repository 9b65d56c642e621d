//! Section maps of product mappings and the isometry between curves of
//! mappings and mappings of curves.
//!
//! A product mapping on `grid x atoms` can be sliced by time (a curve of
//! mappings, [`sec_i`]) or by atom (a mapping of curves, [`sec_m`]). The three
//! representations hold the same array; the distances differ only in the
//! order in which the double sum is taken, which is what the isometry
//! statements compare.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lebesgue_maps::{
    d_p_unchecked, Exponent, LebesgueSpace, MetricMapping, ProductGridMapping, Rectangle, TimeGrid,
};
use crate::target_spaces::TargetPoint;

/// `t_i -> c(t_i)` with every `c(t_i)` in the same `L^p_h(M, N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveOfMappings {
    grid: TimeGrid,
    space: Arc<LebesgueSpace>,
    mappings: Vec<MetricMapping>,
}

impl CurveOfMappings {
    pub fn new(grid: TimeGrid, mappings: Vec<MetricMapping>) -> Result<Self> {
        if mappings.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: mappings.len(),
            });
        }
        let space = Arc::clone(mappings[0].space());
        if mappings.iter().any(|f| !LebesgueSpace::compatible(&space, f.space())) {
            return Err(Error::Mismatch("mappings on a curve must share their space".into()));
        }
        Ok(Self { grid, space, mappings })
    }

    /// The constant curve at the base mapping.
    pub fn base(grid: TimeGrid, space: Arc<LebesgueSpace>) -> Self {
        let mappings = vec![space.base_mapping(); grid.len()];
        Self { grid, space, mappings }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &Arc<LebesgueSpace> {
        &self.space
    }

    pub fn mappings(&self) -> &[MetricMapping] {
        &self.mappings
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || !LebesgueSpace::compatible(&self.space, &other.space) {
            return Err(Error::Mismatch("curves of mappings are not comparable".into()));
        }
        Ok(())
    }
}

/// `x_j -> (t -> f(x_j)(t))`, one target-space curve per atom on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingOfCurves {
    grid: TimeGrid,
    space: Arc<LebesgueSpace>,
    // curves[atom][node]
    curves: Vec<Vec<TargetPoint>>,
}

impl MappingOfCurves {
    pub fn new(grid: TimeGrid, space: Arc<LebesgueSpace>, curves: Vec<Vec<TargetPoint>>) -> Result<Self> {
        if curves.len() != space.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: space.atom_count(),
                found: curves.len(),
            });
        }
        for curve in &curves {
            if curve.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    found: curve.len(),
                });
            }
            for y in curve {
                space.target().validate_point(y)?;
            }
        }
        Ok(Self { grid, space, curves })
    }

    /// Every atom mapped to the constant curve at `h(x)`.
    pub fn base(grid: TimeGrid, space: Arc<LebesgueSpace>) -> Self {
        let curves = space.h().iter().map(|y| vec![y.clone(); grid.len()]).collect();
        Self { grid, space, curves }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &Arc<LebesgueSpace> {
        &self.space
    }

    pub fn curves(&self) -> &[Vec<TargetPoint>] {
        &self.curves
    }

    pub fn curve(&self, atom: usize) -> &[TargetPoint] {
        &self.curves[atom]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || !LebesgueSpace::compatible(&self.space, &other.space) {
            return Err(Error::Mismatch("mappings of curves are not comparable".into()));
        }
        Ok(())
    }
}

/// Time sections: `(sec_I c)(t_i)(x_j) = c(t_i, x_j)`.
pub fn sec_i(c: &ProductGridMapping) -> CurveOfMappings {
    let space = Arc::clone(c.space());
    let mappings = c
        .rows()
        .iter()
        .map(|row| MetricMapping::from_parts_unchecked(Arc::clone(&space), row.clone()))
        .collect();
    CurveOfMappings {
        grid: c.grid().clone(),
        space,
        mappings,
    }
}

pub fn sec_i_inverse(c: &CurveOfMappings) -> ProductGridMapping {
    let rows = c.mappings.iter().map(|f| f.values().to_vec()).collect();
    ProductGridMapping::from_parts_unchecked(c.grid.clone(), Arc::clone(&c.space), rows)
}

/// Atom sections: `(sec_M c)(x_j)(t_i) = c(t_i, x_j)`.
pub fn sec_m(c: &ProductGridMapping) -> MappingOfCurves {
    let n = c.space().atom_count();
    let curves = (0..n)
        .map(|j| c.rows().iter().map(|row| row[j].clone()).collect())
        .collect();
    MappingOfCurves {
        grid: c.grid().clone(),
        space: Arc::clone(c.space()),
        curves,
    }
}

pub fn sec_m_inverse(f: &MappingOfCurves) -> ProductGridMapping {
    let k = f.grid.len();
    let rows = (0..k)
        .map(|i| f.curves.iter().map(|curve| curve[i].clone()).collect())
        .collect();
    ProductGridMapping::from_parts_unchecked(f.grid.clone(), Arc::clone(&f.space), rows)
}

/// `sec_M o sec_I^{-1}`.
pub fn i_bar(c: &CurveOfMappings) -> MappingOfCurves {
    sec_m(&sec_i_inverse(c))
}

/// `sec_I o sec_M^{-1}`.
pub fn i_bar_inverse(f: &MappingOfCurves) -> CurveOfMappings {
    sec_i(&sec_m_inverse(f))
}

/// `d_{p,p}`: the `L^p` distance in time of the `D_p` distances between the
/// mappings, `(sum_i tau_i D_p(c_i, c'_i)^p)^{1/p}`.
pub fn curve_of_mappings_distance(c: &CurveOfMappings, c2: &CurveOfMappings, p: Exponent) -> Result<f64> {
    c.check_compatible(c2)?;
    let inner: Vec<f64> = c
        .mappings
        .iter()
        .zip(&c2.mappings)
        .map(|(f, g)| d_p_unchecked(f, g, p))
        .collect();
    Ok(p.aggregate(c.grid.weights(), &inner))
}

/// `D_{p,p}`: the `D_p` distance over atoms of the per-atom `L^p`-in-time
/// distances, `(sum_j w_j d_p(f_j, f'_j)^p)^{1/p}`.
pub fn mapping_of_curves_distance(f: &MappingOfCurves, f2: &MappingOfCurves, p: Exponent) -> Result<f64> {
    f.check_compatible(f2)?;
    let target = f.space.target();
    let tw = f.grid.weights();
    let inner: Vec<f64> = f
        .curves
        .iter()
        .zip(&f2.curves)
        .map(|(u, v)| {
            let d: Vec<f64> = u.iter().zip(v).map(|(x, y)| target.dist_unchecked(x, y)).collect();
            p.aggregate(tw, &d)
        })
        .collect();
    Ok(p.aggregate(f.space.weights(), &inner))
}

/// Result of approximating a product mapping by rectangular simple ones.
#[derive(Clone, Debug)]
pub struct RectangleApproximation {
    pub approximation: ProductGridMapping,
    pub rectangles: Vec<Rectangle>,
    pub error: f64,
}

/// Greedily adds single-cell rectangles, largest weighted contribution
/// first, until the product distance to `c` is at most `tolerance`.
pub fn approximate_by_rectangles(
    c: &ProductGridMapping,
    p: Exponent,
    tolerance: f64,
) -> Result<RectangleApproximation> {
    let base = ProductGridMapping::base(c.grid().clone(), Arc::clone(c.space()));
    let d = base.cell_distances(c);
    let tw = c.grid().weights();
    let aw = c.space().weights();
    let mut cells: Vec<(f64, usize, usize)> = Vec::new();
    for (i, row) in d.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let mass = tw[i] * aw[j];
            if mass > 0.0 && *x > 0.0 {
                let contribution = match p {
                    Exponent::Finite(q) => mass * x.powf(q),
                    Exponent::Infinite => *x,
                };
                cells.push((contribution, i, j));
            }
        }
    }
    // largest first; ties by (node, atom)
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut rectangles = Vec::new();
    let mut values: Vec<Vec<TargetPoint>> = base.rows().to_vec();
    let mut error = crate::lebesgue_maps::product_distance(&base, c, p)?;
    for (_, i, j) in cells {
        if error <= tolerance {
            break;
        }
        let y = c.value(i, j).clone();
        values[i][j] = y.clone();
        rectangles.push(Rectangle {
            nodes: i..i + 1,
            atoms: vec![j],
            value: y,
        });
        let current = ProductGridMapping::from_parts_unchecked(c.grid().clone(), Arc::clone(c.space()), values.clone());
        error = crate::lebesgue_maps::product_distance(&current, c, p)?;
    }
    let approximation = crate::lebesgue_maps::rectangular_simple(c.grid().clone(), c.space(), &rectangles)?;
    Ok(RectangleApproximation {
        approximation,
        rectangles,
        error,
    })
}
