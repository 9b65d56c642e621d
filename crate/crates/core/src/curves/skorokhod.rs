//! Bounds on the Skorokhod distance between step curves.
//!
//! For step curves the sup-distance term only depends on where the warp sends
//! the breakpoints of the first curve, and for fixed breakpoint images the
//! piecewise-linear interpolant has the smallest log-slope bound. The search
//! therefore runs over increasing breakpoint images drawn from a candidate
//! set (both curves' breakpoints plus a uniform subdivision), solved exactly
//! by a min-max dynamic program. Doubling the subdivision only adds
//! candidates, so the upper bound never increases.

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

use super::StepCurve;

#[derive(Clone, Debug, PartialEq)]
pub struct SkorokhodBounds {
    /// Cost of the best warp found.
    pub upper: f64,
    /// Value-set bound valid for every warp.
    pub lower: f64,
    /// Knots `(s, lambda(s))` of the best warp, at the first curve's breakpoints.
    pub warp: Vec<(f64, f64)>,
}

/// Upper and lower bounds on `d_Sk(c, g)`.
pub fn skorokhod_distance<S: MetricSpace>(
    c: &StepCurve<S>,
    g: &StepCurve<S>,
    warp_grid: usize,
) -> Result<SkorokhodBounds> {
    if warp_grid == 0 {
        return Err(Error::InvalidArgument("warp grid must be positive".into()));
    }
    if c.interval() != g.interval() {
        return Err(Error::Mismatch(format!(
            "curves live on {:?} and {:?}",
            c.interval(),
            g.interval()
        )));
    }
    if !c.ambient().same_space(g.ambient()) {
        return Err(Error::Mismatch("curves live in different spaces".into()));
    }
    let ambient = c.ambient();
    let (a, b) = c.interval();
    let cb = c.breakpoints();
    let gb = g.breakpoints();
    let m = c.piece_count();
    let ng = g.piece_count();

    // piece-to-piece distances
    let dist: Vec<Vec<f64>> = c
        .values()
        .iter()
        .map(|x| g.values().iter().map(|y| ambient.dist(x, y)).collect())
        .collect();

    let lower = value_set_bound(&dist);

    let mut candidates: Vec<f64> = cb.iter().chain(gb.iter()).copied().collect();
    candidates.extend((0..=warp_grid).map(|k| a + (b - a) * (k as f64) / (warp_grid as f64)));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let nv = candidates.len();

    // first and last g-piece meeting [v_j, v_jj)
    let first_piece: Vec<usize> = candidates
        .iter()
        .map(|&v| gb[1..ng].partition_point(|&s| s <= v))
        .collect();

    let end_cost = dist[m - 1][ng - 1];
    let transition = |i: usize, j: usize, jj: usize| -> f64 {
        let slope = (candidates[jj] - candidates[j]) / (cb[i + 1] - cb[i]);
        let mut cost = slope.ln().abs();
        // pieces k with gb[k] < v_jj and gb[k+1] > v_j
        let last = gb[1..ng].partition_point(|&s| s < candidates[jj]);
        for k in first_piece[j]..=last.min(ng - 1) {
            cost = cost.max(dist[i][k]);
        }
        cost
    };

    // to_end[i][j]: best cost from lambda(s_i) = v_j to lambda(b) = b
    let mut to_end = vec![vec![f64::INFINITY; nv]; m + 1];
    to_end[m][nv - 1] = end_cost;
    for i in (0..m).rev() {
        for j in 0..nv {
            let mut best = f64::INFINITY;
            for jj in j + 1..nv {
                if to_end[i + 1][jj].is_infinite() {
                    continue;
                }
                let cost = transition(i, j, jj).max(to_end[i + 1][jj]);
                if cost < best {
                    best = cost;
                }
            }
            to_end[i][j] = best;
        }
    }
    let upper = to_end[0][0];

    // lexicographically smallest optimal image sequence
    let mut warp = vec![(cb[0], candidates[0])];
    let mut j = 0;
    let mut prefix: f64 = 0.0;
    for i in 0..m {
        let next = (j + 1..nv)
            .find(|&jj| {
                let step = transition(i, j, jj);
                to_end[i + 1][jj].is_finite() && prefix.max(step).max(to_end[i + 1][jj]) <= upper
            })
            .expect("optimal path exists");
        prefix = prefix.max(transition(i, j, next));
        j = next;
        warp.push((cb[i + 1], candidates[j]));
    }

    Ok(SkorokhodBounds { upper, lower, warp })
}

/// Every warp is a bijection fixing the endpoints, so each piece of either
/// curve must face some piece of the other, and the first and last pieces
/// face each other at `a` and `b`.
fn value_set_bound(dist: &[Vec<f64>]) -> f64 {
    let m = dist.len();
    let ng = dist[0].len();
    let rows = dist
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let cols = (0..ng)
        .map(|k| dist.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    rows.max(cols).max(dist[0][0]).max(dist[m - 1][ng - 1])
}
