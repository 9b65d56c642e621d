//! Reference computations written independently of the library: closed-form
//! distances and geodesics, flat weighted sums, brute-force enumerations.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nlsp::lebesgue_maps::MetricMapping;
use nlsp::target_spaces::{SpaceKind, TargetPoint, TargetSpace};

pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let d = DVector::from_iterator(e.eigenvalues.len(), e.eigenvalues.iter().map(|&x| f(x)));
    let r = &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose();
    (&r + r.transpose()) * 0.5
}

/// Affine-invariant distance `|log(A^{-1/2} B A^{-1/2})|_F`.
pub fn spd_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let ais = sym_fn(a, |x| 1.0 / x.sqrt());
    let m = &ais * b * &ais;
    let e = SymmetricEigen::new((&m + m.transpose()) * 0.5);
    e.eigenvalues.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt()
}

/// `A^{1/2} (A^{-1/2} B A^{-1/2})^s A^{1/2}`
pub fn spd_geodesic(a: &DMatrix<f64>, b: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let ah = sym_fn(a, f64::sqrt);
    let ais = sym_fn(a, |x| 1.0 / x.sqrt());
    let m = &ais * b * &ais;
    let r = &ah * sym_fn(&m, |x| x.powf(s)) * &ah;
    (&r + r.transpose()) * 0.5
}

/// Great-circle distance, accurate for nearby points.
pub fn sphere_distance(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    2.0 * ((x - y).norm() / 2.0).min(1.0).asin()
}

pub fn slerp(x: &DVector<f64>, y: &DVector<f64>, s: f64) -> DVector<f64> {
    let theta = sphere_distance(x, y);
    if theta < 1e-15 {
        return x.clone();
    }
    (x * ((1.0 - s) * theta).sin() + y * (s * theta).sin()) / theta.sin()
}

fn tree_distance(space: &TargetSpace, a: &TargetPoint, b: &TargetPoint) -> f64 {
    let SpaceKind::MetricTree(tree) = space.kind() else { unreachable!() };
    let (TargetPoint::Tree(p), TargetPoint::Tree(q)) = (a, b) else { panic!("tree points expected") };
    if p.edge == q.edge {
        return (p.offset - q.offset).abs();
    }
    let edges = tree.edges();
    let n = tree.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in edges {
        d[e.from][e.to] = e.length;
        d[e.to][e.from] = e.length;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let ends = |e: usize, o: f64| [(edges[e].from, o), (edges[e].to, edges[e].length - o)];
    let mut best = f64::INFINITY;
    for (u, du) in ends(p.edge, p.offset) {
        for (v, dv) in ends(q.edge, q.offset) {
            best = best.min(du + d[u][v] + dv);
        }
    }
    best
}

/// Target distance recomputed from closed forms.
pub fn distance(space: &TargetSpace, a: &TargetPoint, b: &TargetPoint) -> f64 {
    match (space.kind(), a, b) {
        (SpaceKind::Euclidean { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => (x - y).norm(),
        (SpaceKind::Sphere { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => sphere_distance(x, y),
        (SpaceKind::Spd { .. }, TargetPoint::Matrix(x), TargetPoint::Matrix(y)) => spd_distance(x, y),
        (SpaceKind::MetricTree(_), _, _) => tree_distance(space, a, b),
        _ => panic!("point does not belong to {}", space.name()),
    }
}

/// Geodesic point for the chart-bearing targets.
pub fn geodesic(space: &TargetSpace, a: &TargetPoint, b: &TargetPoint, s: f64) -> TargetPoint {
    match (space.kind(), a, b) {
        (SpaceKind::Euclidean { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => {
            TargetPoint::Vector(x * (1.0 - s) + y * s)
        }
        (SpaceKind::Sphere { .. }, TargetPoint::Vector(x), TargetPoint::Vector(y)) => TargetPoint::Vector(slerp(x, y, s)),
        (SpaceKind::Spd { .. }, TargetPoint::Matrix(x), TargetPoint::Matrix(y)) => {
            TargetPoint::Matrix(spd_geodesic(x, y, s))
        }
        _ => panic!("no closed-form geodesic on {}", space.name()),
    }
}

/// `(sum_j w_j d_j^p)^{1/p}`; `p = inf` takes the maximum over positive weights.
pub fn lp(weights: &[f64], dists: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return weights
            .iter()
            .zip(dists)
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, d)| *d)
            .fold(0.0, f64::max);
    }
    weights.iter().zip(dists).map(|(w, d)| w * d.powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn mapping_distance(f: &MetricMapping, g: &MetricMapping, p: f64) -> f64 {
    let space = f.space();
    let dists: Vec<f64> = (0..space.atom_count())
        .map(|j| distance(space.target(), f.value(j), g.value(j)))
        .collect();
    lp(space.weights(), &dists, p)
}

pub fn relative(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(1e-300)
}

/// Smallest `log2(r_k / r_{k+1})` over consecutive refinements.
pub fn order(residuals: &[f64]) -> f64 {
    residuals
        .windows(2)
        .map(|w| if w[1] == 0.0 { f64::INFINITY } else { (w[0] / w[1]).log2() })
        .fold(f64::INFINITY, f64::min)
}

pub fn uniform(k: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    t[k - 1] = 1.0;
    t
}

/// Variation of a finite sequence of points, maximized over every subset of
/// nodes that keeps both ends. Exponential; for a handful of nodes only.
pub fn brute_force_variation(points: &[TargetPoint], space: &TargetSpace) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let inner = n - 2;
    let mut best: f64 = 0.0;
    for mask in 0u64..(1 << inner) {
        let mut chain = vec![0];
        chain.extend((0..inner).filter(|i| mask & (1 << i) != 0).map(|i| i + 1));
        chain.push(n - 1);
        let v: f64 = chain.windows(2).map(|w| distance(space, &points[w[0]], &points[w[1]])).sum();
        best = best.max(v);
    }
    best
}
