//! Seeded randomness and random elements of the implemented spaces.
//!
//! Every random draw is keyed by `(seed, suite name, trial index)` through a
//! ChaCha stream, so trials can run in any order or on any number of threads
//! and still see the same numbers.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use std::sync::Arc;

use crate::lebesgue_maps::{LebesgueSpace, MetricMapping};
use crate::target_spaces::{SpaceKind, TangentComponents, TangentVector, TargetPoint, TargetSpace};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Counter-based generator for one trial of one suite.
pub fn trial_rng(seed: u64, suite: &str, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(suite.as_bytes()).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_iterator(dim, (0..dim).map(|_| gaussian(rng)))
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    (&g + g.transpose()) * (0.5 * scale)
}

fn sym_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let e = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.exp()));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&e) * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// A random point of the space (Gaussian, uniform on spheres, `exp` of a
/// Gaussian symmetric matrix for SPD, uniform edge and offset for trees).
pub fn random_point<R: Rng + ?Sized>(space: &TargetSpace, rng: &mut R) -> TargetPoint {
    match space.kind() {
        SpaceKind::Euclidean { dim } => TargetPoint::Vector(gaussian_vector(rng, *dim)),
        SpaceKind::Sphere { dim } => loop {
            let v = gaussian_vector(rng, *dim);
            let n = v.norm();
            if n > 1e-6 {
                break TargetPoint::Vector(v / n);
            }
        },
        SpaceKind::Spd { dim } => TargetPoint::Matrix(sym_exp(&random_symmetric(rng, *dim, 0.7))),
        SpaceKind::MetricTree(tree) => {
            let edge = rng.random_range(0..tree.edges().len());
            let len = tree.edges()[edge].length;
            TargetPoint::tree(edge, rng.random::<f64>() * len)
        }
    }
}

/// A random tangent vector at `base` with Gaussian components of size `scale`.
///
/// Returns `None` for spaces without a chart.
pub fn random_tangent<R: Rng + ?Sized>(
    space: &TargetSpace,
    base: &TargetPoint,
    scale: f64,
    rng: &mut R,
) -> Option<TangentVector> {
    let components = match (space.kind(), base) {
        (SpaceKind::Euclidean { dim }, _) => TangentComponents::Vector(gaussian_vector(rng, *dim) * scale),
        (SpaceKind::Sphere { dim }, TargetPoint::Vector(x)) => {
            let g = gaussian_vector(rng, *dim);
            let t = &g - x * x.dot(&g);
            TangentComponents::Vector(t * scale)
        }
        (SpaceKind::Spd { dim }, TargetPoint::Matrix(a)) => {
            // congruence keeps the whitened tangent at unit scale
            let s = random_symmetric(rng, *dim, scale);
            let eig = nalgebra::SymmetricEigen::new(a.clone());
            let r = DVector::from_iterator(*dim, eig.eigenvalues.iter().map(|l| l.sqrt()));
            let sq = &eig.eigenvectors * DMatrix::from_diagonal(&r) * eig.eigenvectors.transpose();
            let v = &sq * s * &sq;
            TangentComponents::Matrix((&v + v.transpose()) * 0.5)
        }
        _ => return None,
    };
    Some(TangentVector {
        base: base.clone(),
        components,
    })
}

/// A random point at distance at most roughly `radius` from `center`.
pub fn random_point_near<R: Rng + ?Sized>(
    space: &TargetSpace,
    center: &TargetPoint,
    radius: f64,
    rng: &mut R,
) -> TargetPoint {
    match random_tangent(space, center, 1.0, rng) {
        Some(v) => {
            let n = space.tangent_norm_unchecked(&v).max(1e-12);
            let r = radius * rng.random::<f64>();
            space.exp_map(&v.scaled(r / n)).unwrap_or_else(|_| center.clone())
        }
        None => random_point(space, rng),
    }
}

/// A mapping with independent random values on every atom.
pub fn random_mapping<R: Rng + ?Sized>(space: &Arc<LebesgueSpace>, rng: &mut R) -> MetricMapping {
    let values = (0..space.atom_count())
        .map(|_| random_point(space.target(), rng))
        .collect();
    MetricMapping::from_parts_unchecked(Arc::clone(space), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(7, "suite", 3).random();
        let b: f64 = trial_rng(7, "suite", 3).random();
        let c: f64 = trial_rng(7, "suite", 4).random();
        let d: f64 = trial_rng(7, "other", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn random_points_are_valid() {
        let mut rng = trial_rng(1, "points", 0);
        for space in [
            TargetSpace::euclidean(3).unwrap(),
            TargetSpace::sphere(3).unwrap(),
            TargetSpace::spd(3).unwrap(),
        ] {
            for _ in 0..50 {
                let p = random_point(&space, &mut rng);
                space.validate_point(&p).unwrap();
                let v = random_tangent(&space, &p, 0.5, &mut rng).unwrap();
                space.tangent_norm(&v).unwrap();
            }
        }
    }
}
