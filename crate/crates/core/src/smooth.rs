//! Random smooth curves with closed-form speed.
//!
//! Each family is a quadratic in a chart: `p + t q + t^2 r` in `R^n`, its
//! radial projection on the sphere (with `q`, `r` tangent at `p`), and `exp(A + t B + t^2 C)` on SPD
//! matrices. None of them is a geodesic, so difference quotients carry
//! their full truncation error.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::{gaussian_vector, random_symmetric};
use crate::target_spaces::{SpaceKind, TargetPoint, TargetSpace};

#[derive(Clone, Debug)]
pub enum SmoothCurve {
    Euclidean { p: DVector<f64>, q: DVector<f64>, r: DVector<f64> },
    Sphere { p: DVector<f64>, q: DVector<f64>, r: DVector<f64> },
    Spd { a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64> },
}

fn direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, dim);
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    (eig.eigenvalues, eig.eigenvectors)
}

/// `sinh(x) / x`
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

impl SmoothCurve {
    /// A random curve on `[0, 1]` whose velocity and acceleration
    /// coefficients have norms `velocity` and `acceleration` in the chart.
    pub fn random<R: Rng + ?Sized>(target: &TargetSpace, velocity: f64, acceleration: f64, rng: &mut R) -> Result<Self> {
        match target.kind() {
            SpaceKind::Euclidean { dim } => Ok(SmoothCurve::Euclidean {
                p: gaussian_vector(rng, *dim),
                q: direction(rng, *dim) * velocity,
                r: direction(rng, *dim) * (0.5 * acceleration),
            }),
            SpaceKind::Sphere { dim } => {
                // q and r tangent at p keep |u(t)| >= 1
                let p = direction(rng, *dim);
                let tangent = |rng: &mut R| loop {
                    let v = gaussian_vector(rng, *dim);
                    let v = &v - &p * p.dot(&v);
                    let n = v.norm();
                    if n > 1e-6 {
                        break v / n;
                    }
                };
                let q = tangent(rng) * velocity;
                let r = tangent(rng) * (0.5 * acceleration);
                Ok(SmoothCurve::Sphere { p, q, r })
            }
            SpaceKind::Spd { dim } => {
                let unit = |rng: &mut R| {
                    let m = random_symmetric(rng, *dim, 1.0);
                    let n = m.norm().max(1e-12);
                    m / n
                };
                Ok(SmoothCurve::Spd {
                    a: random_symmetric(rng, *dim, 0.5),
                    b: unit(rng) * velocity,
                    c: unit(rng) * (0.5 * acceleration),
                })
            }
            SpaceKind::MetricTree(_) => Err(Error::Unsupported("metric trees carry no smooth curves".into())),
        }
    }

    pub fn point(&self, t: f64) -> TargetPoint {
        match self {
            SmoothCurve::Euclidean { p, q, r } => TargetPoint::Vector(p + q * t + r * (t * t)),
            SmoothCurve::Sphere { p, q, r } => {
                let u = p + q * t + r * (t * t);
                let n = u.norm();
                TargetPoint::Vector(u / n)
            }
            SmoothCurve::Spd { a, b, c } => {
                let (l, u) = sym_eigen(&(a + b * t + c * (t * t)));
                let e = DVector::from_iterator(l.len(), l.iter().map(|x| x.exp()));
                let m = &u * DMatrix::from_diagonal(&e) * u.transpose();
                TargetPoint::Matrix((&m + m.transpose()) * 0.5)
            }
        }
    }

    /// Exact metric speed `|c'|(t)`.
    pub fn speed(&self, t: f64) -> f64 {
        match self {
            SmoothCurve::Euclidean { q, r, .. } => (q + r * (2.0 * t)).norm(),
            SmoothCurve::Sphere { p, q, r } => {
                let u = p + q * t + r * (t * t);
                let du = q + r * (2.0 * t);
                let n = u.norm();
                let x = &u / n;
                (&du - &x * x.dot(&du)).norm() / n
            }
            SmoothCurve::Spd { a, b, c } => {
                // whitened derivative of exp(S) in the eigenbasis of S
                let (l, u) = sym_eigen(&(a + b * t + c * (t * t)));
                let ds = b + c * (2.0 * t);
                let m = u.transpose() * ds * &u;
                let n = l.len();
                let mut sum = 0.0;
                for i in 0..n {
                    for k in 0..n {
                        let v = sinhc(0.5 * (l[i] - l[k])) * m[(i, k)];
                        sum += v * v;
                    }
                }
                sum.sqrt()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::trial_rng;

    fn check_speed(target: TargetSpace) {
        let mut rng = trial_rng(5, "smooth", 0);
        for _ in 0..5 {
            let c = SmoothCurve::random(&target, 1.0, 1.0, &mut rng).unwrap();
            for &t in &[0.1, 0.5, 0.9] {
                let h = 1e-5;
                let fd = target.distance(&c.point(t - h), &c.point(t + h)).unwrap() / (2.0 * h);
                assert!((fd - c.speed(t)).abs() < 1e-7, "{fd} vs {}", c.speed(t));
            }
        }
    }

    #[test]
    fn speeds_match_fine_difference_quotients() {
        check_speed(TargetSpace::euclidean(3).unwrap());
        check_speed(TargetSpace::sphere(3).unwrap());
        check_speed(TargetSpace::spd(2).unwrap());
        check_speed(TargetSpace::spd(3).unwrap());
    }

    #[test]
    fn points_are_valid() {
        let mut rng = trial_rng(6, "smooth", 0);
        for target in [TargetSpace::sphere(4).unwrap(), TargetSpace::spd(3).unwrap()] {
            let c = SmoothCurve::random(&target, 1.0, 1.0, &mut rng).unwrap();
            for i in 0..=10 {
                target.validate_point(&c.point(i as f64 / 10.0)).unwrap();
            }
        }
    }
}
