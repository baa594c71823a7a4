//! Geometry of the unit hypersphere S^(d−1) with the round metric.
//!
//! Every function that returns a [`LatentVector`] returns it with unit norm
//! (to within [`UNIT_TOLERANCE`]). Seeded operations take their seed
//! explicitly.

use std::f64::consts::PI;

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 128;
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Vectors shorter than this cannot be normalized.
pub const MIN_NORM: f64 = 1e-12;
/// Pairs closer than this to antipodal have no unique geodesic.
pub const ANTIPODAL_MARGIN: f64 = 1e-6;
pub const KARCHER_MAX_ITERATIONS: usize = 1000;
pub const KARCHER_TOLERANCE: f64 = 1e-10;
pub const MAX_PERTURB_SIGMA: f64 = 0.2;

/// A point on the unit hypersphere.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentVector(Array1<f64>);

impl LatentVector {
    /// Accepts `components` if it is already unit length within
    /// [`UNIT_TOLERANCE`]; use [`normalize`] otherwise.
    pub fn from_unit(components: Array1<f64>) -> Result<Self> {
        let norm = l2_norm(components.view());
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Invalid(format!("vector norm {norm} is not 1")));
        }
        Ok(LatentVector(components))
    }

    /// i-th standard basis vector of dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Array1::zeros(dim);
        v[i] = 1.0;
        LatentVector(v)
    }

    /// Uniform sample on the sphere (normalized isotropic Gaussian).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v: Array1<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            if let Ok(unit) = normalize(v.view()) {
                return unit;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn into_array(self) -> Array1<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }

    pub fn dot(&self, other: &LatentVector) -> f64 {
        dot(self.0.view(), other.0.view())
    }

    pub fn norm(&self) -> f64 {
        l2_norm(self.0.view())
    }
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn l2_norm(v: ArrayView1<f64>) -> f64 {
    dot(v, v).sqrt()
}

fn check_dims(a: &LatentVector, b: &LatentVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "latent dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Projects `v` onto the sphere. A vector already unit length to within a
/// few ulps is returned unchanged, which makes normalization idempotent.
pub fn normalize(v: ArrayView1<f64>) -> Result<LatentVector> {
    if v.is_empty() {
        return Err(Error::Degenerate("cannot normalize an empty vector".into()));
    }
    let norm = l2_norm(v);
    if !norm.is_finite() {
        return Err(Error::Numeric(format!("vector norm is {norm}")));
    }
    if norm <= MIN_NORM {
        return Err(Error::Degenerate(format!("vector norm {norm:e} is too close to zero")));
    }
    if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(LatentVector(v.to_owned()));
    }
    Ok(LatentVector(v.mapv(|x| x / norm)))
}

/// Angle between two unit vectors, in [0, π]. Computed from the chord
/// length, which stays accurate for nearly equal or nearly opposite inputs
/// where `acos` of the dot product loses half its digits.
pub fn geodesic_distance(a: &LatentVector, b: &LatentVector) -> Result<f64> {
    check_dims(a, b)?;
    let half_chord = |sign: f64| {
        let sq: f64 = a.0.iter().zip(b.0.iter()).map(|(x, y)| (x - sign * y).powi(2)).sum();
        (sq.sqrt() / 2.0).min(1.0).asin()
    };
    if a.dot(b) >= 0.0 {
        Ok(2.0 * half_chord(1.0))
    } else {
        Ok(PI - 2.0 * half_chord(-1.0))
    }
}

fn check_not_antipodal(theta: f64) -> Result<()> {
    if theta >= PI - ANTIPODAL_MARGIN {
        return Err(Error::Antipodal { angle: theta });
    }
    Ok(())
}

/// Spherical linear interpolation: the point a fraction `mu` of the way
/// along the shorter great circle from `q1` to `q2`.
pub fn slerp(q1: &LatentVector, q2: &LatentVector, mu: f64) -> Result<LatentVector> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Invalid(format!("interpolation parameter {mu} outside [0, 1]")));
    }
    let theta = geodesic_distance(q1, q2)?;
    check_not_antipodal(theta)?;
    let sin_theta = theta.sin();
    if sin_theta < 1e-15 {
        // Coincident inputs.
        return Ok(if mu == 1.0 { q2.clone() } else { q1.clone() });
    }
    let c1 = ((1.0 - mu) * theta).sin() / sin_theta;
    let c2 = (mu * theta).sin() / sin_theta;
    Ok(LatentVector(&q1.0 * c1 + &q2.0 * c2))
}

/// Tangent vector at `base` pointing along the geodesic to `v`, with length
/// equal to the geodesic distance.
fn log_map(base: &LatentVector, v: &LatentVector) -> Result<Array1<f64>> {
    let c = base.dot(v).clamp(-1.0, 1.0);
    let theta = c.acos();
    check_not_antipodal(theta)?;
    let u = &v.0 - &(&base.0 * c);
    let u_norm = l2_norm(u.view());
    if u_norm < 1e-15 {
        return Ok(Array1::zeros(base.dim()));
    }
    Ok(u * (theta / u_norm))
}

fn exp_map(base: &LatentVector, t: &Array1<f64>) -> Result<LatentVector> {
    let r = l2_norm(t.view());
    if r == 0.0 {
        return Ok(base.clone());
    }
    let moved = &base.0 * r.cos() + t * (r.sin() / r);
    normalize(moved.view())
}

/// Spherical average of a set of latents.
///
/// One vector is returned as is, two give their slerp midpoint, and larger
/// sets use the Karcher (Fréchet) mean: the point minimizing the summed
/// squared geodesic distances, found by repeatedly averaging in the tangent
/// space and mapping back until the update is below [`KARCHER_TOLERANCE`].
pub fn spherical_mean(vs: &[LatentVector]) -> Result<LatentVector> {
    match vs {
        [] => Err(Error::Invalid("cannot average an empty set".into())),
        [v] => Ok(v.clone()),
        [a, b] => slerp(a, b, 0.5),
        _ => karcher_mean(vs),
    }
}

fn karcher_mean(vs: &[LatentVector]) -> Result<LatentVector> {
    let dim = vs[0].dim();
    for v in &vs[1..] {
        check_dims(&vs[0], v)?;
    }
    let mut sum = Array1::zeros(dim);
    for v in vs {
        sum += &v.0;
    }
    let mut x = match normalize(sum.view()) {
        Ok(x) => x,
        Err(Error::Degenerate(_)) => vs[0].clone(),
        Err(e) => return Err(e),
    };
    let inv_n = 1.0 / vs.len() as f64;
    let mut last_update = f64::INFINITY;
    for _ in 0..KARCHER_MAX_ITERATIONS {
        let mut tangent = Array1::zeros(dim);
        for v in vs {
            tangent += &log_map(&x, v)?;
        }
        tangent *= inv_n;
        last_update = l2_norm(tangent.view());
        x = exp_map(&x, &tangent)?;
        if last_update < KARCHER_TOLERANCE {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: KARCHER_MAX_ITERATIONS,
        last_update,
    })
}

/// ‖(1/n) Σ vᵢ‖₂: how far the Euclidean average has collapsed towards the
/// origin.
pub fn linear_mean_norm(vs: &[LatentVector]) -> Result<f64> {
    let Some(first) = vs.first() else {
        return Err(Error::Invalid("cannot average an empty set".into()));
    };
    let mut sum = Array1::zeros(first.dim());
    for v in vs {
        check_dims(first, v)?;
        sum += &v.0;
    }
    Ok(l2_norm(sum.view()) / vs.len() as f64)
}

/// normalize(a − b + c): move `c` by the offset that separates `a` from `b`.
pub fn latent_arithmetic(a: &LatentVector, b: &LatentVector, c: &LatentVector) -> Result<LatentVector> {
    check_dims(a, b)?;
    check_dims(a, c)?;
    let combined = &a.0 - &b.0 + &c.0;
    normalize(combined.view())
}

/// normalize(v + ε) with ε an isotropic Gaussian of per-component standard
/// deviation `sigma`, drawn from a generator seeded with `seed`.
pub fn perturb(v: &LatentVector, sigma: f64, seed: u64) -> Result<LatentVector> {
    if !(sigma > 0.0 && sigma <= MAX_PERTURB_SIGMA) {
        return Err(Error::Invalid(format!(
            "perturbation sigma {sigma} outside (0, {MAX_PERTURB_SIGMA}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    let moved: Array1<f64> = v.0.iter().map(|&x| x + noise.sample(&mut rng)).collect();
    normalize(moved.view())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpolationMethod {
    Slerp,
    /// Straight-line interpolation, each point normalized back to the sphere.
    LerpRenorm,
}

impl std::str::FromStr for InterpolationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slerp" => Ok(InterpolationMethod::Slerp),
            "lerp" | "lerp_renorm" | "lerp-renorm" => Ok(InterpolationMethod::LerpRenorm),
            other => Err(Error::Invalid(format!("unknown interpolation method {other:?}"))),
        }
    }
}

/// `n_steps` points at μ = 0, 1/(n−1), …, 1 from `q1` to `q2`. Both
/// endpoints are reproduced exactly.
pub fn interpolation_path(
    q1: &LatentVector,
    q2: &LatentVector,
    n_steps: usize,
    method: InterpolationMethod,
) -> Result<Vec<LatentVector>> {
    if n_steps < 2 {
        return Err(Error::Invalid("an interpolation path needs at least 2 points".into()));
    }
    check_not_antipodal(geodesic_distance(q1, q2)?)?;
    let last = n_steps - 1;
    (0..n_steps)
        .map(|i| {
            if i == 0 {
                return Ok(q1.clone());
            }
            if i == last {
                return Ok(q2.clone());
            }
            let mu = i as f64 / last as f64;
            match method {
                InterpolationMethod::Slerp => slerp(q1, q2, mu),
                InterpolationMethod::LerpRenorm => {
                    let mixed = &q1.0 * (1.0 - mu) + &q2.0 * mu;
                    normalize(mixed.view())
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    fn unit(v: Array1<f64>) -> LatentVector {
        normalize(v.view()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let v = normalize(array![3.0, 4.0, 0.0].view()).unwrap();
        assert!((v.as_array()[0] - 0.6).abs() < 1e-15);
        assert!((v.as_array()[1] - 0.8).abs() < 1e-15);
        assert_eq!(v.as_array()[2], 0.0);

        let e = LatentVector::basis(5, 2);
        assert_eq!(normalize(e.view()).unwrap(), e);
        let again = normalize(v.view()).unwrap();
        assert_eq!(again, v);

        assert!(matches!(normalize(Array1::zeros(4).view()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn distance_examples() {
        let a = LatentVector::basis(3, 0);
        let b = LatentVector::basis(3, 1);
        let neg = unit(array![-1.0, 0.0, 0.0]);
        assert_eq!(geodesic_distance(&a, &a).unwrap(), 0.0);
        assert!((geodesic_distance(&a, &b).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((geodesic_distance(&a, &neg).unwrap() - PI).abs() < 1e-15);
        assert!(geodesic_distance(&a, &LatentVector::basis(4, 0)).is_err());
    }

    #[test]
    fn slerp_examples() {
        let q1 = LatentVector::basis(4, 0);
        let q2 = LatentVector::basis(4, 1);
        assert_eq!(slerp(&q1, &q2, 0.0).unwrap(), q1);
        assert_eq!(slerp(&q1, &q2, 1.0).unwrap(), q2);
        let mid = slerp(&q1, &q2, 0.5).unwrap();
        let expected = (q1.as_array() + q2.as_array()) / 2f64.sqrt();
        for (a, b) in mid.as_array().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let anti = unit(array![-1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(slerp(&q1, &anti, 0.5), Err(Error::Antipodal { .. })));
        assert!(slerp(&q1, &q2, 1.5).is_err());
    }

    #[test]
    fn mean_of_one_and_two() {
        let q1 = unit(array![1.0, 2.0, -0.5]);
        let q2 = unit(array![-0.3, 1.0, 2.0]);
        assert_eq!(spherical_mean(std::slice::from_ref(&q1)).unwrap(), q1);
        assert_eq!(
            spherical_mean(&[q1.clone(), q2.clone()]).unwrap(),
            slerp(&q1, &q2, 0.5).unwrap()
        );
        assert!(spherical_mean(&[]).is_err());
    }

    #[test]
    fn symmetric_triple_averages_to_centre() {
        // v, and v rotated by ±α in the (e0, e1) plane
        let alpha: f64 = 0.7;
        let v = LatentVector::basis(3, 0);
        let plus = unit(array![alpha.cos(), alpha.sin(), 0.0]);
        let minus = unit(array![alpha.cos(), -alpha.sin(), 0.0]);
        let m = spherical_mean(&[plus, v.clone(), minus]).unwrap();
        assert!(geodesic_distance(&m, &v).unwrap() < 1e-9);
    }

    #[test]
    fn linear_mean_norm_examples() {
        let v = unit(array![0.2, -0.4, 0.9]);
        assert!((linear_mean_norm(&[v.clone(), v.clone(), v.clone()]).unwrap() - 1.0).abs() < 1e-15);
        let neg = LatentVector(-v.as_array());
        assert_eq!(linear_mean_norm(&[v, neg]).unwrap(), 0.0);
    }

    #[test]
    fn arithmetic_cancellation() {
        let a = unit(array![0.3, 0.1, 0.9, 0.2]);
        let b = unit(array![-0.5, 0.5, 0.1, 0.7]);
        let c = unit(array![0.6, -0.2, 0.2, -0.7]);
        let r = latent_arithmetic(&a, &b, &b).unwrap();
        assert!(geodesic_distance(&r, &a).unwrap() < 1e-9);
        let r = latent_arithmetic(&a, &a, &c).unwrap();
        assert!(geodesic_distance(&r, &c).unwrap() < 1e-9);

        // b sits 60° from a, so c = b − a is itself a unit vector and a − b + c = 0
        let a = LatentVector::basis(2, 0);
        let third = PI / 3.0;
        let b = unit(array![third.cos(), third.sin()]);
        let c = unit(array![third.cos() - 1.0, third.sin()]);
        assert!(matches!(latent_arithmetic(&a, &b, &c), Err(Error::Degenerate(_))));
    }

    #[test]
    fn perturb_is_small_and_seeded() {
        let v = unit(array![1.0, 1.0, 1.0, 1.0]);
        let p = perturb(&v, 1e-9, 3).unwrap();
        assert!(geodesic_distance(&v, &p).unwrap() < 1e-6);
        assert_eq!(perturb(&v, 0.05, 9).unwrap(), perturb(&v, 0.05, 9).unwrap());
        assert!(perturb(&v, 0.5, 1).is_err());
        assert!(perturb(&v, 0.0, 1).is_err());
    }

    #[test]
    fn interpolation_endpoints_are_exact() {
        let q1 = unit(array![0.3, 0.4, 0.5, 0.1]);
        let q2 = unit(array![0.1, -0.2, 0.9, 0.3]);
        for method in [InterpolationMethod::Slerp, InterpolationMethod::LerpRenorm] {
            let path = interpolation_path(&q1, &q2, 6, method).unwrap();
            assert_eq!(path.len(), 6);
            assert_eq!(path[0], q1);
            assert_eq!(path[5], q2);
        }
        assert!(interpolation_path(&q1, &q2, 1, InterpolationMethod::Slerp).is_err());
    }
}
