//! Basic operations on random unit vectors: geodesic distance, slerp
//! against renormalized lerp, spherical means, arithmetic and perturbation.

use latentwalk::sphere::{
    geodesic_distance, interpolation_path, latent_arithmetic, linear_mean_norm, perturb, slerp, spherical_mean,
    InterpolationMethod,
};
use latentwalk::LatentVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> latentwalk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = LatentVector::random(128, &mut rng);
    let b = LatentVector::random(128, &mut rng);
    let theta = geodesic_distance(&a, &b)?;
    println!("angle between a and b: {theta:.4} rad");

    let slerped = interpolation_path(&a, &b, 9, InterpolationMethod::Slerp)?;
    let lerped = interpolation_path(&a, &b, 9, InterpolationMethod::LerpRenorm)?;
    println!("t      slerp arc   lerp arc");
    for (k, (s, l)) in slerped.iter().zip(&lerped).enumerate() {
        println!(
            "{:.3}  {:.4}      {:.4}",
            k as f64 / 8.0,
            geodesic_distance(&a, s)?,
            geodesic_distance(&a, l)?
        );
    }

    let mid = slerp(&a, &b, 0.5)?;
    let mean = spherical_mean(&[a.clone(), b.clone()])?;
    println!("mean of two vs midpoint: {:.2e} rad", geodesic_distance(&mid, &mean)?);

    let many: Vec<LatentVector> = (0..64).map(|_| LatentVector::random(128, &mut rng)).collect();
    println!(
        "64 points: Euclidean mean norm {:.4}, spherical mean norm {:.4}",
        linear_mean_norm(&many)?,
        spherical_mean(&many)?.norm()
    );

    let c = LatentVector::random(128, &mut rng);
    let edited = latent_arithmetic(&a, &b, &c)?;
    println!("a - b + c lies {:.4} rad from c", geodesic_distance(&edited, &c)?);
    let nearby = perturb(&a, 0.05, 3)?;
    println!(
        "perturbed a by sigma 0.05: {:.4} rad away",
        geodesic_distance(&a, &nearby)?
    );
    Ok(())
}
