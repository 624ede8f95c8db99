use hothand::numerics::Profile;
use nalgebra::{Matrix2, Vector2};
use rand::Rng;

/// Random profile with |mu| <= 3 per coordinate and covariance eigenvalues
/// in [0, 2] at a random orientation.
pub fn random_profile(rng: &mut impl Rng) -> Profile {
    let mu = Vector2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let l1: f64 = rng.gen_range(0.0..2.0);
    let l2: f64 = rng.gen_range(0.0..2.0);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (s, c) = theta.sin_cos();
    let rot = Matrix2::new(c, -s, s, c);
    let sigma = rot * Matrix2::new(l1, 0.0, 0.0, l2) * rot.transpose();
    // Symmetrize away rounding from the rotation product.
    let sym = 0.5 * (sigma + sigma.transpose());
    Profile::new(mu, sym).expect("constructed covariance is PSD")
}

pub const TWO_SHOT_OUTCOMES: [[bool; 2]; 4] =
    [[false, false], [false, true], [true, false], [true, true]];
