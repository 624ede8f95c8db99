//! Quadrature vs. Monte-Carlo oracle agreement. The acceptance suite runs the
//! full-scale version (100 profiles, 1e6 draws); these keep the same checks
//! at a faster scale plus the conditional-expectation oracle.

mod common;

use common::{random_profile, TWO_SHOT_OUTCOMES};
use hothand::numerics::{trip_likelihood, Profile, ProfileGrid, QuadratureRule};
use hothand::simulate::{mc_conditional_fresh, mc_trip_likelihood};
use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let rule = QuadratureRule::gauss_hermite(24).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..30 {
        let profile = random_profile(&mut rng);
        for (j, outcomes) in TWO_SHOT_OUTCOMES.iter().enumerate() {
            let quad = trip_likelihood(outcomes, &profile, &rule).unwrap();
            let (mc, se) =
                mc_trip_likelihood(outcomes, &profile, 100_000, 2000 + 4 * i + j as u64).unwrap();
            let tol = 3.0 * se.max(1e-12);
            assert!(
                (quad - mc).abs() <= tol,
                "profile {i} outcome {j}: quad {quad} vs mc {mc} +- {tol}"
            );
        }
    }
}

#[test]
fn doubling_quadrature_order_changes_nothing() {
    let low = QuadratureRule::gauss_hermite(24).unwrap();
    let high = QuadratureRule::gauss_hermite(48).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let profile = random_profile(&mut rng);
        for outcomes in &TWO_SHOT_OUTCOMES {
            let a = trip_likelihood(outcomes, &profile, &low).unwrap();
            let b = trip_likelihood(outcomes, &profile, &high).unwrap();
            worst = worst.max((a - b).abs());
        }
        // Single-shot marginals too.
        let a = trip_likelihood(&[true], &profile, &low).unwrap();
        let b = trip_likelihood(&[true], &profile, &high).unwrap();
        worst = worst.max((a - b).abs());
    }
    assert!(worst < 1e-8, "max 24-vs-48-node difference {worst}");
}

#[test]
fn degenerate_profiles_agree_with_monte_carlo() {
    let rule = QuadratureRule::gauss_hermite(24).unwrap();
    // Rank-1 (perfectly correlated) and rank-0 (point mass) covariances.
    let rank1 = Profile::new(
        Vector2::new(0.8, 1.1),
        Matrix2::new(0.6, 0.6, 0.6, 0.6),
    )
    .unwrap();
    let point = Profile::point_mass(0.4, -0.3);
    for (profile, seed) in [(&rank1, 41u64), (&point, 42u64)] {
        for (j, outcomes) in TWO_SHOT_OUTCOMES.iter().enumerate() {
            let quad = trip_likelihood(outcomes, profile, &rule).unwrap();
            let (mc, se) =
                mc_trip_likelihood(outcomes, profile, 200_000, seed * 10 + j as u64).unwrap();
            assert!(
                (quad - mc).abs() <= 3.0 * se.max(1e-12),
                "outcome {j}: quad {quad} vs mc {mc} (se {se})"
            );
        }
    }
}

#[test]
fn conditional_expectations_match_mc_oracle() {
    let rule = QuadratureRule::gauss_hermite(24).unwrap();
    let profile = Profile::new(Vector2::new(1.0, 1.2), Matrix2::new(0.5, 0.3, 0.3, 0.5)).unwrap();
    let grid = ProfileGrid::new(&profile, &rule);
    for (seed, first_hit) in [(5u64, true), (6u64, false)] {
        let (q1, q2) = grid.conditional_fresh(first_hit).unwrap();
        let mc = mc_conditional_fresh(&profile, first_hit, 400_000, seed).unwrap();
        assert!(
            (q1 - mc.e1).abs() <= 3.0 * mc.se1.max(1e-10),
            "first coord: {q1} vs {} +- {}",
            mc.e1,
            3.0 * mc.se1
        );
        assert!(
            (q2 - mc.e2).abs() <= 3.0 * mc.se2.max(1e-10),
            "second coord: {q2} vs {} +- {}",
            mc.e2,
            3.0 * mc.se2
        );
    }

    // Positive covariance: hitting the first shot raises the second's odds.
    let (_, hit2) = grid.conditional_fresh(true).unwrap();
    let (_, miss2) = grid.conditional_fresh(false).unwrap();
    assert!(hit2 > miss2);
}
