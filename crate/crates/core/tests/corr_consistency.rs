//! Statistical consistency of the per-player correlation statistics against
//! their mixture expectations.

use hothand::corr::{
    expected_under_mixture, player_corr_stats, weighted_summary, CorrStatKind, Weighting,
};
use hothand::model1::{Mixture, MixtureComponent};
use hothand::numerics::{Profile, QuadratureRule};
use hothand::simulate::{gen_dataset, DisplacementSpec, ScheduleSpec};
use nalgebra::{Matrix2, Vector2};

#[test]
fn independent_coin_flips_average_to_zero() {
    // 10^4 players of 24 two-shot trips each at p = 0.5 with no covariance.
    let mixture = Mixture::new(vec![MixtureComponent {
        weight: 1.0,
        profile: Profile::point_mass(0.0, 0.0),
    }])
    .unwrap();
    let schedule = ScheduleSpec::fixed(10_000, 12, 2, 1234);
    let table = gen_dataset(&mixture, &DisplacementSpec::None, &schedule).unwrap();

    let stats: Vec<_> = table.players().iter().map(player_corr_stats).collect();
    let summary = weighted_summary(&stats, CorrStatKind::RHat, Weighting::Uniform).unwrap();
    let se = summary.std_err.unwrap();
    assert!(
        summary.average.abs() < 3.0 * se,
        "mean R_hat {} vs 3 SE {}",
        summary.average,
        3.0 * se
    );
}

#[test]
fn uniform_averages_converge_to_mixture_expectations() {
    // Correlated components; moderate scale here, the full 10^3 x 10^3 run is
    // in the acceptance suite.
    let mixture = Mixture::new(vec![
        MixtureComponent {
            weight: 0.5,
            profile: Profile::new(Vector2::new(0.8, 1.0), Matrix2::new(0.35, 0.15, 0.15, 0.3))
                .unwrap(),
        },
        MixtureComponent {
            weight: 0.5,
            profile: Profile::new(Vector2::new(1.3, 1.4), Matrix2::new(0.25, 0.1, 0.1, 0.25))
                .unwrap(),
        },
    ])
    .unwrap();
    let rule = QuadratureRule::gauss_hermite(24).unwrap();
    let expected = expected_under_mixture(&mixture, &rule);

    let schedule = ScheduleSpec::fixed(400, 200, 2, 77); // 400 players x 400 trips
    let table = gen_dataset(&mixture, &DisplacementSpec::None, &schedule).unwrap();
    let stats: Vec<_> = table.players().iter().map(player_corr_stats).collect();
    assert!(stats.iter().all(|s| s.eligible));

    let check = |kind: CorrStatKind, target: f64| {
        let s = weighted_summary(&stats, kind, Weighting::Uniform).unwrap();
        let se = s.std_err.unwrap();
        assert!(
            (s.average - target).abs() < 3.0 * se,
            "{}: {} vs {} +- {}",
            kind.label(),
            s.average,
            target,
            3.0 * se
        );
    };
    check(CorrStatKind::RHat, expected.r_hat);
    check(CorrStatKind::R, expected.r);
    // The empirical conditional difference converges to the delta form.
    check(CorrStatKind::Cd, expected.cd_delta);
}

#[test]
fn information_weighting_tightens_the_standard_error() {
    let mixture = Mixture::new(vec![MixtureComponent {
        weight: 1.0,
        profile: Profile::new(Vector2::new(1.0, 1.1), Matrix2::new(0.3, 0.1, 0.1, 0.3)).unwrap(),
    }])
    .unwrap();
    // Unequal trip counts across players so the weightings differ.
    let small = gen_dataset(
        &mixture,
        &DisplacementSpec::None,
        &ScheduleSpec::fixed(150, 20, 2, 5),
    )
    .unwrap();
    let mut stats: Vec<_> = small.players().iter().map(player_corr_stats).collect();
    let big = gen_dataset(
        &mixture,
        &DisplacementSpec::None,
        &ScheduleSpec::fixed(50, 200, 2, 6),
    )
    .unwrap();
    stats.extend(big.players().iter().map(|p| {
        let mut s = player_corr_stats(p);
        s.player_id = format!("big-{}", s.player_id);
        s
    }));

    let uni = weighted_summary(&stats, CorrStatKind::Cd, Weighting::Uniform).unwrap();
    let info = weighted_summary(&stats, CorrStatKind::Cd, Weighting::Information).unwrap();
    assert!(info.std_err.unwrap() < uni.std_err.unwrap());
}
