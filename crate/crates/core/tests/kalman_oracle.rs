//! Dense-oracle check of the random-walk smoother: build the exact joint
//! Gaussian over all 49 bin states (diffuse start, random-walk couplings,
//! per-bin observations), invert its precision directly, and compare the
//! recursive filter/smoother output — means, marginal covariances, and the
//! cross-bin covariances behind the trend statistic.

use hothand::model23::{
    kalman_smooth, trend_stat, DisplacementEstimate, DisplacementIndex, ProcessNoise, N_BINS,
    N_STRATA,
};
use hothand::numerics::mahalanobis_squared2;
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

fn pseudo_grid() -> Vec<DisplacementEstimate> {
    let mut grid = Vec::new();
    for stratum in 1..=N_STRATA {
        for bin in 1..=N_BINS {
            let t = bin as f64 + 7.0 * stratum as f64;
            let delta = [0.3 * (0.23 * t).sin(), 0.2 * (0.31 * t).cos()];
            let v1 = 0.015 + 0.01 * ((bin % 6) as f64);
            let v2 = 0.02 + 0.008 * ((bin % 4) as f64);
            let c = 0.3 * (v1 * v2).sqrt();
            grid.push(DisplacementEstimate {
                index: DisplacementIndex::TimeBin { stratum, bin },
                delta,
                cov: [[v1, c], [c, v2]],
                n_trips: 30,
            });
        }
    }
    grid
}

/// Exact posterior of the joint state given the observations: flat prior on
/// the first state, N(0, Q) increments, observation noise R_b per bin.
fn dense_posterior(
    obs: &[(Vector2<f64>, Matrix2<f64>)],
    q: &Matrix2<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = obs.len();
    let dim = 2 * n;
    let mut precision = DMatrix::<f64>::zeros(dim, dim);
    let mut info = DVector::<f64>::zeros(dim);

    let add_block = |m: &mut DMatrix<f64>, bi: usize, bj: usize, block: &Matrix2<f64>| {
        for r in 0..2 {
            for c in 0..2 {
                m[(2 * bi + r, 2 * bj + c)] += block[(r, c)];
            }
        }
    };

    let q_inv = q.try_inverse().unwrap();
    for b in 0..n - 1 {
        add_block(&mut precision, b, b, &q_inv);
        add_block(&mut precision, b + 1, b + 1, &q_inv);
        add_block(&mut precision, b, b + 1, &(-q_inv));
        add_block(&mut precision, b + 1, b, &(-q_inv));
    }
    for (b, (y, r)) in obs.iter().enumerate() {
        let r_inv = r.try_inverse().unwrap();
        add_block(&mut precision, b, b, &r_inv);
        let contrib = r_inv * y;
        info[2 * b] += contrib.x;
        info[2 * b + 1] += contrib.y;
    }

    let cov = precision.try_inverse().expect("posterior precision is PD");
    let mean = &cov * info;
    (mean, cov)
}

#[test]
fn smoother_matches_dense_joint_posterior() {
    let grid = pseudo_grid();
    let q = Matrix2::new(0.004, 0.001, 0.001, 0.005);
    let series = kalman_smooth(&grid, ProcessNoise::Fixed(q)).unwrap();

    for stratum in 1..=N_STRATA {
        let obs: Vec<(Vector2<f64>, Matrix2<f64>)> = grid
            .iter()
            .filter(|e| {
                matches!(e.index, DisplacementIndex::TimeBin { stratum: s, .. } if s == stratum)
            })
            .map(|e| (e.delta_vec(), e.cov_mat()))
            .collect();
        let (mean, cov) = dense_posterior(&obs, &q);

        for bin in 1..=N_BINS {
            let e = series.entry(stratum, bin).unwrap();
            let b = bin as usize - 1;
            for k in 0..2 {
                let exact = mean[2 * b + k];
                assert!(
                    (e.delta[k] - exact).abs() < 1e-9,
                    "stratum {stratum} bin {bin} coord {k}: {} vs dense {exact}",
                    e.delta[k]
                );
                for l in 0..2 {
                    let exact = cov[(2 * b + k, 2 * b + l)];
                    assert!(
                        (e.cov[k][l] - exact).abs() < 1e-9,
                        "stratum {stratum} bin {bin} cov[{k}{l}]: {} vs dense {exact}",
                        e.cov[k][l]
                    );
                }
            }
        }

        // Cross-bin covariances, including the non-adjacent ones the trend
        // statistic depends on.
        for (b0, b1) in [(1u8, 2u8), (5, 13), (1, 49), (27, 49)] {
            let cross = series.cross_covariance(stratum, b0, b1).unwrap();
            let (i, j) = (b0 as usize - 1, b1 as usize - 1);
            for k in 0..2 {
                for l in 0..2 {
                    let exact = cov[(2 * i + k, 2 * j + l)];
                    assert!(
                        (cross[(k, l)] - exact).abs() < 1e-9,
                        "cross({b0},{b1})[{k}{l}]: {} vs dense {exact}",
                        cross[(k, l)]
                    );
                }
            }
        }

        // Trend statistic against the dense difference covariance.
        for (b0, b1) in [(5u8, 13u8), (13, 27), (27, 49)] {
            let (i, j) = (b0 as usize - 1, b1 as usize - 1);
            let diff = Vector2::new(
                mean[2 * j] - mean[2 * i],
                mean[2 * j + 1] - mean[2 * i + 1],
            );
            let mut var = Matrix2::zeros();
            for k in 0..2 {
                for l in 0..2 {
                    var[(k, l)] = cov[(2 * i + k, 2 * i + l)] + cov[(2 * j + k, 2 * j + l)]
                        - cov[(2 * i + k, 2 * j + l)]
                        - cov[(2 * j + k, 2 * i + l)];
                }
            }
            let exact = mahalanobis_squared2(&diff, &var).unwrap().sqrt();
            let got = trend_stat(&series, stratum, b0, b1).unwrap();
            assert!(
                (got - exact).abs() < 1e-7 * (1.0 + exact),
                "trend({b0},{b1}): {got} vs dense {exact}"
            );
        }
    }
}
