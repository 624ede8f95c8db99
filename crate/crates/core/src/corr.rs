//! Per-player serial-correlation statistics over two-shot trips and their
//! expectations under a fitted mixture.
//!
//! Three statistics per player: the unbiased covariance estimator of the two
//! shot probabilities, its normalized (correlation) form, and the conditional
//! difference of second-shot success given the first outcome. Summaries are
//! either uniformly weighted or information weighted (reciprocal variance).
//! A player enters summaries only when all four outcome cells of their
//! two-shot trips are occupied, which keeps every denominator positive;
//! individual statistics are still reported whenever their own denominators
//! allow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PlayerTrips;
use crate::model1::Mixture;
use crate::numerics::{ProfileGrid, QuadratureRule};

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("no eligible players")]
    NoEligiblePlayers,
    #[error("information weighting needs positive variance estimates")]
    NonPositiveVariance,
}

/// Serial-correlation statistics for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerCorrStats {
    pub player_id: String,
    /// Trips with at least two shots.
    pub n2: usize,
    /// All four outcome cells occupied; gates summary membership.
    pub eligible: bool,
    /// Unbiased covariance estimator of the two shot outcomes.
    pub r_hat: Option<f64>,
    /// Normalized serial correlation.
    pub r: Option<f64>,
    /// P(hit 2nd | hit 1st) - P(hit 2nd | miss 1st).
    pub cd: Option<f64>,
    pub var_r_hat: Option<f64>,
    pub var_r: Option<f64>,
    pub var_cd: Option<f64>,
}

/// Compute the statistics from a player's two-shot trips (first two shots of
/// longer trips included).
pub fn player_corr_stats(player: &PlayerTrips) -> PlayerCorrStats {
    let mut mm = 0u64;
    let mut mh = 0u64;
    let mut hm = 0u64;
    let mut hh = 0u64;
    for trip in player.trips.iter().filter(|t| t.n_shots() >= 2) {
        match (trip.outcomes[0], trip.outcomes[1]) {
            (false, false) => mm += 1,
            (false, true) => mh += 1,
            (true, false) => hm += 1,
            (true, true) => hh += 1,
        }
    }
    let n2 = (mm + mh + hm + hh) as usize;
    let eligible = mm > 0 && mh > 0 && hm > 0 && hh > 0;

    let mut stats = PlayerCorrStats {
        player_id: player.player_id.clone(),
        n2,
        eligible,
        r_hat: None,
        r: None,
        cd: None,
        var_r_hat: None,
        var_r: None,
        var_cd: None,
    };
    if n2 == 0 {
        return stats;
    }

    let n = n2 as f64;
    let ybar1 = (hm + hh) as f64 / n;
    let ybar2 = (mh + hh) as f64 / n;
    // Centered cross-product sum; for binary outcomes sum(y1 y2) = hh.
    let cross = hh as f64 - n * ybar1 * ybar2;

    if n2 >= 2 {
        stats.r_hat = Some(cross / (n - 1.0));
        stats.var_r_hat = Some(ybar1 * (1.0 - ybar1) * ybar2 * (1.0 - ybar2) / n);
        // Sample standard deviations of binary outcomes.
        let s1 = (n * ybar1 * (1.0 - ybar1) / (n - 1.0)).sqrt();
        let s2 = (n * ybar2 * (1.0 - ybar2) / (n - 1.0)).sqrt();
        if s1 > 0.0 && s2 > 0.0 {
            stats.r = Some(cross / (n * s1 * s2));
            stats.var_r = Some(1.0 / n);
        }
    }

    let n_miss1 = mm + mh;
    let n_hit1 = hm + hh;
    if n_miss1 > 0 && n_hit1 > 0 {
        stats.cd = Some(hh as f64 / n_hit1 as f64 - mh as f64 / n_miss1 as f64);
        stats.var_cd = Some(ybar2 * (1.0 - ybar2) * (1.0 / n_miss1 as f64 + 1.0 / n_hit1 as f64));
    }
    stats
}

/// Expected values of the statistics under a mixture.
///
/// The conditional difference is reported in two forms: `cd` divides the
/// probability covariance by the expected first-shot rate (the printed
/// approximation), `cd_delta` by that rate times its complement, which is
/// the exact large-sample limit of the statistic; simulated averages
/// converge to the latter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureCorrExpectations {
    pub r_hat: f64,
    pub r: f64,
    pub cd: f64,
    pub cd_delta: f64,
}

pub fn expected_under_mixture(mixture: &Mixture, rule: &QuadratureRule) -> MixtureCorrExpectations {
    let mut out = MixtureCorrExpectations {
        r_hat: 0.0,
        r: 0.0,
        cd: 0.0,
        cd_delta: 0.0,
    };
    for comp in mixture.components() {
        let grid = ProfileGrid::new(&comp.profile, rule);
        let (p1, p2) = grid.expected_probs(nalgebra::Vector2::zeros());
        let cov = grid.prob_covariance(nalgebra::Vector2::zeros());
        let w = comp.weight;
        out.r_hat += w * cov;
        let denom = (p1 * (1.0 - p1) * p2 * (1.0 - p2)).sqrt();
        if denom > 0.0 {
            out.r += w * cov / denom;
        }
        if p1 > 0.0 {
            out.cd += w * cov / p1;
        }
        let q = p1 * (1.0 - p1);
        if q > 0.0 {
            out.cd_delta += w * cov / q;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrStatKind {
    RHat,
    R,
    Cd,
}

impl CorrStatKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::RHat => "R_hat",
            Self::R => "R",
            Self::Cd => "CD",
        }
    }

    fn value(&self, s: &PlayerCorrStats) -> Option<f64> {
        match self {
            Self::RHat => s.r_hat,
            Self::R => s.r,
            Self::Cd => s.cd,
        }
    }

    fn variance(&self, s: &PlayerCorrStats) -> Option<f64> {
        match self {
            Self::RHat => s.var_r_hat,
            Self::R => s.var_r,
            Self::Cd => s.var_cd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    /// Weights are reciprocal estimated variances.
    Information,
}

/// Summary of one statistic over the eligible players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrSummary {
    pub n_players: usize,
    pub average: f64,
    /// Absent for a single player under uniform weighting.
    pub std_err: Option<f64>,
    pub z: Option<f64>,
}

/// Average one statistic over eligible players, uniformly or by information
/// weighting.
pub fn weighted_summary(
    stats: &[PlayerCorrStats],
    kind: CorrStatKind,
    weighting: Weighting,
) -> Result<CorrSummary, CorrError> {
    let selected: Vec<(f64, f64)> = stats
        .iter()
        .filter(|s| s.eligible)
        .filter_map(|s| Some((kind.value(s)?, kind.variance(s)?)))
        .collect();
    if selected.is_empty() {
        return Err(CorrError::NoEligiblePlayers);
    }
    let n = selected.len() as f64;
    match weighting {
        Weighting::Uniform => {
            let average = selected.iter().map(|(x, _)| x).sum::<f64>() / n;
            let std_err = if selected.len() > 1 {
                let var = selected
                    .iter()
                    .map(|(x, _)| (x - average) * (x - average))
                    .sum::<f64>()
                    / (n - 1.0);
                Some((var / n).sqrt())
            } else {
                None
            };
            let z = match std_err {
                Some(se) if se > 0.0 => Some(average / se),
                _ => None,
            };
            Ok(CorrSummary {
                n_players: selected.len(),
                average,
                std_err,
                z,
            })
        }
        Weighting::Information => {
            if selected.iter().any(|(_, v)| *v <= 0.0) {
                return Err(CorrError::NonPositiveVariance);
            }
            let total_w: f64 = selected.iter().map(|(_, v)| 1.0 / v).sum();
            let average = selected.iter().map(|(x, v)| x / v).sum::<f64>() / total_w;
            let std_err = total_w.powf(-0.5);
            Ok(CorrSummary {
                n_players: selected.len(),
                average,
                std_err: Some(std_err),
                z: Some(average / std_err),
            })
        }
    }
}
