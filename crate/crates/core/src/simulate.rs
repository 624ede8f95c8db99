//! Seeded synthetic trip generation and Monte-Carlo oracles.
//!
//! Generation is deterministic: player p draws from substream p+1 of a
//! counter-based generator keyed by the schedule seed (stream 0 is reserved
//! for global draws such as prior-sampled displacements), so output is
//! byte-identical across runs and independent of any parallel scheduling.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::ingest::{IngestError, Trip, TripTable, REGULATION_SECONDS};
use crate::model1::Mixture;
use crate::numerics::{logistic, psd_axes, NumericsError, Profile};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("Monte-Carlo oracle needs at least 1000 draws, got {0}")]
    TooFewDraws(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// A count drawn per trip or per game: fixed, or categorical over values.
#[derive(Debug, Clone)]
pub enum CountDist {
    Fixed(u32),
    /// `(value, probability)` pairs; probabilities must sum to 1.
    Categorical(Vec<(u32, f64)>),
}

impl CountDist {
    fn validate(&self, what: &str, max: Option<u32>) -> Result<(), SimError> {
        let check = |v: u32| -> Result<(), SimError> {
            if v == 0 {
                return Err(SimError::InvalidSchedule(format!("{what} must be >= 1")));
            }
            if let Some(m) = max {
                if v > m {
                    return Err(SimError::InvalidSchedule(format!(
                        "{what} must be <= {m}, got {v}"
                    )));
                }
            }
            Ok(())
        };
        match self {
            Self::Fixed(v) => check(*v),
            Self::Categorical(pairs) => {
                if pairs.is_empty() {
                    return Err(SimError::InvalidSchedule(format!("{what} has no support")));
                }
                let mut total = 0.0;
                for (v, p) in pairs {
                    check(*v)?;
                    if !(0.0..=1.0).contains(p) {
                        return Err(SimError::InvalidSchedule(format!(
                            "{what} probability {p} out of range"
                        )));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(SimError::InvalidSchedule(format!(
                        "{what} probabilities sum to {total}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        match self {
            Self::Fixed(v) => *v,
            Self::Categorical(pairs) => {
                let mut u: f64 = rng.gen();
                for (v, p) in pairs {
                    u -= p;
                    if u <= 0.0 {
                        return *v;
                    }
                }
                pairs.last().expect("non-empty support").0
            }
        }
    }
}

/// How many players, games, trips, and shots to generate.
#[derive(Debug, Clone)]
pub struct ScheduleSpec {
    pub players: usize,
    pub games_per_player: usize,
    pub trips_per_game: CountDist,
    pub shots_per_trip: CountDist,
    pub seed: u64,
    /// Probability that a trip lands in overtime instead of regulation.
    pub overtime_prob: f64,
}

impl ScheduleSpec {
    /// Fixed trips-per-game and two-shot trips; the workhorse for recovery
    /// experiments.
    pub fn fixed(players: usize, games_per_player: usize, trips_per_game: u32, seed: u64) -> Self {
        Self {
            players,
            games_per_player,
            trips_per_game: CountDist::Fixed(trips_per_game),
            shots_per_trip: CountDist::Fixed(2),
            seed,
            overtime_prob: 0.0,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.players == 0 || self.games_per_player == 0 {
            return Err(SimError::InvalidSchedule(
                "players and games_per_player must be >= 1".into(),
            ));
        }
        // Trip times are distinct integer seconds, so a game can only hold
        // so many trips before the rejection loop cannot terminate.
        self.trips_per_game.validate("trips_per_game", Some(480))?;
        self.shots_per_trip.validate("shots_per_trip", Some(3))?;
        if !(0.0..=1.0).contains(&self.overtime_prob) {
            return Err(SimError::InvalidSchedule(format!(
                "overtime_prob {} out of range",
                self.overtime_prob
            )));
        }
        Ok(())
    }
}

/// Per-time-bin displacement table for the two trip-index strata
/// (first trip of a game vs. later trips), bins 1..=49.
#[derive(Debug, Clone)]
pub struct TimeProfile {
    pub delta: [[Vector2<f64>; 49]; 2],
}

impl Default for TimeProfile {
    fn default() -> Self {
        Self {
            delta: [[Vector2::zeros(); 49]; 2],
        }
    }
}

/// Additive logit-space displacement applied to each trip's latent log-odds.
#[derive(Debug, Clone, Default)]
pub enum DisplacementSpec {
    #[default]
    None,
    /// Known displacement per intra-game trip index (1-based; trips beyond
    /// the end reuse the last entry).
    PerTripIndex(Vec<Vector2<f64>>),
    /// One displacement per trip index drawn up front from N(0, sigma_delta).
    DrawnPerTripIndex {
        sigma_delta: Matrix2<f64>,
        h_max: usize,
    },
    /// Displacement by (min(trip index, 2), minute bin).
    PerTimeBin(Box<TimeProfile>),
}

/// Generate a synthetic trip table: each player draws one mixture component
/// for their whole schedule, each trip draws fresh latent log-odds, optional
/// displacements shift the log-odds, and outcomes are Bernoulli through the
/// logistic. Trips of three shots reuse the second coordinate for the third
/// shot (the latent state is two-dimensional).
pub fn gen_dataset(
    mixture: &Mixture,
    displacement: &DisplacementSpec,
    schedule: &ScheduleSpec,
) -> Result<TripTable, SimError> {
    schedule.validate()?;

    let components: Vec<(f64, Vector2<f64>, [Vector2<f64>; 2])> = mixture
        .components()
        .iter()
        .map(|c| {
            let sigma = c.profile.sigma();
            (c.weight, c.profile.mu(), psd_axes(&sigma))
        })
        .collect();

    // Global draws come from stream 0.
    let drawn_deltas: Vec<Vector2<f64>> = match displacement {
        DisplacementSpec::DrawnPerTripIndex { sigma_delta, h_max } => {
            if *h_max == 0 {
                return Err(SimError::InvalidSchedule("h_max must be >= 1".into()));
            }
            let axes = psd_axes(sigma_delta);
            let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
            rng.set_stream(0);
            (0..*h_max)
                .map(|_| {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    axes[0] * z1 + axes[1] * z2
                })
                .collect()
        }
        _ => Vec::new(),
    };

    let delta_for = |h: u32, elapsed: f64| -> Vector2<f64> {
        match displacement {
            DisplacementSpec::None => Vector2::zeros(),
            DisplacementSpec::PerTripIndex(deltas) => {
                let idx = (h as usize).min(deltas.len());
                deltas[idx - 1]
            }
            DisplacementSpec::DrawnPerTripIndex { .. } => {
                let idx = (h as usize).min(drawn_deltas.len());
                drawn_deltas[idx - 1]
            }
            DisplacementSpec::PerTimeBin(profile) => {
                let stratum = (h.min(2) - 1) as usize;
                let bin = crate::model23::bin_index(elapsed).expect("non-negative time");
                profile.delta[stratum][bin as usize - 1]
            }
        }
    };

    let mut trips = Vec::new();
    for player_idx in 0..schedule.players {
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
        rng.set_stream(player_idx as u64 + 1);
        let player_id = format!("p{:05}", player_idx + 1);

        // Component draw for the player's whole career.
        let mut u: f64 = rng.gen();
        let mut chosen = components.len() - 1;
        for (i, (w, _, _)) in components.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                chosen = i;
                break;
            }
        }
        let (_, mu, axes) = &components[chosen];

        for game_idx in 0..schedule.games_per_player {
            let game_id = format!("g{:05}-{:04}", player_idx + 1, game_idx + 1);
            let n_trips = schedule.trips_per_game.sample(&mut rng);
            // Redraw until the game's trip seconds are distinct; equal times
            // would collide in the event file's (player, game, time, shot) key.
            let times: Vec<u32> = loop {
                let mut draw: Vec<u32> = (0..n_trips)
                    .map(|_| {
                        if schedule.overtime_prob > 0.0 && rng.gen::<f64>() < schedule.overtime_prob
                        {
                            rng.gen_range(
                                REGULATION_SECONDS as u32..REGULATION_SECONDS as u32 + 300,
                            )
                        } else {
                            rng.gen_range(0..REGULATION_SECONDS as u32)
                        }
                    })
                    .collect();
                draw.sort_unstable();
                if draw.windows(2).all(|w| w[0] != w[1]) {
                    break draw;
                }
            };

            for (i, t) in times.iter().enumerate() {
                let h = i as u32 + 1;
                let elapsed = *t as f64;
                let n_shots = schedule.shots_per_trip.sample(&mut rng);
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let x = mu + axes[0] * z1 + axes[1] * z2 + delta_for(h, elapsed);
                let outcomes: Vec<bool> = (0..n_shots)
                    .map(|k| {
                        let logits = if k == 0 { x.x } else { x.y };
                        rng.gen::<f64>() < logistic(logits)
                    })
                    .collect();
                trips.push(Trip {
                    player_id: player_id.clone(),
                    game_id: game_id.clone(),
                    outcomes,
                    intra_game_index: h,
                    elapsed_seconds: elapsed,
                });
            }
        }
    }
    Ok(TripTable::from_trips(trips)?)
}

/// Monte-Carlo estimate of a trip likelihood with its standard error;
/// the independent oracle for the quadrature path.
pub fn mc_trip_likelihood(
    outcomes: &[bool],
    profile: &Profile,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64), SimError> {
    if outcomes.is_empty() {
        return Err(SimError::Numerics(NumericsError::EmptyOutcomes));
    }
    if draws < 1000 {
        return Err(SimError::TooFewDraws(draws));
    }
    let mu = profile.mu();
    let sigma = profile.sigma();
    let axes = psd_axes(&sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..draws {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let x = mu + axes[0] * z1 + axes[1] * z2;
        let mut lik = 1.0;
        for (k, &y) in outcomes.iter().take(2).enumerate() {
            let logits = if k == 0 { x.x } else { x.y };
            lik *= if y {
                logistic(logits)
            } else {
                logistic(-logits)
            };
        }
        let delta = lik - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (lik - mean);
    }
    let var = m2 / (draws as f64 - 1.0);
    Ok((mean, (var / draws as f64).sqrt()))
}

/// Monte-Carlo conditional oracle with batch-based standard errors.
#[derive(Debug, Clone, Copy)]
pub struct McConditional {
    pub e1: f64,
    pub e2: f64,
    pub se1: f64,
    pub se2: f64,
}

/// Estimate `E[f(X_k) | Y1 = y1]` for a fresh trip by importance weighting
/// the first-shot likelihood (no outcome resampling). Standard errors come
/// from 16 independent batches.
pub fn mc_conditional_fresh(
    profile: &Profile,
    first_hit: bool,
    draws: usize,
    seed: u64,
) -> Result<McConditional, SimError> {
    if draws < 1000 {
        return Err(SimError::TooFewDraws(draws));
    }
    let mu = profile.mu();
    let sigma = profile.sigma();
    let axes = psd_axes(&sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    const BATCHES: usize = 16;
    let per_batch = draws / BATCHES;
    let mut ratios1 = Vec::with_capacity(BATCHES);
    let mut ratios2 = Vec::with_capacity(BATCHES);
    for _ in 0..BATCHES {
        let mut denom = 0.0;
        let mut num1 = 0.0;
        let mut num2 = 0.0;
        for _ in 0..per_batch {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let x = mu + axes[0] * z1 + axes[1] * z2;
            let f1 = logistic(x.x);
            let f2 = logistic(x.y);
            let w = if first_hit { f1 } else { 1.0 - f1 };
            denom += w;
            num1 += w * f1;
            num2 += w * f2;
        }
        ratios1.push(num1 / denom);
        ratios2.push(num2 / denom);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let se = |v: &[f64]| {
        let m = mean(v);
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0);
        (var / v.len() as f64).sqrt()
    };
    Ok(McConditional {
        e1: mean(&ratios1),
        e2: mean(&ratios2),
        se1: se(&ratios1),
        se2: se(&ratios2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model1::MixtureComponent;

    fn point_mixture(p1: f64, p2: f64) -> Mixture {
        Mixture::new(vec![MixtureComponent {
            weight: 1.0,
            profile: Profile::from_probs(p1, p2).unwrap(),
        }])
        .unwrap()
    }

    #[test]
    fn same_seed_same_bytes() {
        let mixture = point_mixture(0.7, 0.8);
        let schedule = ScheduleSpec::fixed(5, 4, 3, 99);
        let a = gen_dataset(&mixture, &DisplacementSpec::None, &schedule).unwrap();
        let b = gen_dataset(&mixture, &DisplacementSpec::None, &schedule).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn generated_data_survives_round_trip() {
        let mixture = point_mixture(0.6, 0.75);
        let schedule = ScheduleSpec {
            players: 4,
            games_per_player: 3,
            trips_per_game: CountDist::Categorical(vec![(1, 0.3), (2, 0.5), (3, 0.2)]),
            shots_per_trip: CountDist::Categorical(vec![(1, 0.2), (2, 0.75), (3, 0.05)]),
            seed: 5,
            overtime_prob: 0.1,
        };
        let table = gen_dataset(&mixture, &DisplacementSpec::None, &schedule).unwrap();
        let csv = table.to_csv_string();
        let back = TripTable::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn extreme_mixture_all_hits() {
        // Large positive log-odds: logistic saturates at 1.
        let mixture = Mixture::new(vec![MixtureComponent {
            weight: 1.0,
            profile: Profile::point_mass(40.0, 40.0),
        }])
        .unwrap();
        let schedule = ScheduleSpec::fixed(3, 5, 2, 1);
        let table = gen_dataset(&mixture, &DisplacementSpec::None, &schedule).unwrap();
        assert!(table.iter_trips().all(|t| t.outcomes.iter().all(|&y| y)));
    }

    #[test]
    fn empirical_rate_matches_point_mass() {
        let mixture = point_mixture(0.75, 0.80);
        let schedule = ScheduleSpec::fixed(20, 250, 2, 42); // 10k trips
        let table = gen_dataset(&mixture, &DisplacementSpec::None, &schedule).unwrap();
        let n = table.total_trips() as f64;
        let h1: u32 = table.iter_trips().map(|t| u32::from(t.outcomes[0])).sum();
        let p_hat = h1 as f64 / n;
        let se = (0.75 * 0.25 / n).sqrt();
        assert!(
            (p_hat - 0.75).abs() < 3.0 * se,
            "p_hat {p_hat} vs 0.75 +- {}",
            3.0 * se
        );
    }

    #[test]
    fn mc_point_mass_is_exact() {
        let p = Profile::point_mass(0.0, 0.0);
        let (est, se) = mc_trip_likelihood(&[true, true], &p, 2000, 3).unwrap();
        assert_eq!(est, 0.25);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn mc_needs_enough_draws() {
        let p = Profile::point_mass(0.0, 0.0);
        assert!(matches!(
            mc_trip_likelihood(&[true], &p, 10, 3),
            Err(SimError::TooFewDraws(10))
        ));
    }

    #[test]
    fn mc_se_shrinks_with_draws() {
        let p = Profile::new(Vector2::new(0.5, 0.6), Matrix2::new(0.6, 0.2, 0.2, 0.5)).unwrap();
        let (_, se_small) = mc_trip_likelihood(&[true, false], &p, 20_000, 9).unwrap();
        let (_, se_big) = mc_trip_likelihood(&[true, false], &p, 80_000, 9).unwrap();
        let ratio = se_small / se_big;
        assert!((ratio - 2.0).abs() < 0.25, "ratio {ratio}");
    }

    #[test]
    fn schedule_validation() {
        let mixture = point_mixture(0.7, 0.8);
        let mut schedule = ScheduleSpec::fixed(0, 1, 1, 0);
        assert!(gen_dataset(&mixture, &DisplacementSpec::None, &schedule).is_err());
        schedule = ScheduleSpec::fixed(1, 1, 1, 0);
        schedule.shots_per_trip = CountDist::Fixed(4);
        assert!(gen_dataset(&mixture, &DisplacementSpec::None, &schedule).is_err());
        schedule.shots_per_trip = CountDist::Categorical(vec![(1, 0.5), (2, 0.2)]);
        assert!(gen_dataset(&mixture, &DisplacementSpec::None, &schedule).is_err());
    }
}
