//! Discrete mixture of bivariate logit-normal player profiles, fitted by
//! expectation-maximization with the player as the unit of analysis.
//!
//! Each player draws one profile from the mixture for their whole career;
//! trips are independent draws of the latent log-odds given that profile.
//! Only the first two shots of a trip enter the likelihood; single-shot trips
//! contribute the first coordinate's marginal.
//!
//! The E-step reduces every player to six pattern counts (hit/miss for
//! one-shot trips, the four two-shot cells), so its cost is independent of
//! trip counts. The M-step runs a bounded derivative-free ascent over
//! (mu, Sigma) with Sigma parameterized by a lower-triangular square root
//! whose diagonal is exponentiated and floored at exp(-20); the ascent never
//! returns a point worse than its start, which keeps the EM objective
//! non-decreasing.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PlayerTrips, Trip, TripTable};
use crate::numerics::{
    expected_probs, logit, NumericsError, PatternLikelihoods, Profile, ProfileGrid, QuadratureRule,
    DEFAULT_QUAD_ORDER,
};
use crate::optim::nelder_mead_max;
use crate::util::{kahan_sum, log_sum_exp};

/// Diagonal entries of the Cholesky factor are floored here (log scale), so
/// components can approach point masses while the parameterization stays smooth.
const LOG_DIAG_FLOOR: f64 = -20.0;
const LOG_DIAG_CAP: f64 = 5.0;
const MU_BOUND: f64 = 30.0;
const WEIGHT_COLLAPSE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum Model1Error {
    #[error("dataset has no players")]
    EmptyData,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("all component likelihoods are zero; posterior cannot be normalized")]
    AllZeroLikelihood,
    #[error("invalid alternative: {0}")]
    InvalidAlternative(String),
    #[error("power target not reached below the trip cap of {cap}")]
    PowerCapExceeded { cap: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One mixture component: a prior weight and a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub profile: Profile,
}

/// Discrete prior over profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    components: Vec<MixtureComponent>,
}

impl Mixture {
    /// Validate non-negative weights summing to 1 (within 1e-6) and
    /// renormalize them exactly.
    pub fn new(mut components: Vec<MixtureComponent>) -> Result<Self, Model1Error> {
        if components.is_empty() {
            return Err(Model1Error::InvalidConfig(
                "mixture has no components".into(),
            ));
        }
        if components
            .iter()
            .any(|c| c.weight.is_nan() || c.weight < 0.0)
        {
            return Err(Model1Error::InvalidConfig(
                "component weights must be non-negative".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Model1Error::InvalidConfig(format!(
                "component weights sum to {total}, expected 1"
            )));
        }
        for c in &mut components {
            c.weight /= total;
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }
}

/// Posterior probability that a player carries each mixture profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerPosterior {
    pub weights: Vec<f64>,
}

/// EM settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmConfig {
    pub n_components: usize,
    pub max_iterations: usize,
    /// Relative log-likelihood improvement below which EM stops.
    pub tolerance: f64,
    pub seed: u64,
    pub quadrature_order: usize,
    /// Ascent steps per component per M-step.
    pub inner_iterations: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            n_components: 8,
            max_iterations: 200,
            tolerance: 1e-7,
            seed: 0,
            quadrature_order: DEFAULT_QUAD_ORDER,
            inner_iterations: 50,
        }
    }
}

/// A fitted mixture with fit metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model1Fit {
    pub mixture: Mixture,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each E-step, in iteration order.
    pub ll_trace: Vec<f64>,
    pub dropped_components: usize,
}

/// Per-player sufficient statistics: trips reduced to outcome patterns.
/// `one[y]` counts single-shot trips, `two[y1][y2]` the first two shots of
/// longer trips.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct PatternCounts {
    pub one: [u64; 2],
    pub two: [[u64; 2]; 2],
}

impl PatternCounts {
    pub(crate) fn from_trips<'a>(trips: impl IntoIterator<Item = &'a Trip>) -> Self {
        let mut counts = Self::default();
        for trip in trips {
            match trip.outcomes.len() {
                0 => {}
                1 => counts.one[usize::from(trip.outcomes[0])] += 1,
                _ => counts.two[usize::from(trip.outcomes[0])][usize::from(trip.outcomes[1])] += 1,
            }
        }
        counts
    }

    fn is_empty(&self) -> bool {
        self.total() == 0
    }

    fn total(&self) -> u64 {
        self.one[0]
            + self.one[1]
            + self.two[0][0]
            + self.two[0][1]
            + self.two[1][0]
            + self.two[1][1]
    }

    /// Log-likelihood of these counts under the given pattern likelihoods.
    pub(crate) fn log_likelihood(&self, liks: &PatternLikelihoods) -> f64 {
        let ln = |p: f64| p.max(1e-300).ln();
        let mut total = 0.0;
        for y in 0..2 {
            if self.one[y] > 0 {
                total += self.one[y] as f64 * ln(liks.one[y]);
            }
        }
        for y1 in 0..2 {
            for y2 in 0..2 {
                if self.two[y1][y2] > 0 {
                    total += self.two[y1][y2] as f64 * ln(liks.two[y1][y2]);
                }
            }
        }
        total
    }
}

fn pattern_liks(mixture: &Mixture, rule: &QuadratureRule) -> Vec<PatternLikelihoods> {
    mixture
        .components()
        .iter()
        .map(|c| ProfileGrid::new(&c.profile, rule).pattern_likelihoods(Vector2::zeros()))
        .collect()
}

fn player_component_lls(counts: &PatternCounts, liks: &[PatternLikelihoods]) -> Vec<f64> {
    liks.iter().map(|l| counts.log_likelihood(l)).collect()
}

/// Total log-likelihood of the table under the mixture: players draw one
/// component for their career, trips are conditionally independent.
pub fn log_likelihood(
    table: &TripTable,
    mixture: &Mixture,
    rule: &QuadratureRule,
) -> Result<f64, Model1Error> {
    if table.n_players() == 0 {
        return Err(Model1Error::EmptyData);
    }
    let liks = pattern_liks(mixture, rule);
    let log_pi: Vec<f64> = mixture.components().iter().map(|c| c.weight.ln()).collect();
    let per_player: Vec<f64> = table
        .players()
        .par_iter()
        .map(|p| {
            let counts = PatternCounts::from_trips(&p.trips);
            let terms: Vec<f64> = player_component_lls(&counts, &liks)
                .iter()
                .zip(&log_pi)
                .map(|(ll, lp)| ll + lp)
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    Ok(kahan_sum(per_player))
}

/// Posterior component weights for one player's trips. With no trips the
/// posterior is the prior.
pub fn player_posterior(
    trips: &[Trip],
    mixture: &Mixture,
    rule: &QuadratureRule,
) -> Result<PlayerPosterior, Model1Error> {
    let counts = PatternCounts::from_trips(trips);
    let liks = pattern_liks(mixture, rule);
    let terms: Vec<f64> = player_component_lls(&counts, &liks)
        .iter()
        .zip(mixture.components())
        .map(|(ll, c)| ll + c.weight.ln())
        .collect();
    let norm = log_sum_exp(&terms);
    if !norm.is_finite() {
        return Err(Model1Error::AllZeroLikelihood);
    }
    Ok(PlayerPosterior {
        weights: terms.iter().map(|t| (t - norm).exp()).collect(),
    })
}

/// Expected success probabilities of a fresh trip's two shots given the
/// fresh trip's first outcome, averaged over the player's posterior.
///
/// The conditioning acts inside each component (through its covariance);
/// component weights stay at the player's posterior, so a diagonal-covariance
/// mixture shows exactly no conditional effect.
pub fn conditional_posterior(
    trips: &[Trip],
    mixture: &Mixture,
    rule: &QuadratureRule,
    first_outcome: bool,
) -> Result<(f64, f64), Model1Error> {
    let posterior = player_posterior(trips, mixture, rule)?;
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    for (w, comp) in posterior.weights.iter().zip(mixture.components()) {
        let grid = ProfileGrid::new(&comp.profile, rule);
        let (c1, c2) = grid.conditional_fresh(first_outcome)?;
        e1 += w * c1;
        e2 += w * c2;
    }
    Ok((e1, e2))
}

/// Fit the mixture by EM.
pub fn em_fit(table: &TripTable, config: &EmConfig) -> Result<Model1Fit, Model1Error> {
    if table.n_players() == 0 {
        return Err(Model1Error::EmptyData);
    }
    if config.n_components == 0 {
        return Err(Model1Error::InvalidConfig(
            "need at least one component".into(),
        ));
    }
    if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(Model1Error::InvalidConfig(
            "tolerance must be positive".into(),
        ));
    }
    let rule = QuadratureRule::gauss_hermite(config.quadrature_order)?;

    let counts: Vec<PatternCounts> = table
        .players()
        .par_iter()
        .map(|p| PatternCounts::from_trips(&p.trips))
        .collect();
    if counts.iter().any(PatternCounts::is_empty) {
        return Err(Model1Error::InvalidConfig(
            "every player needs at least one trip".into(),
        ));
    }

    let mut components = initial_components(table, config);
    let n_players = table.n_players() as f64;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut dropped = 0usize;

    loop {
        // E-step.
        let liks = pattern_liks_from(&components, &rule);
        let log_pi: Vec<f64> = components.iter().map(|c| c.weight.ln()).collect();
        let estep: Vec<(f64, Vec<f64>)> = counts
            .par_iter()
            .map(|c| {
                let terms: Vec<f64> = player_component_lls(c, &liks)
                    .iter()
                    .zip(&log_pi)
                    .map(|(ll, lp)| ll + lp)
                    .collect();
                let norm = log_sum_exp(&terms);
                let gamma: Vec<f64> = terms.iter().map(|t| (t - norm).exp()).collect();
                (norm, gamma)
            })
            .collect();
        let ll = kahan_sum(estep.iter().map(|(n, _)| *n));
        let improved = trace
            .last()
            .map(|prev| (ll - prev) / prev.abs().max(f64::MIN_POSITIVE))
            .unwrap_or(f64::INFINITY);
        trace.push(ll);
        if improved < config.tolerance {
            converged = true;
            break;
        }
        if trace.len() >= config.max_iterations {
            break;
        }

        // M-step: weights, dropping collapsed components.
        let m = components.len();
        let mut totals = vec![0.0f64; m];
        for (_, gamma) in &estep {
            for (t, g) in totals.iter_mut().zip(gamma) {
                *t += g;
            }
        }
        let mut keep: Vec<usize> = Vec::with_capacity(m);
        for (j, t) in totals.iter().enumerate() {
            if t / n_players >= WEIGHT_COLLAPSE {
                keep.push(j);
            } else {
                dropped += 1;
                log::warn!(
                    "dropping collapsed mixture component {j} (weight {:.3e})",
                    t / n_players
                );
            }
        }
        if keep.is_empty() {
            return Err(Model1Error::InvalidConfig(
                "all mixture components collapsed".into(),
            ));
        }
        let kept_total: f64 = keep.iter().map(|&j| totals[j]).sum();

        // M-step: responsibility-weighted pattern totals per kept component.
        let mut weighted: Vec<WeightedPatterns> = vec![WeightedPatterns::default(); keep.len()];
        for (c, (_, gamma)) in counts.iter().zip(&estep) {
            for (slot, &j) in weighted.iter_mut().zip(&keep) {
                slot.accumulate(c, gamma[j]);
            }
        }

        components = keep
            .par_iter()
            .zip(&weighted)
            .map(|(&j, w)| MixtureComponent {
                weight: totals[j] / kept_total,
                profile: maximize_profile(
                    &components[j].profile,
                    w,
                    &rule,
                    config.inner_iterations,
                ),
            })
            .collect();
    }

    let ll = *trace.last().expect("at least one EM iteration ran");
    Ok(Model1Fit {
        mixture: Mixture::new(components)?,
        log_likelihood: ll,
        iterations: trace.len(),
        converged,
        ll_trace: trace,
        dropped_components: dropped,
    })
}

fn pattern_liks_from(
    components: &[MixtureComponent],
    rule: &QuadratureRule,
) -> Vec<PatternLikelihoods> {
    components
        .iter()
        .map(|c| ProfileGrid::new(&c.profile, rule).pattern_likelihoods(Vector2::zeros()))
        .collect()
}

/// Responsibility-weighted pattern counts, the M-step sufficient statistics.
#[derive(Debug, Clone, Copy, Default)]
struct WeightedPatterns {
    one: [f64; 2],
    two: [[f64; 2]; 2],
}

impl WeightedPatterns {
    fn accumulate(&mut self, counts: &PatternCounts, gamma: f64) {
        for y in 0..2 {
            self.one[y] += gamma * counts.one[y] as f64;
        }
        for y1 in 0..2 {
            for y2 in 0..2 {
                self.two[y1][y2] += gamma * counts.two[y1][y2] as f64;
            }
        }
    }

    fn objective(&self, liks: &PatternLikelihoods) -> f64 {
        let ln = |p: f64| p.max(1e-300).ln();
        let mut total = 0.0;
        for y in 0..2 {
            total += self.one[y] * ln(liks.one[y]);
        }
        for y1 in 0..2 {
            for y2 in 0..2 {
                total += self.two[y1][y2] * ln(liks.two[y1][y2]);
            }
        }
        total
    }
}

/// (mu1, mu2, ln l11, l21, ln l22) for Sigma = L L' with L lower triangular.
fn profile_to_params(profile: &Profile) -> [f64; 5] {
    let mu = profile.mu();
    let s = profile.sigma();
    let l11 = s[(0, 0)].max(0.0).sqrt().max(LOG_DIAG_FLOOR.exp());
    let l21 = s[(0, 1)] / l11;
    let l22 = (s[(1, 1)] - l21 * l21)
        .max(0.0)
        .sqrt()
        .max(LOG_DIAG_FLOOR.exp());
    [mu.x, mu.y, l11.ln(), l21, l22.ln()]
}

fn params_to_profile(params: &[f64]) -> Profile {
    let mu1 = params[0].clamp(-MU_BOUND, MU_BOUND);
    let mu2 = params[1].clamp(-MU_BOUND, MU_BOUND);
    let l11 = params[2].clamp(LOG_DIAG_FLOOR, LOG_DIAG_CAP).exp();
    let l21 = params[3].clamp(-20.0, 20.0);
    let l22 = params[4].clamp(LOG_DIAG_FLOOR, LOG_DIAG_CAP).exp();
    let sigma = Matrix2::new(l11 * l11, l11 * l21, l11 * l21, l21 * l21 + l22 * l22);
    Profile::new(Vector2::new(mu1, mu2), sigma).expect("Cholesky parameterization is PSD")
}

fn maximize_profile(
    current: &Profile,
    weighted: &WeightedPatterns,
    rule: &QuadratureRule,
    inner_iterations: usize,
) -> Profile {
    let objective = |params: &[f64]| {
        let profile = params_to_profile(params);
        let liks = ProfileGrid::new(&profile, rule).pattern_likelihoods(Vector2::zeros());
        weighted.objective(&liks)
    };
    let start = profile_to_params(current);
    let (best, _) = nelder_mead_max(objective, &start, 0.1, inner_iterations);
    params_to_profile(&best)
}

/// Smoothed per-player empirical logits clustered into the initial components.
fn initial_components(table: &TripTable, config: &EmConfig) -> Vec<MixtureComponent> {
    let points: Vec<(f64, f64)> = table.players().iter().map(empirical_logits).collect();
    let (centers, assignment) = kmeans(&points, config.n_components, config.seed);
    let mut sizes = vec![0usize; centers.len()];
    for &a in &assignment {
        sizes[a] += 1;
    }
    let total: usize = sizes.iter().sum();
    let sigma = Matrix2::new(0.25, 0.0, 0.0, 0.25);
    centers
        .iter()
        .zip(&sizes)
        .filter(|(_, &size)| size > 0)
        .map(|(c, &size)| MixtureComponent {
            weight: size as f64 / total as f64,
            profile: Profile::new(Vector2::new(c.0, c.1), sigma)
                .expect("initial covariance is PSD"),
        })
        .collect()
}

fn empirical_logits(player: &PlayerTrips) -> (f64, f64) {
    let mut n1 = 0u64;
    let mut h1 = 0u64;
    let mut n2 = 0u64;
    let mut h2 = 0u64;
    for trip in &player.trips {
        n1 += 1;
        h1 += u64::from(trip.outcomes[0]);
        if trip.outcomes.len() >= 2 {
            n2 += 1;
            h2 += u64::from(trip.outcomes[1]);
        }
    }
    let smoothed = |h: u64, n: u64| (h as f64 + 0.5) / (n as f64 + 1.0);
    (logit(smoothed(h1, n1)), logit(smoothed(h2, n2)))
}

/// Deterministic seeded k-means (k-means++ seeding, Lloyd iterations).
fn kmeans(points: &[(f64, f64)], k: usize, seed: u64) -> (Vec<(f64, f64)>, Vec<usize>) {
    let n = points.len();
    let k = k.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);

    let mut centers: Vec<(f64, f64)> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)]);
    while centers.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| dist2(*p, *c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // Every point already coincides with a center.
            centers.push(points[rng.gen_range(0..n)]);
            continue;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = n - 1;
        for (i, w) in weights.iter().enumerate() {
            target -= w;
            if target <= 0.0 {
                chosen = i;
                break;
            }
        }
        centers.push(points[chosen]);
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..50 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..centers.len())
                .min_by(|&a, &b| dist2(*p, centers[a]).total_cmp(&dist2(*p, centers[b])))
                .expect("at least one center");
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![(0.0, 0.0, 0usize); centers.len()];
        for (p, &a) in points.iter().zip(&assignment) {
            sums[a].0 += p.0;
            sums[a].1 += p.1;
            sums[a].2 += 1;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.2 > 0 {
                *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
        if !changed {
            break;
        }
    }
    (centers, assignment)
}

/// Simulated power of the one-sided conditional-difference test at a fixed
/// number of trips.
///
/// The alternative keeps the profile's expected marginals `(p1, p2)` and
/// tilts the second shot by the conditional gap: `P(hit2 | hit1) = p2 +
/// (1 - p1) g` and `P(hit2 | miss1) = p2 - p1 g`, which leaves the marginal
/// second-shot rate unchanged.
pub fn power_at(
    null_profile: &Profile,
    conditional_gap: f64,
    z_threshold: f64,
    n_trips: usize,
    seed: u64,
    replicates: usize,
    rule: &QuadratureRule,
) -> Result<f64, Model1Error> {
    let (p1, p2) = expected_probs(null_profile, rule);
    let p_hit = p2 + (1.0 - p1) * conditional_gap;
    let p_miss = p2 - p1 * conditional_gap;
    if !(0.0..=1.0).contains(&p_hit) || !(0.0..=1.0).contains(&p_miss) {
        return Err(Model1Error::InvalidAlternative(format!(
            "conditional rates ({p_hit:.3}, {p_miss:.3}) leave [0, 1]"
        )));
    }
    if replicates == 0 || n_trips == 0 {
        return Err(Model1Error::InvalidConfig(
            "power evaluation needs trips and replicates".into(),
        ));
    }
    let first = Binomial::new(n_trips as u64, p1)
        .map_err(|e| Model1Error::InvalidAlternative(e.to_string()))?;

    let rejections: usize = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((n_trips as u64) << 24) ^ rep as u64);
            let n_h = first.sample(&mut rng);
            let n_m = n_trips as u64 - n_h;
            if n_h == 0 || n_m == 0 {
                return 0;
            }
            let x_h = Binomial::new(n_h, p_hit).expect("valid p").sample(&mut rng);
            let x_m = Binomial::new(n_m, p_miss)
                .expect("valid p")
                .sample(&mut rng);
            let ph = x_h as f64 / n_h as f64;
            let pm = x_m as f64 / n_m as f64;
            let se = (ph * (1.0 - ph) / n_h as f64 + pm * (1.0 - pm) / n_m as f64).sqrt();
            usize::from(se > 0.0 && (ph - pm) / se > z_threshold)
        })
        .sum();
    Ok(rejections as f64 / replicates as f64)
}

/// Simulation/bisection settings for [`power_trips`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerConfig {
    pub replicates: usize,
    /// Error out once the bracketing search passes this many trips.
    pub cap: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            replicates: 10_000,
            cap: 1 << 20,
        }
    }
}

/// Smallest trip count whose simulated power reaches `target_power`, found by
/// doubling then bisection. Deterministic given the seed: every evaluated
/// trip count uses its own substream.
pub fn power_trips(
    null_profile: &Profile,
    conditional_gap: f64,
    z_threshold: f64,
    target_power: f64,
    seed: u64,
    config: &PowerConfig,
    rule: &QuadratureRule,
) -> Result<usize, Model1Error> {
    if z_threshold.is_nan() || z_threshold <= 0.0 {
        return Err(Model1Error::InvalidConfig(
            "z threshold must be positive".into(),
        ));
    }
    if !(0.0 < target_power && target_power < 1.0) {
        return Err(Model1Error::InvalidConfig(
            "target power must lie strictly between 0 and 1".into(),
        ));
    }

    let power = |n: usize| {
        power_at(
            null_profile,
            conditional_gap,
            z_threshold,
            n,
            seed,
            config.replicates,
            rule,
        )
    };

    let mut hi = 32usize;
    loop {
        if power(hi)? >= target_power {
            break;
        }
        if hi > config.cap {
            return Err(Model1Error::PowerCapExceeded { cap: config.cap });
        }
        hi *= 2;
    }
    let mut lo = if hi == 32 { 0 } else { hi / 2 };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if power(mid)? >= target_power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
