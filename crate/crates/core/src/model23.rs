//! Intra-game displacement models on top of a fitted profile mixture.
//!
//! Trips are stratified either by intra-game trip index (capped at `h_max`)
//! or by (first-vs-later trip, minute bin). Each stratum carries one shared
//! 2-vector displacement added to every latent log-odds draw in it, with a
//! zero-mean bivariate normal prior. Fitting alternates an E-step over player
//! mixture components (the mixture itself stays fixed) with per-stratum
//! posterior-mode updates; stratum covariances come from the Laplace
//! approximation at the mode. The trip-index fit also re-estimates the prior
//! covariance from the stratum posteriors.
//!
//! Binned time series are smoothed by a random-walk Kalman filter with
//! two-sided (RTS) smoothing; trend statistics are Mahalanobis distances of
//! smoothed differences under the smoother's joint covariance.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Trip, TripTable};
use crate::model1::{Mixture, PatternCounts};
use crate::numerics::{
    mahalanobis2, sym_eigen2, NumericsError, ProfileGrid, QuadratureRule, DEFAULT_QUAD_ORDER,
};
use crate::optim::{fd_hessian2, nelder_mead_max};
use crate::util::{kahan_sum, log_sum_exp};

/// Number of minute bins: 48 regulation minutes plus one overtime bin.
pub const N_BINS: u8 = 49;
/// Trip-index strata used by the time-binned model: first trip vs. later.
pub const N_STRATA: u8 = 2;

#[derive(Debug, Error)]
pub enum Model23Error {
    #[error("elapsed seconds must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("prior covariance must be symmetric positive definite")]
    InvalidPrior,
    #[error("no estimate for trip index {0}")]
    MissingStratum(u32),
    #[error("observation covariance for stratum {stratum}, bin {bin} is not PSD")]
    NonPsdObservation { stratum: u8, bin: u8 },
    #[error("expected one estimate per (stratum, bin) cell; missing ({stratum}, {bin})")]
    IncompleteBins { stratum: u8, bin: u8 },
    #[error("singular innovation covariance in Kalman filter")]
    SingularInnovation,
    #[error("trend endpoints must satisfy 1 <= b0 < b1 <= 49, got ({0}, {1})")]
    BadTrendRange(u8, u8),
    #[error("dataset has no players")]
    EmptyData,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Minute bin of a game time: bins 1..=48 cover regulation minute by minute,
/// bin 49 collects all overtime.
pub fn bin_index(elapsed_seconds: f64) -> Result<u8, Model23Error> {
    if elapsed_seconds.is_nan() || elapsed_seconds < 0.0 {
        return Err(Model23Error::NegativeTime(elapsed_seconds));
    }
    if elapsed_seconds < 2880.0 {
        Ok(1 + (elapsed_seconds / 60.0) as u8)
    } else {
        Ok(N_BINS)
    }
}

/// Plot position of a bin in minutes: regulation bins at their midpoint,
/// overtime at the midpoint of the first overtime period.
pub fn bin_midpoint_minutes(bin: u8) -> f64 {
    if bin < N_BINS {
        bin as f64 - 0.5
    } else {
        50.5
    }
}

/// Zero-mean bivariate normal prior over displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementPrior {
    sigma: [[f64; 2]; 2],
}

impl DisplacementPrior {
    pub fn new(sigma: Matrix2<f64>) -> Result<Self, Model23Error> {
        let skew = (sigma[(0, 1)] - sigma[(1, 0)]).abs();
        let scale = sigma.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if !sigma.iter().all(|v| v.is_finite()) || skew > 1e-9 * scale {
            return Err(Model23Error::InvalidPrior);
        }
        let (eigs, _) = sym_eigen2(&sigma);
        if eigs[1] <= 0.0 {
            return Err(Model23Error::InvalidPrior);
        }
        Ok(Self {
            sigma: [
                [sigma[(0, 0)], sigma[(0, 1)]],
                [sigma[(1, 0)], sigma[(1, 1)]],
            ],
        })
    }

    pub fn sigma_delta(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.sigma[0][0],
            self.sigma[0][1],
            self.sigma[1][0],
            self.sigma[1][1],
        )
    }
}

/// Which stratum a displacement estimate describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisplacementIndex {
    /// Intra-game trip index (possibly pooled into the top stratum).
    TripIndex(u32),
    /// (first-vs-later trip, minute bin).
    TimeBin { stratum: u8, bin: u8 },
}

/// A stratum's displacement estimate with its covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementEstimate {
    pub index: DisplacementIndex,
    pub delta: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub n_trips: usize,
}

impl DisplacementEstimate {
    pub fn delta_vec(&self) -> Vector2<f64> {
        Vector2::new(self.delta[0], self.delta[1])
    }

    pub fn cov_mat(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.cov[0][0],
            self.cov[0][1],
            self.cov[1][0],
            self.cov[1][1],
        )
    }
}

/// Settings shared by the displacement fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisplacementFitConfig {
    pub max_outer_iterations: usize,
    /// Convergence threshold on the largest displacement / prior change.
    pub tolerance: f64,
    pub quadrature_order: usize,
    /// Ascent steps per stratum per outer iteration.
    pub inner_iterations: usize,
    /// Starting prior covariance for the trip-index fit.
    pub initial_sigma_delta: [[f64; 2]; 2],
    /// Hold the prior fixed instead of re-estimating it.
    pub fixed_sigma_delta: Option<[[f64; 2]; 2]>,
}

impl Default for DisplacementFitConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: 40,
            tolerance: 1e-5,
            quadrature_order: DEFAULT_QUAD_ORDER,
            inner_iterations: 80,
            initial_sigma_delta: [[0.04, 0.0], [0.0, 0.04]],
            fixed_sigma_delta: None,
        }
    }
}

/// Result of the trip-index displacement fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model2Fit {
    pub prior: DisplacementPrior,
    /// Estimates for non-empty strata, ascending trip index.
    pub estimates: Vec<DisplacementEstimate>,
    pub converged: bool,
    pub iterations: usize,
}

fn mat2(a: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])
}

fn arr2(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Fit per-trip-index displacements and their prior covariance, holding the
/// mixture fixed. Trips with index beyond `h_max` pool into the top stratum.
pub fn fit_model2(
    table: &TripTable,
    mixture: &Mixture,
    h_max: u32,
    config: &DisplacementFitConfig,
) -> Result<Model2Fit, Model23Error> {
    if h_max == 0 {
        return Err(Model23Error::InvalidConfig("h_max must be >= 1".into()));
    }
    let n_cells = h_max as usize;
    let cell_of = |trip: &Trip| -> usize { (trip.intra_game_index.min(h_max) - 1) as usize };

    let sigma0 = match config.fixed_sigma_delta {
        Some(s) => mat2(&s),
        None => mat2(&config.initial_sigma_delta),
    };
    DisplacementPrior::new(sigma0)?;

    let fit = fit_displacements(
        table,
        mixture,
        n_cells,
        &cell_of,
        sigma0,
        config.fixed_sigma_delta.is_none(),
        config,
    )?;

    let estimates = (0..n_cells)
        .filter(|&s| fit.n_trips[s] > 0)
        .map(|s| DisplacementEstimate {
            index: DisplacementIndex::TripIndex(s as u32 + 1),
            delta: [fit.deltas[s].x, fit.deltas[s].y],
            cov: arr2(&fit.covs[s]),
            n_trips: fit.n_trips[s],
        })
        .collect();

    Ok(Model2Fit {
        prior: DisplacementPrior::new(fit.sigma)?,
        estimates,
        converged: fit.converged,
        iterations: fit.iterations,
    })
}

/// Fit per-(stratum, minute-bin) displacements under a fixed prior. Every
/// cell is reported; cells with no data carry the prior mean 0 and the prior
/// covariance.
pub fn fit_model3(
    table: &TripTable,
    mixture: &Mixture,
    prior: &DisplacementPrior,
    config: &DisplacementFitConfig,
) -> Result<Vec<DisplacementEstimate>, Model23Error> {
    let n_cells = N_STRATA as usize * N_BINS as usize;
    let cell_of = |trip: &Trip| -> usize {
        let stratum = (trip.intra_game_index.min(2) - 1) as usize;
        let bin = bin_index(trip.elapsed_seconds).expect("validated trip time") as usize;
        stratum * N_BINS as usize + (bin - 1)
    };

    let fit = fit_displacements(
        table,
        mixture,
        n_cells,
        &cell_of,
        prior.sigma_delta(),
        false,
        config,
    )?;

    Ok((0..n_cells)
        .map(|s| DisplacementEstimate {
            index: DisplacementIndex::TimeBin {
                stratum: (s / N_BINS as usize) as u8 + 1,
                bin: (s % N_BINS as usize) as u8 + 1,
            },
            delta: [fit.deltas[s].x, fit.deltas[s].y],
            cov: arr2(&fit.covs[s]),
            n_trips: fit.n_trips[s],
        })
        .collect())
}

/// Mahalanobis distance between two strata's displacement estimates, treating
/// them as independent.
pub fn displacement_diff_stat(
    estimates: &[DisplacementEstimate],
    h_a: u32,
    h_b: u32,
) -> Result<f64, Model23Error> {
    let find = |h: u32| {
        estimates
            .iter()
            .find(|e| e.index == DisplacementIndex::TripIndex(h))
            .ok_or(Model23Error::MissingStratum(h))
    };
    let a = find(h_a)?;
    let b = find(h_b)?;
    let diff = b.delta_vec() - a.delta_vec();
    let cov = a.cov_mat() + b.cov_mat();
    Ok(mahalanobis2(&diff, &cov)?)
}

struct StratifiedFit {
    deltas: Vec<Vector2<f64>>,
    covs: Vec<Matrix2<f64>>,
    n_trips: Vec<usize>,
    sigma: Matrix2<f64>,
    converged: bool,
    iterations: usize,
}

/// Shared EM core: alternate player-component responsibilities with
/// per-stratum penalized mode updates; optionally re-estimate the prior from
/// the stratum posteriors.
#[allow(clippy::too_many_arguments)]
fn fit_displacements(
    table: &TripTable,
    mixture: &Mixture,
    n_cells: usize,
    cell_of: &(dyn Fn(&Trip) -> usize + Sync),
    sigma0: Matrix2<f64>,
    update_sigma: bool,
    config: &DisplacementFitConfig,
) -> Result<StratifiedFit, Model23Error> {
    if table.n_players() == 0 {
        return Err(Model23Error::EmptyData);
    }
    let rule = QuadratureRule::gauss_hermite(config.quadrature_order)?;
    let grids: Vec<ProfileGrid> = mixture
        .components()
        .iter()
        .map(|c| ProfileGrid::new(&c.profile, &rule))
        .collect();
    let log_pi: Vec<f64> = mixture.components().iter().map(|c| c.weight.ln()).collect();
    let n_comp = grids.len();

    // Per-player, per-cell pattern counts.
    let counts: Vec<Vec<PatternCounts>> = table
        .players()
        .par_iter()
        .map(|p| {
            let mut cells = vec![PatternCounts::default(); n_cells];
            for trip in &p.trips {
                let c = cell_of(trip);
                let single = PatternCounts::from_trips(std::iter::once(trip));
                merge_counts(&mut cells[c], &single);
            }
            cells
        })
        .collect();

    let mut n_trips = vec![0usize; n_cells];
    for player in table.players() {
        for trip in &player.trips {
            n_trips[cell_of(trip)] += 1;
        }
    }
    let nonempty: Vec<usize> = (0..n_cells).filter(|&s| n_trips[s] > 0).collect();
    let identifiable = !update_sigma || nonempty.len() >= 2;
    if !identifiable {
        log::warn!(
            "prior covariance is not identifiable from {} non-empty stratum(s); returning it unestimated",
            nonempty.len()
        );
    }

    let mut sigma = sigma0;
    let mut deltas = vec![Vector2::zeros(); n_cells];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_outer_iterations {
        iterations += 1;
        let lambda = sigma.try_inverse().ok_or(Model23Error::InvalidPrior)?;

        // E-step: responsibilities under current displacements.
        let pattern_lls = pattern_log_liks(&grids, &deltas, &nonempty, n_cells);
        let gammas: Vec<Vec<f64>> = counts
            .par_iter()
            .map(|cells| responsibilities(cells, &pattern_lls, &log_pi, &nonempty))
            .collect();

        // M-step: per-stratum penalized mode.
        let weighted = weighted_counts(&counts, &gammas, &nonempty, n_comp);
        let new_deltas: Vec<(usize, Vector2<f64>)> = nonempty
            .par_iter()
            .map(|&s| {
                let w = &weighted[&s];
                let objective = make_objective(&grids, w, &lambda);
                let start = [deltas[s].x, deltas[s].y];
                let (best, _) = nelder_mead_max(
                    |p| objective(p[0], p[1]),
                    &start,
                    0.05,
                    config.inner_iterations,
                );
                (s, Vector2::new(best[0], best[1]))
            })
            .collect();

        let mut max_change = 0.0f64;
        for (s, d) in &new_deltas {
            max_change = max_change.max((d - deltas[*s]).amax());
            deltas[*s] = *d;
        }

        let mut sigma_change = 0.0f64;
        if update_sigma && identifiable {
            // Prior M-step: average second moment of the stratum posteriors.
            let lambda = sigma.try_inverse().ok_or(Model23Error::InvalidPrior)?;
            let mut acc = Matrix2::zeros();
            for &s in &nonempty {
                let w = &weighted[&s];
                let objective = make_objective(&grids, w, &lambda);
                let cov = laplace_cov(&objective, deltas[s], &sigma);
                acc += deltas[s] * deltas[s].transpose() + cov;
            }
            let new_sigma = acc / nonempty.len() as f64;
            sigma_change = (new_sigma - sigma).amax();
            sigma = new_sigma;
        }

        if max_change < config.tolerance && sigma_change < config.tolerance {
            converged = true;
            break;
        }
    }

    // Final covariances at the converged modes.
    let lambda = sigma.try_inverse().ok_or(Model23Error::InvalidPrior)?;
    let pattern_lls = pattern_log_liks(&grids, &deltas, &nonempty, n_cells);
    let gammas: Vec<Vec<f64>> = counts
        .par_iter()
        .map(|cells| responsibilities(cells, &pattern_lls, &log_pi, &nonempty))
        .collect();
    let weighted = weighted_counts(&counts, &gammas, &nonempty, n_comp);
    let mut covs = vec![sigma; n_cells];
    let nonempty_covs: Vec<(usize, Matrix2<f64>)> = nonempty
        .par_iter()
        .map(|&s| {
            let objective = make_objective(&grids, &weighted[&s], &lambda);
            (s, laplace_cov(&objective, deltas[s], &sigma))
        })
        .collect();
    for (s, c) in nonempty_covs {
        covs[s] = c;
    }

    Ok(StratifiedFit {
        deltas,
        covs,
        n_trips,
        sigma,
        converged: converged && identifiable,
        iterations,
    })
}

fn merge_counts(into: &mut PatternCounts, from: &PatternCounts) {
    for y in 0..2 {
        into.one[y] += from.one[y];
    }
    for y1 in 0..2 {
        for y2 in 0..2 {
            into.two[y1][y2] += from.two[y1][y2];
        }
    }
}

/// Pattern log-likelihood tables, indexed [component][cell].
fn pattern_log_liks(
    grids: &[ProfileGrid],
    deltas: &[Vector2<f64>],
    nonempty: &[usize],
    n_cells: usize,
) -> Vec<Vec<LogPatterns>> {
    grids
        .par_iter()
        .map(|grid| {
            let mut row = vec![LogPatterns::default(); n_cells];
            for &s in nonempty {
                row[s] = LogPatterns::from(&grid.pattern_likelihoods(deltas[s]));
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct LogPatterns {
    one: [f64; 2],
    two: [[f64; 2]; 2],
}

impl From<&crate::numerics::PatternLikelihoods> for LogPatterns {
    fn from(liks: &crate::numerics::PatternLikelihoods) -> Self {
        let ln = |p: f64| p.max(1e-300).ln();
        Self {
            one: [ln(liks.one[0]), ln(liks.one[1])],
            two: [
                [ln(liks.two[0][0]), ln(liks.two[0][1])],
                [ln(liks.two[1][0]), ln(liks.two[1][1])],
            ],
        }
    }
}

fn counts_dot(counts: &PatternCounts, lls: &LogPatterns) -> f64 {
    let mut total = 0.0;
    for y in 0..2 {
        if counts.one[y] > 0 {
            total += counts.one[y] as f64 * lls.one[y];
        }
    }
    for y1 in 0..2 {
        for y2 in 0..2 {
            if counts.two[y1][y2] > 0 {
                total += counts.two[y1][y2] as f64 * lls.two[y1][y2];
            }
        }
    }
    total
}

fn responsibilities(
    cells: &[PatternCounts],
    pattern_lls: &[Vec<LogPatterns>],
    log_pi: &[f64],
    nonempty: &[usize],
) -> Vec<f64> {
    let terms: Vec<f64> = pattern_lls
        .iter()
        .zip(log_pi)
        .map(|(row, lp)| {
            lp + nonempty
                .iter()
                .map(|&s| counts_dot(&cells[s], &row[s]))
                .sum::<f64>()
        })
        .collect();
    let norm = log_sum_exp(&terms);
    terms.iter().map(|t| (t - norm).exp()).collect()
}

/// Responsibility-weighted pattern counts per stratum, one slot per component.
fn weighted_counts(
    counts: &[Vec<PatternCounts>],
    gammas: &[Vec<f64>],
    nonempty: &[usize],
    n_comp: usize,
) -> std::collections::HashMap<usize, Vec<WeightedCell>> {
    let mut out: std::collections::HashMap<usize, Vec<WeightedCell>> = nonempty
        .iter()
        .map(|&s| (s, vec![WeightedCell::default(); n_comp]))
        .collect();
    for (cells, gamma) in counts.iter().zip(gammas) {
        for &s in nonempty {
            let c = &cells[s];
            if c.one[0] + c.one[1] + c.two[0][0] + c.two[0][1] + c.two[1][0] + c.two[1][1] == 0 {
                continue;
            }
            let slots = out.get_mut(&s).expect("stratum present");
            for (slot, g) in slots.iter_mut().zip(gamma) {
                for y in 0..2 {
                    slot.one[y] += g * c.one[y] as f64;
                }
                for y1 in 0..2 {
                    for y2 in 0..2 {
                        slot.two[y1][y2] += g * c.two[y1][y2] as f64;
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
struct WeightedCell {
    one: [f64; 2],
    two: [[f64; 2]; 2],
}

/// Penalized expected log-likelihood of one stratum as a function of its
/// displacement.
fn make_objective<'a>(
    grids: &'a [ProfileGrid<'a>],
    weighted: &'a [WeightedCell],
    lambda: &'a Matrix2<f64>,
) -> impl Fn(f64, f64) -> f64 + 'a {
    move |d1: f64, d2: f64| {
        let shift = Vector2::new(d1, d2);
        let mut total = 0.0;
        for (grid, w) in grids.iter().zip(weighted) {
            let liks = grid.pattern_likelihoods(shift);
            let ln = |p: f64| p.max(1e-300).ln();
            for y in 0..2 {
                total += w.one[y] * ln(liks.one[y]);
            }
            for y1 in 0..2 {
                for y2 in 0..2 {
                    total += w.two[y1][y2] * ln(liks.two[y1][y2]);
                }
            }
        }
        let penalty = shift.dot(&(lambda * shift));
        total - 0.5 * penalty
    }
}

/// Inverse negative Hessian at the mode; falls back to the prior when the
/// curvature is numerically unusable.
fn laplace_cov(
    objective: &impl Fn(f64, f64) -> f64,
    mode: Vector2<f64>,
    prior: &Matrix2<f64>,
) -> Matrix2<f64> {
    let h = fd_hessian2(objective, mode.x, mode.y, 1e-4);
    let neg = Matrix2::new(-h[0][0], -h[0][1], -h[1][0], -h[1][1]);
    let (eigs, _) = sym_eigen2(&neg);
    if eigs[1] <= 0.0 {
        log::warn!("non-definite curvature at displacement mode; using prior covariance");
        return *prior;
    }
    match neg.try_inverse() {
        Some(inv) => 0.5 * (inv + inv.transpose()),
        None => *prior,
    }
}

/// Data log-likelihood of the mixture with fixed per-trip-index displacements
/// (index beyond the list pools into the last entry). Used to check that the
/// displacement model nests the plain mixture as the prior shrinks to zero.
pub fn model2_log_likelihood(
    table: &TripTable,
    mixture: &Mixture,
    rule: &QuadratureRule,
    deltas: &[Vector2<f64>],
) -> Result<f64, Model23Error> {
    if table.n_players() == 0 {
        return Err(Model23Error::EmptyData);
    }
    if deltas.is_empty() {
        return Err(Model23Error::InvalidConfig(
            "need at least one displacement".into(),
        ));
    }
    let grids: Vec<ProfileGrid> = mixture
        .components()
        .iter()
        .map(|c| ProfileGrid::new(&c.profile, rule))
        .collect();
    let log_pi: Vec<f64> = mixture.components().iter().map(|c| c.weight.ln()).collect();
    let n_cells = deltas.len();
    let cell_of =
        |trip: &Trip| -> usize { (trip.intra_game_index.min(n_cells as u32) - 1) as usize };

    let per_player: Vec<f64> = table
        .players()
        .par_iter()
        .map(|p| {
            let mut cells = vec![PatternCounts::default(); n_cells];
            for trip in &p.trips {
                let single = PatternCounts::from_trips(std::iter::once(trip));
                merge_counts(&mut cells[cell_of(trip)], &single);
            }
            let terms: Vec<f64> = grids
                .iter()
                .zip(&log_pi)
                .map(|(grid, lp)| {
                    lp + cells
                        .iter()
                        .enumerate()
                        .map(|(s, c)| {
                            let liks = grid.pattern_likelihoods(deltas[s]);
                            c.log_likelihood(&liks)
                        })
                        .sum::<f64>()
                })
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    Ok(kahan_sum(per_player))
}

/// Process-noise choice for the random-walk smoother.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessNoise {
    Fixed(Matrix2<f64>),
    /// Maximize the filter's innovation likelihood over a scalar grid q * I.
    Auto,
}

/// Smoothed displacement series over both strata with enough state to form
/// joint covariances between bins.
#[derive(Debug, Clone)]
pub struct SmoothedSeries {
    /// Smoothed mean and covariance per (stratum, bin), stratum-major.
    entries: Vec<DisplacementEstimate>,
    /// RTS gains linking bin b to b+1, per stratum.
    gains: [Vec<Matrix2<f64>>; 2],
    /// Process noise used per stratum.
    pub process_noise: [Matrix2<f64>; 2],
}

impl SmoothedSeries {
    pub fn entries(&self) -> &[DisplacementEstimate] {
        &self.entries
    }

    pub fn entry(&self, stratum: u8, bin: u8) -> Option<&DisplacementEstimate> {
        if !(1..=N_STRATA).contains(&stratum) || !(1..=N_BINS).contains(&bin) {
            return None;
        }
        self.entries
            .get((stratum as usize - 1) * N_BINS as usize + bin as usize - 1)
    }

    /// Joint covariance of the smoothed states at two bins of one stratum.
    pub fn cross_covariance(&self, stratum: u8, b0: u8, b1: u8) -> Option<Matrix2<f64>> {
        if b0 >= b1 {
            return None;
        }
        let gains = &self.gains[stratum as usize - 1];
        let mut prod = Matrix2::<f64>::identity();
        for b in b0..b1 {
            prod *= gains[b as usize - 1];
        }
        let tail = self.entry(stratum, b1)?;
        Some(prod * tail.cov_mat())
    }
}

/// Random-walk Kalman smoother over the 49 minute bins of each stratum.
///
/// The filter seeds on the first bin's observation (the diffuse limit for a
/// random walk), so with zero process noise the smoothed series is exactly
/// the precision-weighted mean of the observations; with very large process
/// noise it reproduces the raw bins.
pub fn kalman_smooth(
    binned: &[DisplacementEstimate],
    process_noise: ProcessNoise,
) -> Result<SmoothedSeries, Model23Error> {
    type Obs = Option<(Vector2<f64>, Matrix2<f64>, usize)>;
    let mut per_stratum: Vec<Vec<Obs>> = vec![vec![None; N_BINS as usize]; N_STRATA as usize];
    for est in binned {
        if let DisplacementIndex::TimeBin { stratum, bin } = est.index {
            if (1..=N_STRATA).contains(&stratum) && (1..=N_BINS).contains(&bin) {
                let cov = est.cov_mat();
                let skew = (cov[(0, 1)] - cov[(1, 0)]).abs();
                let (eigs, _) = sym_eigen2(&cov);
                if skew > 1e-9 * eigs[0].abs().max(1.0) || eigs[1] < 0.0 {
                    return Err(Model23Error::NonPsdObservation { stratum, bin });
                }
                per_stratum[stratum as usize - 1][bin as usize - 1] =
                    Some((est.delta_vec(), cov, est.n_trips));
            }
        }
    }

    let mut entries = Vec::with_capacity(N_STRATA as usize * N_BINS as usize);
    let mut gains: [Vec<Matrix2<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut noises = [Matrix2::zeros(); 2];

    for stratum in 0..N_STRATA as usize {
        let obs: Vec<(Vector2<f64>, Matrix2<f64>, usize)> = per_stratum[stratum]
            .iter()
            .enumerate()
            .map(|(b, o)| {
                o.ok_or(Model23Error::IncompleteBins {
                    stratum: stratum as u8 + 1,
                    bin: b as u8 + 1,
                })
            })
            .collect::<Result<_, _>>()?;

        let q = match process_noise {
            ProcessNoise::Fixed(q) => q,
            ProcessNoise::Auto => {
                let mut best = (f64::NEG_INFINITY, Matrix2::zeros());
                for i in 0..=36 {
                    let q = if i == 0 {
                        Matrix2::zeros()
                    } else {
                        let exp = -6.0 + (i - 1) as f64 * (7.0 / 35.0);
                        Matrix2::identity() * 10f64.powf(exp)
                    };
                    let ll = filter_pass(&obs, &q)?.2;
                    if ll > best.0 {
                        best = (ll, q);
                    }
                }
                best.1
            }
        };
        noises[stratum] = q;

        let (filtered, predicted, _) = filter_pass(&obs, &q)?;
        let (means, covs, g) = rts_pass(&filtered, &predicted)?;
        gains[stratum] = g;
        for (b, ((mean, cov), o)) in means.iter().zip(&covs).zip(&obs).enumerate() {
            entries.push(DisplacementEstimate {
                index: DisplacementIndex::TimeBin {
                    stratum: stratum as u8 + 1,
                    bin: b as u8 + 1,
                },
                delta: [mean.x, mean.y],
                cov: arr2(cov),
                n_trips: o.2,
            });
        }
    }

    Ok(SmoothedSeries {
        entries,
        gains,
        process_noise: noises,
    })
}

type FilterState = (
    Vec<(Vector2<f64>, Matrix2<f64>)>, // filtered (x, P) per bin
    Vec<(Vector2<f64>, Matrix2<f64>)>, // predicted (x, P) per bin (bin 0 unused)
    f64,                               // innovation log-likelihood (bins 2..)
);

fn filter_pass(
    obs: &[(Vector2<f64>, Matrix2<f64>, usize)],
    q: &Matrix2<f64>,
) -> Result<FilterState, Model23Error> {
    let n = obs.len();
    let mut filtered = Vec::with_capacity(n);
    let mut predicted = Vec::with_capacity(n);
    let mut loglik = 0.0;

    // Diffuse start: the first observation is the state estimate.
    let mut x = obs[0].0;
    let mut p = obs[0].1;
    filtered.push((x, p));
    predicted.push((x, p));

    for (y, r, _) in obs.iter().skip(1) {
        let x_pred = x;
        let p_pred = p + q;
        predicted.push((x_pred, p_pred));
        let s = p_pred + r;
        let s_inv = s.try_inverse().ok_or(Model23Error::SingularInnovation)?;
        let k = p_pred * s_inv;
        let innovation = y - x_pred;
        x = x_pred + k * innovation;
        p = (Matrix2::identity() - k) * p_pred;
        p = 0.5 * (p + p.transpose());
        filtered.push((x, p));

        let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
        if det <= 0.0 {
            return Err(Model23Error::SingularInnovation);
        }
        loglik += -(2.0 * std::f64::consts::PI).ln()
            - 0.5 * det.ln()
            - 0.5 * innovation.dot(&(s_inv * innovation));
    }

    Ok((filtered, predicted, loglik))
}

type RtsResult = (Vec<Vector2<f64>>, Vec<Matrix2<f64>>, Vec<Matrix2<f64>>);

fn rts_pass(
    filtered: &[(Vector2<f64>, Matrix2<f64>)],
    predicted: &[(Vector2<f64>, Matrix2<f64>)],
) -> Result<RtsResult, Model23Error> {
    let n = filtered.len();
    let mut means = vec![Vector2::zeros(); n];
    let mut covs = vec![Matrix2::zeros(); n];
    let mut gains = vec![Matrix2::identity(); n - 1];

    means[n - 1] = filtered[n - 1].0;
    covs[n - 1] = filtered[n - 1].1;

    for b in (0..n - 1).rev() {
        let (xf, pf) = filtered[b];
        let (x_pred_next, p_pred_next) = predicted[b + 1];
        let g = pf
            * p_pred_next
                .try_inverse()
                .ok_or(Model23Error::SingularInnovation)?;
        means[b] = xf + g * (means[b + 1] - x_pred_next);
        let c = pf + g * (covs[b + 1] - p_pred_next) * g.transpose();
        covs[b] = 0.5 * (c + c.transpose());
        gains[b] = g;
    }
    Ok((means, covs, gains))
}

/// Mahalanobis distance of the smoothed change from bin `b0` to `b1`, under
/// the smoother's covariance of the difference (cross term included).
pub fn trend_stat(
    series: &SmoothedSeries,
    stratum: u8,
    b0: u8,
    b1: u8,
) -> Result<f64, Model23Error> {
    if !(1..=N_STRATA).contains(&stratum) || b0 == 0 || b0 >= b1 || b1 > N_BINS {
        return Err(Model23Error::BadTrendRange(b0, b1));
    }
    let start = series
        .entry(stratum, b0)
        .ok_or(Model23Error::BadTrendRange(b0, b1))?;
    let end = series
        .entry(stratum, b1)
        .ok_or(Model23Error::BadTrendRange(b0, b1))?;
    let cross = series
        .cross_covariance(stratum, b0, b1)
        .ok_or(Model23Error::BadTrendRange(b0, b1))?;
    let diff = end.delta_vec() - start.delta_vec();
    let cov = start.cov_mat() + end.cov_mat() - cross - cross.transpose();
    Ok(mahalanobis2(&diff, &cov)?)
}
