//! Logit-normal machinery shared by the model-fitting modules.
//!
//! A [`Profile`] is a bivariate normal over (1st shot, 2nd shot) log-odds.
//! Trip likelihoods and moment integrals marginalize the latent log-odds with
//! tensor-product Gauss-Hermite quadrature after rotating into the profile's
//! principal axes; zero-variance directions are dropped from the integration
//! instead of being regularized, so point- and line-mass profiles evaluate
//! exactly.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default Gauss-Hermite order per axis. 24 nodes drive the quadrature error
/// well below 1e-10 for |mu| <= 3 and eigenvalues <= 2.
pub const DEFAULT_QUAD_ORDER: usize = 24;

/// Eigenvalues below this (relative to the dominant one) are treated as an
/// exactly degenerate direction.
const DEGENERATE_EIG_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("profile parameters must be finite")]
    NonFinite,
    #[error("covariance is not symmetric (|s12 - s21| = {0:.3e})")]
    Asymmetric(f64),
    #[error("covariance has negative eigenvalue {0:.3e}")]
    NotPositiveSemidefinite(f64),
    #[error("covariance is singular or not positive definite")]
    SingularCovariance,
    #[error("trip outcomes must be non-empty")]
    EmptyOutcomes,
    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),
    #[error("quadrature order must be at least 1")]
    InvalidOrder,
    #[error("dimension mismatch: vector has {vector} entries, covariance is {cov}x{cov}")]
    DimensionMismatch { vector: usize, cov: usize },
    #[error("conditional likelihood underflowed to zero")]
    DegenerateConditional,
}

/// Numerically stable logistic function, `exp(x) / (exp(x) + 1)`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-odds of a probability strictly inside (0, 1).
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Chi-square quantile with 2 degrees of freedom (closed form).
pub fn chi2_2_quantile(level: f64) -> f64 {
    -2.0 * (1.0 - level).ln()
}

/// A bivariate normal over (1st shot, 2nd shot) log-odds.
///
/// The covariance may be positive *semi*definite: a zero matrix is a
/// point-mass profile, a rank-1 matrix concentrates on a line in logit space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    mu: [f64; 2],
    sigma: [[f64; 2]; 2],
}

impl Profile {
    /// Build a profile, validating finiteness, symmetry, and positive
    /// semidefiniteness. Tiny negative eigenvalues from rounding are accepted;
    /// genuinely indefinite matrices are rejected.
    pub fn new(mu: Vector2<f64>, sigma: Matrix2<f64>) -> Result<Self, NumericsError> {
        if !(mu.iter().all(|v| v.is_finite()) && sigma.iter().all(|v| v.is_finite())) {
            return Err(NumericsError::NonFinite);
        }
        let skew = (sigma[(0, 1)] - sigma[(1, 0)]).abs();
        let scale = sigma.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if skew > 1e-9 * scale {
            return Err(NumericsError::Asymmetric(skew));
        }
        let s01 = 0.5 * (sigma[(0, 1)] + sigma[(1, 0)]);
        let sym = Matrix2::new(sigma[(0, 0)], s01, s01, sigma[(1, 1)]);
        let (eigs, _) = sym_eigen2(&sym);
        if eigs[1] < -1e-9 * scale {
            return Err(NumericsError::NotPositiveSemidefinite(eigs[1]));
        }
        Ok(Self {
            mu: [mu.x, mu.y],
            sigma: [[sym[(0, 0)], sym[(0, 1)]], [sym[(1, 0)], sym[(1, 1)]]],
        })
    }

    /// Point-mass profile at the given log-odds.
    pub fn point_mass(mu1: f64, mu2: f64) -> Self {
        Self {
            mu: [mu1, mu2],
            sigma: [[0.0, 0.0], [0.0, 0.0]],
        }
    }

    /// Point-mass profile at the log-odds of the given success probabilities.
    pub fn from_probs(p1: f64, p2: f64) -> Result<Self, NumericsError> {
        if !(0.0 < p1 && p1 < 1.0 && 0.0 < p2 && p2 < 1.0) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self::point_mass(logit(p1), logit(p2)))
    }

    pub fn mu(&self) -> Vector2<f64> {
        Vector2::new(self.mu[0], self.mu[1])
    }

    pub fn sigma(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.sigma[0][0],
            self.sigma[0][1],
            self.sigma[1][0],
            self.sigma[1][1],
        )
    }
}

/// Nodes and weights integrating against a *standard* normal:
/// `E[g(Z)] ~ sum_i w_i g(x_i)` for `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss-Hermite rule of the given order, rescaled to a standard normal.
    ///
    /// Nodes and weights come from the Golub-Welsch eigendecomposition of the
    /// Jacobi matrix; weights sum to 1 because the eigenvector matrix is
    /// orthogonal.
    pub fn gauss_hermite(order: usize) -> Result<Self, NumericsError> {
        if order == 0 {
            return Err(NumericsError::InvalidOrder);
        }
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|j| {
                let first = eig.eigenvectors[(0, j)];
                (eig.eigenvalues[j] * std::f64::consts::SQRT_2, first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Eigendecomposition of a symmetric 2x2 matrix.
///
/// Returns eigenvalues in descending order with matching unit eigenvectors.
pub(crate) fn sym_eigen2(m: &Matrix2<f64>) -> ([f64; 2], [Vector2<f64>; 2]) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    if b == 0.0 {
        return if a >= c {
            ([a, c], [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)])
        } else {
            ([c, a], [Vector2::new(0.0, 1.0), Vector2::new(1.0, 0.0)])
        };
    }
    let half_tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    let v1 = Vector2::new(b, l1 - a).normalize();
    let v2 = Vector2::new(-v1.y, v1.x);
    ([l1, l2], [v1, v2])
}

/// Principal axes of a PSD matrix scaled by the square roots of their
/// eigenvalues. Degenerate directions come back as zero vectors, so
/// `x = mu + z1 * axes[0] + z2 * axes[1]` with standard normal `z` always has
/// the requested covariance.
pub(crate) fn psd_axes(sigma: &Matrix2<f64>) -> [Vector2<f64>; 2] {
    let (eigs, vecs) = sym_eigen2(sigma);
    let tol = DEGENERATE_EIG_TOL * eigs[0].max(1.0);
    let scale = |l: f64| if l > tol { l.sqrt() } else { 0.0 };
    [vecs[0] * scale(eigs[0]), vecs[1] * scale(eigs[1])]
}

/// A profile prepared for repeated quadrature, optionally shifted in logit
/// space. Shifting moves the mean only, so the principal axes are computed
/// once and reused across shifts — the hot path of the displacement fits.
pub struct ProfileGrid<'a> {
    mu: Vector2<f64>,
    axes: Vec<Vector2<f64>>,
    marginal_sd: [f64; 2],
    rule: &'a QuadratureRule,
}

/// Likelihoods of every outcome pattern that enters the models:
/// `one[y]` for single-shot trips and `two[y1][y2]` for the first two shots
/// of longer trips (booleans indexed as 0 = miss, 1 = hit).
#[derive(Debug, Clone, Copy)]
pub struct PatternLikelihoods {
    pub one: [f64; 2],
    pub two: [[f64; 2]; 2],
}

impl<'a> ProfileGrid<'a> {
    pub fn new(profile: &Profile, rule: &'a QuadratureRule) -> Self {
        let sigma = profile.sigma();
        let (eigs, vecs) = sym_eigen2(&sigma);
        let tol = DEGENERATE_EIG_TOL * eigs[0].max(1.0);
        let axes = eigs
            .iter()
            .zip(vecs.iter())
            .filter(|(l, _)| **l > tol)
            .map(|(l, v)| v * l.sqrt())
            .collect();
        let msd = |s: f64| if s > tol { s.sqrt() } else { 0.0 };
        Self {
            mu: profile.mu(),
            axes,
            marginal_sd: [msd(sigma[(0, 0)]), msd(sigma[(1, 1)])],
            rule,
        }
    }

    /// Likelihood of the first `min(2, outcomes.len())` shots, with the
    /// profile mean shifted by `shift`.
    pub fn likelihood_shifted(&self, outcomes: &[bool], shift: Vector2<f64>) -> f64 {
        match outcomes.len() {
            0 => 1.0,
            1 => self.marginal_one(0, outcomes[0], shift),
            _ => self.joint_two(outcomes[0], outcomes[1], shift),
        }
    }

    pub fn likelihood(&self, outcomes: &[bool]) -> f64 {
        self.likelihood_shifted(outcomes, Vector2::zeros())
    }

    /// All six pattern likelihoods in one pass over the grid.
    pub fn pattern_likelihoods(&self, shift: Vector2<f64>) -> PatternLikelihoods {
        let e1 = self.marginal_moment(0, shift);
        let mut two = [[0.0; 2]; 2];
        self.for_each_node(shift, |x, w| {
            let f1 = logistic(x.x);
            let f2 = logistic(x.y);
            let g1 = logistic(-x.x);
            let g2 = logistic(-x.y);
            two[0][0] += w * g1 * g2;
            two[0][1] += w * g1 * f2;
            two[1][0] += w * f1 * g2;
            two[1][1] += w * f1 * f2;
        });
        PatternLikelihoods {
            one: [1.0 - e1, e1],
            two,
        }
    }

    /// Expected success probability of each shot: `(E[f(X1)], E[f(X2)])`.
    pub fn expected_probs(&self, shift: Vector2<f64>) -> (f64, f64) {
        (
            self.marginal_moment(0, shift),
            self.marginal_moment(1, shift),
        )
    }

    /// Covariance of the two shot probabilities, `Cov[f(X1), f(X2)]`.
    pub fn prob_covariance(&self, shift: Vector2<f64>) -> f64 {
        let (e1, e2) = self.expected_probs(shift);
        let mut e12 = 0.0;
        self.for_each_node(shift, |x, w| {
            e12 += w * logistic(x.x) * logistic(x.y);
        });
        e12 - e1 * e2
    }

    /// Expected probabilities of a fresh trip's shots, conditioned on the
    /// fresh trip's first outcome: `(E[f(X1) | Y1], E[f(X2) | Y1])`.
    pub fn conditional_fresh(&self, first_hit: bool) -> Result<(f64, f64), NumericsError> {
        let mut denom = 0.0;
        let mut num1 = 0.0;
        let mut num2 = 0.0;
        self.for_each_node(Vector2::zeros(), |x, w| {
            let f1 = logistic(x.x);
            let f2 = logistic(x.y);
            let ell = if first_hit { f1 } else { 1.0 - f1 };
            denom += w * ell;
            num1 += w * ell * f1;
            num2 += w * ell * f2;
        });
        if denom <= 0.0 {
            return Err(NumericsError::DegenerateConditional);
        }
        Ok((num1 / denom, num2 / denom))
    }

    /// E[f(X_coord)] through the coordinate's 1-D marginal.
    fn marginal_moment(&self, coord: usize, shift: Vector2<f64>) -> f64 {
        let center = self.mu[coord] + shift[coord];
        let sd = self.marginal_sd[coord];
        if sd == 0.0 {
            return logistic(center);
        }
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(x, w)| w * logistic(center + sd * x))
            .sum()
    }

    fn marginal_one(&self, coord: usize, hit: bool, shift: Vector2<f64>) -> f64 {
        let e = self.marginal_moment(coord, shift);
        if hit {
            e
        } else {
            1.0 - e
        }
    }

    fn joint_two(&self, y1: bool, y2: bool, shift: Vector2<f64>) -> f64 {
        let mut acc = 0.0;
        self.for_each_node(shift, |x, w| {
            let t1 = if y1 { logistic(x.x) } else { logistic(-x.x) };
            let t2 = if y2 { logistic(x.y) } else { logistic(-x.y) };
            acc += w * t1 * t2;
        });
        acc
    }

    /// Visit the tensor-product grid in the non-degenerate directions.
    fn for_each_node(&self, shift: Vector2<f64>, mut visit: impl FnMut(Vector2<f64>, f64)) {
        let center = self.mu + shift;
        match self.axes.len() {
            0 => visit(center, 1.0),
            1 => {
                let a = self.axes[0];
                for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    visit(center + a * *x, *w);
                }
            }
            _ => {
                let (a, b) = (self.axes[0], self.axes[1]);
                for (xa, wa) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    let base = center + a * *xa;
                    for (xb, wb) in self.rule.nodes.iter().zip(&self.rule.weights) {
                        visit(base + b * *xb, wa * wb);
                    }
                }
            }
        }
    }
}

/// Probability of the observed outcomes (first two shots at most) with the
/// latent log-odds marginalized over the profile.
pub fn trip_likelihood(
    outcomes: &[bool],
    profile: &Profile,
    rule: &QuadratureRule,
) -> Result<f64, NumericsError> {
    if outcomes.is_empty() {
        return Err(NumericsError::EmptyOutcomes);
    }
    Ok(ProfileGrid::new(profile, rule).likelihood(outcomes))
}

/// Coordinate-wise expected success probabilities `(E[P1], E[P2])`.
pub fn expected_probs(profile: &Profile, rule: &QuadratureRule) -> (f64, f64) {
    ProfileGrid::new(profile, rule).expected_probs(Vector2::zeros())
}

/// Mahalanobis distance `sqrt(w' cov^-1 w)`.
pub fn mahalanobis(w: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64, NumericsError> {
    mahalanobis_squared(w, cov).map(f64::sqrt)
}

/// Squared form `w' cov^-1 w` of the Mahalanobis distance.
pub fn mahalanobis_squared(w: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64, NumericsError> {
    if cov.nrows() != cov.ncols() || cov.nrows() != w.len() {
        return Err(NumericsError::DimensionMismatch {
            vector: w.len(),
            cov: cov.nrows(),
        });
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or(NumericsError::SingularCovariance)?;
    let solved = chol.solve(w);
    Ok(w.dot(&solved))
}

/// 2-D convenience wrapper for [`mahalanobis`].
pub fn mahalanobis2(w: &Vector2<f64>, cov: &Matrix2<f64>) -> Result<f64, NumericsError> {
    mahalanobis_squared2(w, cov).map(f64::sqrt)
}

/// 2-D convenience wrapper for [`mahalanobis_squared`].
pub fn mahalanobis_squared2(w: &Vector2<f64>, cov: &Matrix2<f64>) -> Result<f64, NumericsError> {
    let wd = DVector::from_column_slice(w.as_slice());
    let cd = DMatrix::from_fn(2, 2, |r, c| cov[(r, c)]);
    mahalanobis_squared(&wd, &cd)
}

/// Closed polyline (in `(P1, P2)` probability space) of the level-set ellipse
/// `(x - mu)' Sigma^-1 (x - mu) = q`, with `q` the chi-square(2) quantile at
/// `level`, mapped through the logistic per coordinate.
///
/// A rank-1 covariance traces a curve segment (forward then back); a zero
/// covariance collapses every vertex onto the single point `f(mu)`.
pub fn confidence_region(
    profile: &Profile,
    level: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>, NumericsError> {
    if !(0.0 < level && level < 1.0) {
        return Err(NumericsError::InvalidLevel(level));
    }
    let radius = chi2_2_quantile(level).sqrt();
    let sigma = profile.sigma();
    let axes = psd_axes(&sigma);
    let mu = profile.mu();
    let mut vertices = Vec::with_capacity(points);
    for i in 0..points {
        let t = 2.0 * std::f64::consts::PI * (i as f64) / (points as f64);
        let x = mu + (axes[0] * t.cos() + axes[1] * t.sin()) * radius;
        vertices.push((logistic(x.x), logistic(x.y)));
    }
    Ok(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rule() -> QuadratureRule {
        QuadratureRule::gauss_hermite(DEFAULT_QUAD_ORDER).unwrap()
    }

    #[test]
    fn logistic_basics() {
        assert_eq!(logistic(0.0), 0.5);
        assert_abs_diff_eq!(logistic(3f64.ln()), 0.75, epsilon = 1e-15);
        for x in [-5.0, -0.3, 0.7, 12.0, 700.0] {
            assert_abs_diff_eq!(logistic(-x), 1.0 - logistic(x), epsilon = 1e-15);
        }
        assert!(logistic(700.0) < 1.0 + 1e-15);
        assert!(logistic(-700.0) > 0.0);
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for order in [1, 2, 5, 24, 48] {
            let r = QuadratureRule::gauss_hermite(order).unwrap();
            let total: f64 = r.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "order {order}: {total}");
        }
    }

    #[test]
    fn quadrature_integrates_moments_exactly() {
        // Polynomial moments of the standard normal are exact up to degree 2n-1.
        let r = QuadratureRule::gauss_hermite(8).unwrap();
        let m2: f64 = r
            .nodes()
            .iter()
            .zip(r.weights())
            .map(|(x, w)| w * x * x)
            .sum();
        let m4: f64 = r
            .nodes()
            .iter()
            .zip(r.weights())
            .map(|(x, w)| w * x.powi(4))
            .sum();
        assert_abs_diff_eq!(m2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m4, 3.0, epsilon = 1e-11);
    }

    #[test]
    fn point_mass_two_hit_likelihood() {
        let p = Profile::point_mass(0.0, 0.0);
        let l = trip_likelihood(&[true, true], &p, &rule()).unwrap();
        assert_abs_diff_eq!(l, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn outcome_likelihoods_normalize() {
        let p = Profile::new(Vector2::new(1.0, 1.2), Matrix2::new(0.5, 0.2, 0.2, 0.5)).unwrap();
        let r = rule();
        let total: f64 = [[false, false], [false, true], [true, false], [true, true]]
            .iter()
            .map(|o| trip_likelihood(o, &p, &r).unwrap())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_outcomes_rejected() {
        let p = Profile::point_mass(0.0, 0.0);
        assert!(matches!(
            trip_likelihood(&[], &p, &rule()),
            Err(NumericsError::EmptyOutcomes)
        ));
    }

    #[test]
    fn expected_probs_point_mass_and_monotone() {
        let r = rule();
        let (e1, e2) = expected_probs(&Profile::point_mass(0.0, 0.0), &r);
        assert_eq!((e1, e2), (0.5, 0.5));

        let sigma = Matrix2::new(0.6, 0.1, 0.1, 0.6);
        let lo = Profile::new(Vector2::new(0.2, 0.4), sigma).unwrap();
        let hi = Profile::new(Vector2::new(0.8, 1.1), sigma).unwrap();
        let (l1, l2) = expected_probs(&lo, &r);
        let (h1, h2) = expected_probs(&hi, &r);
        assert!(h1 > l1 && h2 > l2);
    }

    #[test]
    fn degenerate_directions_are_dimension_reduced() {
        let r = rule();
        // Rank-1: perfectly correlated coordinates.
        let sigma = Matrix2::new(0.5, 0.5, 0.5, 0.5);
        let p = Profile::new(Vector2::new(0.3, 0.3), sigma).unwrap();
        let grid = ProfileGrid::new(&p, &r);
        assert_eq!(grid.axes.len(), 1);
        // Under perfect correlation E[f1 f2] > E[f1] E[f2].
        assert!(grid.prob_covariance(Vector2::zeros()) > 0.0);
    }

    #[test]
    fn mahalanobis_examples() {
        let id = DMatrix::identity(2, 2);
        let w = DVector::from_vec(vec![3.0, 4.0]);
        assert_abs_diff_eq!(mahalanobis(&w, &id).unwrap(), 5.0, epsilon = 1e-12);

        let zero = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(mahalanobis(&zero, &id).unwrap(), 0.0);

        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 4.0]);
        let w = DVector::from_vec(vec![2.0, 2.0]);
        assert_abs_diff_eq!(mahalanobis(&w, &cov).unwrap(), 2f64.sqrt(), epsilon = 1e-12);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(mahalanobis(&w, &singular).is_err());
    }

    #[test]
    fn confidence_region_point_and_bounds() {
        let point = Profile::point_mass(0.4, -0.2);
        let region = confidence_region(&point, 0.84, 16).unwrap();
        for (p1, p2) in &region {
            assert_abs_diff_eq!(*p1, logistic(0.4), epsilon = 1e-15);
            assert_abs_diff_eq!(*p2, logistic(-0.2), epsilon = 1e-15);
        }

        let p = Profile::new(Vector2::new(1.0, 1.3), Matrix2::new(0.8, 0.5, 0.5, 0.9)).unwrap();
        for (p1, p2) in confidence_region(&p, 0.84, 64).unwrap() {
            assert!(0.0 < p1 && p1 < 1.0 && 0.0 < p2 && p2 < 1.0);
        }

        assert!(confidence_region(&p, 1.0, 8).is_err());
    }

    #[test]
    fn confidence_region_rank_one_is_monotone_arc() {
        // Perfectly correlated covariance: the region is a segment whose
        // vertices all satisfy x2 - mu2 = (x1 - mu1) in logit space.
        let p = Profile::new(Vector2::new(0.2, 0.6), Matrix2::new(0.4, 0.4, 0.4, 0.4)).unwrap();
        for (p1, p2) in confidence_region(&p, 0.84, 32).unwrap() {
            let x1 = logit(p1);
            let x2 = logit(p2);
            assert_abs_diff_eq!(x2 - 0.6, x1 - 0.2, epsilon = 1e-9);
        }
    }

    #[test]
    fn conditional_fresh_diagonal_independence() {
        let r = rule();
        let p = Profile::new(Vector2::new(0.9, 1.1), Matrix2::new(0.5, 0.0, 0.0, 0.5)).unwrap();
        let g = ProfileGrid::new(&p, &r);
        let (_, hit2) = g.conditional_fresh(true).unwrap();
        let (_, miss2) = g.conditional_fresh(false).unwrap();
        assert_abs_diff_eq!(hit2, miss2, epsilon = 1e-12);
    }

    #[test]
    fn profile_rejects_bad_matrices() {
        assert!(Profile::new(Vector2::new(f64::NAN, 0.0), Matrix2::identity()).is_err());
        assert!(Profile::new(Vector2::zeros(), Matrix2::new(1.0, 0.9, 0.2, 1.0)).is_err());
        assert!(Profile::new(Vector2::zeros(), Matrix2::new(1.0, 2.0, 2.0, 1.0)).is_err());
    }
}
