//! Analytics for sequential binary performance data organized as free-throw
//! *trips*: short ordered runs of shots by one player within one game.
//!
//! The crate covers the full pipeline:
//!
//! - [`ingest`]: parse play-by-play free-throw event files into a [`ingest::TripTable`].
//! - [`gvt`]: exact recovery of 2x2 outcome counts from rounded conditional
//!   percentages, plus the built-in Celtics two-season fixture.
//! - [`classical`]: pairwise 1st/2nd-shot tables, trip-length breakdowns and
//!   repeat-trip comparisons with classical standard errors.
//! - [`numerics`]: logit-normal machinery shared by the models (quadrature,
//!   Mahalanobis distances, confidence regions).
//! - [`model1`]: EM fitting of a discrete mixture of bivariate logit-normal
//!   player profiles, posteriors and conditional posteriors, test power.
//! - [`model23`]: per-trip-index and per-minute displacement estimation with
//!   a random-walk Kalman smoother and trend statistics.
//! - [`corr`]: per-player serial-correlation statistics and their expectations
//!   under a fitted mixture, with uniform and information weighting.
//! - [`simulate`]: seeded synthetic data generation and Monte-Carlo oracles.

pub mod classical;
pub mod corr;
pub mod gvt;
pub mod ingest;
pub mod model1;
pub mod model23;
pub mod numerics;
pub mod simulate;

mod optim;
mod util;

pub use ingest::{FreeThrowEvent, Trip, TripTable};
pub use model1::{EmConfig, Mixture, MixtureComponent};
pub use numerics::{Profile, QuadratureRule};
