//! Linear-Gaussian latent-variable models and stochastic realization theory.
//!
//! The crate is organized around one pipeline:
//!
//! 1. [`model`] — a unified linear-Gaussian generative model (latent chain
//!    with optional observation feedback) together with its HMC, D-GUM and
//!    RNN sub-families, stationarity analysis, analytic covariance series
//!    and trajectory simulation.
//! 2. [`realization`] — deterministic realization: Hankel matrices, order
//!    estimation, Ho-Kalman factorization and realization isomorphisms.
//! 3. [`srt`] — stochastic realization: the feasibility set of state
//!    covariances compatible with a series, its Riccati extremal elements,
//!    the positive-real test and the scalar closed-form interval.
//! 4. [`expressivity`] — which model families can produce a given covariance
//!    series, witness construction, and the scalar (F, HN) cartography.
//! 5. [`kalman`] — exact filtering and log-likelihood, used as an
//!    independent validation oracle for the realization machinery.
//!
//! Everything operates on plain `f64` dense matrices (`nalgebra`). All
//! operations are pure functions; simulation takes an explicit seed.

pub mod expressivity;
pub mod io;
pub mod kalman;
pub mod linalg;
pub mod model;
pub mod realization;
pub mod series;
pub mod srt;

pub use expressivity::{
    classify, scalar_cartography, CartographyGrid, ClassificationReport, ClassifyOptions,
};
pub use kalman::{kalman_filter, FilterState};
pub use model::{
    analytic_covariance, empirical_covariance, simulate, GumParameters, ModelFamily, Trajectory,
};
pub use realization::{build_hankel, ho_kalman, reconstruct_series, RealizationTriplet};
pub use series::CovarianceSeries;
pub use srt::{compute_extremal_p, positive_real_check, scalar_interval, toeplitz_is_covariance};
