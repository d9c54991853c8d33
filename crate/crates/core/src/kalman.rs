//! Exact filtering for the linear-Gaussian model.
//!
//! The model's observation feedback enters the filter as a known input
//! (the previous observation is available when predicting), so the
//! standard predict/update recursion applies with transition `a`,
//! control `c x_{t-1}`, emission `b` and noise `(alpha, beta)`. The filter
//! accumulates the exact Gaussian log-likelihood through the predictive
//! factors and is used as an independent oracle: its steady-state
//! innovation variance must match the observation-noise block of the
//! minimal stochastic realization.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::symmetrize;
use crate::model::GumParameters;

/// Predicted innovation variances below this (relative to the model
/// scale) abort filtering.
pub const DEGENERATE_VARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum KalmanError {
    #[error("predicted innovation variance {variance:.3e} degenerate at step {step}")]
    DegenerateInnovation { step: usize, variance: f64 },
}

/// One-step-ahead innovation and its predicted variance.
#[derive(Debug, Clone, Copy)]
pub struct Innovation {
    pub value: f64,
    pub predicted_variance: f64,
}

/// Terminal filter state with the accumulated log-likelihood and the full
/// innovation sequence.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub loglik: f64,
    pub innovations: Vec<Innovation>,
}

/// Runs the filter over the observations, starting from the prior
/// `h_0 ~ N(0, eta)`. Covariance updates use the Joseph form to preserve
/// symmetry over long horizons.
pub fn kalman_filter(
    params: &GumParameters,
    observations: &[f64],
) -> Result<FilterState, KalmanError> {
    let n = params.n();
    let identity = DMatrix::<f64>::identity(n, n);
    let scale = 1.0 + params.beta() + params.eta().amax() + params.alpha().amax();

    let mut mean = DVector::zeros(n);
    let mut cov = params.eta().clone();
    let mut loglik = 0.0;
    let mut innovations = Vec::with_capacity(observations.len());

    for (step, &x) in observations.iter().enumerate() {
        if step > 0 {
            // Predict with the previous observation as a known input.
            mean = params.a() * &mean + params.c() * observations[step - 1];
            cov = symmetrize(&(params.a() * &cov * params.a().transpose() + params.alpha()));
        }
        let variance = (params.b() * &cov * params.b().transpose())[(0, 0)] + params.beta();
        if variance <= DEGENERATE_VARIANCE_TOL * scale {
            return Err(KalmanError::DegenerateInnovation { step, variance });
        }
        let value = x - (params.b() * &mean)[(0, 0)];
        innovations.push(Innovation {
            value,
            predicted_variance: variance,
        });
        loglik +=
            -0.5 * ((2.0 * std::f64::consts::PI).ln() + variance.ln() + value * value / variance);

        let gain = &cov * params.b().transpose() / variance;
        mean += &gain * value;
        let shrink = &identity - &gain * params.b();
        cov = symmetrize(
            &(&shrink * &cov * shrink.transpose() + &gain * params.beta() * gain.transpose()),
        );
    }

    Ok(FilterState {
        mean,
        covariance: cov,
        loglik,
        innovations,
    })
}

/// Predicted innovation variance after `steps` filter iterations. The
/// variance recursion does not depend on the data, so this runs the
/// Riccati part of the filter alone.
pub fn steady_state_innovation_variance(
    params: &GumParameters,
    steps: usize,
) -> Result<f64, KalmanError> {
    let n = params.n();
    let identity = DMatrix::<f64>::identity(n, n);
    let scale = 1.0 + params.beta() + params.eta().amax() + params.alpha().amax();
    let mut cov = params.eta().clone();
    let mut variance = 0.0;
    for step in 0..steps {
        if step > 0 {
            cov = symmetrize(&(params.a() * &cov * params.a().transpose() + params.alpha()));
        }
        variance = (params.b() * &cov * params.b().transpose())[(0, 0)] + params.beta();
        if variance <= DEGENERATE_VARIANCE_TOL * scale {
            return Err(KalmanError::DegenerateInnovation { step, variance });
        }
        let gain = &cov * params.b().transpose() / variance;
        let shrink = &identity - &gain * params.b();
        cov = symmetrize(
            &(&shrink * &cov * shrink.transpose() + &gain * params.beta() * gain.transpose()),
        );
    }
    Ok(variance)
}

/// Whiteness diagnostic of the normalized innovations: sample
/// autocorrelations at lags `1..=max_lag` against the `3/sqrt(T)` band.
#[derive(Debug, Clone)]
pub struct WhitenessReport {
    pub autocorrelations: Vec<f64>,
    pub threshold: f64,
    pub white: bool,
}

pub fn innovation_whiteness(state: &FilterState, max_lag: usize) -> WhitenessReport {
    let z: Vec<f64> = state
        .innovations
        .iter()
        .map(|i| i.value / i.predicted_variance.sqrt())
        .collect();
    let t = z.len();
    let denom: f64 = z.iter().map(|v| v * v).sum();
    let mut autocorrelations = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let num: f64 = (0..t.saturating_sub(lag)).map(|i| z[i] * z[i + lag]).sum();
        autocorrelations.push(if denom > 0.0 { num / denom } else { 0.0 });
    }
    let threshold = 3.0 / (t as f64).sqrt();
    let white = autocorrelations.iter().all(|a| a.abs() < threshold);
    WhitenessReport {
        autocorrelations,
        threshold,
        white,
    }
}
