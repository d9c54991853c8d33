//! Linear-Gaussian unified generative model and its sub-families.
//!
//! The model has an n-dimensional latent chain `h_t` and scalar
//! observations `x_t`:
//!
//! ```text
//! h_0 ~ N(0, eta)
//! h_t = a h_{t-1} + c x_{t-1} + u_t,   u_t ~ N(0, alpha)
//! x_t = b h_t + v_t,                   v_t ~ N(0, beta)
//! ```
//!
//! Sub-families are carved out by parameter constraints: an HMC has no
//! observation feedback (`c = 0`), a D-GUM has a deterministic latent
//! transition (`alpha = 0`), and an RNN additionally starts at `h_0 = 0`
//! which pins the stationary latent covariance to `eta = c r0 cᵀ`.
//!
//! Under stationarity the observation process has covariance series
//! `r0 = beta + b eta bᵀ` and `r_k = b F^{k-1} N` with `F = a + c b` and
//! `N = a eta bᵀ + c r0`.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::linalg::{
    is_psd, min_symmetric_eigenvalue, psd_factor, solve_discrete_lyapunov, spectral_radius,
    symmetric_norm, symmetrize, PSD_REL_TOL,
};
use crate::series::CovarianceSeries;

/// Default stability margin: the closed-loop spectral radius must stay
/// below `1 - STABILITY_TOL`.
pub const STABILITY_TOL: f64 = 1e-12;

/// Residual tolerance (relative to the parameter scale) under which a
/// user-supplied `eta` is accepted as the stationary covariance.
pub const LYAPUNOV_CHECK_TOL: f64 = 1e-8;

/// Absolute threshold below which a vector or matrix entry counts as an
/// exact structural zero for family-constraint checks.
pub const FAMILY_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{which} must be symmetric positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotSymmetricPsd {
        which: &'static str,
        min_eigenvalue: f64,
    },
    #[error("beta must be nonnegative, got {0}")]
    NegativeBeta(f64),
    #[error("closed-loop matrix is not strictly stable (spectral radius {spectral_radius})")]
    NotStable { spectral_radius: f64 },
    #[error("stationary solution has negative eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error(
        "parameters are not stationary (spectral radius {spectral_radius}, \
         Lyapunov residual {lyapunov_residual:.3e})"
    )]
    NotStationary {
        spectral_radius: f64,
        lyapunov_residual: f64,
    },
    #[error("parameters violate the {family} constraint: {reason}")]
    FamilyViolation { family: ModelFamily, reason: String },
    #[error("no trajectories supplied")]
    EmptyInput,
    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),
}

/// The four generative families, ordered from least to most constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelFamily {
    /// Unconstrained unified model.
    Gum,
    /// Hidden Markov chain: no observation feedback (`c = 0`).
    Hmc,
    /// Deterministic latent transition (`alpha = 0`).
    Dgum,
    /// D-GUM started at `h_0 = 0`, forcing `eta = c r0 cᵀ`.
    Rnn,
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelFamily::Gum => "GUM",
            ModelFamily::Hmc => "HMC",
            ModelFamily::Dgum => "DGUM",
            ModelFamily::Rnn => "RNN",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GUM" => Ok(ModelFamily::Gum),
            "HMC" => Ok(ModelFamily::Hmc),
            "DGUM" | "D-GUM" => Ok(ModelFamily::Dgum),
            "RNN" => Ok(ModelFamily::Rnn),
            other => Err(format!("unknown model family `{other}`")),
        }
    }
}

/// Parameter tuple `(a, b, c, alpha, beta, eta)` of a linear-Gaussian
/// unified model with latent dimension `n ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GumParameters {
    a: DMatrix<f64>,
    b: RowDVector<f64>,
    c: DVector<f64>,
    alpha: DMatrix<f64>,
    beta: f64,
    eta: DMatrix<f64>,
}

impl GumParameters {
    /// Validates shapes, symmetry/PSD of `alpha` and `eta`, and `beta ≥ 0`.
    /// The stored `alpha` and `eta` are symmetrized.
    pub fn new(
        a: DMatrix<f64>,
        b: RowDVector<f64>,
        c: DVector<f64>,
        alpha: DMatrix<f64>,
        beta: f64,
        eta: DMatrix<f64>,
    ) -> Result<Self, ModelError> {
        let n = a.nrows();
        if n == 0 {
            return Err(ModelError::DimensionMismatch(
                "latent dimension must be at least 1".into(),
            ));
        }
        if a.ncols() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "a must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        for (name, rows, cols) in [
            ("b", 1, b.ncols()),
            ("c", c.nrows(), 1),
            ("alpha", alpha.nrows(), alpha.ncols()),
            ("eta", eta.nrows(), eta.ncols()),
        ] {
            let ok = match name {
                "b" => cols == n && rows == 1,
                "c" => rows == n,
                _ => rows == n && cols == n,
            };
            if !ok {
                return Err(ModelError::DimensionMismatch(format!(
                    "{name} has shape {rows}x{cols}, expected to conform to n = {n}"
                )));
            }
        }
        if beta < 0.0 {
            return Err(ModelError::NegativeBeta(beta));
        }
        let alpha = symmetrize(&alpha);
        let eta = symmetrize(&eta);
        for (name, m) in [("alpha", &alpha), ("eta", &eta)] {
            if !is_psd(m, PSD_REL_TOL) {
                return Err(ModelError::NotSymmetricPsd {
                    which: if name == "alpha" { "alpha" } else { "eta" },
                    min_eigenvalue: min_symmetric_eigenvalue(m),
                });
            }
        }
        Ok(Self {
            a,
            b,
            c,
            alpha,
            beta,
            eta,
        })
    }

    /// Convenience constructor that solves for the stationary `eta` via
    /// [`solve_stationary_eta`] instead of taking it as input.
    pub fn with_stationary_eta(
        a: DMatrix<f64>,
        b: RowDVector<f64>,
        c: DVector<f64>,
        alpha: DMatrix<f64>,
        beta: f64,
    ) -> Result<Self, ModelError> {
        let eta = solve_stationary_eta(&a, &b, &c, &alpha, beta)?;
        Self::new(a, b, c, alpha, beta, eta)
    }

    /// Scalar-model constructor.
    pub fn scalar(a: f64, b: f64, c: f64, alpha: f64, beta: f64, eta: f64) -> Result<Self, ModelError> {
        Self::new(
            DMatrix::from_element(1, 1, a),
            RowDVector::from_element(1, b),
            DVector::from_element(1, c),
            DMatrix::from_element(1, 1, alpha),
            beta,
            DMatrix::from_element(1, 1, eta),
        )
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &RowDVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> &DMatrix<f64> {
        &self.eta
    }

    /// Closed-loop transition matrix `F = a + c b` governing both the
    /// marginal latent recursion and the covariance decay.
    pub fn closed_loop_matrix(&self) -> DMatrix<f64> {
        &self.a + &self.c * &self.b
    }

    /// Effective latent innovation covariance `alpha + c beta cᵀ`.
    pub fn closed_loop_noise(&self) -> DMatrix<f64> {
        &self.alpha + &self.c * self.beta * self.c.transpose()
    }

    /// Stationary observation variance `r0 = beta + b eta bᵀ`.
    pub fn stationary_variance(&self) -> f64 {
        self.beta + (&self.b * &self.eta * self.b.transpose())[(0, 0)]
    }

    /// Cross-covariance input `N = a eta bᵀ + c r0` of the covariance
    /// factorization `r_k = b F^{k-1} N`.
    pub fn covariance_input(&self) -> DVector<f64> {
        &self.a * &self.eta * self.b.transpose() + &self.c * self.stationary_variance()
    }

    /// `None` if the parameters satisfy the structural constraints of
    /// `family`, otherwise a human-readable description of the violation.
    pub fn family_violation(&self, family: ModelFamily) -> Option<String> {
        match family {
            ModelFamily::Gum => None,
            ModelFamily::Hmc => (self.c.amax() > FAMILY_ZERO_TOL)
                .then(|| format!("HMC requires c = 0, got |c| = {:.3e}", self.c.amax())),
            ModelFamily::Dgum => (self.alpha.amax() > FAMILY_ZERO_TOL).then(|| {
                format!("D-GUM requires alpha = 0, got |alpha| = {:.3e}", self.alpha.amax())
            }),
            ModelFamily::Rnn => {
                if let Some(v) = self.family_violation(ModelFamily::Dgum) {
                    return Some(v);
                }
                let r0 = self.stationary_variance();
                let target = &self.c * r0 * self.c.transpose();
                let gap = (&self.eta - &target).amax();
                (gap > 1e-9 * (1.0 + r0)).then(|| {
                    format!("RNN requires eta = c r0 cᵀ, violated by {gap:.3e}")
                })
            }
        }
    }

    pub fn check_family(&self, family: ModelFamily) -> Result<(), ModelError> {
        match self.family_violation(family) {
            None => Ok(()),
            Some(reason) => Err(ModelError::FamilyViolation { family, reason }),
        }
    }
}

/// Separate report of the two stationarity conditions: strict stability of
/// the closed loop and the fixed-point property of `eta`.
#[derive(Debug, Clone, Copy)]
pub struct StationarityDiagnostics {
    pub spectral_radius: f64,
    pub spectrally_stable: bool,
    /// `‖eta - (alpha + c beta cᵀ) - F eta Fᵀ‖_∞`
    pub lyapunov_residual: f64,
    pub lyapunov_ok: bool,
}

pub fn stationarity_diagnostics(params: &GumParameters, tol: f64) -> StationarityDiagnostics {
    let f = params.closed_loop_matrix();
    let rho = spectral_radius(&f);
    let residual =
        (params.eta() - params.closed_loop_noise() - &f * params.eta() * f.transpose()).amax();
    StationarityDiagnostics {
        spectral_radius: rho,
        spectrally_stable: rho < 1.0 - tol,
        lyapunov_residual: residual,
        lyapunov_ok: residual < tol,
    }
}

/// True iff the closed loop is strictly stable (`ρ(F) < 1 - tol`) and the
/// supplied `eta` solves the stationary Lyapunov equation to within `tol`.
pub fn is_stationary(params: &GumParameters, tol: f64) -> bool {
    let d = stationarity_diagnostics(params, tol);
    d.spectrally_stable && d.lyapunov_ok
}

/// Solves `eta = (alpha + c beta cᵀ) + F eta Fᵀ` for the unique stationary
/// latent covariance (Kronecker vectorization with a fixed-point fallback).
///
/// The result is symmetrized and eigenvalues in `[-tol, 0)` are projected
/// to zero; an eigenvalue below `-tol` (with `tol = 1e-9 (1 + ‖eta‖)`) is a
/// hard error.
pub fn solve_stationary_eta(
    a: &DMatrix<f64>,
    b: &RowDVector<f64>,
    c: &DVector<f64>,
    alpha: &DMatrix<f64>,
    beta: f64,
) -> Result<DMatrix<f64>, ModelError> {
    let f = a + c * b;
    let rho = spectral_radius(&f);
    if rho >= 1.0 {
        return Err(ModelError::NotStable {
            spectral_radius: rho,
        });
    }
    let noise = alpha + c * beta * c.transpose();
    let eta = solve_discrete_lyapunov(&f, &noise).ok_or(ModelError::NotStable {
        spectral_radius: rho,
    })?;
    let tol = PSD_REL_TOL * (1.0 + symmetric_norm(&eta));
    let eig = eta.symmetric_eigen();
    let min_ev = eig.eigenvalues.min();
    if min_ev < -tol {
        return Err(ModelError::NotPsd {
            min_eigenvalue: min_ev,
        });
    }
    let clamped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0)),
    );
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    Ok(symmetrize(&rebuilt))
}

/// Analytic covariance series `r0 = beta + b eta bᵀ`,
/// `r_k = b F^{k-1} (a eta bᵀ + c r0)`, computed with iterated
/// matrix-vector products.
///
/// Stationarity is required: the closed loop must be strictly stable and
/// `eta` must satisfy the Lyapunov equation to within
/// [`LYAPUNOV_CHECK_TOL`] relative to the parameter scale.
pub fn analytic_covariance(
    params: &GumParameters,
    num_lags: usize,
) -> Result<CovarianceSeries, ModelError> {
    let scale = 1.0 + params.eta().amax() + params.closed_loop_noise().amax();
    let d = stationarity_diagnostics(params, STABILITY_TOL);
    if !d.spectrally_stable || d.lyapunov_residual > LYAPUNOV_CHECK_TOL * scale {
        return Err(ModelError::NotStationary {
            spectral_radius: d.spectral_radius,
            lyapunov_residual: d.lyapunov_residual,
        });
    }
    let r0 = params.stationary_variance();
    let f = params.closed_loop_matrix();
    let mut w = params.covariance_input();
    let mut lags = Vec::with_capacity(num_lags);
    for _ in 0..num_lags {
        lags.push((params.b() * &w)[(0, 0)]);
        w = &f * w;
    }
    CovarianceSeries::new(r0.max(0.0), lags)
        .map_err(|e| ModelError::TrajectoryMismatch(e.to_string()))
}

/// One step of the latent covariance recursion
/// `eta_{t+1} = (alpha + c beta cᵀ) + F eta_t Fᵀ`.
pub fn eta_step(params: &GumParameters, eta_t: &DMatrix<f64>) -> DMatrix<f64> {
    let f = params.closed_loop_matrix();
    params.closed_loop_noise() + &f * eta_t * f.transpose()
}

/// Transient covariance diagnostic for a non-stationary latent covariance
/// `eta_t`: returns `Var(x_t)` and `cov(x_t, x_{t+k})` for `k = 1..=K`.
/// Exposed for inspection only; classification always works on the
/// stationary series.
pub fn transient_covariance(
    params: &GumParameters,
    eta_t: &DMatrix<f64>,
    num_lags: usize,
) -> (f64, Vec<f64>) {
    let var_t = params.beta() + (params.b() * eta_t * params.b().transpose())[(0, 0)];
    let f = params.closed_loop_matrix();
    let mut w = params.a() * eta_t * params.b().transpose() + params.c() * var_t;
    let mut lags = Vec::with_capacity(num_lags);
    for _ in 0..num_lags {
        lags.push((params.b() * &w)[(0, 0)]);
        w = &f * w;
    }
    (var_t, lags)
}

/// A simulated path of latents and observations, tagged with the seed that
/// produced it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    observations: Vec<f64>,
    latents: Vec<DVector<f64>>,
    seed: u64,
}

impl Trajectory {
    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn latents(&self) -> &[DVector<f64>] {
        &self.latents
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of time steps `T`; the trajectory holds `T + 1` samples.
    pub fn horizon(&self) -> usize {
        self.observations.len() - 1
    }
}

fn sample_standard_normal(rng: &mut ChaCha12Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Simulates `T + 1` steps of the model under the given family.
///
/// The RNN family starts from `h_0 = 0` with a free initial emission
/// `x_0 ~ N(0, r0)`; all other families draw `h_0 ~ N(0, eta)` and emit
/// `x_0 = b h_0 + v_0`. Noise is drawn from a seeded ChaCha12 stream
/// (standard-normal variates via the `rand_distr` ziggurat), so a given
/// seed always reproduces the same trajectory.
pub fn simulate(
    params: &GumParameters,
    family: ModelFamily,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory, ModelError> {
    params.check_family(family)?;
    let n = params.n();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let eta_factor = psd_factor(params.eta());
    let alpha_factor = psd_factor(params.alpha());
    let beta_sd = params.beta().sqrt();

    let mut latents = Vec::with_capacity(horizon + 1);
    let mut observations = Vec::with_capacity(horizon + 1);

    let h0;
    let x0;
    if family == ModelFamily::Rnn {
        h0 = DVector::zeros(n);
        let z: f64 = StandardNormal.sample(&mut rng);
        x0 = params.stationary_variance().sqrt() * z;
    } else {
        h0 = &eta_factor * sample_standard_normal(&mut rng, n);
        let v: f64 = StandardNormal.sample(&mut rng);
        x0 = (params.b() * &h0)[(0, 0)] + beta_sd * v;
    }
    latents.push(h0);
    observations.push(x0);

    for t in 1..=horizon {
        let u = &alpha_factor * sample_standard_normal(&mut rng, n);
        let h = params.a() * &latents[t - 1] + params.c() * observations[t - 1] + u;
        let v: f64 = StandardNormal.sample(&mut rng);
        let x = (params.b() * &h)[(0, 0)] + beta_sd * v;
        latents.push(h);
        observations.push(x);
    }

    Ok(Trajectory {
        observations,
        latents,
        seed,
    })
}

/// Sample covariance estimate with per-lag standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    /// Lag estimates averaged over time and trajectories.
    pub series: CovarianceSeries,
    /// Standard error of each lag estimate across trajectories; index `k`
    /// corresponds to lag `k` (index 0 is the variance estimate). Infinite
    /// when only one trajectory is available.
    pub standard_errors: Vec<f64>,
}

/// Lag-`k` sample covariances (`k = 0..=num_lags`) averaged over time
/// within each trajectory and then over trajectories; the model is
/// zero-mean by construction so no mean is subtracted.
pub fn empirical_covariance(
    trajectories: &[Trajectory],
    num_lags: usize,
) -> Result<EmpiricalCovariance, ModelError> {
    if trajectories.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let len = trajectories[0].observations.len();
    if len < num_lags + 1 {
        return Err(ModelError::TrajectoryMismatch(format!(
            "need at least {} samples for {} lags, got {}",
            num_lags + 1,
            num_lags,
            len
        )));
    }
    if let Some(t) = trajectories.iter().find(|t| t.observations.len() != len) {
        return Err(ModelError::TrajectoryMismatch(format!(
            "trajectory lengths differ: {} vs {}",
            len,
            t.observations.len()
        )));
    }

    let j = trajectories.len();
    // per_lag[k][j] = lag-k estimate of trajectory j
    let mut per_lag = vec![Vec::with_capacity(j); num_lags + 1];
    for traj in trajectories {
        let x = &traj.observations;
        for (k, bucket) in per_lag.iter_mut().enumerate() {
            let terms = len - k;
            let sum: f64 = (0..terms).map(|t| x[t] * x[t + k]).sum();
            bucket.push(sum / terms as f64);
        }
    }

    let mut means = Vec::with_capacity(num_lags + 1);
    let mut ses = Vec::with_capacity(num_lags + 1);
    for bucket in &per_lag {
        let mean = bucket.iter().sum::<f64>() / j as f64;
        means.push(mean);
        if j >= 2 {
            let var =
                bucket.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (j as f64 - 1.0);
            ses.push((var / j as f64).sqrt());
        } else {
            ses.push(f64::INFINITY);
        }
    }

    let series = CovarianceSeries::new(means[0].max(0.0), means[1..].to_vec())
        .expect("finite sample averages");
    Ok(EmpiricalCovariance {
        series,
        standard_errors: ses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_hmc(a: f64, b: f64, alpha: f64, beta: f64) -> GumParameters {
        let eta = alpha / (1.0 - a * a);
        GumParameters::scalar(a, b, 0.0, alpha, beta, eta).unwrap()
    }

    #[test]
    fn closed_loop_reduces_to_a_for_hmc() {
        let a = DMatrix::from_row_slice(3, 3, &[0.2, 0.1, 0.0, 0.0, 0.3, 0.1, 0.1, 0.0, 0.4]);
        let p = GumParameters::new(
            a.clone(),
            RowDVector::from_row_slice(&[1.0, 0.0, 0.5]),
            DVector::zeros(3),
            DMatrix::identity(3, 3),
            1.0,
            DMatrix::identity(3, 3),
        )
        .unwrap();
        assert_eq!(p.closed_loop_matrix(), a);
    }

    #[test]
    fn closed_loop_scalar_arithmetic() {
        // 0.3 + 0.4 * 0.5 = 0.5
        let p = GumParameters::scalar(0.3, 0.5, 0.4, 0.1, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.closed_loop_matrix()[(0, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn closed_loop_zero() {
        let p = GumParameters::scalar(0.0, 0.7, 0.0, 0.1, 1.0, 0.1).unwrap();
        assert_eq!(p.closed_loop_matrix()[(0, 0)], 0.0);
    }

    #[test]
    fn stationarity_scalar_example() {
        // eta = 0.75 + 0.25 * eta  =>  eta = 1
        let p = GumParameters::scalar(0.5, 0.0, 0.0, 0.75, 1.0, 1.0).unwrap();
        assert!(is_stationary(&p, 1e-10));
        let d = stationarity_diagnostics(&p, 1e-10);
        assert_abs_diff_eq!(d.spectral_radius, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.lyapunov_residual, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn stationarity_rejects_unstable() {
        let p = GumParameters::scalar(1.1, 0.0, 0.0, 0.1, 1.0, 1.0).unwrap();
        assert!(!is_stationary(&p, 1e-10));
    }

    #[test]
    fn solver_output_is_stationary() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let b = RowDVector::from_row_slice(&[1.0, -0.5]);
        let c = DVector::from_column_slice(&[0.2, 0.1]);
        let alpha = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        let p = GumParameters::with_stationary_eta(a, b, c, alpha, 0.8).unwrap();
        assert!(is_stationary(&p, 1e-10));
    }

    #[test]
    fn solve_eta_scalar_geometric() {
        let eta = solve_stationary_eta(
            &DMatrix::from_element(1, 1, 0.5),
            &RowDVector::from_element(1, 0.0),
            &DVector::from_element(1, 0.0),
            &DMatrix::from_element(1, 1, 0.75),
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(eta[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_eta_zero_noise() {
        let eta = solve_stationary_eta(
            &DMatrix::from_element(1, 1, 0.9),
            &RowDVector::from_element(1, 1.0),
            &DVector::from_element(1, 0.0),
            &DMatrix::from_element(1, 1, 0.0),
            0.0,
        )
        .unwrap();
        assert_eq!(eta[(0, 0)], 0.0);
    }

    #[test]
    fn solve_eta_residual_3x3() {
        let a = DMatrix::from_row_slice(3, 3, &[0.4, 0.1, -0.2, 0.0, 0.3, 0.1, 0.2, -0.1, 0.5]);
        let b = RowDVector::from_row_slice(&[1.0, 0.5, -1.0]);
        let c = DVector::from_column_slice(&[0.1, -0.2, 0.05]);
        let alpha = {
            let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 0.8, 0.1, 0.0, 0.1, 0.5]);
            symmetrize(&g)
        };
        let eta = solve_stationary_eta(&a, &b, &c, &alpha, 0.7).unwrap();
        let f = &a + &c * &b;
        let noise = &alpha + &c * 0.7 * c.transpose();
        let residual = (&eta - &noise - &f * &eta * f.transpose()).amax();
        assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn solve_eta_rejects_unstable() {
        let err = solve_stationary_eta(
            &DMatrix::from_element(1, 1, 1.0),
            &RowDVector::from_element(1, 0.0),
            &DVector::from_element(1, 0.0),
            &DMatrix::from_element(1, 1, 1.0),
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NotStable { .. }));
    }

    #[test]
    fn covariance_iid_emissions() {
        // a = 0, c = 0: observations are white given a white latent.
        let p = GumParameters::scalar(0.0, 1.0, 0.0, 0.5, 0.5, 0.5).unwrap();
        let s = analytic_covariance(&p, 4).unwrap();
        assert_abs_diff_eq!(s.r0(), 1.0, epsilon = 1e-15);
        for k in 1..=4 {
            assert_abs_diff_eq!(s.lag(k), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn covariance_scalar_geometric_decay() {
        // (H, F, N) = (1, 0.5, 0.5): r_k = 0.5^{k-1} * 0.5, r0 = 1.
        let p = GumParameters::scalar(0.5, 1.0, 0.0, 0.75, 0.0, 1.0).unwrap();
        let s = analytic_covariance(&p, 5).unwrap();
        assert_abs_diff_eq!(s.r0(), 1.0, epsilon = 1e-15);
        for k in 1..=5 {
            let expected = 0.5f64.powi(k as i32 - 1) * 0.5;
            assert_abs_diff_eq!(s.lag(k), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn covariance_requires_stationarity() {
        let p = GumParameters::scalar(0.5, 1.0, 0.0, 0.75, 0.0, 2.0).unwrap();
        assert!(matches!(
            analytic_covariance(&p, 3),
            Err(ModelError::NotStationary { .. })
        ));
    }

    #[test]
    fn transient_covariance_converges_to_stationary() {
        let p = GumParameters::scalar(0.6, 1.0, 0.2, 0.3, 0.4, 0.0).unwrap();
        // Propagate eta_t from zero; it must approach the Lyapunov solution
        // and the transient lags must approach the stationary ones.
        let eta_star = solve_stationary_eta(p.a(), p.b(), p.c(), p.alpha(), p.beta()).unwrap();
        let mut eta_t = DMatrix::zeros(1, 1);
        for _ in 0..200 {
            eta_t = eta_step(&p, &eta_t);
        }
        assert_abs_diff_eq!(eta_t[(0, 0)], eta_star[(0, 0)], epsilon = 1e-12);
        let stationary =
            GumParameters::scalar(0.6, 1.0, 0.2, 0.3, 0.4, eta_star[(0, 0)]).unwrap();
        let reference = analytic_covariance(&stationary, 3).unwrap();
        let (var_t, lags) = transient_covariance(&p, &eta_t, 3);
        assert_abs_diff_eq!(var_t, reference.r0(), epsilon = 1e-10);
        for k in 1..=3 {
            assert_abs_diff_eq!(lags[k - 1], reference.lag(k), epsilon = 1e-10);
        }
    }

    #[test]
    fn simulate_zero_noise_gives_zero_trajectory() {
        let p = GumParameters::scalar(0.5, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let t = simulate(&p, ModelFamily::Gum, 50, 7).unwrap();
        assert_eq!(t.observations().len(), 51);
        assert_eq!(t.latents().len(), 51);
        assert!(t.observations().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn simulate_is_deterministic_in_seed() {
        let p = scalar_hmc(0.7, 1.0, 0.51, 0.3);
        let t1 = simulate(&p, ModelFamily::Hmc, 100, 99).unwrap();
        let t2 = simulate(&p, ModelFamily::Hmc, 100, 99).unwrap();
        assert_eq!(t1.observations(), t2.observations());
        let t3 = simulate(&p, ModelFamily::Hmc, 100, 100).unwrap();
        assert_ne!(t1.observations(), t3.observations());
    }

    #[test]
    fn simulate_rejects_family_violation() {
        let p = GumParameters::scalar(0.3, 1.0, 0.4, 0.1, 1.0, 1.0).unwrap();
        assert!(matches!(
            simulate(&p, ModelFamily::Hmc, 10, 0),
            Err(ModelError::FamilyViolation { .. })
        ));
    }

    #[test]
    fn hmc_trajectories_ignore_feedback_path() {
        // With c = 0 the GUM and HMC paths are the same program; identical
        // seeds must give identical trajectories (hence identical
        // covariances).
        let p = scalar_hmc(0.6, 1.2, 0.64, 0.5);
        let as_hmc = simulate(&p, ModelFamily::Hmc, 500, 3).unwrap();
        let as_gum = simulate(&p, ModelFamily::Gum, 500, 3).unwrap();
        assert_eq!(as_hmc.observations(), as_gum.observations());
    }

    #[test]
    fn empirical_covariance_zero_trajectories() {
        let p = GumParameters::scalar(0.5, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let trajs: Vec<_> = (0..3)
            .map(|s| simulate(&p, ModelFamily::Gum, 40, s).unwrap())
            .collect();
        let e = empirical_covariance(&trajs, 4).unwrap();
        assert_eq!(e.series.r0(), 0.0);
        assert!(e.series.lags().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empirical_covariance_white_noise() {
        let p = GumParameters::scalar(0.0, 0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let trajs: Vec<_> = (0..50)
            .map(|s| simulate(&p, ModelFamily::Gum, 1000, 1000 + s).unwrap())
            .collect();
        let e = empirical_covariance(&trajs, 3).unwrap();
        assert!((e.series.r0() - 1.0).abs() < 5.0 * e.standard_errors[0]);
        for k in 1..=3 {
            assert!(e.series.lag(k).abs() < 5.0 * e.standard_errors[k]);
        }
    }

    #[test]
    fn empirical_matches_analytic_within_five_se() {
        // Monte-Carlo oracle for the analytic covariance formulas.
        let p = GumParameters::scalar(0.5, 1.0, 0.0, 0.75, 0.0, 1.0).unwrap();
        let analytic = analytic_covariance(&p, 5).unwrap();
        let trajs: Vec<_> = (0..100)
            .map(|s| simulate(&p, ModelFamily::Hmc, 2000, 500 + s).unwrap())
            .collect();
        let e = empirical_covariance(&trajs, 5).unwrap();
        assert!((e.series.r0() - analytic.r0()).abs() < 5.0 * e.standard_errors[0]);
        for k in 1..=5 {
            assert!(
                (e.series.lag(k) - analytic.lag(k)).abs() < 5.0 * e.standard_errors[k],
                "lag {k}: {} vs {}",
                e.series.lag(k),
                analytic.lag(k)
            );
        }
    }

    #[test]
    fn empirical_covariance_input_validation() {
        assert!(matches!(
            empirical_covariance(&[], 3),
            Err(ModelError::EmptyInput)
        ));
        let p = GumParameters::scalar(0.0, 0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let t = simulate(&p, ModelFamily::Gum, 2, 0).unwrap();
        assert!(matches!(
            empirical_covariance(&[t], 5),
            Err(ModelError::TrajectoryMismatch(_))
        ));
    }

    #[test]
    fn family_constraints() {
        let hmc = scalar_hmc(0.5, 1.0, 0.75, 0.1);
        assert!(hmc.family_violation(ModelFamily::Hmc).is_none());
        assert!(hmc.family_violation(ModelFamily::Dgum).is_some());

        // D-GUM with a = 0 on the first RNN branch: eta = c^2 r0.
        let (b, c, beta) = (0.8, 0.5, 1.0);
        let r0 = beta / (1.0 - b * b * c * c);
        let eta = c * c * r0;
        let rnn = GumParameters::scalar(0.0, b, c, 0.0, beta, eta).unwrap();
        assert!(rnn.family_violation(ModelFamily::Rnn).is_none());
        assert!(rnn.family_violation(ModelFamily::Hmc).is_some());
        assert!(is_stationary(&rnn, 1e-10));
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(matches!(
            GumParameters::scalar(0.5, 1.0, 0.0, -0.1, 1.0, 1.0),
            Err(ModelError::NotSymmetricPsd { .. })
        ));
        assert!(matches!(
            GumParameters::scalar(0.5, 1.0, 0.0, 0.1, -1.0, 1.0),
            Err(ModelError::NegativeBeta(_))
        ));
    }
}
