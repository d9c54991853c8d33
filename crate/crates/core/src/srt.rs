//! Stochastic realization: noise covariances compatible with a series.
//!
//! Given a minimal `(H, F, N)` and `r0`, a stochastic realization is a
//! choice of `(P, Q, R, S)` with
//!
//! ```text
//! [[P, N], [Nᵀ, r0]] - [F; H] P [Fᵀ Hᵀ] = [[Q, S], [Sᵀ, R]]
//! P > 0,   [[Q, S], [Sᵀ, R]] ⪰ 0
//! ```
//!
//! The set of admissible `P` is closed, convex, bounded and ordered, with
//! extremal elements reachable by Riccati iteration: the minimum from the
//! forward iteration started at zero, the maximum as the inverse of the
//! minimum of the time-reversed (dual) realization `(Nᵀ, Fᵀ, Hᵀ)`. The
//! series is an actual covariance series iff the set is non-empty
//! (positive real lemma); an independent finite Toeplitz test is provided
//! as a cross-check oracle.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{
    min_symmetric_eigenvalue, symmetric_norm, symmetric_toeplitz, symmetrize, STRICT_POS_TOL,
};
use crate::realization::RealizationTriplet;
use crate::series::CovarianceSeries;

/// Relative update threshold declaring Riccati convergence.
pub const RICCATI_TOL: f64 = 1e-12;

/// Iteration cap for the Riccati fixed-point search.
pub const RICCATI_MAX_ITER: usize = 10_000;

#[derive(Debug, Error)]
pub enum SrtError {
    #[error("P is infeasible: {0}")]
    Infeasible(String),
    #[error("series is not positive real: {0}")]
    NotPositiveReal(String),
    #[error("Riccati iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("operation requires a scalar realization, got order {0}")]
    NotScalar(usize),
    #[error("Toeplitz test of size {needed} needs {needed} lags, series stores {available}")]
    InsufficientLags { needed: usize, available: usize },
}

/// A full stochastic realization `(P, Q, R, S)` of a series.
#[derive(Debug, Clone)]
pub struct NoiseCovariances {
    /// Stationary state covariance.
    pub p: DMatrix<f64>,
    /// State noise covariance (top-left block of the residual).
    pub q: DMatrix<f64>,
    /// Observation noise variance (bottom-right scalar).
    pub r: f64,
    /// State/observation noise cross-covariance.
    pub s: DVector<f64>,
}

/// Summary of the feasibility set: emptiness, extremal elements, and the
/// closed-form interval in the scalar case.
#[derive(Debug, Clone)]
pub struct SolutionSetSummary {
    pub feasible: bool,
    pub p_min: Option<DMatrix<f64>>,
    pub p_max: Option<DMatrix<f64>>,
    /// `[P1, P2]` when the realization is scalar.
    pub scalar_interval: Option<(f64, f64)>,
    /// Set when `P_min` touches the zero boundary (possible only for the
    /// degenerate all-zero-lag series).
    pub degenerate: bool,
    pub diagnostics: String,
}

/// Residual `[[P, N], [Nᵀ, r0]] - [F; H] P [Fᵀ Hᵀ]`, symmetrized. For a
/// feasible `P` this is the noise covariance block `[[Q, S], [Sᵀ, R]]`.
pub fn residual_matrix(
    triplet: &RealizationTriplet,
    r0: f64,
    p: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = triplet.order();
    assert_eq!(p.nrows(), n, "P must be {n}x{n}");
    assert_eq!(p.ncols(), n, "P must be {n}x{n}");
    let mut out = DMatrix::zeros(n + 1, n + 1);
    let q_block = p - triplet.f() * p * triplet.f().transpose();
    let s_block = triplet.n_vec() - triplet.f() * p * triplet.h().transpose();
    let r_scalar = r0 - (triplet.h() * p * triplet.h().transpose())[(0, 0)];
    out.view_mut((0, 0), (n, n)).copy_from(&q_block);
    out.view_mut((0, n), (n, 1)).copy_from(&s_block);
    out.view_mut((n, 0), (1, n)).copy_from(&s_block.transpose());
    out[(n, n)] = r_scalar;
    symmetrize(&out)
}

/// Feasibility of a candidate `P`: strictly positive definite, with a
/// residual that is PSD within `tol` (relative).
pub fn is_feasible(triplet: &RealizationTriplet, r0: f64, p: &DMatrix<f64>, tol: f64) -> bool {
    if min_symmetric_eigenvalue(p) <= STRICT_POS_TOL {
        return false;
    }
    let res = residual_matrix(triplet, r0, p);
    min_symmetric_eigenvalue(&res) > -tol * (1.0 + symmetric_norm(&res))
}

/// Splits the residual at a feasible `P` into the noise covariances
/// `(Q, R, S)`.
pub fn extract_noise(
    triplet: &RealizationTriplet,
    r0: f64,
    p: &DMatrix<f64>,
    tol: f64,
) -> Result<NoiseCovariances, SrtError> {
    let n = triplet.order();
    // Order zero: no state, the observation is pure noise.
    if n > 0 && !is_feasible(triplet, r0, p, tol) {
        let res = residual_matrix(triplet, r0, p);
        return Err(SrtError::Infeasible(format!(
            "min eig(P) = {:.3e}, min eig(residual) = {:.3e}",
            min_symmetric_eigenvalue(p),
            min_symmetric_eigenvalue(&res)
        )));
    }
    let res = residual_matrix(triplet, r0, p);
    Ok(NoiseCovariances {
        p: p.clone(),
        q: res.view((0, 0), (n, n)).clone_owned(),
        s: res.view((0, n), (n, 1)).clone_owned().column(0).into(),
        r: res[(n, n)],
    })
}

/// One Riccati map application
/// `P ↦ F P Fᵀ + (N - F P Hᵀ)(r0 - H P Hᵀ)⁻¹(N - F P Hᵀ)ᵀ`.
/// Returns `None` when the `r0 - H P Hᵀ` guard fails.
fn riccati_map(
    h: &nalgebra::RowDVector<f64>,
    f: &DMatrix<f64>,
    n_vec: &DVector<f64>,
    r0: f64,
    p: &DMatrix<f64>,
) -> Option<DMatrix<f64>> {
    let denom = r0 - (h * p * h.transpose())[(0, 0)];
    if denom <= STRICT_POS_TOL * (1.0 + r0) {
        return None;
    }
    let gain = n_vec - f * p * h.transpose();
    Some(symmetrize(
        &(f * p * f.transpose() + &gain * gain.transpose() / denom),
    ))
}

/// Monotone Riccati iteration from `P = 0` towards the minimal solution.
fn riccati_minimum(
    h: &nalgebra::RowDVector<f64>,
    f: &DMatrix<f64>,
    n_vec: &DVector<f64>,
    r0: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(DMatrix<f64>, usize), SrtError> {
    let n = f.nrows();
    let mut p = DMatrix::zeros(n, n);
    for it in 1..=max_iter {
        let next = riccati_map(h, f, n_vec, r0, &p).ok_or_else(|| {
            SrtError::NotPositiveReal(format!(
                "r0 - H P Hᵀ became nonpositive at iteration {it}"
            ))
        })?;
        let delta = (&next - &p).amax();
        p = next;
        if p.amax() > 1e12 * (1.0 + r0) {
            return Err(SrtError::NotPositiveReal(format!(
                "iteration diverged at step {it}"
            )));
        }
        if delta <= tol * (1.0 + p.amax()) {
            return Ok((p, it));
        }
    }
    Err(SrtError::NoConvergence {
        iterations: max_iter,
    })
}

/// Extremal elements of the feasibility set and Riccati diagnostics.
#[derive(Debug, Clone)]
pub struct ExtremalSolutions {
    pub p_min: DMatrix<f64>,
    pub p_max: DMatrix<f64>,
    pub iterations_min: usize,
    pub iterations_max: usize,
    /// `P_min` touches the zero boundary (degenerate series with all
    /// positive lags null); strictness is reported instead of failing.
    pub degenerate: bool,
}

/// Computes the minimum and maximum of the feasibility set.
///
/// `P_min` is the limit of the forward Riccati iteration from zero.
/// `P_max` is obtained from the dual (time-reversed) realization
/// `(Nᵀ, Fᵀ, Hᵀ)`: the dual minimum `P'` satisfies `P_max = P'⁻¹`.
pub fn compute_extremal_p(
    triplet: &RealizationTriplet,
    r0: f64,
    max_iter: usize,
    tol: f64,
) -> Result<ExtremalSolutions, SrtError> {
    let n = triplet.order();
    if n == 0 {
        return Ok(ExtremalSolutions {
            p_min: DMatrix::zeros(0, 0),
            p_max: DMatrix::zeros(0, 0),
            iterations_min: 0,
            iterations_max: 0,
            degenerate: false,
        });
    }
    if r0 <= 0.0 {
        return Err(SrtError::NotPositiveReal(format!(
            "r0 must be positive for an order-{n} realization, got {r0}"
        )));
    }
    let (p_min, iterations_min) =
        riccati_minimum(triplet.h(), triplet.f(), triplet.n_vec(), r0, max_iter, tol)?;

    let dual_h = triplet.n_vec().transpose();
    let dual_f = triplet.f().transpose();
    let dual_n = triplet.h().transpose();
    let (p_dual, iterations_max) = riccati_minimum(&dual_h, &dual_f, &dual_n, r0, max_iter, tol)?;
    let p_max = p_dual.clone().try_inverse().ok_or_else(|| {
        SrtError::NotPositiveReal(
            "dual minimal solution is singular; no finite maximal element".into(),
        )
    })?;
    let p_max = symmetrize(&p_max);

    let degenerate = min_symmetric_eigenvalue(&p_min) <= STRICT_POS_TOL;
    Ok(ExtremalSolutions {
        p_min,
        p_max,
        iterations_min,
        iterations_max,
        degenerate,
    })
}

/// Closed-form feasibility interval `[P1, P2]` for scalar realizations.
///
/// Empty unless `|F| ≤ 1` and `r0 (F-1)/2 ≤ HN ≤ r0 (F+1)/2`; otherwise
/// the endpoints are the roots of the concave quadratic
/// `Ξ(P) = -H²P² + [r0(1-F²) + 2HFN] P - N²`.
pub fn scalar_interval(
    triplet: &RealizationTriplet,
    r0: f64,
) -> Result<Option<(f64, f64)>, SrtError> {
    if triplet.order() != 1 {
        return Err(SrtError::NotScalar(triplet.order()));
    }
    Ok(scalar_interval_raw(
        triplet.h()[0],
        triplet.f()[(0, 0)],
        triplet.n_vec()[0],
        r0,
    ))
}

/// Scalar interval from raw values; `None` when the feasibility set is
/// empty. Requires `H ≠ 0` (minimality), returns `None` otherwise.
pub fn scalar_interval_raw(h: f64, f: f64, n: f64, r0: f64) -> Option<(f64, f64)> {
    if h == 0.0 || f.abs() > 1.0 {
        return None;
    }
    let hn = h * n;
    let lower = r0 * (f - 1.0) / 2.0;
    let upper = r0 * (f + 1.0) / 2.0;
    if hn < lower || hn > upper {
        return None;
    }
    let delta = (1.0 - f * f) * (r0 * (1.0 + f) - 2.0 * hn) * (r0 * (1.0 - f) + 2.0 * hn);
    // Rounding can push the discriminant marginally negative on the
    // boundary where the interval collapses to a point.
    let sq = delta.max(0.0).sqrt();
    let mid = 2.0 * h * f * n + r0 * (1.0 - f * f);
    let h2 = 2.0 * h * h;
    Some(((mid - sq) / h2, (mid + sq) / h2))
}

/// Finite Toeplitz positivity test: true iff the `(m+1) x (m+1)` symmetric
/// Toeplitz matrix with first row `[r0, …, r_m]` has minimum eigenvalue
/// `≥ -tol · r0`. Necessary for any covariance series and an independent
/// oracle for the positive-real machinery.
pub fn toeplitz_is_covariance(
    series: &CovarianceSeries,
    m: usize,
    tol: f64,
) -> Result<bool, SrtError> {
    if m > series.num_lags() {
        return Err(SrtError::InsufficientLags {
            needed: m,
            available: series.num_lags(),
        });
    }
    let mut first_row = Vec::with_capacity(m + 1);
    first_row.push(series.r0());
    first_row.extend(series.lags().iter().take(m));
    let t = symmetric_toeplitz(&first_row);
    Ok(min_symmetric_eigenvalue(&t) >= -tol * series.r0())
}

/// Positive-real verdict with the minimal element as certificate when the
/// series is a covariance series, or the failing diagnostic otherwise.
#[derive(Debug, Clone)]
pub struct PositiveRealCertificate {
    pub is_covariance: bool,
    pub p_min: Option<DMatrix<f64>>,
    pub p_max: Option<DMatrix<f64>>,
    pub degenerate: bool,
    pub failure: Option<String>,
}

pub fn positive_real_check(triplet: &RealizationTriplet, r0: f64) -> PositiveRealCertificate {
    match compute_extremal_p(triplet, r0, RICCATI_MAX_ITER, RICCATI_TOL) {
        Ok(ext) => PositiveRealCertificate {
            is_covariance: true,
            p_min: Some(ext.p_min),
            p_max: Some(ext.p_max),
            degenerate: ext.degenerate,
            failure: None,
        },
        Err(e) => PositiveRealCertificate {
            is_covariance: false,
            p_min: None,
            p_max: None,
            degenerate: false,
            failure: Some(e.to_string()),
        },
    }
}

/// Full summary for external consumers: extremals plus the scalar
/// closed-form interval when the order is 1.
pub fn solution_set_summary(triplet: &RealizationTriplet, r0: f64) -> SolutionSetSummary {
    let cert = positive_real_check(triplet, r0);
    let scalar = if triplet.order() == 1 {
        scalar_interval(triplet, r0).expect("order checked")
    } else {
        None
    };
    let diagnostics = match (&cert.failure, triplet.order()) {
        (Some(f), _) => f.clone(),
        (None, 0) => "order 0: pure white noise, any nonnegative r0 is feasible".into(),
        (None, _) => {
            let p_min = cert.p_min.as_ref().expect("feasible");
            let p_max = cert.p_max.as_ref().expect("feasible");
            format!(
                "min eig(P_min) = {:.6e}, min eig(P_max - P_min) = {:.6e}",
                min_symmetric_eigenvalue(p_min),
                min_symmetric_eigenvalue(&(p_max - p_min))
            )
        }
    };
    SolutionSetSummary {
        feasible: cert.is_covariance,
        p_min: cert.p_min,
        p_max: cert.p_max,
        scalar_interval: scalar,
        degenerate: cert.degenerate,
        diagnostics,
    }
}
