//! Which model families can produce a given covariance series.
//!
//! Every factorizable covariance series is realizable by the
//! unconstrained model. The constrained families are decided on the
//! feasibility set of the stochastic realization step:
//!
//! * HMC — some feasible state covariance must satisfy `F P̃ Hᵀ = N`
//!   (forcing a zero noise cross-term), so the search runs over an affine
//!   slice of the feasibility set.
//! * D-GUM — some feasible `P̃` must be a fixed point of the Riccati map;
//!   the extremal elements are exactly such fixed points.
//! * RNN — additionally `P̃ = r0 (r0 - H P̃ Hᵀ)⁻² (N - F P̃ Hᵀ)(…)ᵀ`,
//!   which is rank one and therefore impossible above order 1. In the
//!   scalar case the condition collapses to the two curves `HN = r0 F`
//!   and `HN = r0 F (2F² - 1)`.
//!
//! Verdicts ship witness parameters that reproduce the input series, and
//! the scalar case is rendered as a cartography over the `(F, HN)` plane
//! with closed-form and pipeline labels computed independently.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::linalg::{
    condition_number, min_symmetric_eigenvalue, pseudo_inverse, solve_discrete_lyapunov,
    spectral_radius, symmetrize, STRICT_POS_TOL,
};
use crate::model::{analytic_covariance, GumParameters, ModelError};
use crate::realization::{ho_kalman, numerical_rank, RealizationError, RealizationTriplet};
use crate::series::CovarianceSeries;
use crate::srt::{
    compute_extremal_p, extract_noise, is_feasible, scalar_interval_raw, SrtError,
};

/// Witness parameters must reproduce the input series to this relative
/// tolerance.
pub const WITNESS_TOL: f64 = 1e-8;

/// Residual tolerance for the Riccati fixed-point (D-GUM) and RNN
/// conditions.
pub const FIXED_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExpressivityError {
    #[error("observation-noise block R = {r:.3e} is degenerate; no feedback form exists")]
    DegenerateR { r: f64 },
    #[error(transparent)]
    Srt(#[from] SrtError),
    #[error(transparent)]
    Realization(#[from] RealizationError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tuning knobs of the classification pipeline.
#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Relative singular-value threshold for rank decisions.
    pub rank_tol: f64,
    /// Relative PSD tolerance for feasibility checks.
    pub psd_tol: f64,
    /// Riccati convergence threshold (relative update).
    pub riccati_tol: f64,
    /// Riccati iteration cap.
    pub riccati_max_iter: usize,
    /// Fixed Hankel window `(p, q)`; derived from the data when absent.
    pub window: Option<(usize, usize)>,
    /// Iteration cap of the alternating-projection HMC search.
    pub hmc_search_iters: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            psd_tol: 1e-9,
            riccati_tol: 1e-12,
            riccati_max_iter: 10_000,
            window: None,
            hmc_search_iters: 1000,
        }
    }
}

/// Feedback form of a stochastic realization: rewrites `(F, H, Q, R, S)`
/// at a feasible `P` into model parameters
/// `a = F - S R⁻¹ H`, `b = H`, `c = S R⁻¹`, `beta = R`,
/// `alpha = Q - S R⁻¹ Sᵀ`, `eta = P`. Requires `R > tol`.
pub fn gum_from_realization(
    triplet: &RealizationTriplet,
    r0: f64,
    p: &DMatrix<f64>,
    tol: f64,
) -> Result<GumParameters, ExpressivityError> {
    let r = r0 - (triplet.h() * p * triplet.h().transpose())[(0, 0)];
    if r <= tol {
        return Err(ExpressivityError::DegenerateR { r });
    }
    let noise = extract_noise(triplet, r0, p, tol.max(1e-9))?;
    let c = &noise.s / noise.r;
    let a = triplet.f() - &c * triplet.h();
    let alpha = symmetrize(&(&noise.q - &noise.s * noise.s.transpose() / noise.r));
    // Rounding can leave alpha indefinite at the 1e-16 level; clamp.
    let alpha = clamp_psd(&alpha, 0.0);
    Ok(GumParameters::new(
        a,
        triplet.h().clone(),
        c,
        alpha,
        noise.r,
        p.clone(),
    )?)
}

/// Eigenvalue floor projection onto `{M : M ⪰ floor·I}` (Frobenius).
fn clamp_psd(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let eig = symmetrize(m).symmetric_eigen();
    let clamped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(floor)),
    );
    symmetrize(&(&eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()))
}

/// Placeholder model for the order-zero (white noise) series: one inert
/// latent dimension, pure observation noise. Satisfies every family
/// constraint.
fn white_noise_witness(r0: f64) -> GumParameters {
    GumParameters::scalar(0.0, 0.0, 0.0, 0.0, r0, 0.0).expect("valid white-noise parameters")
}

/// Relative error between the witness's analytic covariance and the
/// target series over the stored lags.
fn witness_roundtrip_error(witness: &GumParameters, series: &CovarianceSeries) -> f64 {
    let k = series.num_lags();
    match analytic_covariance(witness, k) {
        Ok(got) => {
            let scale = 1.0 + series.r0().abs().max(series.max_abs_lag());
            let mut err = (got.r0() - series.r0()).abs();
            for (a, b) in got.lags().iter().zip(series.lags()) {
                err = err.max((a - b).abs());
            }
            err / scale
        }
        Err(_) => f64::INFINITY,
    }
}

// ---------------------------------------------------------------------------
// HMC feasibility
// ---------------------------------------------------------------------------

/// Outcome of the HMC feasibility search.
#[derive(Debug, Clone)]
pub enum HmcVerdict {
    Realizable {
        p_tilde: DMatrix<f64>,
        witness: Option<GumParameters>,
    },
    Refuted {
        reason: String,
    },
    /// The projection search hit its iteration cap without either finding
    /// a feasible point or violating a necessary condition.
    Undetermined {
        detail: String,
    },
}

impl HmcVerdict {
    pub fn is_realizable(&self) -> bool {
        matches!(self, HmcVerdict::Realizable { .. })
    }
}

/// Symmetric-matrix vectorization with off-diagonals scaled by sqrt(2), so
/// Frobenius inner products become dot products.
struct SymBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl SymBasis {
    fn new(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                pairs.push((i, j));
            }
        }
        Self { n, pairs }
    }

    fn dim(&self) -> usize {
        self.pairs.len()
    }

    fn svec(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.pairs.iter().map(|&(i, j)| {
                if i == j {
                    m[(i, i)]
                } else {
                    std::f64::consts::SQRT_2 * m[(i, j)]
                }
            }),
        )
    }

    fn unsvec(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (idx, &(i, j)) in self.pairs.iter().enumerate() {
            if i == j {
                m[(i, i)] = x[idx];
            } else {
                let v = x[idx] / std::f64::consts::SQRT_2;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Unit basis matrix for pair index `idx`.
    fn basis_matrix(&self, idx: usize) -> DMatrix<f64> {
        let (i, j) = self.pairs[idx];
        let mut e = DMatrix::zeros(self.n, self.n);
        if i == j {
            e[(i, i)] = 1.0;
        } else {
            let v = 1.0 / std::f64::consts::SQRT_2;
            e[(i, j)] = v;
            e[(j, i)] = v;
        }
        e
    }
}

/// Decides realizability by an HMC of the same order: is there a feasible
/// `P̃` with `F P̃ Hᵀ = N` (equivalently a zero noise cross-term)?
///
/// Necessary screens run first: the affine constraint must be solvable
/// (`N` in the column span of `F`), and when `F` is invertible the pinned
/// scalar `H F⁻¹ N = H P̃ Hᵀ` must lie in `(0, r0]`. The scalar case then
/// has the closed form `P̃ = N/(HF)` accepted iff it lies in the
/// feasibility interval; higher orders run alternating projections over
/// the affine slice (the feasible target set is convex).
pub fn hmc_feasible(
    triplet: &RealizationTriplet,
    r0: f64,
    opts: &ClassifyOptions,
) -> HmcVerdict {
    let n = triplet.order();
    if n == 0 {
        return HmcVerdict::Realizable {
            p_tilde: DMatrix::zeros(0, 0),
            witness: Some(white_noise_witness(r0)),
        };
    }
    let h = triplet.h();
    let f = triplet.f();
    let n_vec = triplet.n_vec();
    let scale = 1.0 + r0 + n_vec.amax();

    // Screen: N must lie in the column span of F.
    let f_pinv = pseudo_inverse(f, opts.rank_tol);
    let span_residual = (f * &f_pinv * n_vec - n_vec).amax();
    if span_residual > 1e-8 * scale {
        return HmcVerdict::Refuted {
            reason: format!(
                "F P̃ Hᵀ = N is unsolvable: N is outside span(F) by {span_residual:.3e}"
            ),
        };
    }

    // Screen: with F invertible, H P̃ Hᵀ = H F⁻¹ N is pinned.
    if condition_number(f) < 1e12 {
        let pinned = (h * &f_pinv * n_vec)[(0, 0)];
        if pinned <= STRICT_POS_TOL * scale {
            return HmcVerdict::Refuted {
                reason: format!(
                    "pinned variance H F⁻¹ N = {pinned:.3e} is not strictly positive"
                ),
            };
        }
        if pinned > r0 + 1e-9 * scale {
            return HmcVerdict::Refuted {
                reason: format!(
                    "pinned variance H F⁻¹ N = {pinned:.3e} exceeds r0 = {r0}"
                ),
            };
        }
    }

    if n == 1 {
        let (hs, fs, ns) = (h[0], f[(0, 0)], n_vec[0]);
        if fs == 0.0 || hs == 0.0 {
            return HmcVerdict::Refuted {
                reason: "scalar closed form needs H ≠ 0 and F ≠ 0".into(),
            };
        }
        let p_tilde = ns / (hs * fs);
        let Some((p1, p2)) = scalar_interval_raw(hs, fs, ns, r0) else {
            return HmcVerdict::Refuted {
                reason: "feasibility interval is empty (not a covariance series)".into(),
            };
        };
        let slack = 1e-9 * (1.0 + p2.abs());
        if p_tilde >= p1 - slack && p_tilde <= p2 + slack && p_tilde > 0.0 {
            let p_mat = DMatrix::from_element(1, 1, p_tilde);
            let witness = hmc_witness(triplet, r0, &p_mat, opts);
            return HmcVerdict::Realizable {
                p_tilde: p_mat,
                witness,
            };
        }
        return HmcVerdict::Refuted {
            reason: format!(
                "P̃ = N/(HF) = {p_tilde:.6} lies outside the feasibility interval \
                 [{p1:.6}, {p2:.6}]"
            ),
        };
    }

    // Necessary condition for any constrained solution: the full
    // feasibility set must be non-empty.
    let extremals = match compute_extremal_p(triplet, r0, opts.riccati_max_iter, opts.riccati_tol)
    {
        Ok(e) => Some(e),
        Err(SrtError::NotPositiveReal(reason)) => {
            return HmcVerdict::Refuted {
                reason: format!("not a covariance series: {reason}"),
            };
        }
        Err(_) => None,
    };

    // Affine slice {P symmetric : F P Hᵀ = N} in svec coordinates.
    let basis = SymBasis::new(n);
    let d = basis.dim();
    let mut a_mat = DMatrix::zeros(n, d);
    for idx in 0..d {
        let col = f * basis.basis_matrix(idx) * h.transpose();
        a_mat.column_mut(idx).copy_from(&col);
    }
    let a_pinv = pseudo_inverse(&a_mat, opts.rank_tol);
    let x_particular = &a_pinv * n_vec;
    let solve_residual = (&a_mat * &x_particular - n_vec).amax();
    if solve_residual > 1e-8 * scale {
        return HmcVerdict::Refuted {
            reason: format!(
                "no symmetric P̃ satisfies F P̃ Hᵀ = N (residual {solve_residual:.3e})"
            ),
        };
    }

    let project_affine = |p: &DMatrix<f64>| -> DMatrix<f64> {
        let x = basis.svec(p);
        basis.unsvec(&(&x - &a_pinv * (&a_mat * &x - n_vec)))
    };

    let accept = |p: &DMatrix<f64>| -> bool {
        is_feasible(triplet, r0, p, opts.psd_tol)
            && (f * p * h.transpose() - n_vec).amax() <= 1e-8 * scale
    };

    let mut seeds: Vec<DMatrix<f64>> = vec![basis.unsvec(&x_particular)];
    if let Some(ext) = &extremals {
        seeds.push(project_affine(&ext.p_min));
        seeds.push(project_affine(&ext.p_max));
        seeds.push(project_affine(&((&ext.p_min + &ext.p_max) * 0.5)));
    }

    let rho_f = spectral_radius(f);
    let h_gram = h.transpose() * h; // n x n
    let h_norm2 = (h * h.transpose())[(0, 0)];

    for seed in seeds {
        let mut p = project_affine(&symmetrize(&seed));
        for _ in 0..opts.hmc_search_iters {
            if accept(&p) {
                let p_tilde = symmetrize(&p);
                let witness = hmc_witness(triplet, r0, &p_tilde, opts);
                return HmcVerdict::Realizable { p_tilde, witness };
            }
            // Positive-definiteness floor.
            p = clamp_psd(&p, 1e-10 * scale);
            // Pull the Lyapunov block P - F P Fᵀ into the PSD cone.
            if rho_f < 1.0 - 1e-9 {
                let q = &p - f * &p * f.transpose();
                let q_plus = clamp_psd(&q, 0.0);
                if let Some(back) = solve_discrete_lyapunov(f, &q_plus) {
                    p = back;
                }
            }
            // Half space H P Hᵀ ≤ r0.
            let val = (h * &p * h.transpose())[(0, 0)];
            if val > r0 && h_norm2 > 0.0 {
                p -= &h_gram * ((val - r0) / (h_norm2 * h_norm2));
            }
            p = project_affine(&p);
        }
    }

    HmcVerdict::Undetermined {
        detail: format!(
            "projection search exhausted {} iterations without a feasible point \
             or a violated necessary condition",
            opts.hmc_search_iters
        ),
    }
}

/// HMC witness at a feasible `P̃` on the affine slice: transition `F`,
/// emission `H`, `alpha` = Lyapunov block, `beta` = variance block, and an
/// exactly zero feedback vector.
fn hmc_witness(
    triplet: &RealizationTriplet,
    r0: f64,
    p_tilde: &DMatrix<f64>,
    _opts: &ClassifyOptions,
) -> Option<GumParameters> {
    let n = triplet.order();
    let alpha = clamp_psd(&(p_tilde - triplet.f() * p_tilde * triplet.f().transpose()), 0.0);
    let beta = (r0 - (triplet.h() * p_tilde * triplet.h().transpose())[(0, 0)]).max(0.0);
    GumParameters::new(
        triplet.f().clone(),
        triplet.h().clone(),
        DVector::zeros(n),
        alpha,
        beta,
        p_tilde.clone(),
    )
    .ok()
}

// ---------------------------------------------------------------------------
// D-GUM and RNN feasibility
// ---------------------------------------------------------------------------

/// A verified Riccati fixed point inside the feasibility set.
#[derive(Debug, Clone)]
pub struct DgumFixedPoint {
    pub p_tilde: DMatrix<f64>,
    /// Residual of the fixed-point condition.
    pub residual: f64,
    pub witness: Option<GumParameters>,
}

/// D-GUM verdict: the verified fixed points (extremal certificates).
#[derive(Debug, Clone)]
pub struct DgumVerdict {
    pub realizable: bool,
    pub fixed_points: Vec<DgumFixedPoint>,
}

/// Residual of `P - F P Fᵀ - (N - F P Hᵀ)(r0 - H P Hᵀ)⁻¹(N - F P Hᵀ)ᵀ`.
fn dgum_condition_residual(triplet: &RealizationTriplet, r0: f64, p: &DMatrix<f64>) -> f64 {
    let denom = r0 - (triplet.h() * p * triplet.h().transpose())[(0, 0)];
    if denom.abs() <= STRICT_POS_TOL * (1.0 + r0) {
        return f64::INFINITY;
    }
    let gain = triplet.n_vec() - triplet.f() * p * triplet.h().transpose();
    (p - triplet.f() * p * triplet.f().transpose() - &gain * gain.transpose() / denom).amax()
}

/// Decides realizability by a deterministic-transition model: returns the
/// feasible Riccati fixed points. The scalar case uses the closed-form
/// interval endpoints (exact even where the iteration stalls); higher
/// orders take the Riccati extremals. Each candidate is verified against
/// the fixed-point condition.
pub fn dgum_feasible(
    triplet: &RealizationTriplet,
    r0: f64,
    opts: &ClassifyOptions,
) -> Result<DgumVerdict, ExpressivityError> {
    let n = triplet.order();
    if n == 0 {
        return Ok(DgumVerdict {
            realizable: true,
            fixed_points: vec![],
        });
    }

    let candidates: Vec<DMatrix<f64>> = if n == 1 {
        let (hs, fs, ns) = (triplet.h()[0], triplet.f()[(0, 0)], triplet.n_vec()[0]);
        match scalar_interval_raw(hs, fs, ns, r0) {
            Some((p1, p2)) => {
                let mut c = vec![DMatrix::from_element(1, 1, p1)];
                if (p2 - p1).abs() > 1e-12 * (1.0 + p2.abs()) {
                    c.push(DMatrix::from_element(1, 1, p2));
                }
                c
            }
            None => {
                return Err(ExpressivityError::Srt(SrtError::NotPositiveReal(
                    "empty scalar feasibility interval".into(),
                )))
            }
        }
    } else {
        let ext = compute_extremal_p(triplet, r0, opts.riccati_max_iter, opts.riccati_tol)
            .map_err(ExpressivityError::Srt)?;
        if (&ext.p_max - &ext.p_min).amax() <= 1e-12 * (1.0 + ext.p_max.amax()) {
            vec![ext.p_min]
        } else {
            vec![ext.p_min, ext.p_max]
        }
    };

    let scale = 1.0 + r0;
    let mut fixed_points = Vec::new();
    for p in candidates {
        let residual = dgum_condition_residual(triplet, r0, &p);
        if residual > FIXED_POINT_TOL * scale {
            continue;
        }
        // Boundary fixed points may sit exactly on the PSD edge; accept
        // them when the strict check fails only by the boundary.
        let feasible = is_feasible(triplet, r0, &p, opts.psd_tol)
            || min_symmetric_eigenvalue(&p) > STRICT_POS_TOL;
        if !feasible {
            continue;
        }
        let witness = dgum_witness(triplet, r0, &p, opts);
        fixed_points.push(DgumFixedPoint {
            p_tilde: p,
            residual,
            witness,
        });
    }

    Ok(DgumVerdict {
        realizable: !fixed_points.is_empty(),
        fixed_points,
    })
}

/// D-GUM witness at a fixed point: the feedback form with an exactly zero
/// state-noise covariance.
fn dgum_witness(
    triplet: &RealizationTriplet,
    r0: f64,
    p: &DMatrix<f64>,
    _opts: &ClassifyOptions,
) -> Option<GumParameters> {
    let n = triplet.order();
    let r = r0 - (triplet.h() * p * triplet.h().transpose())[(0, 0)];
    if r <= STRICT_POS_TOL * (1.0 + r0) {
        return None;
    }
    let s = triplet.n_vec() - triplet.f() * p * triplet.h().transpose();
    let c = &s / r;
    let a = triplet.f() - &c * triplet.h();
    GumParameters::new(
        a,
        triplet.h().clone(),
        c,
        DMatrix::zeros(n, n),
        r,
        p.clone(),
    )
    .ok()
}

/// Which of the two scalar RNN curves a realizable point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnnCurve {
    /// `HN = r0 F` (zero-transition branch).
    First,
    /// `HN = r0 F (2F² - 1)` (reflected branch).
    Second,
}

/// Outcome of the RNN feasibility test.
#[derive(Debug, Clone)]
pub enum RnnVerdict {
    Realizable {
        p_tilde: DMatrix<f64>,
        curve: Option<RnnCurve>,
        witness: Option<GumParameters>,
    },
    Refuted {
        reason: String,
    },
}

impl RnnVerdict {
    pub fn is_realizable(&self) -> bool {
        matches!(self, RnnVerdict::Realizable { .. })
    }
}

/// The two scalar RNN curve values `(r0 F, r0 F (2F² - 1))` at a given `F`.
pub fn rnn_curves(r0: f64, f: f64) -> (f64, f64) {
    (r0 * f, r0 * f * (2.0 * f * f - 1.0))
}

/// Decides realizability by a zero-initialized deterministic model.
///
/// Above order 1 the defining condition forces a rank-one `P̃`, which
/// cannot be positive definite: refuted outright. At order 1 the test
/// runs over the D-GUM fixed points.
pub fn rnn_feasible(
    triplet: &RealizationTriplet,
    r0: f64,
    opts: &ClassifyOptions,
) -> RnnVerdict {
    let n = triplet.order();
    if n == 0 {
        return RnnVerdict::Realizable {
            p_tilde: DMatrix::zeros(0, 0),
            curve: None,
            witness: Some(white_noise_witness(r0)),
        };
    }
    if n > 1 {
        return RnnVerdict::Refuted {
            reason: format!(
                "rank-1 constraint: the RNN condition forces a rank-one P̃, \
                 impossible for a positive definite matrix of order {n}"
            ),
        };
    }

    let dgum = match dgum_feasible(triplet, r0, opts) {
        Ok(v) => v,
        Err(e) => {
            return RnnVerdict::Refuted {
                reason: format!("no deterministic realization: {e}"),
            }
        }
    };

    let (hs, fs, ns) = (triplet.h()[0], triplet.f()[(0, 0)], triplet.n_vec()[0]);
    let hn = hs * ns;
    let (curve1, curve2) = rnn_curves(r0, fs);
    let scale = 1.0 + r0;

    for point in &dgum.fixed_points {
        let p = point.p_tilde[(0, 0)];
        let denom = r0 - hs * p * hs;
        if denom.abs() <= STRICT_POS_TOL * scale {
            continue;
        }
        let gain = ns - fs * p * hs;
        let residual = (p - r0 * gain * gain / (denom * denom)).abs();
        if residual <= FIXED_POINT_TOL * scale {
            let curve = if (hn - curve1).abs() <= (hn - curve2).abs() {
                RnnCurve::First
            } else {
                RnnCurve::Second
            };
            let witness = point.witness.clone();
            return RnnVerdict::Realizable {
                p_tilde: point.p_tilde.clone(),
                curve: Some(curve),
                witness,
            };
        }
    }

    RnnVerdict::Refuted {
        reason: format!(
            "HN = {hn:.6} is on neither curve (r0 F = {curve1:.6}, \
             r0 F (2F² - 1) = {curve2:.6})"
        ),
    }
}

// ---------------------------------------------------------------------------
// Classification pipeline
// ---------------------------------------------------------------------------

/// Unconstrained-model verdict with its witness.
#[derive(Debug, Clone)]
pub struct GumAssessment {
    pub realizable: bool,
    pub witness: Option<GumParameters>,
}

/// Full per-family report for one series.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub factorizable: bool,
    pub order: usize,
    pub is_covariance: bool,
    pub gum: GumAssessment,
    pub hmc: HmcVerdict,
    pub dgum: DgumVerdict,
    pub rnn: RnnVerdict,
    /// Minimal realization when factorizable.
    pub triplet: Option<RealizationTriplet>,
    /// Largest witness round-trip error across realizable verdicts.
    pub witness_error: f64,
    pub diagnostics: Vec<String>,
}

fn all_refuted_report(
    factorizable: bool,
    order: usize,
    triplet: Option<RealizationTriplet>,
    reason: String,
    mut diagnostics: Vec<String>,
) -> ClassificationReport {
    diagnostics.push(reason.clone());
    ClassificationReport {
        factorizable,
        order,
        is_covariance: false,
        gum: GumAssessment {
            realizable: false,
            witness: None,
        },
        hmc: HmcVerdict::Refuted {
            reason: reason.clone(),
        },
        dgum: DgumVerdict {
            realizable: false,
            fixed_points: vec![],
        },
        rnn: RnnVerdict::Refuted { reason },
        triplet,
        witness_error: 0.0,
        diagnostics,
    }
}

/// Classifies a series: factorizability (stable Hankel rank and a
/// successful realization), the positive-real test, and per-family
/// feasibility with witnesses.
pub fn classify(series: &CovarianceSeries, opts: &ClassifyOptions) -> ClassificationReport {
    let r0 = series.r0();
    let mut diagnostics = Vec::new();

    // Order-zero short circuit: every family produces white noise.
    if series.max_abs_lag() <= 1e-12 * (1.0 + r0) {
        let witness = white_noise_witness(r0);
        let err = witness_roundtrip_error(&witness, series);
        return ClassificationReport {
            factorizable: true,
            order: 0,
            is_covariance: true,
            gum: GumAssessment {
                realizable: true,
                witness: Some(witness.clone()),
            },
            hmc: HmcVerdict::Realizable {
                p_tilde: DMatrix::zeros(0, 0),
                witness: Some(witness.clone()),
            },
            dgum: DgumVerdict {
                realizable: true,
                fixed_points: vec![],
            },
            rnn: RnnVerdict::Realizable {
                p_tilde: DMatrix::zeros(0, 0),
                curve: None,
                witness: Some(witness),
            },
            triplet: Some(RealizationTriplet::order_zero()),
            witness_error: err,
            diagnostics: vec!["pure white noise: order 0, realizable by all families".into()],
        };
    }

    let k = series.num_lags();
    let probe_window = opts.window.unwrap_or(((k / 2).min(10), (k / 2).min(10)));
    if probe_window.0 < 2 || probe_window.1 < 2 {
        return all_refuted_report(
            false,
            0,
            None,
            format!("too few lags ({k}) to probe factorizability"),
            diagnostics,
        );
    }

    let probe = match ho_kalman(series, probe_window.0, probe_window.1, opts.rank_tol) {
        Ok(out) => out,
        Err(e) => {
            return all_refuted_report(
                false,
                0,
                None,
                format!("not factorizable within the stored lags: {e}"),
                diagnostics,
            );
        }
    };
    let n_est = probe.triplet.order();

    // Final balanced window; rank stability across windows is the
    // factorizability certificate.
    let (wp, wq) = if opts.window.is_some() {
        probe_window
    } else {
        let w = (2 * n_est + 2).max(6).min(k / 2);
        (w, w)
    };
    let out = if (wp, wq) == probe_window {
        probe
    } else {
        match ho_kalman(series, wp, wq, opts.rank_tol) {
            Ok(out) => out,
            Err(e) => {
                return all_refuted_report(
                    false,
                    0,
                    None,
                    format!("realization failed at window ({wp}, {wq}): {e}"),
                    diagnostics,
                );
            }
        }
    };
    let triplet = out.triplet.clone();
    let order = triplet.order();
    if order != n_est {
        diagnostics.push(format!(
            "rank unstable across windows: {n_est} at {probe_window:?}, {order} at ({wp}, {wq})"
        ));
        return all_refuted_report(false, order, Some(triplet), diagnostics.pop().unwrap(), diagnostics);
    }
    if let Ok(block) = crate::realization::build_hankel(series, wp, wq) {
        let rank = numerical_rank(&block, opts.rank_tol);
        diagnostics.push(format!(
            "window ({wp}, {wq}), singular values {:?}",
            &rank.singular_values[..rank.singular_values.len().min(6)]
        ));
    }

    // Positive-real step.
    let ext = compute_extremal_p(&triplet, r0, opts.riccati_max_iter, opts.riccati_tol);
    let (is_covariance, p_min, p_max) = match ext {
        Ok(e) => (true, Some(e.p_min), Some(e.p_max)),
        Err(err) => {
            // Scalar boundary cases stall the iteration while the closed
            // form still certifies feasibility; accept a verified
            // closed-form certificate.
            let mut upgraded = None;
            if order == 1 {
                if let Some((p1, p2)) = scalar_interval_raw(
                    triplet.h()[0],
                    triplet.f()[(0, 0)],
                    triplet.n_vec()[0],
                    r0,
                ) {
                    let pm = DMatrix::from_element(1, 1, p1);
                    let px = DMatrix::from_element(1, 1, p2);
                    let ok = is_feasible(&triplet, r0, &pm, opts.psd_tol)
                        || is_feasible(&triplet, r0, &px, opts.psd_tol)
                        || is_feasible(
                            &triplet,
                            r0,
                            &DMatrix::from_element(1, 1, 0.5 * (p1 + p2)),
                            opts.psd_tol,
                        );
                    if ok {
                        diagnostics.push(format!(
                            "positive-real certified by the scalar closed form \
                             (Riccati: {err})"
                        ));
                        upgraded = Some((pm, px));
                    }
                }
            }
            match upgraded {
                Some((pm, px)) => (true, Some(pm), Some(px)),
                None => {
                    diagnostics.push(format!("positive-real test failed: {err}"));
                    (false, None, None)
                }
            }
        }
    };

    if !is_covariance {
        let reason = "factorizable but not a covariance series".to_string();
        let mut report = all_refuted_report(true, order, Some(triplet), reason, diagnostics);
        report.is_covariance = false;
        return report;
    }

    // Every factorizable covariance series is realizable by the
    // unconstrained model; witness at the interior midpoint.
    let mut witness_error: f64 = 0.0;
    let gum_witness = match (&p_min, &p_max) {
        (Some(pm), Some(px)) => {
            let mid = (pm + px) * 0.5;
            match gum_from_realization(&triplet, r0, &mid, STRICT_POS_TOL) {
                Ok(w) => {
                    witness_error = witness_error.max(witness_roundtrip_error(&w, series));
                    Some(w)
                }
                Err(e) => {
                    diagnostics.push(format!("unconstrained witness unavailable: {e}"));
                    None
                }
            }
        }
        _ => None,
    };

    let hmc = hmc_feasible(&triplet, r0, opts);
    if let HmcVerdict::Realizable {
        witness: Some(w), ..
    } = &hmc
    {
        witness_error = witness_error.max(witness_roundtrip_error(w, series));
    }
    let dgum = match dgum_feasible(&triplet, r0, opts) {
        Ok(v) => {
            for fp in &v.fixed_points {
                if let Some(w) = &fp.witness {
                    witness_error = witness_error.max(witness_roundtrip_error(w, series));
                }
            }
            v
        }
        Err(e) => {
            diagnostics.push(format!("deterministic-transition search failed: {e}"));
            DgumVerdict {
                realizable: false,
                fixed_points: vec![],
            }
        }
    };
    let rnn = rnn_feasible(&triplet, r0, opts);
    if let RnnVerdict::Realizable {
        witness: Some(w), ..
    } = &rnn
    {
        witness_error = witness_error.max(witness_roundtrip_error(w, series));
    }

    ClassificationReport {
        factorizable: true,
        order,
        is_covariance,
        gum: GumAssessment {
            realizable: true,
            witness: gum_witness,
        },
        hmc,
        dgum,
        rnn,
        triplet: Some(triplet),
        witness_error,
        diagnostics,
    }
}

// ---------------------------------------------------------------------------
// Scalar cartography
// ---------------------------------------------------------------------------

/// Closed-form region membership with an explicit boundary band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    In,
    Out,
    /// Within half a grid cell of a region boundary; excluded from
    /// closed-form/pipeline agreement checks.
    Boundary,
}

/// One grid cell: closed-form labels, distances to the RNN curves, and
/// the labels recomputed by the classification pipeline.
#[derive(Debug, Clone)]
pub struct CartographyCell {
    pub f: f64,
    pub hn: f64,
    pub covariance: RegionLabel,
    pub hmc: RegionLabel,
    pub dgum: RegionLabel,
    pub rnn_curve1_dist: f64,
    pub rnn_curve2_dist: f64,
    /// Within the rasterization band of either RNN curve.
    pub rnn_on_curve: bool,
    pub pipeline_covariance: bool,
    pub pipeline_hmc: bool,
    pub pipeline_dgum: bool,
    pub pipeline_rnn: bool,
    /// Closed-form and pipeline labels disagree on an off-boundary cell.
    pub mismatch: bool,
}

/// The two scalar RNN curves in explicit and sampled form.
#[derive(Debug, Clone)]
pub struct RnnCurveSet {
    pub equation1: String,
    pub equation2: String,
    pub samples1: Vec<(f64, f64)>,
    pub samples2: Vec<(f64, f64)>,
}

/// Expressivity map over `(F, HN) ∈ [-1, 1] × [-r0, r0]`.
#[derive(Debug, Clone)]
pub struct CartographyGrid {
    pub r0: f64,
    pub f_axis: Vec<f64>,
    pub hn_axis: Vec<f64>,
    /// Row-major over `f_axis` (outer) and `hn_axis` (inner).
    pub cells: Vec<CartographyCell>,
    pub curves: RnnCurveSet,
    pub mismatch_count: usize,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn classify_cell(
    f: f64,
    hn: f64,
    r0: f64,
    eps_f: f64,
    eps_hn: f64,
    opts: &ClassifyOptions,
    num_lags: usize,
) -> CartographyCell {
    // Closed-form covariance band r0 (F-1)/2 ≤ HN ≤ r0 (F+1)/2.
    let lower = r0 * (f - 1.0) / 2.0;
    let upper = r0 * (f + 1.0) / 2.0;
    let on_f_edge = 1.0 - f.abs() <= eps_f;
    let covariance = if (hn - lower).abs() <= eps_hn || (hn - upper).abs() <= eps_hn || on_f_edge {
        RegionLabel::Boundary
    } else if hn > lower && hn < upper {
        RegionLabel::In
    } else {
        RegionLabel::Out
    };

    // HMC region: 0 < HN ≤ r0 F (F ≥ 0), r0 F ≤ HN < 0 (F ≤ 0).
    let hmc_edge = hn.abs() <= eps_hn || (hn - r0 * f).abs() <= eps_hn || on_f_edge;
    let hmc_in = if f >= 0.0 {
        hn > 0.0 && hn <= r0 * f
    } else {
        hn < 0.0 && hn >= r0 * f
    };
    let hmc = if covariance == RegionLabel::Boundary || hmc_edge {
        RegionLabel::Boundary
    } else if hmc_in && covariance == RegionLabel::In {
        RegionLabel::In
    } else {
        RegionLabel::Out
    };

    // Any covariance series is producible by a deterministic transition.
    let dgum = covariance;

    let (curve1, curve2) = rnn_curves(r0, f);
    let rnn_curve1_dist = (hn - curve1).abs();
    let rnn_curve2_dist = (hn - curve2).abs();
    let rnn_on_curve = rnn_curve1_dist.min(rnn_curve2_dist) <= eps_hn;

    // Pipeline labels on the synthesized series r_k = F^{k-1} HN.
    let mut lags = Vec::with_capacity(num_lags);
    let mut v = hn;
    for _ in 0..num_lags {
        lags.push(v);
        v *= f;
    }
    let series = CovarianceSeries::new(r0, lags).expect("grid series is finite");
    let report = classify(&series, opts);
    let pipeline_covariance = report.is_covariance;
    let pipeline_hmc = report.hmc.is_realizable();
    let pipeline_dgum = report.dgum.realizable;
    let pipeline_rnn = report.rnn.is_realizable();

    // Agreement on off-boundary cells. The RNN pipeline flag is compared
    // against an exact curve hit: the rasterized band is for display.
    let boundary = covariance == RegionLabel::Boundary || hmc == RegionLabel::Boundary;
    let rnn_exact_hit = rnn_curve1_dist.min(rnn_curve2_dist) <= 1e-9 * (1.0 + r0);
    let mismatch = !boundary
        && ((covariance == RegionLabel::In) != pipeline_covariance
            || (hmc == RegionLabel::In) != pipeline_hmc
            || (dgum == RegionLabel::In) != pipeline_dgum
            || (pipeline_covariance && pipeline_rnn != rnn_exact_hit));

    CartographyCell {
        f,
        hn,
        covariance,
        hmc,
        dgum,
        rnn_curve1_dist,
        rnn_curve2_dist,
        rnn_on_curve,
        pipeline_covariance,
        pipeline_hmc,
        pipeline_dgum,
        pipeline_rnn,
        mismatch,
    }
}

/// Renders the scalar expressivity map on a `grid_f x grid_hn` grid.
///
/// Each cell is labeled twice: by the closed-form region formulas and by
/// running the full classification pipeline on the synthesized series
/// `r_k = F^{k-1} HN`. Disagreements outside the boundary band are
/// counted in `mismatch_count`. Cells are independent; with the
/// `parallel` feature they are evaluated concurrently in a deterministic
/// order.
pub fn scalar_cartography(
    r0: f64,
    grid_f: usize,
    grid_hn: usize,
    opts: &ClassifyOptions,
) -> CartographyGrid {
    assert!(grid_f >= 3 && grid_hn >= 3, "grids must have at least 3 points");
    assert!(r0 > 0.0, "r0 must be positive");
    let f_axis = linspace(-1.0, 1.0, grid_f);
    let hn_axis = linspace(-r0, r0, grid_hn);
    let eps_f = 1.0 / (grid_f - 1) as f64;
    let eps_hn = r0 / (grid_hn - 1) as f64;
    let num_lags = 12;

    let indices: Vec<(usize, usize)> = (0..grid_f)
        .flat_map(|i| (0..grid_hn).map(move |j| (i, j)))
        .collect();

    let eval = |&(i, j): &(usize, usize)| {
        classify_cell(f_axis[i], hn_axis[j], r0, eps_f, eps_hn, opts, num_lags)
    };

    #[cfg(feature = "parallel")]
    let cells: Vec<CartographyCell> = indices.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let cells: Vec<CartographyCell> = indices.iter().map(eval).collect();

    let mismatch_count = cells.iter().filter(|c| c.mismatch).count();
    let curves = RnnCurveSet {
        equation1: "HN = r0*F".into(),
        equation2: "HN = r0*F*(2*F^2 - 1)".into(),
        samples1: f_axis.iter().map(|&f| (f, rnn_curves(r0, f).0)).collect(),
        samples2: f_axis.iter().map(|&f| (f, rnn_curves(r0, f).1)).collect(),
    };

    CartographyGrid {
        r0,
        f_axis,
        hn_axis,
        cells,
        curves,
        mismatch_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_stationary, simulate, ModelFamily};
    use crate::realization::{find_isomorphism, similarity_transform, IsomorphismOutcome};
    use approx::assert_abs_diff_eq;
    use nalgebra::RowDVector;

    fn worked_triplet() -> (RealizationTriplet, f64) {
        (RealizationTriplet::scalar(1.0, 0.5, 0.3), 1.0)
    }

    fn opts() -> ClassifyOptions {
        ClassifyOptions::default()
    }

    #[test]
    fn gum_from_realization_worked_example() {
        let (t, r0) = worked_triplet();
        let p = DMatrix::from_element(1, 1, 0.6);
        let w = gum_from_realization(&t, r0, &p, STRICT_POS_TOL).unwrap();
        // S = 0 at this point, so the feedback vanishes: an HMC witness.
        assert_abs_diff_eq!(w.a()[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.b()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.c()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.alpha()[(0, 0)], 0.45, epsilon = 1e-12);
        assert_abs_diff_eq!(w.beta(), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(w.eta()[(0, 0)], 0.6, epsilon = 1e-12);
        assert!(is_stationary(&w, 1e-10));

        let series = crate::realization::reconstruct_series(&t, r0, 10).unwrap();
        assert!(witness_roundtrip_error(&w, &series) < 1e-8);
    }

    #[test]
    fn gum_witness_at_minimum_is_deterministic() {
        // At P_min the polynomial residual vanishes: alpha = 0.
        let (t, r0) = worked_triplet();
        let (p1, _) = scalar_interval_raw(1.0, 0.5, 0.3, r0).unwrap();
        let w = gum_from_realization(&t, r0, &DMatrix::from_element(1, 1, p1), STRICT_POS_TOL)
            .unwrap();
        assert!(w.alpha().amax() < 1e-9, "alpha = {}", w.alpha().amax());
    }

    #[test]
    fn gum_from_realization_rejects_degenerate_r() {
        let (t, r0) = worked_triplet();
        // P = r0 / H² zeroes the observation-noise block.
        let p = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            gum_from_realization(&t, r0, &p, STRICT_POS_TOL),
            Err(ExpressivityError::DegenerateR { .. })
        ));
    }

    #[test]
    fn hmc_worked_example_realizable() {
        let (t, r0) = worked_triplet();
        match hmc_feasible(&t, r0, &opts()) {
            HmcVerdict::Realizable { p_tilde, witness } => {
                assert_abs_diff_eq!(p_tilde[(0, 0)], 0.6, epsilon = 1e-12);
                let w = witness.unwrap();
                assert_eq!(w.c().amax(), 0.0);
                let series = crate::realization::reconstruct_series(&t, r0, 10).unwrap();
                assert!(witness_roundtrip_error(&w, &series) < 1e-8);
            }
            other => panic!("expected realizable, got {other:?}"),
        }
    }

    #[test]
    fn hmc_refuted_beyond_region() {
        // 0 < HN ≤ r0 F required for F ≥ 0; HN = 0.7 > 0.5.
        let t = RealizationTriplet::scalar(1.0, 0.5, 0.7);
        assert!(matches!(
            hmc_feasible(&t, 1.0, &opts()),
            HmcVerdict::Refuted { .. }
        ));
    }

    #[test]
    fn hmc_round_trip_order_two() {
        // The covariance series of an actual HMC must classify as
        // HMC-realizable, and the congruence-transported eta must itself
        // be a feasible constrained point.
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.15, -0.1, 0.4]);
        let b = RowDVector::from_row_slice(&[1.0, -0.7]);
        let c = DVector::zeros(2);
        let alpha = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]);
        let params = GumParameters::with_stationary_eta(a, b, c, alpha, 0.3).unwrap();
        let series = analytic_covariance(&params, 24).unwrap();
        let out = ho_kalman(&series, 6, 6, 1e-9).unwrap();
        let r0 = series.r0();

        let verdict = hmc_feasible(&out.triplet, r0, &opts());
        let HmcVerdict::Realizable { p_tilde, witness } = &verdict else {
            panic!("expected realizable, got {verdict:?}");
        };
        let w = witness.as_ref().unwrap();
        assert!(witness_roundtrip_error(w, &series) < 1e-7);

        // Transport eta through the realization isomorphism.
        let direct = RealizationTriplet::from_gum(&params);
        let iso = find_isomorphism(&direct, &out.triplet, 1e-6).unwrap();
        let IsomorphismOutcome::Isomorphic { transform, .. } = iso else {
            panic!("realizations must be isomorphic");
        };
        let eta_moved = &transform * params.eta() * transform.transpose();
        assert!(is_feasible(&out.triplet, r0, &eta_moved, 1e-7));
        let affine_res =
            (out.triplet.f() * &eta_moved * out.triplet.h().transpose() - out.triplet.n_vec())
                .amax();
        assert!(affine_res < 1e-7, "affine residual {affine_res}");
        // Both candidate points satisfy the constraint; they need not
        // coincide, but the search's point must be genuinely feasible.
        assert!(is_feasible(&out.triplet, r0, p_tilde, 1e-7));
    }

    #[test]
    fn dgum_worked_example_fixed_points() {
        let (t, r0) = worked_triplet();
        let v = dgum_feasible(&t, r0, &opts()).unwrap();
        assert!(v.realizable);
        assert_eq!(v.fixed_points.len(), 2);
        assert_abs_diff_eq!(v.fixed_points[0].p_tilde[(0, 0)], 0.094158, epsilon = 1e-6);
        assert_abs_diff_eq!(v.fixed_points[1].p_tilde[(0, 0)], 0.955842, epsilon = 1e-6);
        for fp in &v.fixed_points {
            assert!(fp.residual < 1e-9);
            let w = fp.witness.as_ref().unwrap();
            assert_eq!(w.alpha().amax(), 0.0);
            let series = crate::realization::reconstruct_series(&t, r0, 10).unwrap();
            assert!(witness_roundtrip_error(w, &series) < 1e-8);
        }
    }

    #[test]
    fn dgum_extremals_are_fixed_points_order_two() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let b = RowDVector::from_row_slice(&[1.0, -0.5]);
        let c = DVector::from_column_slice(&[0.2, 0.1]);
        let alpha = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        let params = GumParameters::with_stationary_eta(a, b, c, alpha, 0.8).unwrap();
        let t = RealizationTriplet::from_gum(&params);
        let r0 = params.stationary_variance();
        let v = dgum_feasible(&t, r0, &opts()).unwrap();
        assert!(v.realizable);
        assert_eq!(v.fixed_points.len(), 2);
        for fp in &v.fixed_points {
            assert!(fp.residual < 1e-9, "residual {}", fp.residual);
        }
    }

    #[test]
    fn dgum_propagates_non_positive_real() {
        let t = RealizationTriplet::scalar(1.0, 0.5, 0.8);
        assert!(matches!(
            dgum_feasible(&t, 1.0, &opts()),
            Err(ExpressivityError::Srt(SrtError::NotPositiveReal(_)))
        ));
    }

    #[test]
    fn rnn_on_first_curve() {
        // HN = r0 F: (H, F, N) = (1, 0.5, 0.5).
        let t = RealizationTriplet::scalar(1.0, 0.5, 0.5);
        match rnn_feasible(&t, 1.0, &opts()) {
            RnnVerdict::Realizable { curve, witness, .. } => {
                assert_eq!(curve, Some(RnnCurve::First));
                let w = witness.unwrap();
                assert!(w.family_violation(ModelFamily::Rnn).is_none());
            }
            other => panic!("expected realizable, got {other:?}"),
        }
    }

    #[test]
    fn rnn_on_second_curve() {
        // HN = r0 F (2F² - 1) = -0.25 at F = 0.5.
        let t = RealizationTriplet::scalar(1.0, 0.5, -0.25);
        match rnn_feasible(&t, 1.0, &opts()) {
            RnnVerdict::Realizable { curve, .. } => {
                assert_eq!(curve, Some(RnnCurve::Second));
            }
            other => panic!("expected realizable, got {other:?}"),
        }
    }

    #[test]
    fn rnn_refuted_off_curves_and_above_order_one() {
        let (t, r0) = worked_triplet();
        assert!(matches!(
            rnn_feasible(&t, r0, &opts()),
            RnnVerdict::Refuted { .. }
        ));

        let t2 = RealizationTriplet::new(
            RowDVector::from_row_slice(&[1.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]),
            DVector::from_column_slice(&[0.3, 0.1]),
        );
        match rnn_feasible(&t2, 1.0, &opts()) {
            RnnVerdict::Refuted { reason } => assert!(reason.contains("rank-1")),
            other => panic!("expected refuted, got {other:?}"),
        }
    }

    #[test]
    fn classify_white_noise_all_families() {
        let series = CovarianceSeries::white_noise(1.0, 12);
        let report = classify(&series, &opts());
        assert!(report.factorizable);
        assert_eq!(report.order, 0);
        assert!(report.is_covariance);
        assert!(report.gum.realizable);
        assert!(report.hmc.is_realizable());
        assert!(report.dgum.realizable);
        assert!(report.rnn.is_realizable());
        assert!(report.witness_error < 1e-12);
    }

    #[test]
    fn classify_worked_example() {
        let (t, r0) = worked_triplet();
        let series = crate::realization::reconstruct_series(&t, r0, 20).unwrap();
        let report = classify(&series, &opts());
        assert!(report.factorizable);
        assert_eq!(report.order, 1);
        assert!(report.is_covariance);
        assert!(report.gum.realizable);
        assert!(report.hmc.is_realizable());
        assert!(report.dgum.realizable);
        assert!(!report.rnn.is_realizable(), "0.3 is on neither RNN curve");
        assert!(report.witness_error < 1e-8);
    }

    #[test]
    fn classify_non_positive_series() {
        // Factorizable (geometric) but violates the covariance band.
        let t = RealizationTriplet::scalar(1.0, 0.5, 1.5);
        let series = crate::realization::reconstruct_series(&t, 1.0, 20).unwrap();
        let report = classify(&series, &opts());
        assert!(report.factorizable);
        assert!(!report.is_covariance);
        assert!(!report.gum.realizable);
        assert!(!report.hmc.is_realizable());
        assert!(!report.dgum.realizable);
        assert!(!report.rnn.is_realizable());
    }

    #[test]
    fn classify_verdicts_nest() {
        // RNN ⊆ D-GUM ⊆ GUM, HMC ⊆ GUM, GUM ⟺ covariance, RNN ⇒ n ≤ 1.
        let cases: Vec<(f64, f64)> = vec![
            (0.5, 0.3),
            (0.5, 0.5),
            (0.5, -0.25),
            (-0.6, -0.3),
            (0.9, 0.2),
            (0.3, 0.9),
            (-0.4, 0.5),
            (0.0, 0.4),
        ];
        for (f, hn) in cases {
            let t = RealizationTriplet::scalar(1.0, f, hn);
            let series = crate::realization::reconstruct_series(&t, 1.0, 20).unwrap();
            let report = classify(&series, &opts());
            if report.rnn.is_realizable() {
                assert!(report.dgum.realizable, "RNN ⇒ D-GUM at ({f}, {hn})");
                assert!(report.order <= 1, "RNN ⇒ order ≤ 1 at ({f}, {hn})");
            }
            if report.hmc.is_realizable() || report.dgum.realizable {
                assert!(report.gum.realizable, "HMC/D-GUM ⇒ GUM at ({f}, {hn})");
            }
            if report.gum.realizable {
                assert!(report.is_covariance, "GUM ⇒ covariance at ({f}, {hn})");
            }
        }
    }

    #[test]
    fn verdicts_invariant_under_similarity() {
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.15, -0.1, 0.4]);
        let b = RowDVector::from_row_slice(&[1.0, -0.7]);
        let c = DVector::zeros(2);
        let alpha = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]);
        let params = GumParameters::with_stationary_eta(a, b, c, alpha, 0.3).unwrap();
        let t1 = RealizationTriplet::from_gum(&params);
        let r0 = params.stationary_variance();
        let tr = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, -0.4, 0.8]);
        let t2 = similarity_transform(&t1, &tr).unwrap();

        let o = opts();
        assert_eq!(
            hmc_feasible(&t1, r0, &o).is_realizable(),
            hmc_feasible(&t2, r0, &o).is_realizable()
        );
        assert_eq!(
            dgum_feasible(&t1, r0, &o).unwrap().realizable,
            dgum_feasible(&t2, r0, &o).unwrap().realizable
        );
        assert_eq!(
            rnn_feasible(&t1, r0, &o).is_realizable(),
            rnn_feasible(&t2, r0, &o).is_realizable()
        );
    }

    #[test]
    fn hmc_region_boundary_sweep() {
        // P̃ = N/(HF) enters the interval exactly when 0 < HN ≤ r0 F.
        let f = 0.6;
        for i in 0..40 {
            let hn = -0.2 + 0.025 * i as f64;
            if hn.abs() < 1e-9 || (hn - f).abs() < 1e-9 {
                continue; // exact region boundary
            }
            let t = RealizationTriplet::scalar(1.0, f, hn);
            let expected = hn > 0.0 && hn < f;
            let got = hmc_feasible(&t, 1.0, &opts()).is_realizable();
            assert_eq!(got, expected, "hn = {hn}");
        }
    }

    #[test]
    fn rnn_witness_from_constructed_model() {
        // Zero-transition branch: a = 0 forces HN = r0 F exactly.
        let (b, c, beta) = (0.8, 0.5, 1.0);
        let r0 = beta / (1.0 - b * b * c * c);
        let eta = c * c * r0;
        let model = GumParameters::scalar(0.0, b, c, 0.0, beta, eta).unwrap();
        assert!(model.family_violation(ModelFamily::Rnn).is_none());
        let series = analytic_covariance(&model, 20).unwrap();
        let report = classify(&series, &opts());
        assert!(report.rnn.is_realizable(), "{:?}", report.rnn);
        // Simulated RNN trajectories stay consistent with the series.
        let traj = simulate(&model, ModelFamily::Rnn, 200, 9).unwrap();
        assert_eq!(traj.observations().len(), 201);
        assert!(traj.latents()[0].amax() == 0.0);
    }

    #[test]
    fn cartography_f_zero_column() {
        let grid = scalar_cartography(1.0, 21, 21, &opts());
        assert_eq!(grid.mismatch_count, 0, "pipeline must match closed form");
        // F = 0 column: the HMC region is empty and both curves pass
        // through HN = 0.
        for cell in grid.cells.iter().filter(|c| c.f.abs() < 1e-12) {
            assert_ne!(cell.hmc, RegionLabel::In, "HN = {}", cell.hn);
            if cell.hn.abs() < 1e-12 {
                assert!(cell.rnn_curve1_dist < 1e-12);
                assert!(cell.rnn_curve2_dist < 1e-12);
            }
        }
        // Corner (F -> 1, HN -> r0) is parallelogram boundary.
        let corner = grid
            .cells
            .iter()
            .find(|c| (c.f - 1.0).abs() < 1e-12 && (c.hn - 1.0).abs() < 1e-12)
            .unwrap();
        assert_eq!(corner.covariance, RegionLabel::Boundary);
    }

    #[test]
    fn cartography_labels_spot_checks() {
        let grid = scalar_cartography(1.0, 21, 21, &opts());
        let at = |f: f64, hn: f64| {
            grid.cells
                .iter()
                .find(|c| (c.f - f).abs() < 1e-9 && (c.hn - hn).abs() < 1e-9)
                .unwrap()
        };
        // Interior of the parallelogram and of the HMC wedge.
        let c = at(0.6, 0.2);
        assert_eq!(c.covariance, RegionLabel::In);
        assert_eq!(c.hmc, RegionLabel::In);
        assert!(c.pipeline_covariance && c.pipeline_hmc && c.pipeline_dgum);
        // Wrong-sign HN for positive F.
        let c = at(0.6, -0.1);
        assert_eq!(c.covariance, RegionLabel::In);
        assert_eq!(c.hmc, RegionLabel::Out);
        assert!(!c.pipeline_hmc);
        // Outside the parallelogram.
        let c = at(0.2, 0.9);
        assert_eq!(c.covariance, RegionLabel::Out);
        assert!(!c.pipeline_covariance && !c.pipeline_dgum);
        // Exact grid hit of curve 1 away from boundaries.
        let c = at(0.4, 0.4);
        assert!(c.pipeline_rnn, "HN = r0 F must be RNN-realizable");
        assert!(c.rnn_on_curve);
    }
}
