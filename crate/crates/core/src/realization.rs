//! Deterministic realization of covariance series.
//!
//! A factorizable series `r_k = H F^{k-1} N` is recovered from finitely
//! many lags via Hankel factorization: build the block Hankel matrix,
//! estimate its rank, and extract a balanced `(H, F, N)` from the SVD
//! (Ho-Kalman). Minimal realizations are unique up to similarity; this
//! module also computes the connecting transform between two realizations.

use nalgebra::{DMatrix, DVector, RowDVector};
use thiserror::Error;

use crate::linalg::{condition_number, pseudo_inverse, svd_jacobi};
use crate::model::GumParameters;
use crate::series::{CovarianceSeries, SeriesError};

/// Relative singular-value gap that decides the numerical rank during
/// order estimation; absolute tolerance is the fallback.
pub const ORDER_GAP: f64 = 1e6;

/// Relative reconstruction error above which a Ho-Kalman factorization is
/// rejected (the series is not factorizable at the estimated order).
pub const RECONSTRUCTION_TOL: f64 = 1e-6;

/// Condition-number bound for similarity transforms.
pub const TRANSFORM_COND_MAX: f64 = 1e12;

#[derive(Debug, Error)]
pub enum RealizationError {
    #[error("window needs {needed} lags but the series stores {available}")]
    InsufficientLags { needed: usize, available: usize },
    #[error("estimated order {order} too large for window ({p}, {q}); need p, q ≥ order + 1")]
    OrderTooLargeForWindow { order: usize, p: usize, q: usize },
    #[error("realization reconstructs the series with relative error {rel_error:.3e}")]
    ReconstructionFailure { rel_error: f64 },
    #[error("estimated order is unstable across windows ({probe} vs {refined})")]
    RankUnstable { probe: usize, refined: usize },
    #[error("transform is numerically singular (condition number {cond:.3e})")]
    SingularTransform { cond: f64 },
    #[error("realizations have different orders ({0} vs {1})")]
    DifferentOrders(usize, usize),
}

/// Minimal factorization `(H, F, N)` of a series `r_k = H F^{k-1} N`.
///
/// Order 0 (empty matrices) represents a series that vanishes at every
/// positive lag.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationTriplet {
    h: RowDVector<f64>,
    f: DMatrix<f64>,
    n_vec: DVector<f64>,
}

impl RealizationTriplet {
    pub fn new(h: RowDVector<f64>, f: DMatrix<f64>, n_vec: DVector<f64>) -> Self {
        let n = f.nrows();
        assert_eq!(f.ncols(), n, "F must be square");
        assert_eq!(h.ncols(), n, "H must be 1xn");
        assert_eq!(n_vec.nrows(), n, "N must be nx1");
        Self { h, f, n_vec }
    }

    pub fn scalar(h: f64, f: f64, n: f64) -> Self {
        Self::new(
            RowDVector::from_element(1, h),
            DMatrix::from_element(1, 1, f),
            DVector::from_element(1, n),
        )
    }

    /// Empty realization of the all-zero lag series.
    pub fn order_zero() -> Self {
        Self {
            h: RowDVector::zeros(0),
            f: DMatrix::zeros(0, 0),
            n_vec: DVector::zeros(0),
        }
    }

    /// Direct realization `(b, a + c b, a eta bᵀ + c r0)` of a stationary
    /// model's covariance series.
    pub fn from_gum(params: &GumParameters) -> Self {
        Self {
            h: params.b().clone(),
            f: params.closed_loop_matrix(),
            n_vec: params.covariance_input(),
        }
    }

    pub fn order(&self) -> usize {
        self.f.nrows()
    }

    pub fn h(&self) -> &RowDVector<f64> {
        &self.h
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn n_vec(&self) -> &DVector<f64> {
        &self.n_vec
    }

    /// Observability matrix `[H; HF; …; HF^{rows-1}]`.
    pub fn observability_matrix(&self, rows: usize) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(rows, n);
        let mut row = self.h.clone();
        for i in 0..rows {
            m.row_mut(i).copy_from(&row);
            row = &row * &self.f;
        }
        m
    }

    /// Reachability matrix `[N, FN, …, F^{cols-1}N]`.
    pub fn reachability_matrix(&self, cols: usize) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(n, cols);
        let mut col = self.n_vec.clone();
        for j in 0..cols {
            m.column_mut(j).copy_from(&col);
            col = &self.f * col;
        }
        m
    }

    /// Minimality: observability and reachability matrices with `order`
    /// block rows/columns both have full rank.
    pub fn is_minimal(&self, tol: f64) -> bool {
        let n = self.order();
        if n == 0 {
            return true;
        }
        let full = |m: &DMatrix<f64>| {
            let sv = svd_jacobi(m).singular_values;
            let smax = sv.first().copied().unwrap_or(0.0);
            let smin = sv.last().copied().unwrap_or(0.0);
            smax > 0.0 && smin > tol * smax
        };
        full(&self.observability_matrix(n)) && full(&self.reachability_matrix(n))
    }
}

/// Finite block of the infinite Hankel matrix of a series: entry
/// `(i, j) = r_{i+j+1}` for 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelBlock {
    entries: DMatrix<f64>,
}

impl HankelBlock {
    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn q(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Builds the `p x q` Hankel block from lags `r_1, …, r_{p+q-1}`.
pub fn build_hankel(
    series: &CovarianceSeries,
    p: usize,
    q: usize,
) -> Result<HankelBlock, RealizationError> {
    hankel_with_offset(series, p, q, 1)
}

/// Hankel block with entries `r_{i+j+offset}`; `offset = 2` gives the
/// shifted block used to identify `F`.
fn hankel_with_offset(
    series: &CovarianceSeries,
    p: usize,
    q: usize,
    offset: usize,
) -> Result<HankelBlock, RealizationError> {
    let needed = p + q + offset - 2;
    if needed > series.num_lags() {
        return Err(RealizationError::InsufficientLags {
            needed,
            available: series.num_lags(),
        });
    }
    let entries = DMatrix::from_fn(p, q, |i, j| series.lag(i + j + offset));
    Ok(HankelBlock { entries })
}

/// Numerical rank report: the count of singular values above
/// `tol * σ_max` (and above an absolute floor of `1e-12`), plus the full
/// spectrum for diagnostics.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

pub fn numerical_rank(block: &HankelBlock, tol: f64) -> RankReport {
    let singular_values = svd_jacobi(&block.entries).singular_values;
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let rank = singular_values
        .iter()
        .filter(|&&s| s > tol * smax && s > 1e-12)
        .count();
    RankReport {
        rank,
        singular_values,
    }
}

/// Order estimate from a singular spectrum: prefer the first relative gap
/// of at least [`ORDER_GAP`], fall back to the absolute-tolerance count.
fn estimate_order(singular_values: &[f64], tol: f64) -> usize {
    let smax = singular_values.first().copied().unwrap_or(0.0);
    if smax <= 1e-12 {
        return 0;
    }
    for (i, pair) in singular_values.windows(2).enumerate() {
        if pair[0] > 1e-12 && pair[0] >= ORDER_GAP * pair[1].max(0.0) {
            return i + 1;
        }
    }
    singular_values
        .iter()
        .filter(|&&s| s > tol * smax && s > 1e-12)
        .count()
}

/// Ho-Kalman factorization output: the balanced triplet plus the SVD
/// spectrum and the achieved reconstruction error.
#[derive(Debug, Clone)]
pub struct HoKalmanOutput {
    pub triplet: RealizationTriplet,
    pub singular_values: Vec<f64>,
    pub reconstruction_error: f64,
}

/// Balanced Ho-Kalman realization from the `p x q` Hankel block.
///
/// The SVD `H0 = U Σ Vᵀ` is truncated at the estimated order n and split
/// into balanced factors `O = U √Σ` and `C = √Σ Vᵀ`; then `H` is the first
/// row of `O`, `N` the first column of `C`, and
/// `F = Σ^{-1/2} Uᵀ H1 V Σ^{-1/2}` with `H1` the lag-shifted block. The
/// shifted block needs `p + q` stored lags.
pub fn ho_kalman(
    series: &CovarianceSeries,
    p: usize,
    q: usize,
    tol: f64,
) -> Result<HoKalmanOutput, RealizationError> {
    let block = build_hankel(series, p, q)?;
    let svd = svd_jacobi(&block.entries);
    let singular_values = svd.singular_values.clone();
    let order = estimate_order(&singular_values, tol);

    if order == 0 {
        // All positive lags are numerically zero.
        let rel = series.max_abs_lag() / (1.0 + series.r0());
        return Ok(HoKalmanOutput {
            triplet: RealizationTriplet::order_zero(),
            singular_values,
            reconstruction_error: rel,
        });
    }
    if order + 1 > p || order + 1 > q {
        return Err(RealizationError::OrderTooLargeForWindow { order, p, q });
    }

    let shifted = hankel_with_offset(series, p, q, 2)?;
    let u_n = svd.u.columns(0, order).clone_owned();
    let v_t_n = svd.v_t.rows(0, order).clone_owned();
    let sqrt_s = DVector::from_iterator(
        order,
        svd.singular_values.iter().take(order).map(|s| s.sqrt()),
    );
    let inv_sqrt_s = DVector::from_iterator(order, sqrt_s.iter().map(|s| 1.0 / s));

    let observability = &u_n * DMatrix::from_diagonal(&sqrt_s);
    let reachability = DMatrix::from_diagonal(&sqrt_s) * &v_t_n;

    let h = RowDVector::from_iterator(order, observability.row(0).iter().copied());
    let n_vec = DVector::from_iterator(order, reachability.column(0).iter().copied());
    let f = DMatrix::from_diagonal(&inv_sqrt_s)
        * u_n.transpose()
        * shifted.entries()
        * v_t_n.transpose()
        * DMatrix::from_diagonal(&inv_sqrt_s);

    let triplet = RealizationTriplet::new(h, f, n_vec);

    // The block and its shift pin the first p+q-2 lags; check them.
    let check = p + q - 2;
    let recon = reconstruct_lags(&triplet, check);
    let scale = series
        .lags()
        .iter()
        .take(check)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12 * (1.0 + series.r0()));
    let rel_error = recon
        .iter()
        .zip(series.lags())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / scale;
    if rel_error > RECONSTRUCTION_TOL {
        return Err(RealizationError::ReconstructionFailure { rel_error });
    }

    Ok(HoKalmanOutput {
        triplet,
        singular_values,
        reconstruction_error: rel_error,
    })
}

/// Ho-Kalman with the default window policy: a probe at
/// `p = q = min(K/2, 10)` estimates the order `n`, then the balanced
/// window `p = q = max(2n + 2, 6)` (clamped to the available lags)
/// produces the result. The realization is accepted only if the order is
/// stable across the two windows.
pub fn realize_default(
    series: &CovarianceSeries,
    tol: f64,
) -> Result<HoKalmanOutput, RealizationError> {
    let k = series.num_lags();
    let probe_w = (k / 2).min(10);
    if probe_w < 2 {
        return Err(RealizationError::InsufficientLags {
            needed: 4,
            available: k,
        });
    }
    let probe = ho_kalman(series, probe_w, probe_w, tol)?;
    let n_est = probe.triplet.order();
    let w = (2 * n_est + 2).max(6).min(k / 2);
    let out = if w == probe_w {
        probe
    } else {
        let refined = ho_kalman(series, w, w, tol)?;
        if refined.triplet.order() != n_est {
            return Err(RealizationError::RankUnstable {
                probe: n_est,
                refined: refined.triplet.order(),
            });
        }
        refined
    };
    Ok(out)
}

/// Lags `r_k = H F^{k-1} N` for `k = 1..=num_lags`, via iterated
/// matrix-vector products.
pub fn reconstruct_lags(triplet: &RealizationTriplet, num_lags: usize) -> Vec<f64> {
    if triplet.order() == 0 {
        return vec![0.0; num_lags];
    }
    let mut w = triplet.n_vec().clone();
    let mut lags = Vec::with_capacity(num_lags);
    for _ in 0..num_lags {
        lags.push((triplet.h() * &w)[(0, 0)]);
        w = triplet.f() * w;
    }
    lags
}

/// Series with the given `r0` and lags reconstructed from the triplet.
pub fn reconstruct_series(
    triplet: &RealizationTriplet,
    r0: f64,
    num_lags: usize,
) -> Result<CovarianceSeries, SeriesError> {
    CovarianceSeries::new(r0, reconstruct_lags(triplet, num_lags))
}

/// Change of state basis: `(H T⁻¹, T F T⁻¹, T N)`. The reconstructed
/// series is unchanged.
pub fn similarity_transform(
    triplet: &RealizationTriplet,
    t: &DMatrix<f64>,
) -> Result<RealizationTriplet, RealizationError> {
    let n = triplet.order();
    assert_eq!(t.nrows(), n, "transform must be {n}x{n}");
    assert_eq!(t.ncols(), n, "transform must be {n}x{n}");
    if n == 0 {
        return Ok(triplet.clone());
    }
    let cond = condition_number(t);
    let t_inv = match t.clone().try_inverse() {
        Some(inv) if cond < TRANSFORM_COND_MAX => inv,
        _ => return Err(RealizationError::SingularTransform { cond }),
    };
    Ok(RealizationTriplet::new(
        triplet.h() * &t_inv,
        t * triplet.f() * &t_inv,
        t * triplet.n_vec(),
    ))
}

/// Result of probing two realizations for isomorphism.
#[derive(Debug, Clone)]
pub enum IsomorphismOutcome {
    /// `t2 = similarity_transform(t1, transform)` up to `residual`.
    Isomorphic {
        transform: DMatrix<f64>,
        residual: f64,
    },
    NotIsomorphic { residual: f64 },
}

/// Connecting transform between two minimal realizations of the same
/// order, from their square observability matrices: `T = O₂⁺ O₁`. All
/// three similarity relations are then verified within `tol` (relative).
pub fn find_isomorphism(
    t1: &RealizationTriplet,
    t2: &RealizationTriplet,
    tol: f64,
) -> Result<IsomorphismOutcome, RealizationError> {
    let n = t1.order();
    if n != t2.order() {
        return Err(RealizationError::DifferentOrders(n, t2.order()));
    }
    if n == 0 {
        return Ok(IsomorphismOutcome::Isomorphic {
            transform: DMatrix::zeros(0, 0),
            residual: 0.0,
        });
    }
    let o1 = t1.observability_matrix(n);
    let o2 = t2.observability_matrix(n);
    let t = pseudo_inverse(&o2, 1e-12) * o1;

    // Inverse-free form of the similarity relations.
    let scale = 1.0
        + t1.f().amax().max(t2.f().amax())
        + t1.n_vec().amax().max(t2.n_vec().amax())
        + t1.h().amax().max(t2.h().amax());
    let res_h = (t2.h() * &t - t1.h()).amax();
    let res_f = (t2.f() * &t - &t * t1.f()).amax();
    let res_n = (&t * t1.n_vec() - t2.n_vec()).amax();
    let residual = res_h.max(res_f).max(res_n) / scale;

    if residual < tol && condition_number(&t) < TRANSFORM_COND_MAX {
        Ok(IsomorphismOutcome::Isomorphic {
            transform: t,
            residual,
        })
    } else {
        Ok(IsomorphismOutcome::NotIsomorphic { residual })
    }
}
