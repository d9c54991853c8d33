//! Scalar covariance series: the object the rest of the crate realizes and
//! classifies.

use thiserror::Error;

/// Errors raised when constructing a [`CovarianceSeries`].
#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("lag-0 value must be nonnegative, got {0}")]
    NegativeVariance(f64),
    #[error("series contains a non-finite value at lag {0}")]
    NonFinite(usize),
}

/// A lag-0 value `r0` together with finitely many lags `r_1, …, r_K`.
///
/// Construction only enforces `r0 ≥ 0` and finiteness. Whether the series
/// is an actual covariance series (Toeplitz-positive) is a nontrivial
/// question answered by [`crate::srt::toeplitz_is_covariance`] and the
/// positive-real machinery; classification deliberately accepts candidate
/// series that fail those tests.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSeries {
    r0: f64,
    lags: Vec<f64>,
}

impl CovarianceSeries {
    pub fn new(r0: f64, lags: Vec<f64>) -> Result<Self, SeriesError> {
        if !r0.is_finite() {
            return Err(SeriesError::NonFinite(0));
        }
        if r0 < 0.0 {
            return Err(SeriesError::NegativeVariance(r0));
        }
        if let Some(k) = lags.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite(k + 1));
        }
        Ok(Self { r0, lags })
    }

    /// Series of an uncorrelated process: `r0` and `num_lags` zero lags.
    pub fn white_noise(r0: f64, num_lags: usize) -> Self {
        Self {
            r0,
            lags: vec![0.0; num_lags],
        }
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Stored lags `r_1, …, r_K` (index 0 holds `r_1`).
    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    /// Lag value `r_k` for `k ≥ 1`. Panics if `k` is out of range or zero.
    pub fn lag(&self, k: usize) -> f64 {
        assert!(k >= 1, "lag index starts at 1; use r0() for lag 0");
        self.lags[k - 1]
    }

    /// Number of stored lags `K`.
    pub fn num_lags(&self) -> usize {
        self.lags.len()
    }

    pub fn max_abs_lag(&self) -> f64 {
        self.lags.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Stationarity bound `|r_k| ≤ r0` (Cauchy-Schwarz). Reported as a
    /// diagnostic; violating series are representable on purpose.
    pub fn satisfies_lag_bound(&self, tol: f64) -> bool {
        self.max_abs_lag() <= self.r0 + tol * (1.0 + self.r0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_r0_and_non_finite() {
        assert_eq!(
            CovarianceSeries::new(-1.0, vec![]),
            Err(SeriesError::NegativeVariance(-1.0))
        );
        assert_eq!(
            CovarianceSeries::new(1.0, vec![0.1, f64::NAN]),
            Err(SeriesError::NonFinite(2))
        );
    }

    #[test]
    fn accepts_lag_bound_violations() {
        // Not a covariance series, but must be constructible for the
        // classification pipeline to refute it.
        let s = CovarianceSeries::new(1.0, vec![1.5, 0.3]).unwrap();
        assert!(!s.satisfies_lag_bound(1e-12));
        assert_eq!(s.lag(1), 1.5);
    }

    #[test]
    fn white_noise_layout() {
        let s = CovarianceSeries::white_noise(2.0, 3);
        assert_eq!(s.r0(), 2.0);
        assert_eq!(s.lags(), &[0.0, 0.0, 0.0]);
        assert!(s.satisfies_lag_bound(0.0));
    }
}
