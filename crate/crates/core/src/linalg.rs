//! Small dense linear-algebra helpers shared across the crate.
//!
//! Matrices here are tiny (latent dimensions of a handful), so everything
//! goes through dense eigen/SVD decompositions rather than structured
//! solvers.

use nalgebra::{DMatrix, DVector};

/// Relative eigenvalue slack under which a symmetric matrix still counts as
/// positive semi-definite: an eigenvalue above `-PSD_REL_TOL * (1 + ‖M‖)`
/// is treated as a zero hit by rounding.
pub const PSD_REL_TOL: f64 = 1e-9;

/// Threshold for strict positivity of scalars and eigenvalues.
pub const STRICT_POS_TOL: f64 = 1e-12;

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix. Empty matrices are vacuously
/// positive, reported as `+∞`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetrize(m).symmetric_eigen().eigenvalues.min()
}

/// Largest eigenvalue magnitude of a symmetric matrix (its spectral norm).
pub fn symmetric_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// Positive semi-definiteness within the crate-wide relative tolerance:
/// min eigenvalue above `-rel_tol * (1 + ‖M‖)`.
pub fn is_psd(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    min_symmetric_eigenvalue(m) > -rel_tol * (1.0 + symmetric_norm(m))
}

/// Factor `L` with `L Lᵀ = M` for a symmetric PSD matrix, via the spectral
/// decomposition with negative eigenvalues clamped to zero. Used to sample
/// Gaussian vectors with possibly singular covariance.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = symmetrize(m).symmetric_eigen();
    let sqrt = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
}

/// Solve the discrete Lyapunov equation `X = F X Fᵀ + C` by Kronecker
/// vectorization: `(I - F⊗F) vec(X) = vec(C)`. Falls back to fixed-point
/// iteration when the linear system is numerically singular. Returns `None`
/// when `F` is not strictly stable.
pub fn solve_discrete_lyapunov(f: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = f.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    if spectral_radius(f) >= 1.0 {
        return None;
    }
    let kron = f.kronecker(f);
    let system = DMatrix::identity(n * n, n * n) - kron;
    let rhs = DVector::from_column_slice(c.as_slice());
    if let Some(x) = system.lu().solve(&rhs) {
        let m = DMatrix::from_column_slice(n, n, x.as_slice());
        return Some(symmetrize(&m));
    }
    // Fixed-point fallback: X_{k+1} = C + F X_k Fᵀ converges for stable F.
    let mut x = c.clone();
    for _ in 0..100_000 {
        let next = c + f * &x * f.transpose();
        let delta = (&next - &x).amax();
        x = next;
        if delta < 1e-15 * (1.0 + x.amax()) {
            return Some(symmetrize(&x));
        }
    }
    None
}

/// Thin singular value decomposition `M = U diag(σ) Vᵀ` with singular
/// values sorted in descending order. `U` is `rows x k` and `Vᵀ` is
/// `k x cols` with `k = min(rows, cols)`; columns of `U` belonging to zero
/// singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

/// One-sided Jacobi SVD.
///
/// Small dense matrices only; chosen over the iterative bidiagonal SVD
/// because it converges unconditionally and keeps full relative accuracy
/// on the tiny trailing singular values that the Hankel rank decisions
/// depend on.
pub fn svd_jacobi(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        let k = rows.min(cols);
        return Svd {
            u: DMatrix::zeros(rows, k),
            singular_values: vec![],
            v_t: DMatrix::zeros(k, cols),
        };
    }
    if rows < cols {
        let t = svd_jacobi(&m.transpose());
        return Svd {
            u: t.v_t.transpose(),
            singular_values: t.singular_values,
            v_t: t.u.transpose(),
        };
    }

    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    // Absolute floor so exactly-zero column pairs never trigger rotations.
    let floor = f64::MIN_POSITIVE;

    for _sweep in 0..64 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for r in 0..rows {
                    let x = a[(r, i)];
                    let y = a[(r, j)];
                    aii += x * x;
                    ajj += y * y;
                    aij += x * y;
                }
                if aij.abs() <= 1e-15 * (aii * ajj).sqrt() + floor {
                    continue;
                }
                rotated = true;
                let tau = (ajj - aii) / (2.0 * aij);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..rows {
                    let x = a[(r, i)];
                    let y = a[(r, j)];
                    a[(r, i)] = c * x - s * y;
                    a[(r, j)] = s * x + c * y;
                }
                for r in 0..cols {
                    let x = v[(r, i)];
                    let y = v[(r, j)];
                    v[(r, i)] = c * x - s * y;
                    v[(r, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = (0..cols).map(|j| (a.column(j).norm(), j)).collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite singular values"));

    let mut u = DMatrix::zeros(rows, cols);
    let mut v_t = DMatrix::zeros(cols, cols);
    let mut singular_values = Vec::with_capacity(cols);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        singular_values.push(sigma);
        if sigma > 0.0 {
            let col = a.column(j) / sigma;
            u.column_mut(k).copy_from(&col);
        }
        v_t.row_mut(k).copy_from(&v.column(j).transpose());
    }
    Svd {
        u,
        singular_values,
        v_t,
    }
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `tol * σ_max` (and an absolute floor) treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = svd_jacobi(m);
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let eps = (tol * smax).max(STRICT_POS_TOL);
    let k = svd.singular_values.len();
    let inv = DVector::from_iterator(
        k,
        svd.singular_values
            .iter()
            .map(|&s| if s > eps { 1.0 / s } else { 0.0 }),
    );
    svd.v_t.transpose() * DMatrix::from_diagonal(&inv) * svd.u.transpose()
}

/// 2-norm condition number `σ_max / σ_min`; `+∞` for singular matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = svd_jacobi(m).singular_values;
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Symmetric Toeplitz matrix with the given first row.
pub fn symmetric_toeplitz(first_row: &[f64]) -> DMatrix<f64> {
    let n = first_row.len();
    DMatrix::from_fn(n, n, |i, j| first_row[i.abs_diff(j)])
}
