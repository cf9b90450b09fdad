use super::{Matrix, NumError, Scalar};

/// Maximum tolerated `|m_ij - m_ji|` for a matrix to count as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues below `-PSD_TOL` reject the input as indefinite.
pub const PSD_TOL: f64 = 1e-8;
/// Eigenvalues below this are clipped to zero in the singular fallback.
pub const EIGEN_CLIP: f64 = 1e-12;

/// Factors a symmetric positive semi-definite matrix as `F Fᵀ`.
///
/// Strictly positive definite input gets the ordinary lower-triangular
/// Cholesky factor. When a pivot collapses (rank-deficient input such as a
/// covariance at `|alpha| = 1`) the factor comes from an eigendecomposition
/// instead, `F = Q diag(sqrt(max(lambda, 0)))`, which is square but not
/// triangular.
pub fn cholesky<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>, NumError> {
    if !m.is_square() {
        return Err(NumError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if !m.is_finite() {
        return Err(NumError::NonFinite);
    }
    let a = m.cast::<f64>();
    let asym = a.asymmetry().unwrap_or(0.0);
    if asym > SYMMETRY_TOL {
        return Err(NumError::NotSymmetric { max_asymmetry: asym });
    }
    match strict_cholesky(&a) {
        Some(l) => Ok(l.cast()),
        None => eigen_factor(&a).map(|f| f.cast()),
    }
}

fn strict_cholesky(a: &Matrix<f64>) -> Option<Matrix<f64>> {
    let n = a.rows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut l = Matrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= EIGEN_CLIP * scale {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

fn eigen_factor(a: &Matrix<f64>) -> Result<Matrix<f64>, NumError> {
    let (values, vectors) = symmetric_eigen(a);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(NumError::NotPsd { min_eigenvalue: min });
    }
    let n = a.rows();
    let roots: Vec<f64> =
        values.iter().map(|&v| if v < EIGEN_CLIP { 0.0 } else { v.sqrt() }).collect();
    Ok(Matrix::from_fn(n, n, |i, j| vectors[(i, j)] * roots[j]))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues and a matrix whose columns are the matching
/// orthonormal eigenvectors.
pub fn symmetric_eigen(a: &Matrix<f64>) -> (Vec<f64>, Matrix<f64>) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::<f64>::identity(n);
    let total: f64 = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[(i, i)]).collect(), v)
}
