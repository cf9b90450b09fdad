use rand::Rng;
use rand_distr::StandardNormal;

use super::{Matrix, NumError, RngStream, Scalar};

/// Draws `n` zero-mean Gaussian rows `F z`, `z ~ N(0, I)`.
///
/// The covariance of each row is `F Fᵀ`. The stream is consumed row by row,
/// one standard normal per column of `F`.
pub fn sample_mvn<T: Scalar>(
    factor: &Matrix<T>,
    n: usize,
    rng: &RngStream,
) -> Result<Matrix<T>, NumError> {
    if !factor.is_square() {
        return Err(NumError::NotSquare { rows: factor.rows(), cols: factor.cols() });
    }
    let d = factor.rows();
    let mut g = rng.generator();
    let z = Matrix::from_fn(n, d, |_, _| T::of(g.sample::<f64, _>(StandardNormal)));
    let mut out = Matrix::zeros(n, d);
    // out = z Fᵀ
    T::gemm(
        false,
        true,
        n,
        d,
        d,
        T::one(),
        z.as_slice(),
        factor.as_slice(),
        T::zero(),
        out.as_mut_slice(),
    );
    Ok(out)
}

/// Unbiased sample covariance of the columns of `x`.
pub fn empirical_covariance<T: Scalar>(x: &Matrix<T>) -> Matrix<f64> {
    let (n, d) = (x.rows(), x.cols());
    let mut means = vec![0.0; d];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(x.row(i)) {
            *m += v.as_f64();
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let centered = Matrix::from_fn(n, d, |i, j| x[(i, j)].as_f64() - means[j]);
    let denom = (n.max(2) - 1) as f64;
    centered.transpose().gram().map(|v| v / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_factor_gives_zero_samples() {
        let s = sample_mvn(&Matrix::<f64>::zeros(3, 3), 50, &RngStream::root(3)).unwrap();
        assert!(s.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_streams_are_bitwise_identical() {
        let f = Matrix::from_rows(&[vec![1.0f32, 0.0], vec![0.5, 0.8]]);
        let a = sample_mvn(&f, 100, &RngStream::new(9, 2)).unwrap();
        let b = sample_mvn(&f, 100, &RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_square_factor() {
        let r = sample_mvn(&Matrix::<f64>::zeros(2, 3), 1, &RngStream::root(0));
        assert!(matches!(r, Err(NumError::NotSquare { .. })));
    }
}
