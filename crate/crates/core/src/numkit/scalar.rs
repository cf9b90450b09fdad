use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point element type used throughout the crate.
///
/// Everything numeric is written against this trait so the same code runs in
/// `f32` (training) and `f64` (gradient checks, the linear-model study).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Short type name, written into file headers.
    const NAME: &'static str;

    /// Converts an `f64` literal. Infallible for every implementor.
    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Row-major `c = alpha * op(a) * op(b) + beta * c`, where `op(a)` is
    /// `m x k` and `op(b)` is `k x n`. A transposed operand is stored in its
    /// untransposed row-major layout.
    ///
    /// When `beta` is zero, `c` is overwritten without being read.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        trans_a: bool,
        trans_b: bool,
        m: usize,
        n: usize,
        k: usize,
        alpha: Self,
        a: &[Self],
        b: &[Self],
        beta: Self,
        c: &mut [Self],
    ) {
        naive_gemm(trans_a, trans_b, m, n, k, alpha, a, b, beta, c)
    }
}

#[allow(clippy::too_many_arguments)]
fn check_gemm_dims<T>(m: usize, n: usize, k: usize, a: &[T], b: &[T], c: &[T]) {
    assert_eq!(a.len(), m * k, "gemm: lhs has {} elements, expected {m}x{k}", a.len());
    assert_eq!(b.len(), k * n, "gemm: rhs has {} elements, expected {k}x{n}", b.len());
    assert_eq!(c.len(), m * n, "gemm: out has {} elements, expected {m}x{n}", c.len());
}

/// Strides (row, col) of `op(x)` for a row-major buffer.
fn op_strides(trans: bool, rows: usize, cols: usize) -> (isize, isize) {
    // op(x) is rows x cols; storage is rows x cols when untransposed,
    // cols x rows otherwise.
    if trans {
        (1, rows as isize)
    } else {
        (cols as isize, 1)
    }
}

/// Portable reference kernel.
#[allow(clippy::too_many_arguments)]
pub fn naive_gemm<T: Scalar>(
    trans_a: bool,
    trans_b: bool,
    m: usize,
    n: usize,
    k: usize,
    alpha: T,
    a: &[T],
    b: &[T],
    beta: T,
    c: &mut [T],
) {
    check_gemm_dims(m, n, k, a, b, c);
    let (ra, ca) = op_strides(trans_a, m, k);
    let (rb, cb) = op_strides(trans_b, k, n);
    for i in 0..m {
        for j in 0..n {
            let mut acc = T::zero();
            for p in 0..k {
                let av = a[(i as isize * ra + p as isize * ca) as usize];
                let bv = b[(p as isize * rb + j as isize * cb) as usize];
                acc += av * bv;
            }
            let out = &mut c[i * n + j];
            *out = if beta == T::zero() { alpha * acc } else { alpha * acc + beta * *out };
        }
    }
}

macro_rules! impl_scalar {
    ($t:ty, $name:literal, $kernel:path) => {
        impl Scalar for $t {
            const NAME: &'static str = $name;

            #[inline]
            fn of(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            fn gemm(
                trans_a: bool,
                trans_b: bool,
                m: usize,
                n: usize,
                k: usize,
                alpha: Self,
                a: &[Self],
                b: &[Self],
                beta: Self,
                c: &mut [Self],
            ) {
                check_gemm_dims(m, n, k, a, b, c);
                if m == 0 || n == 0 {
                    return;
                }
                let (rsa, csa) = op_strides(trans_a, m, k);
                let (rsb, csb) = op_strides(trans_b, k, n);
                // SAFETY: dimensions and buffer lengths were checked above and
                // the strides address exactly the checked buffers.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, "f32", matrixmultiply::sgemm);
impl_scalar!(f64, "f64", matrixmultiply::dgemm);
