use rand::Rng;

use super::{build_covariance, CorrelationSpec, GlmError};
use crate::numkit::{cholesky, sample_mvn, stable_sigmoid, Matrix, RngStream, Scalar};

/// Features with Alice's and Bob's binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmDataset<T> {
    pub x: Matrix<T>,
    pub y_alice: Vec<bool>,
    pub y_bob: Vec<bool>,
}

impl<T: Scalar> GlmDataset<T> {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    /// Number of features per side.
    pub fn k(&self) -> usize {
        self.x.cols() / 2
    }
}

/// Sum of the first `k` (Alice) or last `k` (Bob) features of a row.
pub fn task_score<T: Scalar>(row: &[T], alice: bool) -> T {
    let k = row.len() / 2;
    let side = if alice { &row[..k] } else { &row[k..] };
    side.iter().copied().sum()
}

/// Draws `n` feature rows from the zero-mean Gaussian with covariance
/// `build_covariance(spec)` and labels
/// `y_alice ~ Bernoulli(sigmoid(sum of Alice's features))`,
/// `y_bob ~ Bernoulli(sigmoid(sum of Bob's features))`.
pub fn sample_glm_dataset<T: Scalar>(
    spec: &CorrelationSpec,
    n: usize,
    rng: &RngStream,
) -> Result<GlmDataset<T>, GlmError> {
    if n == 0 {
        return Err(GlmError::InvalidSpec("dataset size must be at least 1".into()));
    }
    let cov: Matrix<T> = build_covariance(spec);
    let factor = cholesky(&cov)?;
    let x = sample_mvn(&factor, n, &rng.named("features"))?;
    let mut g = rng.named("labels").generator();
    let mut y_alice = Vec::with_capacity(n);
    let mut y_bob = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let pa = stable_sigmoid(task_score(row, true).as_f64());
        let pb = stable_sigmoid(task_score(row, false).as_f64());
        y_alice.push(g.random::<f64>() < pa);
        y_bob.push(g.random::<f64>() < pb);
    }
    Ok(GlmDataset { x, y_alice, y_bob })
}
