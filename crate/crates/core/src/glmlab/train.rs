use serde::Serialize;

use super::{GlmDataset, GlmError};
use crate::numkit::{logistic_loss, stable_sigmoid, symmetric_eigen, Matrix, Scalar};

/// Gradient-norm threshold at which Alice's descent stops early.
pub const ALICE_GRAD_TOL: f64 = 1e-5;
/// `|dL/dv|` threshold for Bob's scalar fine-tune.
pub const BOB_GRAD_TOL: f64 = 1e-6;

/// Weights of the two-layer linear network `sigmoid(v * wᵀx)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlmParams<T> {
    pub w: Vec<T>,
    pub v: T,
    pub lambda: T,
}

/// Outcome of Alice's regularized fit.
#[derive(Debug, Clone, Serialize)]
pub struct AliceFit<T> {
    pub params: GlmParams<T>,
    pub steps: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Objective value before each step, plus the final value.
    pub loss_history: Vec<f64>,
}

/// Outcome of Bob's one-parameter fine-tune.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BobFit<T> {
    pub v: T,
    pub steps: usize,
    pub grad: f64,
    pub converged: bool,
}

fn labels_for<T: Scalar>(data: &GlmDataset<T>, alice: bool) -> &[bool] {
    if alice {
        &data.y_alice
    } else {
        &data.y_bob
    }
}

/// Mean cross-entropy of `sigmoid(v * wᵀx)` plus `lambda ||w||²`, and its
/// gradient in `w`.
fn alice_objective<T: Scalar>(
    x: &Matrix<T>,
    y: &[bool],
    w: &[T],
    lambda: f64,
) -> (f64, Vec<f64>) {
    let n = x.rows();
    let d = x.cols();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d];
    for (i, &label) in y.iter().enumerate() {
        let row = x.row(i);
        let z: f64 = row.iter().zip(w).map(|(a, b)| a.as_f64() * b.as_f64()).sum();
        loss += logistic_loss(z, label);
        let r = stable_sigmoid(z) - if label { 1.0 } else { 0.0 };
        for (g, xv) in grad.iter_mut().zip(row) {
            *g += r * xv.as_f64();
        }
    }
    let inv_n = 1.0 / n as f64;
    let mut reg = 0.0;
    for (g, wv) in grad.iter_mut().zip(w) {
        let wv = wv.as_f64();
        *g = *g * inv_n + 2.0 * lambda * wv;
        reg += wv * wv;
    }
    (loss * inv_n + lambda * reg, grad)
}

/// Step size `1 / L` for Alice's objective, with `L` the Lipschitz bound
/// `lambda_max(XᵀX / n) / 4 + 2 lambda`.
pub fn suggest_alice_lr<T: Scalar>(data: &GlmDataset<T>, lambda: f64) -> f64 {
    let n = data.len().max(1) as f64;
    let gram = data.x.transpose().gram().cast::<f64>().map(|v| v / n);
    let (values, _) = symmetric_eigen(&gram);
    let top = values.into_iter().fold(0.0, f64::max);
    1.0 / (0.25 * top + 2.0 * lambda)
}

/// Alice's pre-training: full-batch gradient descent on the regularized
/// cross-entropy with the output weight clamped at `v = 1`.
///
/// Stops once `||grad|| < ALICE_GRAD_TOL` or after `steps` updates; the
/// returned fit says which.
pub fn train_alice_glm<T: Scalar>(
    data: &GlmDataset<T>,
    lambda: f64,
    steps: usize,
    lr: f64,
) -> Result<AliceFit<T>, GlmError> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(GlmError::InvalidSpec(format!("lambda must be positive, got {lambda}")));
    }
    if data.is_empty() {
        return Err(GlmError::InvalidSpec("empty dataset".into()));
    }
    let d = data.x.cols();
    let mut w = vec![0.0f64; d];
    let mut history = Vec::with_capacity(steps + 1);
    let mut taken = 0;
    let mut grad_norm;
    loop {
        let w_t: Vec<T> = w.iter().map(|&v| T::of(v)).collect();
        let (loss, grad) = alice_objective(&data.x, &data.y_alice, &w_t, lambda);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(GlmError::NonFinite { step: taken });
        }
        history.push(loss);
        grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < ALICE_GRAD_TOL || taken == steps {
            break;
        }
        for (wv, g) in w.iter_mut().zip(&grad) {
            *wv -= lr * g;
        }
        taken += 1;
    }
    Ok(AliceFit {
        params: GlmParams {
            w: w.into_iter().map(T::of).collect(),
            v: T::one(),
            lambda: T::of(lambda),
        },
        steps: taken,
        grad_norm,
        converged: grad_norm < ALICE_GRAD_TOL,
        loss_history: history,
    })
}

/// Backbone outputs `wᵀx` for every row.
pub fn backbone<T: Scalar>(w: &[T], x: &Matrix<T>) -> Vec<f64> {
    assert_eq!(w.len(), x.cols(), "weight length does not match feature count");
    (0..x.rows())
        .map(|i| x.row(i).iter().zip(w).map(|(a, b)| a.as_f64() * b.as_f64()).sum())
        .collect()
}

fn scalar_objective(f: &[f64], y: &[bool], v: f64) -> (f64, f64, f64) {
    let n = f.len() as f64;
    let (mut loss, mut g, mut h) = (0.0, 0.0, 0.0);
    for (&fi, &label) in f.iter().zip(y) {
        let z = v * fi;
        let p = stable_sigmoid(z);
        loss += logistic_loss(z, label);
        g += (p - if label { 1.0 } else { 0.0 }) * fi;
        h += p * (1.0 - p) * fi * fi;
    }
    (loss / n, g / n, h / n)
}

/// Bob's fine-tune of the single output weight `v'` on top of Alice's frozen
/// backbone `wᵀx`, against `y_bob`.
///
/// The problem is one-dimensional and convex, so each step is a Newton step
/// scaled by `lr` (1.0 = pure Newton) with step halving whenever the loss
/// would increase.
pub fn finetune_bob_scalar<T: Scalar>(
    w_star: &[T],
    data: &GlmDataset<T>,
    steps: usize,
    lr: f64,
) -> Result<BobFit<T>, GlmError> {
    if w_star.iter().any(|w| !w.is_finite()) {
        return Err(GlmError::InvalidSpec("backbone weights must be finite".into()));
    }
    if data.is_empty() {
        return Err(GlmError::InvalidSpec("empty dataset".into()));
    }
    let f = backbone(w_star, &data.x);
    let y = labels_for(data, false);
    let mut v = 0.0f64;
    let (mut loss, mut g, mut h) = scalar_objective(&f, y, v);
    let mut taken = 0;
    while g.abs() >= BOB_GRAD_TOL && taken < steps {
        if !loss.is_finite() {
            return Err(GlmError::NonFinite { step: taken });
        }
        let mut step = lr * g / h.max(1e-12);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = v - step;
            let (l2, g2, h2) = scalar_objective(&f, y, cand);
            if l2 <= loss {
                v = cand;
                (loss, g, h) = (l2, g2, h2);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        taken += 1;
        if !accepted {
            break;
        }
    }
    if !loss.is_finite() {
        return Err(GlmError::NonFinite { step: taken });
    }
    Ok(BobFit { v: T::of(v), steps: taken, grad: g.abs(), converged: g.abs() < BOB_GRAD_TOL })
}

/// Percentage of rows whose prediction `1[sigmoid(v wᵀx) > 0.5]` matches
/// `labels`. A logit of exactly zero predicts class 0.
pub fn evaluate_glm<T: Scalar>(w: &[T], v: T, x: &Matrix<T>, labels: &[bool]) -> f64 {
    assert_eq!(labels.len(), x.rows(), "label count does not match rows");
    if labels.is_empty() {
        return f64::NAN;
    }
    let v = v.as_f64();
    let f = backbone(w, x);
    let hits = f.iter().zip(labels).filter(|(&fi, &label)| (v * fi > 0.0) == label).count();
    100.0 * hits as f64 / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glmlab::{sample_glm_dataset, CorrelationSpec, Scenario};
    use crate::numkit::RngStream;

    fn data(alpha: f64, n: usize, seed: u64) -> GlmDataset<f64> {
        let spec = CorrelationSpec::new(alpha, 1, Scenario::Pairwise).unwrap();
        sample_glm_dataset(&spec, n, &RngStream::root(seed)).unwrap()
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let d = data(0.0, 10, 1);
        assert!(matches!(train_alice_glm(&d, 0.0, 10, 0.1), Err(GlmError::InvalidSpec(_))));
    }

    #[test]
    fn divergent_lr_reports_non_finite() {
        let d = data(0.5, 2000, 2);
        match train_alice_glm(&d, 0.05, 5000, 1e6) {
            Err(GlmError::NonFinite { .. }) => {}
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn alice_loss_decreases_monotonically() {
        let d = data(0.6, 5000, 3);
        let lr = suggest_alice_lr(&d, 0.05);
        let fit = train_alice_glm(&d, 0.05, 400, lr).unwrap();
        assert!(fit.converged, "grad norm {}", fit.grad_norm);
        let h = &fit.loss_history;
        let start = h.len() / 10;
        for pair in h[start..].windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn suggested_lr_handles_singular_gram() {
        // At alpha = -1 the features are x2 = -x1, so the Gram matrix has a
        // null direction along [1, 1].
        let d = data(-1.0, 5000, 7);
        let lr = suggest_alice_lr(&d, 0.05);
        assert!(lr < 3.0, "lr {lr}");
        let fit = train_alice_glm(&d, 0.05, 2000, lr).unwrap();
        assert!(fit.converged);
        assert!((fit.params.w[0] + fit.params.w[1]).abs() < 1e-6);
    }

    #[test]
    fn zero_weights_predict_class_zero() {
        let d = data(0.0, 4000, 4);
        let acc = evaluate_glm(&[0.0, 0.0], 1.0, &d.x, &d.y_alice);
        let zeros = d.y_alice.iter().filter(|&&y| !y).count();
        assert_eq!(acc, 100.0 * zeros as f64 / d.len() as f64);
    }

    #[test]
    fn bob_gradient_vanishes_at_exit() {
        let d = data(0.8, 5000, 5);
        let fit = finetune_bob_scalar(&[0.5, 0.5], &d, 100, 1.0).unwrap();
        assert!(fit.converged && fit.grad < BOB_GRAD_TOL);
        assert!(fit.v > 0.0);
    }

    #[test]
    fn bob_with_null_backbone_stays_at_zero() {
        let d = data(0.3, 100, 6);
        let fit = finetune_bob_scalar(&[0.0, 0.0], &d, 100, 1.0).unwrap();
        assert_eq!(fit.v, 0.0);
        assert!(fit.converged);
    }
}
