use serde::{Deserialize, Serialize};

use super::AttribError;
use crate::nncore::{softmax_rows, Network, NnError, Tensor};
use crate::numkit::Scalar;

/// Riemann steps used when the caller has no preference.
pub const DEFAULT_STEPS: usize = 128;

/// Path inputs per forward/backward batch.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributionTarget {
    /// Pre-softmax logit of the target class.
    #[default]
    Logit,
    /// Softmax probability of the target class.
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Black,
}

/// Attributions of one image, laid out HWC like the source pixels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<f64>,
    pub target_class: usize,
    pub target: AttributionTarget,
    pub baseline: Baseline,
    pub steps: usize,
    /// `F(x) - F(baseline)`.
    pub output_delta: f64,
    /// `|sum(values) - output_delta|`.
    pub completeness_gap: f64,
}

impl AttributionMap {
    /// Completeness gap relative to `|F(x) - F(baseline)|`.
    pub fn relative_gap(&self) -> f64 {
        self.completeness_gap / self.output_delta.abs().max(f64::MIN_POSITIVE)
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.values[(y * self.width + x) * self.channels + c]
    }
}

fn target_values<T: Scalar>(logits: &Tensor<T>, class: usize, target: AttributionTarget) -> Vec<f64> {
    let k = logits.sample_len();
    match target {
        AttributionTarget::Logit => logits.as_slice().chunks(k).map(|r| r[class].as_f64()).collect(),
        AttributionTarget::Probability => {
            softmax_rows(logits).as_slice().chunks(k).map(|r| r[class].as_f64()).collect()
        }
    }
}

/// Integrated gradients of `net`'s class `class` output for a single input
/// `x` (batch of one), from the all-zero (black) baseline.
///
/// Uses the midpoint rule: the gradient is averaged over the `steps`
/// points `x (s - 1/2) / steps`, `s = 1..=steps`, then multiplied by `x`.
/// The network runs in `Eval` mode.
pub fn integrated_gradients<T: Scalar>(
    net: &Network<T>,
    x: &Tensor<T>,
    class: usize,
    steps: usize,
    target: AttributionTarget,
) -> Result<AttributionMap, AttribError> {
    if steps == 0 {
        return Err(AttribError::NoSteps);
    }
    if x.batch() != 1 {
        return Err(NnError::ShapeMismatch(format!("expected one input, got a batch of {}", x.batch())).into());
    }
    let (c, h, w) = x.sample_shape();
    let ends = {
        let mut both = Tensor::zeros(2, c, h, w);
        both.sample_mut(0).copy_from_slice(x.sample(0));
        net.logits(&both)?
    };
    let classes = ends.sample_len();
    if class >= classes {
        return Err(AttribError::BadClass { class, classes });
    }
    let f = target_values(&ends, class, target);
    let output_delta = f[0] - f[1];

    let len = x.sample_len();
    let mut total = vec![0.0f64; len];
    let alphas: Vec<f64> = (1..=steps).map(|s| (s as f64 - 0.5) / steps as f64).collect();
    for chunk in alphas.chunks(CHUNK) {
        let mut path = Tensor::zeros(chunk.len(), c, h, w);
        for (i, &a) in chunk.iter().enumerate() {
            let a = T::of(a);
            path.sample_mut(i).iter_mut().zip(x.sample(0)).for_each(|(p, &v)| *p = v * a);
        }
        let logits = net.logits(&path)?;
        let mut seed = Tensor::zeros(chunk.len(), classes, 1, 1);
        match target {
            AttributionTarget::Logit => {
                for i in 0..chunk.len() {
                    seed.sample_mut(i)[class] = T::one();
                }
            }
            AttributionTarget::Probability => {
                let p = softmax_rows(&logits);
                for i in 0..chunk.len() {
                    let row = p.sample(i).to_vec();
                    for (j, s) in seed.sample_mut(i).iter_mut().enumerate() {
                        let delta = if j == class { T::one() } else { T::zero() };
                        *s = row[class] * (delta - row[j]);
                    }
                }
            }
        }
        let (_, grad) = net.input_gradient(&path, &seed)?;
        for i in 0..chunk.len() {
            total.iter_mut().zip(grad.sample(i)).for_each(|(t, g)| *t += g.as_f64());
        }
    }

    // CHW -> HWC while applying (x - baseline) / steps.
    let mut values = vec![0.0; len];
    let xs = x.sample(0);
    for ch in 0..c {
        for p in 0..h * w {
            let j = ch * h * w + p;
            values[p * c + ch] = xs[j].as_f64() * total[j] / steps as f64;
        }
    }
    let sum: f64 = values.iter().sum();
    Ok(AttributionMap {
        height: h,
        width: w,
        channels: c,
        values,
        target_class: class,
        target,
        baseline: Baseline::Black,
        steps,
        output_delta,
        completeness_gap: (sum - output_delta).abs(),
    })
}
