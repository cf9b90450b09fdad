use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{cross_entropy, Cache, Layer, LayerSpec, Tensor};
use crate::numkit::RngStream;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradCheckKind {
    Dense,
    Conv2d,
    BatchNorm,
    Relu,
    Dropout,
    MaxPool2x2,
    Flatten,
    SoftmaxOutput,
}

impl GradCheckKind {
    pub const ALL: [GradCheckKind; 8] = [
        GradCheckKind::Dense,
        GradCheckKind::Conv2d,
        GradCheckKind::BatchNorm,
        GradCheckKind::Relu,
        GradCheckKind::Dropout,
        GradCheckKind::MaxPool2x2,
        GradCheckKind::Flatten,
        GradCheckKind::SoftmaxOutput,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub kind: GradCheckKind,
    pub spec: LayerSpec,
    pub batch: usize,
    pub in_shape: (usize, usize, usize),
    pub max_rel_error: f64,
    pub checked: usize,
}

struct Probe {
    layer: Layer<f64>,
    x: Tensor<f64>,
    /// Weights of the scalar loss `sum(r * y)`; `None` means cross-entropy
    /// against `labels`.
    r: Option<Vec<f64>>,
    labels: Vec<u8>,
    train: bool,
    dropout: RngStream,
}

impl Probe {
    fn loss(&self, layer: &Layer<f64>, x: &Tensor<f64>) -> f64 {
        let (y, _) = self.run(layer, x);
        match &self.r {
            Some(r) => y.as_slice().iter().zip(r).map(|(a, b)| a * b).sum(),
            None => cross_entropy(&y, &self.labels).0,
        }
    }

    fn run(&self, layer: &Layer<f64>, x: &Tensor<f64>) -> (Tensor<f64>, Cache<f64>) {
        let mut g = self.dropout.generator();
        layer.forward(x.clone(), self.train, Some(&mut g)).expect("probe shapes are consistent")
    }
}

fn random_probe(kind: GradCheckKind, rng: &RngStream) -> Probe {
    let mut g = rng.named("config").generator();
    let n = g.random_range(2..=4);
    let uniform = |g: &mut crate::numkit::StreamRng, len: usize| -> Vec<f64> {
        (0..len).map(|_| g.random_range(-1.0..1.0)).collect()
    };
    let (spec, shape) = match kind {
        GradCheckKind::Dense => (LayerSpec::Dense { units: g.random_range(2..=6) }, (g.random_range(3..=8), 1, 1)),
        GradCheckKind::SoftmaxOutput => {
            (LayerSpec::SoftmaxOutput { classes: g.random_range(2..=6) }, (g.random_range(3..=8), 1, 1))
        }
        GradCheckKind::Conv2d => (
            LayerSpec::Conv2d { filters: g.random_range(1..=3) },
            (g.random_range(1..=3), g.random_range(3..=6), g.random_range(3..=6)),
        ),
        GradCheckKind::BatchNorm => {
            if g.random::<bool>() {
                (LayerSpec::BatchNorm, (g.random_range(2..=5), 1, 1))
            } else {
                (LayerSpec::BatchNorm, (g.random_range(1..=3), g.random_range(2..=3), g.random_range(2..=3)))
            }
        }
        GradCheckKind::Relu => (LayerSpec::Relu, (g.random_range(2..=4), g.random_range(1..=3), g.random_range(1..=3))),
        GradCheckKind::Dropout => (
            LayerSpec::Dropout { rate: g.random_range(0.1..0.6) },
            (g.random_range(2..=4), g.random_range(1..=3), g.random_range(1..=3)),
        ),
        GradCheckKind::MaxPool2x2 => {
            (LayerSpec::MaxPool2x2, (g.random_range(1..=3), g.random_range(2..=5), g.random_range(2..=5)))
        }
        GradCheckKind::Flatten => {
            (LayerSpec::Flatten, (g.random_range(1..=3), g.random_range(1..=3), g.random_range(1..=3)))
        }
    };
    // Batch statistics over 4 samples are too jumpy for h = 1e-3.
    let n = if kind == GradCheckKind::BatchNorm { n + 6 } else { n };
    let mut layer = Layer::<f64>::new(spec, shape).expect("probe configs are valid");
    for p in layer.params.iter_mut() {
        p.data = uniform(&mut g, p.data.len());
    }
    for r in layer.running.iter_mut() {
        r.iter_mut().for_each(|v| *v = g.random_range(0.5..1.5));
    }
    let len = n * shape.0 * shape.1 * shape.2;
    let mut xs = uniform(&mut g, len);
    match kind {
        // Keep every input well away from the ReLU kink.
        GradCheckKind::Relu => xs.iter_mut().for_each(|v| *v = v.signum() * (v.abs() + 0.05)),
        // Distinct values spaced far wider than the step, so no pooling
        // window changes its argmax under perturbation.
        GradCheckKind::MaxPool2x2 => {
            let mut ranks: Vec<usize> = (0..len).collect();
            ranks.shuffle(&mut g);
            xs = ranks.iter().map(|&r| 0.05 * r as f64 - 0.025 * len as f64).collect();
        }
        _ => {}
    }
    let x = Tensor::from_vec(n, shape.0, shape.1, shape.2, xs);
    let out_len = n * layer.out_shape.0 * layer.out_shape.1 * layer.out_shape.2;
    let (r, labels) = if kind == GradCheckKind::SoftmaxOutput {
        (None, (0..n).map(|_| g.random_range(0..layer.out_shape.0) as u8).collect())
    } else {
        (Some(uniform(&mut g, out_len)), vec![])
    };
    let train = matches!(kind, GradCheckKind::BatchNorm | GradCheckKind::Dropout);
    Probe { layer, x, r, labels, train, dropout: rng.named("dropout") }
}

/// Compares analytic parameter and input gradients of one randomly sized
/// layer against central differences, all in `f64`.
///
/// The relative error of a coordinate is `|a - n| / max(|a|, |n|, floor)`
/// with `floor = 1e-3 * max |n|` over the whole check, so coordinates whose
/// true gradient is (near) zero are judged on an absolute scale.
pub fn gradient_check(kind: GradCheckKind, rng: &RngStream) -> GradCheckReport {
    let probe = random_probe(kind, rng);
    let (y, cache) = probe.run(&probe.layer, &probe.x);
    let dy = match &probe.r {
        Some(r) => Tensor::from_vec(y.shape().0, y.shape().1, y.shape().2, y.shape().3, r.clone()),
        None => cross_entropy(&y, &probe.labels).1,
    };
    let (pgrads, dx) = probe.layer.backward(cache, dy, true, true);
    let dx = dx.expect("input gradient requested");

    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (pi, grad) in pgrads.iter().enumerate() {
        for j in 0..grad.len() {
            let mut plus = probe.layer.clone();
            plus.params[pi].data[j] += FD_STEP;
            let mut minus = probe.layer.clone();
            minus.params[pi].data[j] -= FD_STEP;
            let num = (probe.loss(&plus, &probe.x) - probe.loss(&minus, &probe.x)) / (2.0 * FD_STEP);
            pairs.push((grad[j], num));
        }
    }
    for j in 0..probe.x.as_slice().len() {
        let mut xp = probe.x.clone();
        xp.as_mut_slice()[j] += FD_STEP;
        let mut xm = probe.x.clone();
        xm.as_mut_slice()[j] -= FD_STEP;
        let num = (probe.loss(&probe.layer, &xp) - probe.loss(&probe.layer, &xm)) / (2.0 * FD_STEP);
        pairs.push((dx.as_slice()[j], num));
    }
    let floor = 1e-3 * pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let max_rel_error = pairs
        .iter()
        .map(|&(a, n)| {
            let denom = a.abs().max(n.abs()).max(floor);
            if denom == 0.0 {
                0.0
            } else {
                (a - n).abs() / denom
            }
        })
        .fold(0.0, f64::max);
    GradCheckReport {
        kind,
        spec: probe.layer.spec,
        batch: probe.x.batch(),
        in_shape: probe.layer.in_shape,
        max_rel_error,
        checked: pairs.len(),
    }
}
