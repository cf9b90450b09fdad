use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FreezePlan, Grads, Mode, Network, NnError, Tensor};
use crate::dataforge::{epoch_resample, PairSource, PairedDataset};
use crate::numkit::{RngStream, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant,
    /// Cosine decay from `OptimizerConfig::lr` to `end` over all steps of
    /// the run, updated every iteration.
    Cosine { end: f64 },
}

/// SGD with momentum and L2 weight decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub schedule: Schedule,
}

impl OptimizerConfig {
    /// Alice's pre-training setup at paper scale.
    pub const ALICE_PAPER: Self = Self {
        lr: 0.001,
        momentum: 0.9,
        weight_decay: 5e-4,
        batch_size: 256,
        epochs: 15,
        schedule: Schedule::Constant,
    };

    /// Bob's fine-tuning setup at paper scale.
    pub const BOB_PAPER: Self = Self {
        lr: 0.3,
        momentum: 0.9,
        weight_decay: 5e-4,
        batch_size: 256,
        epochs: 10,
        schedule: Schedule::Cosine { end: 0.0 },
    };

    pub fn validate(&self) -> Result<(), NnError> {
        let end = match self.schedule {
            Schedule::Constant => 0.0,
            Schedule::Cosine { end } => end,
        };
        let reals = [("lr", self.lr), ("momentum", self.momentum), ("weight_decay", self.weight_decay), ("end", end)];
        for (name, v) in reals {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(NnError::InvalidConfig(format!("optimizer {name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Learning rate for iteration `t` of `total`.
    pub fn lr_at(&self, t: usize, total: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.lr,
            Schedule::Cosine { end } => cosine_lr(t, total, self.lr, end),
        }
    }
}

/// `end + (start - end) (1 + cos(pi t / total)) / 2`.
pub fn cosine_lr(t: usize, total: usize, start: f64, end: f64) -> f64 {
    if total == 0 {
        return start;
    }
    let frac = t.min(total) as f64 / total as f64;
    end + (start - end) * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Alice,
    Bob,
}

impl Target {
    pub fn labels(self, ds: &PairedDataset) -> &[u8] {
        ds.labels(self == Target::Alice)
    }
}

/// Training data: one fixed dataset reused every epoch, or a fresh draw of
/// `n` samples per epoch from sub-stream `stream.derive(epoch)`.
#[derive(Debug, Clone, Copy)]
pub enum DataSource<'a> {
    Fixed(&'a PairedDataset),
    Resample { source: PairSource<'a>, n: usize, stream: RngStream },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Training-mode accuracy on the epoch's batches, in percent.
    pub accuracy: f64,
    pub last_lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub steps: usize,
}

/// Copies images `idx` of `ds` into a network input tensor.
pub fn batch_tensor<T: Scalar>(ds: &PairedDataset, idx: &[usize]) -> Tensor<T> {
    Tensor::from_hwc_images(idx.iter().map(|&i| ds.image(i)), ds.height, ds.width, ds.channels)
}

fn check_dataset<T: Scalar>(net: &Network<T>, ds: &PairedDataset) -> Result<(), NnError> {
    if (ds.height, ds.width, ds.channels) != net.input_shape() {
        return Err(NnError::ShapeMismatch(format!(
            "dataset images are {}x{}x{}, network expects {:?}",
            ds.height,
            ds.width,
            ds.channels,
            net.input_shape()
        )));
    }
    Ok(())
}

/// Mean cross-entropy of softmax(logits) and its gradient in the logits.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[u8]) -> (f64, Tensor<T>, usize) {
    let (n, k, _, _) = logits.shape();
    let mut grad = Vec::with_capacity(n * k);
    let mut loss = 0.0;
    let mut hits = 0;
    for (row, &y) in logits.as_slice().chunks(k).zip(labels) {
        let z: Vec<f64> = row.iter().map(|v| v.as_f64()).collect();
        let lse = crate::numkit::log_sum_exp(&z);
        loss += lse - z[y as usize];
        if argmax(row) == y as usize {
            hits += 1;
        }
        grad.extend(z.iter().enumerate().map(|(j, &zj)| {
            let p = (zj - lse).exp();
            T::of((p - if j == y as usize { 1.0 } else { 0.0 }) / n as f64)
        }));
    }
    (loss / n as f64, Tensor::from_vec(n, k, 1, 1, grad), hits)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Trains `net` on `target`'s labels.
///
/// With a plan, freeze groups `1..ell` keep their parameters and BatchNorm
/// statistics bit-for-bit and run in inference mode; `None` trains every
/// layer. Shuffling and dropout draw from the `shuffle` and `dropout`
/// sub-streams of `rng`, one child per epoch.
pub fn train<T: Scalar>(
    net: &mut Network<T>,
    data: &DataSource<'_>,
    target: Target,
    opt: &OptimizerConfig,
    plan: Option<FreezePlan>,
    rng: &RngStream,
) -> Result<TrainLog, NnError> {
    opt.validate()?;
    net.apply_plan(plan)?;
    let keep_from = net.first_trainable_layer();
    let mut velocity: Grads<T> =
        net.layers().iter().map(|l| l.params.iter().map(|p| vec![T::zero(); p.data.len()]).collect()).collect();
    let n_per_epoch = match data {
        DataSource::Fixed(ds) => ds.len(),
        DataSource::Resample { n, .. } => *n,
    };
    if n_per_epoch == 0 {
        return Err(NnError::InvalidConfig("training set is empty".into()));
    }
    let per_epoch = n_per_epoch.div_ceil(opt.batch_size);
    let total = per_epoch * opt.epochs;
    let mut log = TrainLog::default();
    let mut step = 0;
    net.set_mode(Mode::Train);
    for epoch in 0..opt.epochs {
        let owned;
        let ds = match data {
            DataSource::Fixed(ds) => *ds,
            DataSource::Resample { source, n, stream } => {
                owned = epoch_resample(source, epoch, stream, *n)?;
                &owned
            }
        };
        check_dataset(net, ds)?;
        let labels = target.labels(ds);
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut rng.named("shuffle").derive(epoch as u64).generator());
        let mut drop_rng = rng.named("dropout").derive(epoch as u64).generator();
        let (mut loss_sum, mut hits, mut lr) = (0.0, 0, opt.lr_at(step, total));
        for (b, idx) in order.chunks(opt.batch_size).enumerate() {
            let x = batch_tensor::<T>(ds, idx);
            let y: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            let (logits, caches) = net.trace(&x, Mode::Train, Some(&mut drop_rng), keep_from)?;
            let (loss, dlogits, h) = cross_entropy(&logits, &y);
            if !loss.is_finite() {
                net.set_mode(Mode::Eval);
                return Err(NnError::NonFinite { epoch, batch: b, loss });
            }
            loss_sum += loss * idx.len() as f64;
            hits += h;
            lr = opt.lr_at(step, total);
            for (layer, cache) in net.layers_mut().iter_mut().zip(&caches) {
                layer.update_running(cache);
            }
            let (grads, _) = net.backward(caches, dlogits, false);
            sgd_update(net, &grads, &mut velocity, opt, lr);
            step += 1;
        }
        log.epochs.push(EpochLog {
            epoch,
            mean_loss: loss_sum / ds.len() as f64,
            accuracy: 100.0 * hits as f64 / ds.len() as f64,
            last_lr: lr,
        });
    }
    log.steps = step;
    net.set_mode(Mode::Eval);
    Ok(log)
}

fn sgd_update<T: Scalar>(net: &mut Network<T>, grads: &Grads<T>, velocity: &mut Grads<T>, opt: &OptimizerConfig, lr: f64) {
    let (lr, mu, wd) = (T::of(lr), T::of(opt.momentum), T::of(opt.weight_decay));
    for (li, layer) in net.layers_mut().iter_mut().enumerate() {
        if grads[li].is_empty() {
            continue;
        }
        for ((p, g), v) in layer.params.iter_mut().zip(&grads[li]).zip(velocity[li].iter_mut()) {
            for ((w, &gi), vi) in p.data.iter_mut().zip(g).zip(v.iter_mut()) {
                let d = gi + wd * *w;
                *vi = mu * *vi + d;
                *w -= lr * *vi;
            }
        }
    }
}

/// Eval-mode accuracy (percent) of `net` on `target`'s labels.
pub fn evaluate<T: Scalar>(net: &Network<T>, ds: &PairedDataset, target: Target) -> Result<f64, NnError> {
    check_dataset(net, ds)?;
    if ds.is_empty() {
        return Ok(f64::NAN);
    }
    let labels = target.labels(ds);
    let idx: Vec<usize> = (0..ds.len()).collect();
    let mut hits = 0;
    for chunk in idx.chunks(512) {
        let logits = net.logits(&batch_tensor::<T>(ds, chunk))?;
        let k = logits.sample_len();
        for (row, &i) in logits.as_slice().chunks(k).zip(chunk) {
            if argmax(row) == labels[i] as usize {
                hits += 1;
            }
        }
    }
    Ok(100.0 * hits as f64 / ds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSweepRow {
    pub ell: usize,
    pub accuracy: f64,
    pub final_loss: f64,
}

/// Bob's test accuracy for each fine-tuning regime `ell`. Every row starts
/// from a fresh copy of `alice` and uses the same random stream.
pub fn layer_sweep<T: Scalar>(
    alice: &Network<T>,
    train_data: &DataSource<'_>,
    test: &PairedDataset,
    ells: &[usize],
    opt: &OptimizerConfig,
    rng: &RngStream,
) -> Result<Vec<LayerSweepRow>, NnError> {
    ells.iter()
        .map(|&ell| {
            let mut bob = alice.clone();
            let log = train(&mut bob, train_data, Target::Bob, opt, Some(FreezePlan { ell }), rng)?;
            Ok(LayerSweepRow {
                ell,
                accuracy: evaluate(&bob, test, Target::Bob)?,
                final_loss: log.epochs.last().map_or(f64::NAN, |e| e.mean_loss),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_lr(0, 100, 0.3, 0.0), 0.3);
        assert!(cosine_lr(100, 100, 0.3, 0.0).abs() < 1e-17);
        assert!((cosine_lr(50, 100, 0.3, 0.0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn ce_is_stable_for_huge_logits() {
        let logits = Tensor::<f32>::from_vec(1, 3, 1, 1, vec![1000.0, -1000.0, 0.0]);
        let (loss, g, _) = cross_entropy(&logits, &[1]);
        assert!((loss - 2000.0).abs() < 1e-9);
        assert!(g.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn optimizer_validation() {
        let mut o = OptimizerConfig::ALICE_PAPER;
        assert!(o.validate().is_ok());
        o.batch_size = 0;
        assert!(o.validate().is_err());
        o = OptimizerConfig::BOB_PAPER;
        o.momentum = -0.1;
        assert!(o.validate().is_err());
    }
}
