use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NnError, Tensor};
use crate::numkit::{Scalar, StreamRng};

/// BatchNorm running-statistics momentum.
pub const BN_MOMENTUM: f64 = 0.1;
/// BatchNorm variance epsilon.
pub const BN_EPS: f64 = 1e-5;

/// One layer of a network. Convolutions are 3x3 with stride 1 and zero
/// padding 1; pooling is 2x2 with stride 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { units: usize },
    Conv2d { filters: usize },
    BatchNorm,
    Relu,
    Dropout { rate: f64 },
    MaxPool2x2,
    Flatten,
    /// Dense layer producing class logits; softmax is applied by the loss
    /// and by [`Network::probabilities`](super::Network::probabilities).
    SoftmaxOutput { classes: usize },
}

impl LayerSpec {
    /// Layers with weights of their own. Each one opens a freeze group; the
    /// parameter-free and BatchNorm layers after it belong to that group.
    pub fn is_trainable(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv2d { .. } | LayerSpec::SoftmaxOutput { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::BatchNorm => "batch_norm",
            LayerSpec::Relu => "relu",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::MaxPool2x2 => "max_pool2x2",
            LayerSpec::Flatten => "flatten",
            LayerSpec::SoftmaxOutput { .. } => "softmax_output",
        }
    }

    /// Per-sample output shape `(c, h, w)` for input `(c, h, w)`.
    pub fn output_shape(&self, (c, h, w): (usize, usize, usize)) -> Result<(usize, usize, usize), NnError> {
        let flat = |what: &str| {
            if h != 1 || w != 1 {
                Err(NnError::ShapeMismatch(format!("{what} needs flat input, got {c}x{h}x{w}")))
            } else {
                Ok(())
            }
        };
        match *self {
            LayerSpec::Dense { units } => {
                flat("dense")?;
                positive(units, "dense units")?;
                Ok((units, 1, 1))
            }
            LayerSpec::SoftmaxOutput { classes } => {
                flat("softmax output")?;
                positive(classes, "output classes")?;
                Ok((classes, 1, 1))
            }
            LayerSpec::Conv2d { filters } => {
                positive(filters, "conv filters")?;
                Ok((filters, h, w))
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(NnError::InvalidConfig(format!("dropout rate {rate} outside [0, 1)")));
                }
                Ok((c, h, w))
            }
            LayerSpec::MaxPool2x2 => {
                if h < 2 || w < 2 {
                    return Err(NnError::ShapeMismatch(format!("cannot 2x2-pool a {h}x{w} map")));
                }
                Ok((c, h / 2, w / 2))
            }
            LayerSpec::Flatten => Ok((c * h * w, 1, 1)),
            LayerSpec::BatchNorm | LayerSpec::Relu => Ok((c, h, w)),
        }
    }
}

fn positive(v: usize, what: &str) -> Result<(), NnError> {
    if v == 0 {
        Err(NnError::InvalidConfig(format!("{what} must be positive")))
    } else {
        Ok(())
    }
}

/// Parameter tensor with its logical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Param<T> {
    fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![T::zero(); len] }
    }

    fn filled(shape: Vec<usize>, v: T) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![v; len] }
    }
}

/// A layer with its parameters.
///
/// Dense and output layers hold `[weight (out x in), bias]`; Conv2d holds
/// `[weight (filters x c x 3 x 3), bias]`; BatchNorm holds `[gamma, beta]`
/// and keeps `[running_mean, running_var]` in `running`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    pub in_shape: (usize, usize, usize),
    pub out_shape: (usize, usize, usize),
    pub params: Vec<Param<T>>,
    pub running: Vec<Vec<T>>,
}

/// Saved activations for the backward pass.
#[derive(Debug, Clone)]
pub enum Cache<T> {
    Empty,
    Input(Vec<T>),
    Cols(Vec<T>),
    Norm {
        xhat: Vec<T>,
        inv_std: Vec<T>,
        /// Batch mean and unbiased variance when run in training mode.
        batch_stats: Option<(Vec<f64>, Vec<f64>)>,
    },
    Output(Vec<T>),
    Mask(Option<Vec<T>>),
    Argmax(Vec<u32>),
}

impl<T: Scalar> Layer<T> {
    /// Layer with zero weights (BatchNorm starts at gamma = 1, beta = 0,
    /// running mean 0 and running variance 1).
    pub fn new(spec: LayerSpec, in_shape: (usize, usize, usize)) -> Result<Self, NnError> {
        let out_shape = spec.output_shape(in_shape)?;
        let (c, _, _) = in_shape;
        let (params, running) = match spec {
            LayerSpec::Dense { units } | LayerSpec::SoftmaxOutput { classes: units } => {
                (vec![Param::zeros(vec![units, c]), Param::zeros(vec![units])], vec![])
            }
            LayerSpec::Conv2d { filters } => {
                (vec![Param::zeros(vec![filters, c, 3, 3]), Param::zeros(vec![filters])], vec![])
            }
            LayerSpec::BatchNorm => (
                vec![Param::filled(vec![c], T::one()), Param::zeros(vec![c])],
                vec![vec![T::zero(); c], vec![T::one(); c]],
            ),
            _ => (vec![], vec![]),
        };
        Ok(Self { spec, in_shape, out_shape, params, running })
    }

    /// Number of input units feeding one output unit.
    pub fn fan_in(&self) -> usize {
        match self.spec {
            LayerSpec::Conv2d { .. } => self.in_shape.0 * 9,
            _ => self.in_shape.0 * self.in_shape.1 * self.in_shape.2,
        }
    }

    /// Weights `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, zero bias. No-op for
    /// layers without weights.
    pub fn init_uniform(&mut self, g: &mut StreamRng) {
        if !self.spec.is_trainable() {
            return;
        }
        let bound = 1.0 / (self.fan_in() as f64).sqrt();
        for v in self.params[0].data.iter_mut() {
            *v = T::of(g.random_range(-bound..bound));
        }
        self.params[1].data.iter_mut().for_each(|b| *b = T::zero());
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    /// Forward pass over a batch. `train` selects batch statistics and
    /// active dropout; dropout in training mode draws from `rng`.
    pub fn forward(
        &self,
        x: Tensor<T>,
        train: bool,
        rng: Option<&mut StreamRng>,
    ) -> Result<(Tensor<T>, Cache<T>), NnError> {
        if x.sample_shape() != self.in_shape {
            return Err(NnError::ShapeMismatch(format!(
                "{} expects {:?} per sample, got {:?}",
                self.spec.name(),
                self.in_shape,
                x.sample_shape()
            )));
        }
        let n = x.batch();
        let (oc, oh, ow) = self.out_shape;
        Ok(match self.spec {
            LayerSpec::Dense { .. } | LayerSpec::SoftmaxOutput { .. } => {
                let (inp, out) = (self.in_shape.0, oc);
                let mut y = Tensor::zeros(n, out, 1, 1);
                T::gemm(false, true, n, out, inp, T::one(), x.as_slice(), &self.params[0].data, T::zero(), y.as_mut_slice());
                add_bias(y.as_mut_slice(), &self.params[1].data, 1);
                (y, Cache::Input(x.into_vec()))
            }
            LayerSpec::Conv2d { .. } => {
                let (c, h, w) = self.in_shape;
                let (k, hw) = (c * 9, h * w);
                let mut cols = vec![T::zero(); n * k * hw];
                let mut y = Tensor::zeros(n, oc, h, w);
                for s in 0..n {
                    let col = &mut cols[s * k * hw..(s + 1) * k * hw];
                    im2col(x.sample(s), c, h, w, col);
                    let ys = y.sample_mut(s);
                    T::gemm(false, false, oc, hw, k, T::one(), &self.params[0].data, col, T::zero(), ys);
                    add_bias(ys, &self.params[1].data, hw);
                }
                (y, Cache::Cols(cols))
            }
            LayerSpec::BatchNorm => self.batch_norm_forward(x, train),
            LayerSpec::Relu => {
                let mut y = x;
                y.as_mut_slice().iter_mut().for_each(|v| *v = v.max(T::zero()));
                let out = y.as_slice().to_vec();
                (y, Cache::Output(out))
            }
            LayerSpec::Dropout { rate } => {
                if !train || rate == 0.0 {
                    return Ok((x, Cache::Mask(None)));
                }
                let g = rng.ok_or_else(|| {
                    NnError::InvalidConfig("dropout in training mode needs a random stream".into())
                })?;
                let keep = T::of(1.0 / (1.0 - rate));
                let mask: Vec<T> =
                    (0..x.as_slice().len()).map(|_| if g.random::<f64>() < rate { T::zero() } else { keep }).collect();
                let mut y = x;
                y.as_mut_slice().iter_mut().zip(&mask).for_each(|(v, &m)| *v *= m);
                (y, Cache::Mask(Some(mask)))
            }
            LayerSpec::MaxPool2x2 => {
                let (c, h, w) = self.in_shape;
                let mut y = Tensor::zeros(n, oc, oh, ow);
                let mut arg = Vec::with_capacity(n * oc * oh * ow);
                for s in 0..n {
                    let xs = x.sample(s);
                    let ys = y.sample_mut(s);
                    for ch in 0..c {
                        for py in 0..oh {
                            for px in 0..ow {
                                let mut best = ch * h * w + 2 * py * w + 2 * px;
                                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                                    let i = ch * h * w + (2 * py + dy) * w + 2 * px + dx;
                                    if xs[i] > xs[best] {
                                        best = i;
                                    }
                                }
                                ys[ch * oh * ow + py * ow + px] = xs[best];
                                arg.push(best as u32);
                            }
                        }
                    }
                }
                (y, Cache::Argmax(arg))
            }
            LayerSpec::Flatten => (x.reshaped(oc, oh, ow), Cache::Empty),
        })
    }

    fn batch_norm_forward(&self, x: Tensor<T>, train: bool) -> (Tensor<T>, Cache<T>) {
        let (n, c, h, w) = x.shape();
        let s = h * w;
        let m = (n * s) as f64;
        let (gamma, beta) = (&self.params[0].data, &self.params[1].data);
        let mut mean = vec![0.0f64; c];
        let mut var = vec![0.0f64; c];
        let batch_stats = if train {
            let xs = x.as_slice();
            for i in 0..n {
                for ch in 0..c {
                    let base = (i * c + ch) * s;
                    mean[ch] += xs[base..base + s].iter().map(|v| v.as_f64()).sum::<f64>();
                }
            }
            mean.iter_mut().for_each(|v| *v /= m);
            for i in 0..n {
                for ch in 0..c {
                    let base = (i * c + ch) * s;
                    var[ch] += xs[base..base + s].iter().map(|v| (v.as_f64() - mean[ch]).powi(2)).sum::<f64>();
                }
            }
            let unbiased: Vec<f64> = var.iter().map(|v| if m > 1.0 { v / (m - 1.0) } else { v / m }).collect();
            var.iter_mut().for_each(|v| *v /= m);
            Some((mean.clone(), unbiased))
        } else {
            for ch in 0..c {
                mean[ch] = self.running[0][ch].as_f64();
                var[ch] = self.running[1][ch].as_f64();
            }
            None
        };
        let inv_std: Vec<T> = var.iter().map(|v| T::of(1.0 / (v + BN_EPS).sqrt())).collect();
        let mean_t: Vec<T> = mean.iter().map(|&v| T::of(v)).collect();
        let mut xhat = x.into_vec();
        let mut y = vec![T::zero(); xhat.len()];
        for i in 0..n {
            for ch in 0..c {
                let base = (i * c + ch) * s;
                for j in base..base + s {
                    xhat[j] = (xhat[j] - mean_t[ch]) * inv_std[ch];
                    y[j] = gamma[ch] * xhat[j] + beta[ch];
                }
            }
        }
        (Tensor::from_vec(n, c, h, w, y), Cache::Norm { xhat, inv_std, batch_stats })
    }

    /// Backward pass. Returns parameter gradients (empty unless
    /// `want_params`) and the input gradient (when `want_input`).
    pub fn backward(
        &self,
        cache: Cache<T>,
        dy: Tensor<T>,
        want_params: bool,
        want_input: bool,
    ) -> (Vec<Vec<T>>, Option<Tensor<T>>) {
        let n = dy.batch();
        let (c, h, w) = self.in_shape;
        match (self.spec, cache) {
            (LayerSpec::Dense { .. } | LayerSpec::SoftmaxOutput { .. }, Cache::Input(x)) => {
                let out = self.out_shape.0;
                let mut grads = vec![];
                if want_params {
                    let mut dw = vec![T::zero(); out * c];
                    T::gemm(true, false, out, c, n, T::one(), dy.as_slice(), &x, T::zero(), &mut dw);
                    let mut db = vec![T::zero(); out];
                    for row in dy.as_slice().chunks(out) {
                        db.iter_mut().zip(row).for_each(|(b, &g)| *b += g);
                    }
                    grads = vec![dw, db];
                }
                let dx = want_input.then(|| {
                    let mut dx = Tensor::zeros(n, c, 1, 1);
                    T::gemm(false, false, n, c, out, T::one(), dy.as_slice(), &self.params[0].data, T::zero(), dx.as_mut_slice());
                    dx
                });
                (grads, dx)
            }
            (LayerSpec::Conv2d { filters }, Cache::Cols(cols)) => {
                let (k, hw) = (c * 9, h * w);
                let mut dw = vec![T::zero(); if want_params { filters * k } else { 0 }];
                let mut db = vec![T::zero(); if want_params { filters } else { 0 }];
                let mut dx = want_input.then(|| Tensor::zeros(n, c, h, w));
                let mut dcols = vec![T::zero(); if want_input { k * hw } else { 0 }];
                for s in 0..n {
                    let dys = dy.sample(s);
                    let col = &cols[s * k * hw..(s + 1) * k * hw];
                    if want_params {
                        T::gemm(false, true, filters, k, hw, T::one(), dys, col, T::one(), &mut dw);
                        for (f, b) in db.iter_mut().enumerate() {
                            *b += dys[f * hw..(f + 1) * hw].iter().copied().sum::<T>();
                        }
                    }
                    if let Some(dx) = dx.as_mut() {
                        T::gemm(true, false, k, hw, filters, T::one(), &self.params[0].data, dys, T::zero(), &mut dcols);
                        col2im(&dcols, c, h, w, dx.sample_mut(s));
                    }
                }
                (if want_params { vec![dw, db] } else { vec![] }, dx)
            }
            (LayerSpec::BatchNorm, Cache::Norm { xhat, inv_std, batch_stats }) => {
                let s = h * w;
                let gamma = &self.params[0].data;
                let dys = dy.as_slice();
                let mut sum_dy = vec![0.0f64; c];
                let mut sum_dy_xhat = vec![0.0f64; c];
                for i in 0..n {
                    for ch in 0..c {
                        let base = (i * c + ch) * s;
                        for j in base..base + s {
                            sum_dy[ch] += dys[j].as_f64();
                            sum_dy_xhat[ch] += (dys[j] * xhat[j]).as_f64();
                        }
                    }
                }
                let grads = if want_params {
                    vec![
                        sum_dy_xhat.iter().map(|&v| T::of(v)).collect(),
                        sum_dy.iter().map(|&v| T::of(v)).collect(),
                    ]
                } else {
                    vec![]
                };
                let dx = want_input.then(|| {
                    let m = (n * s) as f64;
                    let mut dx = Tensor::zeros(n, c, h, w);
                    let out = dx.as_mut_slice();
                    for i in 0..n {
                        for ch in 0..c {
                            let base = (i * c + ch) * s;
                            let scale = gamma[ch] * inv_std[ch];
                            if batch_stats.is_some() {
                                let (a, b) = (T::of(sum_dy[ch] / m), T::of(sum_dy_xhat[ch] / m));
                                for j in base..base + s {
                                    out[j] = scale * (dys[j] - a - xhat[j] * b);
                                }
                            } else {
                                for j in base..base + s {
                                    out[j] = scale * dys[j];
                                }
                            }
                        }
                    }
                    dx
                });
                (grads, dx)
            }
            (LayerSpec::Relu, Cache::Output(y)) => {
                let dx = want_input.then(|| {
                    let mut d = dy;
                    d.as_mut_slice().iter_mut().zip(&y).for_each(|(g, &v)| {
                        if v <= T::zero() {
                            *g = T::zero()
                        }
                    });
                    d
                });
                (vec![], dx)
            }
            (LayerSpec::Dropout { .. }, Cache::Mask(mask)) => {
                let dx = want_input.then(|| {
                    let mut d = dy;
                    if let Some(mask) = mask {
                        d.as_mut_slice().iter_mut().zip(&mask).for_each(|(g, &m)| *g *= m);
                    }
                    d
                });
                (vec![], dx)
            }
            (LayerSpec::MaxPool2x2, Cache::Argmax(arg)) => {
                let dx = want_input.then(|| {
                    let mut dx = Tensor::zeros(n, c, h, w);
                    let per = dy.sample_len();
                    for s in 0..n {
                        let dys = dy.sample(s);
                        let dxs = dx.sample_mut(s);
                        for (j, &g) in dys.iter().enumerate() {
                            dxs[arg[s * per + j] as usize] += g;
                        }
                    }
                    dx
                });
                (vec![], dx)
            }
            (LayerSpec::Flatten, Cache::Empty) => (vec![], want_input.then(|| dy.reshaped(c, h, w))),
            (spec, _) => panic!("cache does not belong to a {} layer", spec.name()),
        }
    }

    /// Folds the batch statistics of a training-mode BatchNorm pass into
    /// the running estimates. No-op for other layers and eval-mode caches.
    pub fn update_running(&mut self, cache: &Cache<T>) {
        if let Cache::Norm { batch_stats: Some((mean, var)), .. } = cache {
            let mom = BN_MOMENTUM;
            for ch in 0..mean.len() {
                let rm = self.running[0][ch].as_f64();
                let rv = self.running[1][ch].as_f64();
                self.running[0][ch] = T::of((1.0 - mom) * rm + mom * mean[ch]);
                self.running[1][ch] = T::of((1.0 - mom) * rv + mom * var[ch]);
            }
        }
    }
}

fn add_bias<T: Scalar>(y: &mut [T], bias: &[T], stride: usize) {
    let period = bias.len() * stride;
    for chunk in y.chunks_mut(period) {
        for (f, &b) in bias.iter().enumerate() {
            chunk[f * stride..(f + 1) * stride].iter_mut().for_each(|v| *v += b);
        }
    }
}

/// Unfolds a `c x h x w` image into the `(c*9) x (h*w)` patch matrix of a
/// 3x3, pad-1 convolution. `cols` must be zeroed.
pub fn im2col<T: Scalar>(img: &[T], c: usize, h: usize, w: usize, cols: &mut [T]) {
    let hw = h * w;
    for ch in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = (ch * 9 + ky * 3 + kx) * hw;
                for y in 0..h {
                    let sy = y + ky;
                    if sy < 1 || sy > h {
                        continue;
                    }
                    let src = ch * hw + (sy - 1) * w;
                    for x in 0..w {
                        let sx = x + kx;
                        if sx >= 1 && sx <= w {
                            cols[row + y * w + x] = img[src + sx - 1];
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates patch gradients into `img`.
pub fn col2im<T: Scalar>(cols: &[T], c: usize, h: usize, w: usize, img: &mut [T]) {
    let hw = h * w;
    for ch in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = (ch * 9 + ky * 3 + kx) * hw;
                for y in 0..h {
                    let sy = y + ky;
                    if sy < 1 || sy > h {
                        continue;
                    }
                    let dst = ch * hw + (sy - 1) * w;
                    for x in 0..w {
                        let sx = x + kx;
                        if sx >= 1 && sx <= w {
                            img[dst + sx - 1] += cols[row + y * w + x];
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_matches_direct_sum() {
        let mut layer = Layer::<f64>::new(LayerSpec::Conv2d { filters: 2 }, (2, 4, 5)).unwrap();
        layer.params[0].data = (0..36).map(|i| (i as f64 * 0.37).sin()).collect();
        layer.params[1].data = vec![0.5, -0.25];
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.11).cos()).collect();
        let (y, _) = layer.forward(Tensor::from_vec(1, 2, 4, 5, x.clone()), false, None).unwrap();
        for f in 0..2 {
            for oy in 0..4 {
                for ox in 0..5 {
                    let mut s = layer.params[1].data[f];
                    for ch in 0..2 {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let (iy, ix) = (oy as isize + ky as isize - 1, ox as isize + kx as isize - 1);
                                if (0..4).contains(&iy) && (0..5).contains(&ix) {
                                    s += layer.params[0].data[((f * 2 + ch) * 3 + ky) * 3 + kx]
                                        * x[ch * 20 + iy as usize * 5 + ix as usize];
                                }
                            }
                        }
                    }
                    assert!((y.as_slice()[f * 20 + oy * 5 + ox] - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eval_dropout_is_identity() {
        let layer = Layer::<f32>::new(LayerSpec::Dropout { rate: 0.5 }, (3, 1, 1)).unwrap();
        let x = Tensor::from_vec(1, 3, 1, 1, vec![1.0, 2.0, 3.0]);
        let (y, _) = layer.forward(x.clone(), false, None).unwrap();
        assert_eq!(x, y);
        assert!(layer.forward(x, true, None).is_err());
    }

    #[test]
    fn pool_picks_maximum() {
        let layer = Layer::<f32>::new(LayerSpec::MaxPool2x2, (1, 2, 4)).unwrap();
        let x = Tensor::from_vec(1, 1, 2, 4, vec![1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 7.0, 6.0]);
        let (y, _) = layer.forward(x, false, None).unwrap();
        assert_eq!(y.as_slice(), &[5.0, 7.0]);
    }

    #[test]
    fn invalid_specs() {
        assert!(LayerSpec::Dropout { rate: 1.0 }.output_shape((4, 1, 1)).is_err());
        assert!(LayerSpec::Dense { units: 3 }.output_shape((4, 2, 2)).is_err());
        assert!(LayerSpec::MaxPool2x2.output_shape((4, 1, 3)).is_err());
    }
}
