use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Cache, Layer, LayerSpec, NnError, Tensor};
use crate::dataforge::NUM_CLASSES;
use crate::numkit::{RngStream, Scalar, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Width multipliers applied to the reference architectures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthProfile {
    pub conv: f64,
    pub dense: f64,
}

impl WidthProfile {
    pub const PAPER: Self = Self { conv: 1.0, dense: 1.0 };
    pub const DESK: Self = Self { conv: 0.125, dense: 0.5 };
}

/// Experiment size: `Desk` shrinks the networks and the images so the full
/// suite runs on a laptop; `Paper` uses the reference sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn profile(self) -> WidthProfile {
        match self {
            Scale::Desk => WidthProfile::DESK,
            Scale::Paper => WidthProfile::PAPER,
        }
    }

    /// Shape `(h, w, c)` of one domain image; paired images are twice as wide.
    pub fn domain_shape(self) -> (usize, usize, usize) {
        match self {
            Scale::Desk => (16, 16, 3),
            Scale::Paper => (32, 32, 3),
        }
    }

    /// Shape `(h, w, c)` of a paired (side-by-side) input.
    pub fn input_shape(self) -> (usize, usize, usize) {
        let (h, w, c) = self.domain_shape();
        (h, 2 * w, c)
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(format!("unknown scale `{other}` (expected desk or paper)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    FullyConnected,
    Convolutional,
    Custom(Vec<LayerSpec>),
}

impl Arch {
    /// Layer list under a width profile.
    pub fn layers(&self, profile: WidthProfile) -> Vec<LayerSpec> {
        let scale = |n: usize, m: f64| ((n as f64 * m).round() as usize).max(1);
        let dense = |n| scale(n, profile.dense);
        match self {
            Arch::FullyConnected => vec![
                LayerSpec::Flatten,
                LayerSpec::Dense { units: dense(1024) },
                LayerSpec::BatchNorm,
                LayerSpec::Relu,
                LayerSpec::Dropout { rate: 0.25 },
                LayerSpec::Dense { units: dense(512) },
                LayerSpec::BatchNorm,
                LayerSpec::Relu,
                LayerSpec::SoftmaxOutput { classes: NUM_CLASSES },
            ],
            Arch::Convolutional => {
                let mut v = Vec::new();
                for (i, f) in [32, 64, 128, 256, 512, 1024].into_iter().enumerate() {
                    v.extend([LayerSpec::Conv2d { filters: scale(f, profile.conv) }, LayerSpec::BatchNorm, LayerSpec::Relu]);
                    if i % 2 == 1 {
                        v.extend([LayerSpec::MaxPool2x2, LayerSpec::Dropout { rate: 0.25 }]);
                    }
                }
                v.extend([
                    LayerSpec::Flatten,
                    LayerSpec::Dense { units: dense(1024) },
                    LayerSpec::Relu,
                    LayerSpec::Dropout { rate: 0.25 },
                    LayerSpec::Dense { units: dense(512) },
                    LayerSpec::Relu,
                    LayerSpec::SoftmaxOutput { classes: NUM_CLASSES },
                ]);
                v
            }
            Arch::Custom(layers) => layers.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Standard,
    /// Standard init, then every first-layer weight reading a pixel of the
    /// right image half is set to zero.
    ZeroRightHalf,
}

/// Fine-tuning regime: layers (freeze groups) `1..ell` are frozen and
/// `ell..=m+1` are trained. `ell = m + 1` trains the output layer only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreezePlan {
    pub ell: usize,
}

/// Per-layer parameter gradients, shaped like [`Layer::params`].
pub type Grads<T> = Vec<Vec<Vec<T>>>;

/// Feed-forward network over `(h, w, c)` images ending in a softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    input_shape: (usize, usize, usize),
    layers: Vec<Layer<T>>,
    groups: Vec<usize>,
    frozen: Vec<bool>,
    mode: Mode,
}

impl<T: Scalar> Network<T> {
    /// Network with zero weights; see [`build_network`] for initialized ones.
    pub fn from_specs(specs: &[LayerSpec], input_shape: (usize, usize, usize)) -> Result<Self, NnError> {
        let outputs = specs.iter().filter(|s| matches!(s, LayerSpec::SoftmaxOutput { .. })).count();
        if outputs != 1 || !matches!(specs.last(), Some(LayerSpec::SoftmaxOutput { .. })) {
            return Err(NnError::InvalidConfig("a network needs exactly one softmax output, placed last".into()));
        }
        let (h, w, c) = input_shape;
        let mut shape = (c, h, w);
        let mut layers = Vec::with_capacity(specs.len());
        let mut groups = Vec::with_capacity(specs.len());
        let mut group = 0;
        for spec in specs {
            if spec.is_trainable() {
                group += 1;
            }
            let layer = Layer::new(*spec, shape)?;
            shape = layer.out_shape;
            layers.push(layer);
            groups.push(group.max(1));
        }
        Ok(Self { input_shape, layers, groups, frozen: vec![false; group], mode: Mode::Eval })
    }

    /// Image shape `(h, w, c)` the network reads.
    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    /// Freeze group (1-based) that layer `i` belongs to.
    pub fn group_of(&self, layer: usize) -> usize {
        self.groups[layer]
    }

    /// Number of hidden trainable layers `m`; groups run `1..=m+1`.
    pub fn hidden_layers(&self) -> usize {
        self.frozen.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_layer_frozen(&self, layer: usize) -> bool {
        self.frozen[self.groups[layer] - 1]
    }

    /// Applies a freeze plan; `None` unfreezes everything.
    pub fn apply_plan(&mut self, plan: Option<FreezePlan>) -> Result<(), NnError> {
        let ell = plan.map_or(1, |p| p.ell);
        if ell < 1 || ell > self.frozen.len() {
            return Err(NnError::InvalidConfig(format!(
                "freeze plan ell = {ell} outside 1..={}",
                self.frozen.len()
            )));
        }
        for (g, f) in self.frozen.iter_mut().enumerate() {
            *f = g + 1 < ell;
        }
        Ok(())
    }

    /// Index of the first layer that is not frozen.
    pub fn first_trainable_layer(&self) -> usize {
        (0..self.layers.len()).find(|&i| !self.is_layer_frozen(i)).unwrap_or(self.layers.len())
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(), NnError> {
        let (h, w, c) = self.input_shape;
        if x.sample_shape() != (c, h, w) {
            return Err(NnError::ShapeMismatch(format!(
                "network expects {c}x{h}x{w} inputs, got {:?}",
                x.sample_shape()
            )));
        }
        Ok(())
    }

    /// Forward pass returning logits and the caches of layers `keep_from..`.
    ///
    /// In `Train` mode, frozen layers still run as in `Eval` mode (running
    /// BatchNorm statistics, no dropout).
    pub fn trace(
        &self,
        x: &Tensor<T>,
        mode: Mode,
        mut rng: Option<&mut StreamRng>,
        keep_from: usize,
    ) -> Result<(Tensor<T>, Vec<Cache<T>>), NnError> {
        self.check_input(x)?;
        let mut act = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let train = mode == Mode::Train && !self.is_layer_frozen(i);
            let (y, cache) = layer.forward(act, train, rng.as_deref_mut())?;
            caches.push(if i >= keep_from { cache } else { Cache::Empty });
            act = y;
        }
        Ok((act, caches))
    }

    /// Backpropagates `dlogits` through the caches of [`trace`](Self::trace).
    /// Parameter gradients are produced for unfrozen layers only; the input
    /// gradient is returned when `input_grad` is set.
    pub fn backward(
        &self,
        caches: Vec<Cache<T>>,
        dlogits: Tensor<T>,
        input_grad: bool,
    ) -> (Grads<T>, Option<Tensor<T>>) {
        let stop = if input_grad { 0 } else { self.first_trainable_layer() };
        let mut grads: Grads<T> = vec![Vec::new(); self.layers.len()];
        let mut d = Some(dlogits);
        for (i, cache) in caches.into_iter().enumerate().skip(stop).rev() {
            let dy = d.take().expect("gradient chain broken");
            let want_params = !self.is_layer_frozen(i);
            let want_input = i > stop || input_grad;
            let (g, dx) = self.layers[i].backward(cache, dy, want_params, want_input);
            grads[i] = g;
            d = dx;
        }
        (grads, if input_grad { d } else { None })
    }

    pub fn logits(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(self.trace(x, Mode::Eval, None, usize::MAX)?.0)
    }

    /// Class probabilities in `Eval` mode.
    pub fn probabilities(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(softmax_rows(&self.logits(x)?))
    }

    /// Class probabilities in the network's current mode. `Train` mode
    /// uses batch statistics and draws dropout masks from `rng`.
    pub fn forward(&self, x: &Tensor<T>, rng: Option<&mut StreamRng>) -> Result<Tensor<T>, NnError> {
        let (logits, _) = self.trace(x, self.mode, rng, usize::MAX)?;
        Ok(softmax_rows(&logits))
    }

    /// Logits and the gradient of `sum(seed * logits)` with respect to the
    /// input, in `Eval` mode.
    pub fn input_gradient(&self, x: &Tensor<T>, seed: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>), NnError> {
        let (logits, caches) = self.trace(x, Mode::Eval, None, 0)?;
        if seed.shape() != logits.shape() {
            return Err(NnError::ShapeMismatch("gradient seed does not match logits".into()));
        }
        let (_, dx) = self.backward(caches, seed.clone(), true);
        Ok((logits, dx.expect("input gradient requested")))
    }

    /// Sum of `|w|` over first-layer weights that read the right image
    /// half. Only defined when the first trainable layer is dense over the
    /// flattened image.
    pub fn right_half_weight_l1(&self) -> Result<f64, NnError> {
        let (li, cols) = self.right_half_columns()?;
        let w = &self.layers[li].params[0].data;
        let inputs = self.layers[li].in_shape.0;
        Ok(w.chunks(inputs).map(|row| cols.iter().map(|&j| row[j].as_f64().abs()).sum::<f64>()).sum())
    }

    fn right_half_columns(&self) -> Result<(usize, Vec<usize>), NnError> {
        let li = self
            .layers
            .iter()
            .position(|l| l.spec.is_trainable())
            .expect("every network has an output layer");
        let flat_input = self.layers[..li].iter().all(|l| l.spec == LayerSpec::Flatten)
            && matches!(self.layers[li].spec, LayerSpec::Dense { .. });
        if !flat_input {
            return Err(NnError::InvalidConfig(
                "right-half weights need a dense first layer over the flattened image".into(),
            ));
        }
        let (h, w, c) = self.input_shape;
        if w % 2 != 0 {
            return Err(NnError::ShapeMismatch(format!("image width {w} is odd")));
        }
        let cols = (0..c)
            .flat_map(|ch| (0..h).flat_map(move |y| (w / 2..w).map(move |x| ch * h * w + y * w + x)))
            .collect();
        Ok((li, cols))
    }

    fn zero_right_half(&mut self) -> Result<(), NnError> {
        let (li, cols) = self.right_half_columns()?;
        let inputs = self.layers[li].in_shape.0;
        for row in self.layers[li].params[0].data.chunks_mut(inputs) {
            for &j in &cols {
                row[j] = T::zero();
            }
        }
        Ok(())
    }
}

/// Row-wise softmax of `(n, k, 1, 1)` logits.
pub fn softmax_rows<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let (n, k, h, w) = logits.shape();
    let mut out = Vec::with_capacity(logits.as_slice().len());
    for row in logits.as_slice().chunks(k * h * w) {
        let max = row.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v.as_f64() - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        out.extend(exps.iter().map(|e| T::of(e / total)));
    }
    Tensor::from_vec(n, k, h, w, out)
}

/// Builds and initializes a network. Weights come from the `init` sub-stream
/// of `rng`.
pub fn build_network<T: Scalar>(
    arch: &Arch,
    input_shape: (usize, usize, usize),
    profile: WidthProfile,
    rng: &RngStream,
    init: Init,
) -> Result<Network<T>, NnError> {
    let mut net = Network::from_specs(&arch.layers(profile), input_shape)?;
    let mut g = rng.named("init").generator();
    for layer in net.layers.iter_mut() {
        layer.init_uniform(&mut g);
    }
    if init == Init::ZeroRightHalf {
        net.zero_right_half()?;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fc_paper_shapes() {
        let net = Network::<f32>::from_specs(&Arch::FullyConnected.layers(WidthProfile::PAPER), (32, 64, 3)).unwrap();
        assert_eq!(net.layers()[1].in_shape, (6144, 1, 1));
        assert_eq!(net.layers()[1].out_shape, (1024, 1, 1));
        assert_eq!(net.layers()[5].out_shape, (512, 1, 1));
        assert_eq!(net.layers().last().unwrap().out_shape, (10, 1, 1));
        assert_eq!(net.hidden_layers(), 2);
    }

    #[test]
    fn conv_has_eight_hidden_layers() {
        let net =
            Network::<f32>::from_specs(&Arch::Convolutional.layers(WidthProfile::DESK), Scale::Desk.input_shape()).unwrap();
        assert_eq!(net.hidden_layers(), 8);
    }

    #[test]
    fn plan_freezes_prefix_groups() {
        let mut net = Network::<f32>::from_specs(&Arch::FullyConnected.layers(WidthProfile::DESK), (16, 32, 3)).unwrap();
        net.apply_plan(Some(FreezePlan { ell: 3 })).unwrap();
        assert_eq!(net.frozen(), &[true, true, false]);
        assert_eq!(net.first_trainable_layer(), 8);
        assert!(net.apply_plan(Some(FreezePlan { ell: 4 })).is_err());
        assert!(net.apply_plan(Some(FreezePlan { ell: 0 })).is_err());
    }

    #[test]
    fn output_must_be_last_and_unique() {
        let specs = [LayerSpec::SoftmaxOutput { classes: 10 }, LayerSpec::Relu];
        assert!(Network::<f32>::from_specs(&specs, (1, 1, 4)).is_err());
    }

    #[test]
    fn zero_right_half_requires_fc_first_layer() {
        let r = build_network::<f32>(&Arch::Convolutional, (16, 32, 3), WidthProfile::DESK, &RngStream::root(1), Init::ZeroRightHalf);
        assert!(matches!(r, Err(NnError::InvalidConfig(_))));
    }
}
