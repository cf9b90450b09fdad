//! Experiment configuration: a TOML document whose keys mirror
//! [`ExperimentConfig`]. Unknown keys are rejected with their full path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xferlab_core::glmlab::{uniform_alpha_grid, GlmSweepConfig, Scenario};
use xferlab_core::nncore::{Arch, Init, OptimizerConfig, Scale, Schedule, WidthProfile};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GlmSweep,
    TaskSweep,
    LayerSweep,
    OracleInit,
    Attribution,
    CorrCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GlmSweep => "glm_sweep",
            ExperimentKind::TaskSweep => "task_sweep",
            ExperimentKind::LayerSweep => "layer_sweep",
            ExperimentKind::OracleInit => "oracle_init",
            ExperimentKind::Attribution => "attribution",
            ExperimentKind::CorrCheck => "corr_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Optional; when set it must agree with the subcommand.
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    /// Replicate ids. Each replicate gets its own stream per cell.
    pub seeds: Vec<u64>,
    pub scale: Scale,
    pub output_dir: Option<PathBuf>,
    /// Render an SVG next to each summary table.
    pub plots: bool,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub alice: OptimizerOverride,
    pub bob: OptimizerOverride,
    pub glm: GlmConfig,
    pub layer_sweep: LayerSweepConfig,
    pub attribution: AttributionConfig,
    pub corr_check: CorrCheckConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            seeds: vec![0, 1, 2],
            scale: Scale::Desk,
            output_dir: None,
            plots: true,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            alice: OptimizerOverride::default(),
            bob: OptimizerOverride::default(),
            glm: GlmConfig::default(),
            layer_sweep: LayerSweepConfig::default(),
            attribution: AttributionConfig::default(),
            corr_check: CorrCheckConfig::default(),
        }
    }
}

/// Image domains and sample counts. Unset counts take the scale's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// `glyphA`, `glyphB`, or an IDX prefix `P` naming
    /// `P-images-idx3-ubyte` and `P-labels-idx1-ubyte`.
    pub left: String,
    pub right: String,
    /// Test-split domains; required when the training domain is IDX.
    pub left_test: Option<String>,
    pub right_test: Option<String>,
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    pub pairs_per_epoch: Option<usize>,
    pub test_pairs: Option<usize>,
    pub betas: Option<Vec<f64>>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            left: "glyphA".into(),
            right: "glyphB".into(),
            left_test: None,
            right_test: None,
            train_per_class: None,
            test_per_class: None,
            pairs_per_epoch: None,
            test_pairs: None,
            betas: None,
        }
    }
}

/// Resolved sample counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DataSizes {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub pairs_per_epoch: usize,
    pub test_pairs: usize,
}

impl DataConfig {
    pub fn sizes(&self, scale: Scale) -> DataSizes {
        let (tr, te, pe, tp) = match scale {
            Scale::Desk => (500, 200, 30_000, 2_000),
            Scale::Paper => (6_000, 1_000, 60_000, 10_000),
        };
        DataSizes {
            train_per_class: self.train_per_class.unwrap_or(tr),
            test_per_class: self.test_per_class.unwrap_or(te),
            pairs_per_epoch: self.pairs_per_epoch.unwrap_or(pe),
            test_pairs: self.test_pairs.unwrap_or(tp),
        }
    }

    pub fn betas(&self, kind: ExperimentKind) -> Vec<f64> {
        if let Some(b) = &self.betas {
            return b.clone();
        }
        match kind {
            ExperimentKind::TaskSweep => (0..=10).map(|i| i as f64 / 10.0).collect(),
            ExperimentKind::Attribution => vec![0.0, 1.0],
            ExperimentKind::CorrCheck => vec![0.0, 0.25, 0.5, 0.75, 1.0],
            _ => vec![0.0, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub arch: Arch,
    pub init: Init,
    /// Width multipliers; unset takes the scale's profile.
    pub conv_width: Option<f64>,
    pub dense_width: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { arch: Arch::FullyConnected, init: Init::Standard, conv_width: None, dense_width: None }
    }
}

impl ModelConfig {
    pub fn profile(&self, scale: Scale) -> WidthProfile {
        let base = scale.profile();
        WidthProfile { conv: self.conv_width.unwrap_or(base.conv), dense: self.dense_width.unwrap_or(base.dense) }
    }
}

/// Partial optimizer settings layered over the scale's defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOverride {
    pub lr: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub schedule: Option<Schedule>,
}

impl OptimizerOverride {
    pub fn apply(&self, base: OptimizerConfig) -> OptimizerConfig {
        OptimizerConfig {
            lr: self.lr.unwrap_or(base.lr),
            momentum: self.momentum.unwrap_or(base.momentum),
            weight_decay: self.weight_decay.unwrap_or(base.weight_decay),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            epochs: self.epochs.unwrap_or(base.epochs),
            schedule: self.schedule.unwrap_or(base.schedule),
        }
    }
}

/// Alice's desk setup: a larger step than the paper's 0.001 makes up for
/// the far smaller data budget.
pub const ALICE_DESK: OptimizerConfig = OptimizerConfig { lr: 0.002, ..OptimizerConfig::ALICE_PAPER };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlmConfig {
    pub scenarios: Vec<Scenario>,
    /// Evenly spaced points on [-1, 1]; ignored when `alphas` is set.
    pub alpha_points: usize,
    pub alphas: Option<Vec<f64>>,
    pub ks: Vec<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub alice_steps: usize,
    pub alice_lr: Option<f64>,
    pub bob_steps: usize,
    pub bob_lr: f64,
}

impl Default for GlmConfig {
    fn default() -> Self {
        let d = GlmSweepConfig::default();
        Self {
            scenarios: vec![Scenario::Pairwise, Scenario::Global],
            alpha_points: 41,
            alphas: None,
            ks: vec![1, 2, 4, 8, 16, 32],
            n_train: d.n_train,
            n_test: d.n_test,
            lambda: d.lambda,
            alice_steps: d.alice_steps,
            alice_lr: d.alice_lr,
            bob_steps: d.bob_steps,
            bob_lr: d.bob_lr,
        }
    }
}

impl GlmConfig {
    pub fn alphas(&self) -> Vec<f64> {
        self.alphas.clone().unwrap_or_else(|| uniform_alpha_grid(self.alpha_points))
    }

    pub fn sweep(&self, seeds: usize) -> GlmSweepConfig {
        GlmSweepConfig {
            n_train: self.n_train,
            n_test: self.n_test,
            lambda: self.lambda,
            alice_steps: self.alice_steps,
            alice_lr: self.alice_lr,
            bob_steps: self.bob_steps,
            bob_lr: self.bob_lr,
            seeds,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayerSweepConfig {
    /// Fine-tuning regimes; unset means every `ell` in `1..=m+1`.
    pub ells: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IgTarget {
    Logit,
    Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttributionConfig {
    pub samples: usize,
    pub steps: usize,
    pub bins: usize,
    pub absolute: bool,
    pub target: IgTarget,
    /// Write every attribution map as CSV.
    pub dump_maps: bool,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self { samples: 1000, steps: 128, bins: 30, absolute: true, target: IgTarget::Logit, dump_maps: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrCheckConfig {
    pub n: usize,
}

impl Default for CorrCheckConfig {
    fn default() -> Self {
        Self { n: 100_000 }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let de = toml::Deserializer::new(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            RunError::config(if path == "." { "<root>".to_string() } else { path }, inner.message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn alice_opt(&self) -> OptimizerConfig {
        let base = match self.scale {
            Scale::Desk => ALICE_DESK,
            Scale::Paper => OptimizerConfig::ALICE_PAPER,
        };
        self.alice.apply(base)
    }

    pub fn bob_opt(&self) -> OptimizerConfig {
        self.bob.apply(OptimizerConfig::BOB_PAPER)
    }

    /// Range checks that serde cannot express.
    pub fn validate(&self) -> Result<(), RunError> {
        if self.seeds.is_empty() {
            return Err(RunError::config("seeds", "at least one replicate is required"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(RunError::config("seeds", "replicate ids must be distinct"));
        }
        if let Some(betas) = &self.data.betas {
            if betas.is_empty() {
                return Err(RunError::config("data.betas", "grid is empty"));
            }
            if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
                return Err(RunError::config("data.betas", format!("beta {b} outside [0, 1]")));
            }
        }
        let s = self.data.sizes(self.scale);
        for (name, v) in [
            ("data.train_per_class", s.train_per_class),
            ("data.test_per_class", s.test_per_class),
            ("data.pairs_per_epoch", s.pairs_per_epoch),
            ("data.test_pairs", s.test_pairs),
        ] {
            if v == 0 {
                return Err(RunError::config(name, "must be at least 1"));
            }
        }
        for (name, w) in [("model.conv_width", self.model.conv_width), ("model.dense_width", self.model.dense_width)] {
            if let Some(w) = w {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(RunError::config(name, format!("width multiplier must be positive, got {w}")));
                }
            }
        }
        for (name, opt) in [("alice", self.alice_opt()), ("bob", self.bob_opt())] {
            opt.validate().map_err(|e| RunError::config(name, e.to_string()))?;
        }
        let g = &self.glm;
        if let Some(a) = g.alphas().iter().find(|a| !(-1.0..=1.0).contains(*a)) {
            return Err(RunError::config("glm.alphas", format!("alpha {a} outside [-1, 1]")));
        }
        if g.ks.contains(&0) {
            return Err(RunError::config("glm.ks", "k must be at least 1"));
        }
        if !(g.lambda >= 0.0 && g.lambda.is_finite()) {
            return Err(RunError::config("glm.lambda", "must be finite and nonnegative"));
        }
        if g.n_train == 0 || g.n_test == 0 {
            return Err(RunError::config("glm.n_train", "sample counts must be at least 1"));
        }
        if let Some(ells) = &self.layer_sweep.ells {
            if ells.is_empty() || ells.contains(&0) {
                return Err(RunError::config("layer_sweep.ells", "ells must be a non-empty list of values >= 1"));
            }
        }
        let a = &self.attribution;
        if a.samples == 0 {
            return Err(RunError::config("attribution.samples", "must be at least 1"));
        }
        if a.steps == 0 {
            return Err(RunError::config("attribution.steps", "must be at least 1"));
        }
        if a.bins < 2 {
            return Err(RunError::config("attribution.bins", "need at least 2 bins"));
        }
        if self.corr_check.n == 0 {
            return Err(RunError::config("corr_check.n", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_reports_path() {
        let err = ExperimentConfig::parse("[data]\nbetaz = [0.5]\n").unwrap_err();
        match err {
            RunError::ConfigInvalid { path, .. } => assert_eq!(path, "data.betaz"),
            other => panic!("{other}"),
        }
    }
}
