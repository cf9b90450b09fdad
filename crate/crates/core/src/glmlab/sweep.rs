use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    evaluate_glm, finetune_bob_scalar, sample_glm_dataset, suggest_alice_lr, train_alice_glm,
    CorrelationSpec, GlmError, Scenario,
};
use crate::numkit::{stats, RngStream, Scalar};

/// Knobs for one sweep. Defaults resolve the curve shapes in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlmSweepConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub alice_steps: usize,
    /// Fixed step size for Alice; `None` picks `1 / L` from the data.
    pub alice_lr: Option<f64>,
    pub bob_steps: usize,
    pub bob_lr: f64,
    pub seeds: usize,
}

impl Default for GlmSweepConfig {
    fn default() -> Self {
        Self {
            n_train: 50_000,
            n_test: 50_000,
            lambda: 0.05,
            alice_steps: 5_000,
            alice_lr: None,
            bob_steps: 100,
            bob_lr: 1.0,
            seeds: 3,
        }
    }
}

/// Result of one (alpha, k, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmCellRun {
    pub alpha: f64,
    pub k: usize,
    pub seed_index: usize,
    pub w: Vec<f64>,
    pub v_finetuned: f64,
    pub acc_pretrained: f64,
    pub acc_finetuned: f64,
    pub alice_converged: bool,
}

/// One row of the accuracy-versus-alpha curve table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub scenario: Scenario,
    pub alpha: f64,
    pub k: usize,
    pub seed_count: usize,
    pub acc_pretrained: f64,
    pub acc_finetuned: f64,
    pub stderr_pretrained: f64,
    pub stderr_finetuned: f64,
}

/// Runs Alice's fit and both of Bob's evaluations for a single cell.
///
/// Bob is scored on a held-out sample: once with Alice's `(w*, v* = 1)` used
/// as is, once after refitting `v'`.
pub fn run_glm_cell<T: Scalar>(
    spec: &CorrelationSpec,
    cfg: &GlmSweepConfig,
    seed_index: usize,
    stream: &RngStream,
) -> Result<GlmCellRun, GlmError> {
    let train = sample_glm_dataset::<T>(spec, cfg.n_train, &stream.named("train"))?;
    let test = sample_glm_dataset::<T>(spec, cfg.n_test, &stream.named("test"))?;
    let lr = cfg.alice_lr.unwrap_or_else(|| suggest_alice_lr(&train, cfg.lambda));
    let alice = train_alice_glm(&train, cfg.lambda, cfg.alice_steps, lr)?;
    let w = &alice.params.w;
    let acc_pretrained = evaluate_glm(w, T::one(), &test.x, &test.y_bob);
    let bob = finetune_bob_scalar(w, &train, cfg.bob_steps, cfg.bob_lr)?;
    let acc_finetuned = evaluate_glm(w, bob.v, &test.x, &test.y_bob);
    Ok(GlmCellRun {
        alpha: spec.alpha(),
        k: spec.k(),
        seed_index,
        w: w.iter().map(|v| v.as_f64()).collect(),
        v_finetuned: bob.v.as_f64(),
        acc_pretrained,
        acc_finetuned,
        alice_converged: alice.converged,
    })
}

/// Stream for `(cell, seed)`; the cell index enumerates `ks` outer, alphas inner.
pub fn glm_cell_stream(base: &RngStream, cell: usize, seed_index: usize) -> RngStream {
    base.derive(cell as u64).derive(seed_index as u64)
}

/// Aggregates per-seed runs of one cell into a curve row.
pub fn summarize_cell(scenario: Scenario, runs: &[GlmCellRun]) -> CurveRow {
    let pre: Vec<f64> = runs.iter().map(|r| r.acc_pretrained).collect();
    let fin: Vec<f64> = runs.iter().map(|r| r.acc_finetuned).collect();
    CurveRow {
        scenario,
        alpha: runs.first().map_or(f64::NAN, |r| r.alpha),
        k: runs.first().map_or(0, |r| r.k),
        seed_count: runs.len(),
        acc_pretrained: stats::mean(&pre),
        acc_finetuned: stats::mean(&fin),
        stderr_pretrained: stats::std_error(&pre),
        stderr_finetuned: stats::std_error(&fin),
    }
}

/// Bob's accuracy with and without fine-tuning for every `(alpha, k)` pair,
/// averaged over `cfg.seeds` independent datasets.
///
/// Cells run on the current rayon pool; every run draws from its own derived
/// stream so the table does not depend on scheduling.
pub fn sweep_alpha<T: Scalar>(
    grid: &[f64],
    ks: &[usize],
    scenario: Scenario,
    cfg: &GlmSweepConfig,
    base: &RngStream,
) -> Result<Vec<CurveRow>, GlmError> {
    let mut jobs = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        for (ai, &alpha) in grid.iter().enumerate() {
            let spec = CorrelationSpec::new(alpha, k, scenario)?;
            jobs.push((ki * grid.len() + ai, spec));
        }
    }
    let seeds = cfg.seeds.max(1);
    let runs: Vec<GlmCellRun> = jobs
        .par_iter()
        .flat_map_iter(|&(cell, spec)| (0..seeds).map(move |s| (cell, spec, s)))
        .map(|(cell, spec, s)| run_glm_cell::<T>(&spec, cfg, s, &glm_cell_stream(base, cell, s)))
        .collect::<Result<_, _>>()?;
    Ok(runs.chunks(seeds).map(|c| summarize_cell(scenario, c)).collect())
}

/// `n` evenly spaced points on `[-1, 1]`.
pub fn uniform_alpha_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
    }
}
