//! Task-correlation sweep (output-layer fine-tuning across beta) and the
//! layer-wise fine-tuning sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xferlab_core::nncore::{evaluate, Init, Target};
use xferlab_core::numkit::stats::{mean, std_error};

use super::nets::{cell_key, final_loss, save, setup, CellStreams, Setup};
use super::RunContext;
use crate::config::ExperimentKind;
use crate::error::RunError;
use crate::table::ResultTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaskCell {
    beta: f64,
    replicate: u64,
    alice_acc: f64,
    bob_acc: f64,
    alice_loss: f64,
    bob_loss: f64,
}

fn grid(ctx: &RunContext<'_>) -> Vec<(f64, u64)> {
    let betas = ctx.cfg.data.betas(ctx.kind);
    betas.iter().flat_map(|&b| ctx.cfg.seeds.iter().map(move |&r| (b, r))).collect()
}

fn checkpoint_path(ctx: &RunContext<'_>, key: &str, who: &str) -> std::path::PathBuf {
    ctx.out_path(format!("checkpoints/{}/{}_{who}.xfn", ctx.exp(), key.replace('/', "_")))
}

fn task_cell(ctx: &RunContext<'_>, st: &Setup, m: usize, beta: f64, rep: u64) -> Result<TaskCell, RunError> {
    let key = cell_key(beta, rep);
    let s = CellStreams::new(ctx, &key);
    ctx.cell(&key, || {
        let test = st.test_set(beta, &s)?;
        let (alice, alog) = st.train_alice(ctx, beta, Init::Standard, &s)?;
        let (bob, blog) = st.train_bob(ctx, &alice, beta, m + 1, &s)?;
        save(&alice, &checkpoint_path(ctx, &key, "alice"))?;
        save(&bob, &checkpoint_path(ctx, &key, "bob"))?;
        Ok(TaskCell {
            beta,
            replicate: rep,
            alice_acc: evaluate(&alice, &test, Target::Alice)?,
            bob_acc: evaluate(&bob, &test, Target::Bob)?,
            alice_loss: final_loss(&alog),
            bob_loss: final_loss(&blog),
        })
    })
}

pub fn run_task_sweep(ctx: &mut RunContext<'_>) -> Result<(), RunError> {
    debug_assert_eq!(ctx.kind, ExperimentKind::TaskSweep);
    let st = setup(ctx)?;
    let m = st.hidden_layers()?;
    let jobs = grid(ctx);
    let cells: Vec<TaskCell> = {
        let c = &*ctx;
        jobs.par_iter().map(|&(b, r)| task_cell(c, &st, m, b, r)).collect::<Result<_, _>>()?
    };

    let mut per = ResultTable::new("task_sweep_cells", &["beta", "replicate", "alice_acc", "bob_acc", "alice_final_loss", "bob_final_loss"]);
    for c in &cells {
        per.push(vec![c.beta.into(), c.replicate.into(), c.alice_acc.into(), c.bob_acc.into(), c.alice_loss.into(), c.bob_loss.into()]);
    }
    let mut summary =
        ResultTable::new("task_sweep", &["beta", "seed_count", "alice_acc", "alice_stderr", "bob_acc", "bob_stderr"]);
    for chunk in cells.chunks(ctx.cfg.seeds.len()) {
        let a: Vec<f64> = chunk.iter().map(|c| c.alice_acc).collect();
        let b: Vec<f64> = chunk.iter().map(|c| c.bob_acc).collect();
        summary.push(vec![
            chunk[0].beta.into(),
            chunk.len().into(),
            mean(&a).into(),
            std_error(&a).into(),
            mean(&b).into(),
            std_error(&b).into(),
        ]);
    }
    ctx.emit(per)?;
    ctx.emit(summary)?;
    ctx.plot("task_sweep", "beta", &["alice_acc", "bob_acc"], None);
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerRow {
    ell: usize,
    accuracy: f64,
    final_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerCell {
    beta: f64,
    replicate: u64,
    alice_acc: f64,
    rows: Vec<LayerRow>,
}

fn layer_cell(ctx: &RunContext<'_>, st: &Setup, ells: &[usize], beta: f64, rep: u64) -> Result<LayerCell, RunError> {
    let key = cell_key(beta, rep);
    let s = CellStreams::new(ctx, &key);
    ctx.cell(&key, || {
        let test = st.test_set(beta, &s)?;
        let (alice, _) = st.train_alice(ctx, beta, Init::Standard, &s)?;
        save(&alice, &checkpoint_path(ctx, &key, "alice"))?;
        let rows = ells
            .par_iter()
            .map(|&ell| {
                let (bob, log) = st.train_bob(ctx, &alice, beta, ell, &s)?;
                Ok(LayerRow { ell, accuracy: evaluate(&bob, &test, Target::Bob)?, final_loss: final_loss(&log) })
            })
            .collect::<Result<_, RunError>>()?;
        Ok(LayerCell { beta, replicate: rep, alice_acc: evaluate(&alice, &test, Target::Alice)?, rows })
    })
}

pub fn run_layer_sweep(ctx: &mut RunContext<'_>) -> Result<(), RunError> {
    let st = setup(ctx)?;
    let m = st.hidden_layers()?;
    let ells = ctx.cfg.layer_sweep.ells.clone().unwrap_or_else(|| (1..=m + 1).collect());
    if let Some(bad) = ells.iter().find(|&&e| e > m + 1) {
        return Err(RunError::config("layer_sweep.ells", format!("ell {bad} exceeds m + 1 = {}", m + 1)));
    }
    let jobs = grid(ctx);
    let cells: Vec<LayerCell> = {
        let c = &*ctx;
        jobs.par_iter().map(|&(b, r)| layer_cell(c, &st, &ells, b, r)).collect::<Result<_, _>>()?
    };

    let mut per = ResultTable::new("layer_sweep_cells", &["beta", "replicate", "ell", "accuracy", "final_loss", "alice_acc"]);
    for c in &cells {
        for r in &c.rows {
            per.push(vec![c.beta.into(), c.replicate.into(), r.ell.into(), r.accuracy.into(), r.final_loss.into(), c.alice_acc.into()]);
        }
    }
    let mut summary = ResultTable::new("layer_sweep", &["beta", "ell", "seed_count", "accuracy", "stderr"]);
    for chunk in cells.chunks(ctx.cfg.seeds.len()) {
        for (i, &ell) in ells.iter().enumerate() {
            let acc: Vec<f64> = chunk.iter().map(|c| c.rows[i].accuracy).collect();
            summary.push(vec![chunk[0].beta.into(), ell.into(), chunk.len().into(), mean(&acc).into(), std_error(&acc).into()]);
        }
    }
    ctx.emit(per)?;
    ctx.emit(summary)?;
    ctx.plot("layer_sweep", "ell", &["accuracy"], Some("beta"));
    Ok(())
}
