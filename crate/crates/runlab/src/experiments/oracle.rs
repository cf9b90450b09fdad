//! Oracle initialization: Alice trained from the same seed with and without
//! her first-layer weights on the right half zeroed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xferlab_core::nncore::{evaluate, Init, Target};
use xferlab_core::numkit::stats::{mean, std_error};

use super::attribution::{attribute_samples, widen};
use super::nets::{cell_key, save, setup, CellStreams, Setup};
use super::RunContext;
use crate::error::RunError;
use crate::table::ResultTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OracleRow {
    init: String,
    alice_acc: f64,
    left_mean: f64,
    right_mean: f64,
    right_weight_l1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OracleCell {
    beta: f64,
    replicate: u64,
    rows: Vec<OracleRow>,
}

const INITS: [(Init, &str); 2] = [(Init::Standard, "standard"), (Init::ZeroRightHalf, "zero_right_half")];

fn oracle_cell(ctx: &RunContext<'_>, st: &Setup, beta: f64, rep: u64) -> Result<OracleCell, RunError> {
    let key = cell_key(beta, rep);
    let s = CellStreams::new(ctx, &key);
    ctx.cell(&key, || {
        let test = st.test_set(beta, &s)?;
        let rows = INITS
            .par_iter()
            .map(|&(init, name)| {
                let (alice, _) = st.train_alice(ctx, beta, init, &s)?;
                let path = ctx.out_path(format!("checkpoints/{}/{}_{name}.xfn", ctx.exp(), key.replace('/', "_")));
                save(&alice, &path)?;
                let sides = attribute_samples(&widen(&alice)?, &test, Target::Alice, &ctx.cfg.attribution, None)?;
                Ok(OracleRow {
                    init: name.to_string(),
                    alice_acc: evaluate(&alice, &test, Target::Alice)?,
                    left_mean: mean(&sides.iter().map(|r| r.left_mean).collect::<Vec<_>>()),
                    right_mean: mean(&sides.iter().map(|r| r.right_mean).collect::<Vec<_>>()),
                    right_weight_l1: alice.right_half_weight_l1()?,
                })
            })
            .collect::<Result<_, RunError>>()?;
        Ok(OracleCell { beta, replicate: rep, rows })
    })
}

pub fn run(ctx: &mut RunContext<'_>) -> Result<(), RunError> {
    let st = setup(ctx)?;
    let betas = ctx.cfg.data.betas(ctx.kind);
    let jobs: Vec<(f64, u64)> = betas.iter().flat_map(|&b| ctx.cfg.seeds.iter().map(move |&r| (b, r))).collect();
    let cells: Vec<OracleCell> = {
        let c = &*ctx;
        jobs.par_iter().map(|&(b, r)| oracle_cell(c, &st, b, r)).collect::<Result<_, _>>()?
    };

    let mut per = ResultTable::new(
        "oracle_init_cells",
        &["beta", "replicate", "init", "alice_acc", "left_mean_ig", "right_mean_ig", "right_left_ratio", "right_weight_l1"],
    );
    for c in &cells {
        for r in &c.rows {
            per.push(vec![
                c.beta.into(),
                c.replicate.into(),
                r.init.as_str().into(),
                r.alice_acc.into(),
                r.left_mean.into(),
                r.right_mean.into(),
                (r.right_mean / r.left_mean).into(),
                r.right_weight_l1.into(),
            ]);
        }
    }
    let mut summary = ResultTable::new(
        "oracle_init",
        &["beta", "seed_count", "random_init_acc", "random_init_stderr", "zero_init_acc", "zero_init_stderr", "random_init_ratio", "zero_init_ratio"],
    );
    for chunk in cells.chunks(ctx.cfg.seeds.len()) {
        let col = |i: usize, f: fn(&OracleRow) -> f64| chunk.iter().map(|c| f(&c.rows[i])).collect::<Vec<f64>>();
        let (ra, za) = (col(0, |r| r.alice_acc), col(1, |r| r.alice_acc));
        let (rr, zr) = (col(0, |r| r.right_mean / r.left_mean), col(1, |r| r.right_mean / r.left_mean));
        summary.push(vec![
            chunk[0].beta.into(),
            chunk.len().into(),
            mean(&ra).into(),
            std_error(&ra).into(),
            mean(&za).into(),
            std_error(&za).into(),
            mean(&rr).into(),
            mean(&zr).into(),
        ]);
    }
    ctx.emit(per)?;
    ctx.emit(summary)?;
    ctx.plot("oracle_init", "beta", &["random_init_acc", "zero_init_acc"], None);
    Ok(())
}
