//! Empirical task correlation of Algorithm-1 pairings across a beta grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xferlab_core::dataforge::{draw_pairs, CorrelationAccumulator, CorrelationReport};
use xferlab_core::numkit::stats::{mean, std_error};

use super::nets::{cell_key, setup};
use super::RunContext;
use crate::error::RunError;
use crate::table::ResultTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CorrCell {
    beta: f64,
    replicate: u64,
    mean_corr: f64,
    min_corr: f64,
    max_corr: f64,
    degenerate: usize,
    n: usize,
}

fn summarize(beta: f64, replicate: u64, r: &CorrelationReport) -> CorrCell {
    let defined: Vec<f64> = r.per_class_corr.iter().flatten().copied().collect();
    CorrCell {
        beta,
        replicate,
        mean_corr: r.mean_corr,
        min_corr: defined.iter().copied().fold(f64::INFINITY, f64::min),
        max_corr: defined.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        degenerate: r.degenerate_classes.len(),
        n: r.sample_count,
    }
}

pub fn run(ctx: &mut RunContext<'_>) -> Result<(), RunError> {
    let st = setup(ctx)?;
    let n = ctx.cfg.corr_check.n;
    let jobs: Vec<(f64, u64)> =
        ctx.cfg.data.betas(ctx.kind).iter().flat_map(|&b| ctx.cfg.seeds.iter().map(move |&r| (b, r))).collect();
    let cells: Vec<CorrCell> = {
        let c = &*ctx;
        jobs.par_iter()
            .map(|&(beta, rep)| {
                let key = cell_key(beta, rep);
                let stream = c.streams.get(&format!("{}/{key}/pairs", c.exp()));
                c.cell(&key, || {
                    let (l, r) = (&st.domains.left, &st.domains.right);
                    let pairs = draw_pairs(beta, l, r, n, &stream)?;
                    let mut acc = CorrelationAccumulator::new();
                    for p in &pairs {
                        acc.push(l.label(p.left), r.label(p.right))?;
                    }
                    Ok(summarize(beta, rep, &acc.report()?))
                })
            })
            .collect::<Result<_, RunError>>()?
    };

    let mut per = ResultTable::new(
        "corr_check_cells",
        &["beta", "replicate", "n", "mean_corr", "min_class_corr", "max_class_corr", "degenerate_classes"],
    );
    for c in &cells {
        per.push(vec![
            c.beta.into(),
            c.replicate.into(),
            c.n.into(),
            c.mean_corr.into(),
            c.min_corr.into(),
            c.max_corr.into(),
            c.degenerate.into(),
        ]);
    }
    let mut summary = ResultTable::new("corr_check", &["beta", "seed_count", "mean_corr", "stderr"]);
    for chunk in cells.chunks(ctx.cfg.seeds.len()) {
        let v: Vec<f64> = chunk.iter().map(|c| c.mean_corr).collect();
        summary.push(vec![chunk[0].beta.into(), chunk.len().into(), mean(&v).into(), std_error(&v).into()]);
    }
    ctx.emit(per)?;
    ctx.emit(summary)?;
    ctx.plot("corr_check", "beta", &["mean_corr"], None);
    Ok(())
}
