//! Two-layer GLM sweep over feature correlation alpha and feature count k.

use rayon::prelude::*;
use xferlab_core::glmlab::{run_glm_cell, summarize_cell, CorrelationSpec, GlmCellRun};

use super::RunContext;
use crate::error::RunError;
use crate::table::{format_g6, ResultTable};

pub fn run(ctx: &mut RunContext<'_>) -> Result<(), RunError> {
    let g = &ctx.cfg.glm;
    let sweep = g.sweep(ctx.cfg.seeds.len());
    let alphas = g.alphas();
    let mut cells = Vec::new();
    for &scenario in &g.scenarios {
        for &k in &g.ks {
            for &alpha in &alphas {
                cells.push(CorrelationSpec::new(alpha, k, scenario)?);
            }
        }
    }
    let jobs: Vec<(CorrelationSpec, usize, u64)> = cells
        .iter()
        .flat_map(|&spec| ctx.cfg.seeds.iter().enumerate().map(move |(i, &r)| (spec, i, r)))
        .collect();
    let runs: Vec<GlmCellRun> = {
        let c = &*ctx;
        jobs.par_iter()
            .map(|(spec, index, rep)| {
                let key = format!("{}/k={}/alpha={}/rep={rep}", spec.scenario().label(), spec.k(), format_g6(spec.alpha()));
                let stream = c.streams.get(&format!("{}/{key}", c.exp()));
                c.cell(&key, || Ok(run_glm_cell::<f64>(spec, &sweep, *index, &stream)?))
            })
            .collect::<Result<_, RunError>>()?
    };

    let mut per = ResultTable::new(
        "glm_runs",
        &["scenario", "alpha", "k", "replicate", "acc_pretrained", "acc_finetuned", "v_finetuned", "w_alice_1", "w_bob_1", "alice_converged"],
    );
    for ((spec, _, rep), r) in jobs.iter().zip(&runs) {
        per.push(vec![
            spec.scenario().label().into(),
            r.alpha.into(),
            r.k.into(),
            (*rep).into(),
            r.acc_pretrained.into(),
            r.acc_finetuned.into(),
            r.v_finetuned.into(),
            r.w[0].into(),
            r.w[r.k].into(),
            (r.alice_converged as usize).into(),
        ]);
    }
    let mut curves = ResultTable::new(
        "glm_curves",
        &["scenario", "alpha", "k", "seed_count", "acc_pretrained", "acc_finetuned", "stderr_pretrained", "stderr_finetuned"],
    );
    for (spec, chunk) in cells.iter().zip(runs.chunks(ctx.cfg.seeds.len())) {
        let row = summarize_cell(spec.scenario(), chunk);
        curves.push(vec![
            row.scenario.label().into(),
            row.alpha.into(),
            row.k.into(),
            row.seed_count.into(),
            row.acc_pretrained.into(),
            row.acc_finetuned.into(),
            row.stderr_pretrained.into(),
            row.stderr_finetuned.into(),
        ]);
    }
    for &scenario in &ctx.cfg.glm.scenarios {
        let mut sub = ResultTable::new(format!("glm_curves_{}", scenario.label()), &curves.columns.iter().map(String::as_str).collect::<Vec<_>>());
        sub.rows = curves.rows.iter().filter(|r| r[0].render() == scenario.label()).cloned().collect();
        ctx.emit(sub.clone())?;
        ctx.plot(&sub.name, "alpha", &["acc_finetuned"], Some("k"));
    }
    ctx.emit(per)?;
    ctx.emit(curves)?;
    Ok(())
}
