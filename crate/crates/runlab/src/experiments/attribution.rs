//! Integrated-gradients attribution of Alice's and Bob's networks, reduced
//! to per-side means and histograms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xferlab_core::attrib::{integrated_gradients, overlap_coefficient, side_histograms, side_means, AttributionMap, AttributionTarget, SideSummary};
use xferlab_core::dataforge::PairedDataset;
use xferlab_core::nncore::{batch_tensor, decode_checkpoint, encode_checkpoint, evaluate, Init, Target};
use xferlab_core::numkit::stats::mean;
use xferlab_core::{Network32, Network64};

use super::nets::{cell_key, setup, CellStreams};
use super::RunContext;
use crate::config::{AttributionConfig, IgTarget};
use crate::error::RunError;
use crate::table::{write_file, ResultTable};

/// Attribution always runs in `f64`; the cast from `f32` is exact.
pub fn widen(net: &Network32) -> Result<Network64, RunError> {
    Ok(decode_checkpoint(&encode_checkpoint(net))?)
}

impl From<IgTarget> for AttributionTarget {
    fn from(t: IgTarget) -> Self {
        match t {
            IgTarget::Logit => AttributionTarget::Logit,
            IgTarget::Probability => AttributionTarget::Probability,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleAttribution {
    pub sample: usize,
    pub class: u8,
    pub left_mean: f64,
    pub right_mean: f64,
    pub output_delta: f64,
    pub completeness_gap: f64,
}

/// Receives each attribution map with its sample index.
pub type MapSink<'a> = &'a (dyn Fn(usize, &AttributionMap) -> Result<(), RunError> + Sync);

/// IG of the first `cfg.samples` images of `ds`, each toward its `target`
/// label. Maps are handed to `keep` before being reduced.
pub fn attribute_samples(
    net: &Network64,
    ds: &PairedDataset,
    target: Target,
    cfg: &AttributionConfig,
    keep: Option<MapSink<'_>>,
) -> Result<Vec<SampleAttribution>, RunError> {
    let n = cfg.samples.min(ds.len());
    let labels = target.labels(ds);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = batch_tensor::<f64>(ds, &[i]);
            let map = integrated_gradients(net, &x, labels[i] as usize, cfg.steps, cfg.target.into())?;
            if let Some(k) = keep {
                k(i, &map)?;
            }
            let SideSummary { left_mean, right_mean } = side_means(&map, cfg.absolute)?;
            Ok(SampleAttribution {
                sample: i,
                class: labels[i],
                left_mean,
                right_mean,
                output_delta: map.output_delta,
                completeness_gap: map.completeness_gap,
            })
        })
        .collect()
}

/// `sum(gap) / sum(|delta|)` over samples.
pub fn aggregate_gap(rows: &[SampleAttribution]) -> f64 {
    let gap: f64 = rows.iter().map(|r| r.completeness_gap).sum();
    let delta: f64 = rows.iter().map(|r| r.output_delta.abs()).sum();
    gap / delta
}

pub fn map_csv(map: &AttributionMap) -> Result<Vec<u8>, RunError> {
    let mut t = ResultTable::new("map", &["y", "x", "c", "value"]);
    for y in 0..map.height {
        for x in 0..map.width {
            for c in 0..map.channels {
                t.push(vec![y.into(), x.into(), c.into(), map.get(y, x, c).into()]);
            }
        }
    }
    t.to_csv()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelAttribution {
    model: String,
    accuracy: f64,
    samples: Vec<SampleAttribution>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AttributionCell {
    beta: f64,
    replicate: u64,
    models: Vec<ModelAttribution>,
}

pub fn run(ctx: &mut RunContext<'_>) -> Result<(), RunError> {
    let st = setup(ctx)?;
    let m = st.hidden_layers()?;
    let rep = ctx.cfg.seeds[0];
    let acfg = ctx.cfg.attribution.clone();
    let betas = ctx.cfg.data.betas(ctx.kind);
    let mut cells = Vec::new();
    for &beta in &betas {
        let key = cell_key(beta, rep);
        let s = CellStreams::new(ctx, &key);
        let c = &*ctx;
        let cell = c.cell(&key, || {
            let test = st.test_set(beta, &s)?;
            let (alice, _) = st.train_alice(c, beta, Init::Standard, &s)?;
            let (bob, _) = st.train_bob(c, &alice, beta, m + 1, &s)?;
            let mut models = Vec::new();
            for (name, net, target) in [("alice", &alice, Target::Alice), ("bob", &bob, Target::Bob)] {
                let dump_dir = c.out_path(format!("attribution_maps/{}_{name}", key.replace('/', "_")));
                let dump = |i: usize, map: &AttributionMap| write_file(&dump_dir.join(format!("sample_{i}.csv")), &map_csv(map)?);
                let keep: Option<MapSink<'_>> =
                    if acfg.dump_maps { Some(&dump) } else { None };
                models.push(ModelAttribution {
                    model: name.to_string(),
                    accuracy: evaluate(net, &test, target)?,
                    samples: attribute_samples(&widen(net)?, &test, target, &acfg, keep)?,
                });
            }
            Ok(AttributionCell { beta, replicate: rep, models })
        })?;
        cells.push(cell);
    }

    let mut sides = ResultTable::new(
        "attribution_sides",
        &["beta", "model", "sample", "class", "left_mean", "right_mean", "output_delta", "completeness_gap"],
    );
    let mut summary = ResultTable::new(
        "attribution",
        &["beta", "model", "accuracy", "samples", "left_mean", "right_mean", "right_left_ratio", "overlap", "aggregate_gap"],
    );
    for cell in &cells {
        for m in &cell.models {
            for r in &m.samples {
                sides.push(vec![
                    cell.beta.into(),
                    m.model.as_str().into(),
                    r.sample.into(),
                    (r.class as usize).into(),
                    r.left_mean.into(),
                    r.right_mean.into(),
                    r.output_delta.into(),
                    r.completeness_gap.into(),
                ]);
            }
            let summaries: Vec<SideSummary> =
                m.samples.iter().map(|r| SideSummary { left_mean: r.left_mean, right_mean: r.right_mean }).collect();
            let hist = side_histograms(&summaries, acfg.bins)?;
            let name = format!("attribution_hist_beta={}_{}.json", crate::table::format_g6(cell.beta), m.model);
            write_file(&ctx.out_path(name), &serde_json::to_vec_pretty(&hist).expect("histogram serializes"))?;
            let left = mean(&m.samples.iter().map(|r| r.left_mean).collect::<Vec<_>>());
            let right = mean(&m.samples.iter().map(|r| r.right_mean).collect::<Vec<_>>());
            summary.push(vec![
                cell.beta.into(),
                m.model.as_str().into(),
                m.accuracy.into(),
                m.samples.len().into(),
                left.into(),
                right.into(),
                (right / left).into(),
                overlap_coefficient(&hist).into(),
                aggregate_gap(&m.samples).into(),
            ]);
        }
    }
    ctx.emit(sides)?;
    ctx.emit(summary)?;
    Ok(())
}
