//! Pieces shared by the network experiments: domains, streams, and the
//! Alice / Bob training steps.

use xferlab_core::dataforge::{sample_concat, PairSource, PairedDataset};
use xferlab_core::nncore::{build_network, save_checkpoint, train, Arch, DataSource, FreezePlan, Init, Target, TrainLog, WidthProfile};
use xferlab_core::numkit::RngStream;
use xferlab_core::Network32;

use super::RunContext;
use crate::config::DataSizes;
use crate::domains::{load_domains, DomainSet};
use crate::error::RunError;
use crate::table::format_g6;

pub fn cell_key(beta: f64, rep: u64) -> String {
    format!("beta={}/rep={rep}", format_g6(beta))
}

/// Named sub-streams of one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellStreams {
    pub data: RngStream,
    pub test: RngStream,
    pub net: RngStream,
    pub alice: RngStream,
    pub bob_data: RngStream,
    pub bob: RngStream,
}

impl CellStreams {
    pub fn new(ctx: &RunContext<'_>, key: &str) -> Self {
        let get = |sub: &str| ctx.streams.get(&format!("{}/{key}/{sub}", ctx.exp()));
        Self {
            data: get("data"),
            test: get("test"),
            net: get("net"),
            alice: get("alice"),
            bob_data: get("bob-data"),
            bob: get("bob"),
        }
    }
}

pub struct Setup {
    pub domains: DomainSet,
    pub sizes: DataSizes,
    pub input_shape: (usize, usize, usize),
    pub profile: WidthProfile,
    pub arch: Arch,
}

pub fn setup(ctx: &RunContext<'_>) -> Result<Setup, RunError> {
    let cfg = ctx.cfg;
    let sizes = cfg.data.sizes(cfg.scale);
    let domains = load_domains(&cfg.data, sizes.train_per_class, sizes.test_per_class, cfg.scale.domain_shape())?;
    Ok(Setup {
        domains,
        sizes,
        input_shape: cfg.scale.input_shape(),
        profile: cfg.model.profile(cfg.scale),
        arch: cfg.model.arch.clone(),
    })
}

impl Setup {
    pub fn source(&self, beta: f64) -> PairSource<'_> {
        PairSource { beta, left: &self.domains.left, right: &self.domains.right }
    }

    pub fn test_set(&self, beta: f64, s: &CellStreams) -> Result<PairedDataset, RunError> {
        let d = &self.domains;
        Ok(sample_concat(beta, &d.left_test, &d.right_test, self.sizes.test_pairs, &s.test)?)
    }

    /// Hidden layer count `m` of the configured architecture.
    pub fn hidden_layers(&self) -> Result<usize, RunError> {
        Ok(Network32::from_specs(&self.arch.layers(self.profile), self.input_shape)?.hidden_layers())
    }

    pub fn train_alice(&self, ctx: &RunContext<'_>, beta: f64, init: Init, s: &CellStreams) -> Result<(Network32, TrainLog), RunError> {
        let mut net = build_network::<f32>(&self.arch, self.input_shape, self.profile, &s.net, init)?;
        let data = DataSource::Resample { source: self.source(beta), n: self.sizes.pairs_per_epoch, stream: s.data };
        let log = train(&mut net, &data, Target::Alice, &ctx.cfg.alice_opt(), None, &s.alice)?;
        Ok((net, log))
    }

    /// Bob's fine-tune of a copy of `alice` with groups `1..ell` frozen.
    pub fn train_bob(&self, ctx: &RunContext<'_>, alice: &Network32, beta: f64, ell: usize, s: &CellStreams) -> Result<(Network32, TrainLog), RunError> {
        let mut bob = alice.clone();
        let data = DataSource::Resample { source: self.source(beta), n: self.sizes.pairs_per_epoch, stream: s.bob_data };
        let log = train(&mut bob, &data, Target::Bob, &ctx.cfg.bob_opt(), Some(FreezePlan { ell }), &s.bob)?;
        Ok((bob, log))
    }
}

/// Saves a checkpoint, creating its directory.
pub fn save(net: &Network32, path: &std::path::Path) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    Ok(save_checkpoint(net, path)?)
}

pub fn final_loss(log: &TrainLog) -> f64 {
    log.epochs.last().map_or(f64::NAN, |e| e.mean_loss)
}
