//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use xferlab_core::attrib::side_histograms;
use xferlab_core::attrib::SideSummary;
use xferlab_core::dataforge::{estimate_task_correlation, load_dataset, sample_concat, save_dataset, PairedDataset};
use xferlab_core::nncore::{
    build_network, evaluate, load_checkpoint, save_checkpoint, train, DataSource, FreezePlan, Init, Scale, Target,
    TrainLog,
};
use xferlab_core::numkit::RngStream;
use xferlab_core::Network32;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::domains::load_domain;
use crate::error::{RunError, EXIT_CONFIG, EXIT_OK};
use crate::experiments::attribution_api::{attribute_samples, map_csv, widen, MapSink};
use crate::experiments::{run_experiment, RunOptions};
use crate::plot::plot_table;
use crate::table::{write_file, ResultTable};

#[derive(Debug, Parser)]
#[command(name = "xferlab", version, about = "Transfer-learning laboratory: controlled feature and task correlation experiments")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; 1 is the canonical deterministic mode.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output directory (or output file for make-dataset).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub scale: Option<ScaleArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Who {
    Alice,
    Bob,
}

impl From<Who> for Target {
    fn from(w: Who) -> Self {
        match w {
            Who::Alice => Target::Alice,
            Who::Bob => Target::Bob,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Accuracy of the two-layer GLM across alpha and k.
    GlmSweep(SweepArgs),
    /// Write an XFL1 paired dataset.
    MakeDataset(MakeDatasetArgs),
    /// Task correlation of a dataset file, or the beta sweep without --in.
    CorrCheck(CorrCheckArgs),
    /// Train a network from scratch on a dataset file.
    Train(TrainArgs),
    /// Fine-tune a checkpoint on Bob's labels with the first layers frozen.
    Finetune(FinetuneArgs),
    /// Bob's accuracy for each fine-tuning depth.
    LayerSweep(SweepArgs),
    /// Output-layer fine-tuning across the beta grid.
    TaskSweep(SweepArgs),
    /// Standard versus zero-right-half initialization for Alice.
    OracleInit(SweepArgs),
    /// Integrated gradients of a checkpoint, or the attribution experiment
    /// without --checkpoint.
    Attribute(AttributeArgs),
    /// SVG line chart of a result CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Reuse finished cells from an earlier run of the same config.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct MakeDatasetArgs {
    #[arg(long)]
    pub beta: f64,
    /// glyphA, glyphB, or an IDX prefix.
    #[arg(long, default_value = "glyphA")]
    pub left: String,
    #[arg(long, default_value = "glyphB")]
    pub right: String,
    #[arg(long)]
    pub n: usize,
    /// Draw from the test split of the domains.
    #[arg(long)]
    pub test_split: bool,
}

#[derive(Debug, Args)]
pub struct CorrCheckArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "alice")]
    pub target: Who,
    #[arg(long)]
    pub zero_right_half: bool,
    /// Checkpoint to write; defaults to OUT/model.xfn.
    #[arg(long, value_name = "PATH")]
    pub save: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    /// Train groups ell..=m+1; defaults to the output layer only.
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long, value_enum, default_value = "bob")]
    pub target: Who,
    #[arg(long, value_name = "PATH")]
    pub save: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    #[arg(long, value_name = "PATH", requires = "data")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "alice")]
    pub target: Who,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub x: String,
    /// One or more y columns, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub y: Vec<String>,
    #[arg(long)]
    pub group: Option<String>,
    /// SVG to write; defaults to the input path with an .svg extension.
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
}

struct Global {
    cfg: ExperimentConfig,
    out: PathBuf,
    jobs: usize,
}

fn resolve(cli: &Cli) -> Result<Global, RunError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = cli.scale {
        cfg.scale = s.into();
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = Some(o.clone());
    }
    cfg.validate()?;
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let jobs = match cli.jobs {
        Some(0) => return Err(RunError::config("--jobs", "must be at least 1")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(Global { cfg, out, jobs })
}

fn experiment(g: &Global, kind: ExperimentKind, resume: bool) -> Result<(), RunError> {
    let opts = RunOptions { out: g.out.clone(), jobs: g.jobs, resume };
    let out = run_experiment(&g.cfg, kind, &opts)?;
    for t in &out.tables {
        eprintln!("wrote {}", out.dir.join(format!("{}.csv", t.name)).display());
    }
    Ok(())
}

fn log_table(log: &TrainLog) -> ResultTable {
    let mut t = ResultTable::new("train_log", &["epoch", "mean_loss", "accuracy", "last_lr"]);
    for e in &log.epochs {
        t.push(vec![e.epoch.into(), e.mean_loss.into(), e.accuracy.into(), e.last_lr.into()]);
    }
    t
}

fn report(net: &Network32, log: &TrainLog, test: Option<&PathBuf>, target: Target, out: &Path) -> Result<(), RunError> {
    log_table(log).write_csv(&out.join("train_log.csv"))?;
    let mut summary = serde_json::Map::new();
    summary.insert("final_loss".into(), log.epochs.last().map_or(f64::NAN, |e| e.mean_loss).into());
    if let Some(p) = test {
        let ds = load_dataset(p)?;
        summary.insert("test_accuracy".into(), evaluate(net, &ds, target)?.into());
    }
    println!("{}", serde_json::Value::Object(summary));
    Ok(())
}

fn check_input(net_shape: (usize, usize, usize), ds: &PairedDataset) -> Result<(), RunError> {
    if net_shape != (ds.height, ds.width, ds.channels) {
        return Err(RunError::Data(format!(
            "dataset images are {}x{}x{} but the network expects {:?}",
            ds.height, ds.width, ds.channels, net_shape
        )));
    }
    Ok(())
}

fn run_command(cli: &Cli) -> Result<(), RunError> {
    let g = resolve(cli)?;
    let cfg = &g.cfg;
    match &cli.command {
        Command::GlmSweep(a) => experiment(&g, ExperimentKind::GlmSweep, a.resume),
        Command::TaskSweep(a) => experiment(&g, ExperimentKind::TaskSweep, a.resume),
        Command::LayerSweep(a) => experiment(&g, ExperimentKind::LayerSweep, a.resume),
        Command::OracleInit(a) => experiment(&g, ExperimentKind::OracleInit, a.resume),
        Command::CorrCheck(a) => match &a.input {
            Some(p) => {
                let report = estimate_task_correlation(&load_dataset(p)?)?;
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                Ok(())
            }
            None => experiment(&g, ExperimentKind::CorrCheck, a.resume),
        },
        Command::MakeDataset(a) => {
            let out = cli.out.as_ref().ok_or_else(|| RunError::config("--out", "make-dataset needs an output file"))?;
            if !(0.0..=1.0).contains(&a.beta) {
                return Err(RunError::config("--beta", format!("beta {} outside [0, 1]", a.beta)));
            }
            let sizes = cfg.data.sizes(cfg.scale);
            let (split, per_class) = if a.test_split { (1, sizes.test_per_class) } else { (0, sizes.train_per_class) };
            let shape = cfg.scale.domain_shape();
            let left = load_domain(&a.left, split, per_class, shape)?;
            let right = load_domain(&a.right, split, per_class, shape)?;
            let ds = sample_concat(a.beta, &left, &right, a.n, &RngStream::root(cfg.seed).named("make-dataset"))?;
            save_dataset(&ds, out)?;
            eprintln!("wrote {} samples ({}x{}x{}) to {}", ds.len(), ds.height, ds.width, ds.channels, out.display());
            Ok(())
        }
        Command::Train(a) => {
            let ds = load_dataset(&a.data)?;
            let root = RngStream::root(cfg.seed).named("train");
            let init = if a.zero_right_half { Init::ZeroRightHalf } else { cfg.model.init };
            let shape = (ds.height, ds.width, ds.channels);
            let mut net = build_network::<f32>(&cfg.model.arch, shape, cfg.model.profile(cfg.scale), &root.named("net"), init)?;
            let log = train(&mut net, &DataSource::Fixed(&ds), a.target.into(), &cfg.alice_opt(), None, &root.named("alice"))?;
            let save = a.save.clone().unwrap_or_else(|| g.out.join("model.xfn"));
            std::fs::create_dir_all(&g.out).map_err(|e| RunError::io(&g.out, e))?;
            save_checkpoint(&net, &save)?;
            report(&net, &log, a.test.as_ref(), a.target.into(), &g.out)
        }
        Command::Finetune(a) => {
            let mut net: Network32 = load_checkpoint(&a.checkpoint)?;
            let ds = load_dataset(&a.data)?;
            check_input(net.input_shape(), &ds)?;
            let m = net.hidden_layers();
            let ell = a.ell.unwrap_or(m + 1);
            if ell == 0 || ell > m + 1 {
                return Err(RunError::config("--ell", format!("ell must be in 1..={}", m + 1)));
            }
            let root = RngStream::root(cfg.seed).named("finetune");
            let log = train(&mut net, &DataSource::Fixed(&ds), a.target.into(), &cfg.bob_opt(), Some(FreezePlan { ell }), &root.named("bob"))?;
            let save = a.save.clone().unwrap_or_else(|| g.out.join("finetuned.xfn"));
            std::fs::create_dir_all(&g.out).map_err(|e| RunError::io(&g.out, e))?;
            save_checkpoint(&net, &save)?;
            report(&net, &log, a.test.as_ref(), a.target.into(), &g.out)
        }
        Command::Attribute(a) => {
            let Some(ckpt) = &a.checkpoint else {
                let mut g = g;
                if let Some(n) = a.samples {
                    g.cfg.attribution.samples = n;
                }
                if let Some(s) = a.steps {
                    g.cfg.attribution.steps = s;
                }
                return experiment(&g, ExperimentKind::Attribution, a.resume);
            };
            let net: Network32 = load_checkpoint(ckpt)?;
            let ds = load_dataset(a.data.as_ref().expect("clap enforces --data"))?;
            check_input(net.input_shape(), &ds)?;
            let mut acfg = cfg.attribution.clone();
            acfg.samples = a.samples.unwrap_or(acfg.samples);
            acfg.steps = a.steps.unwrap_or(acfg.steps);
            if acfg.samples == 0 || acfg.steps == 0 {
                return Err(RunError::config("--samples", "samples and steps must be at least 1"));
            }
            let dump_dir = g.out.join("attribution_maps");
            let dump = |i: usize, map: &xferlab_core::attrib::AttributionMap| {
                write_file(&dump_dir.join(format!("sample_{i}.csv")), &map_csv(map)?)
            };
            let keep: Option<MapSink<'_>> =
                if acfg.dump_maps { Some(&dump) } else { None };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(g.jobs).build().map_err(|e| RunError::config("--jobs", e.to_string()))?;
            let rows = pool.install(|| attribute_samples(&widen(&net)?, &ds, a.target.into(), &acfg, keep))?;
            let mut t = ResultTable::new(
                "attribution_sides",
                &["sample", "class", "left_mean", "right_mean", "output_delta", "completeness_gap"],
            );
            for r in &rows {
                t.push(vec![
                    r.sample.into(),
                    (r.class as usize).into(),
                    r.left_mean.into(),
                    r.right_mean.into(),
                    r.output_delta.into(),
                    r.completeness_gap.into(),
                ]);
            }
            t.write_csv(&g.out.join("attribution_sides.csv"))?;
            let summaries: Vec<SideSummary> =
                rows.iter().map(|r| SideSummary { left_mean: r.left_mean, right_mean: r.right_mean }).collect();
            let hist = side_histograms(&summaries, acfg.bins)?;
            write_file(&g.out.join("attribution_hist.json"), &serde_json::to_vec_pretty(&hist).expect("histogram serializes"))?;
            eprintln!("wrote {}", g.out.join("attribution_sides.csv").display());
            Ok(())
        }
        Command::Plot(a) => {
            let table = ResultTable::load_csv(&a.input)?;
            let ys: Vec<&str> = a.y.iter().map(String::as_str).collect();
            let svg = a.svg.clone().unwrap_or_else(|| a.input.with_extension("svg"));
            plot_table(&table, &a.x, &ys, a.group.as_deref(), &svg)?;
            eprintln!("wrote {}", svg.display());
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_command(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
