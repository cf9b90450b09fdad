//! Experiment drivers. Each one expands the config into independent cells,
//! runs them on the rayon pool, and writes summary tables in cell order.

mod attribution;
pub mod attribution_api {
    pub use super::attribution::{aggregate_gap, attribute_samples, map_csv, widen, MapSink, SampleAttribution};
}
mod corr;
mod glm;
mod nets;
mod oracle;
mod sweeps;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::RunError;
use crate::plot::plot_table;
use crate::seeds::StreamRegistry;
use crate::table::{write_file, Provenance, ResultTable};

pub use nets::{cell_key, CellStreams};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub jobs: usize,
    pub resume: bool,
}

/// Tables produced by a run, in the order they were written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub tables: Vec<ResultTable>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Shared state of one run.
pub struct RunContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub kind: ExperimentKind,
    pub opts: &'a RunOptions,
    pub streams: StreamRegistry,
    pub config_hash: String,
    tables: Vec<ResultTable>,
    plots: Vec<(String, String, Vec<String>, Option<String>)>,
}

#[derive(Serialize, Deserialize)]
struct CellFile<R> {
    config_hash: String,
    result: R,
}

/// SHA-256 of the effective config, ignoring where results go.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = None;
    let digest = Sha256::digest(c.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl<'a> RunContext<'a> {
    fn new(cfg: &'a ExperimentConfig, kind: ExperimentKind, opts: &'a RunOptions) -> Self {
        Self {
            cfg,
            kind,
            opts,
            streams: StreamRegistry::new(cfg.seed),
            config_hash: config_hash(cfg),
            tables: Vec::new(),
            plots: Vec::new(),
        }
    }

    pub fn exp(&self) -> &'static str {
        self.kind.name()
    }

    fn cell_path(&self, key: &str) -> PathBuf {
        let file: String = key.chars().map(|c| if c == '/' { '_' } else { c }).collect();
        self.opts.out.join("cells").join(self.exp()).join(format!("{file}.json"))
    }

    /// Runs `f` unless `--resume` finds a finished cell from the same
    /// config; the result is saved either way.
    pub fn cell<R, F>(&self, key: &str, f: F) -> Result<R, RunError>
    where
        R: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<R, RunError>,
    {
        let path = self.cell_path(key);
        if self.opts.resume {
            if let Ok(bytes) = std::fs::read(&path) {
                if let Ok(done) = serde_json::from_slice::<CellFile<R>>(&bytes) {
                    if done.config_hash == self.config_hash {
                        return Ok(done.result);
                    }
                }
            }
        }
        let t = Instant::now();
        let result = f()?;
        let file = CellFile { config_hash: self.config_hash.clone(), result };
        write_file(&path, &serde_json::to_vec_pretty(&file).expect("cell serializes"))?;
        eprintln!("[{}] {key} done in {:.1}s", self.exp(), t.elapsed().as_secs_f64());
        Ok(file.result)
    }

    pub fn out_path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.opts.out.join(rel)
    }

    /// Writes `table` as CSV and JSON and keeps it for the run output.
    pub fn emit(&mut self, table: ResultTable) -> Result<(), RunError> {
        table.write_csv(&self.out_path(format!("{}.csv", table.name)))?;
        table.write_json(&self.out_path(format!("{}.json", table.name)))?;
        self.tables.push(table);
        Ok(())
    }

    /// Queues an SVG of a table already emitted.
    pub fn plot(&mut self, table: &str, x: &str, ys: &[&str], group: Option<&str>) {
        self.plots.push((table.into(), x.into(), ys.iter().map(|s| s.to_string()).collect(), group.map(String::from)));
    }

    fn finish(mut self, started: Instant) -> Result<RunOutput, RunError> {
        if self.cfg.plots {
            for (name, x, ys, group) in std::mem::take(&mut self.plots) {
                let table = self.tables.iter().find(|t| t.name == name).expect("plotted table was emitted");
                let ys: Vec<&str> = ys.iter().map(String::as_str).collect();
                plot_table(table, &x, &ys, group.as_deref(), &self.out_path(format!("{name}.svg")))?;
            }
        }
        self.streams.audit()?;
        let entries = self.streams.entries();
        write_file(&self.out_path("streams.json"), &serde_json::to_vec_pretty(&entries).expect("streams serialize"))?;
        let prov = Provenance {
            experiment: self.exp().to_string(),
            config_hash: self.config_hash.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: self.cfg.seed,
            jobs: self.opts.jobs,
            wall_time_secs: started.elapsed().as_secs_f64(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            tables: self.tables.iter().map(|t| t.name.clone()).collect(),
        };
        write_file(&self.out_path("provenance.json"), &serde_json::to_vec_pretty(&prov).expect("provenance serializes"))?;
        Ok(RunOutput { dir: self.opts.out.clone(), tables: self.tables })
    }
}

/// Runs one experiment and writes its artifacts under `opts.out`.
pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind, opts: &RunOptions) -> Result<RunOutput, RunError> {
    if let Some(k) = cfg.experiment {
        if k != kind {
            return Err(RunError::config("experiment", format!("config is for `{}`, not `{}`", k.name(), kind.name())));
        }
    }
    cfg.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| RunError::config("jobs", e.to_string()))?;
    let mut ctx = RunContext::new(cfg, kind, opts);
    write_file(&ctx.out_path("config.toml"), cfg.to_toml().as_bytes())?;
    pool.install(|| match kind {
        ExperimentKind::GlmSweep => glm::run(&mut ctx),
        ExperimentKind::TaskSweep => sweeps::run_task_sweep(&mut ctx),
        ExperimentKind::LayerSweep => sweeps::run_layer_sweep(&mut ctx),
        ExperimentKind::OracleInit => oracle::run(&mut ctx),
        ExperimentKind::Attribution => attribution::run(&mut ctx),
        ExperimentKind::CorrCheck => corr::run(&mut ctx),
    })?;
    ctx.finish(started)
}
