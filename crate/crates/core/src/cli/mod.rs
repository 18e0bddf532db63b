//! Command line front end: `prepare`, `plan`, `train`, `eval`, `ablate` and `report`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 dataset or plan
//! validation failure, 3 runtime failure.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use self::commands::{
    ablate, eval_modes, eval_run, open_dataset, plans, prepare, report, seed_dir, train_run, write_json,
    AblationRow, AblationRun, AblationSummary, BaseSource, MeanStd, TimePlan, ABLATION_CSV, ABLATION_JSON,
    ABLATION_RUNS_CSV, ABLATION_VARIANTS, MRR_MATRIX_FILE,
};
pub use self::config::{EvalChoice, RunConfig};
pub use self::manifest::{
    checkpoint_name, dataset_fingerprint, RunManifest, StepEntry, CHECKPOINT_DIR, MANIFEST_FILE, TRAIN_LOG_FILE,
};

use crate::datagen::{GrowthPattern, GrowthSchedule, SyntheticKgConfig};
use crate::error::{Error, ErrorKind, Result};
use crate::eval::EvalMode;
use crate::ordering::BetweennessScale;
use crate::trainer::{DistillReduction, ScoreNorm, StageMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "incde", version, about = "Continual knowledge graph embedding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a base triple file (or a synthetic graph) into a growing dataset.
    Prepare(PrepareArgs),
    /// Export the layer plan of one or all time steps as JSON.
    Plan(PlanArgs),
    /// Train every seed, checkpointing after each time step.
    Train(TrainArgs),
    /// Evaluate a trained run.
    Eval(EvalArgs),
    /// Train and evaluate the full model and its four ablations.
    Ablate(AblateArgs),
    /// Print a markdown summary of a report, run or ablation directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Tab separated `head relation tail` file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub base: Option<PathBuf>,
    /// Generate the base graph instead of reading one.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 300)]
    pub entities: usize,
    #[arg(long, default_value_t = 12)]
    pub relations: usize,
    #[arg(long, default_value_t = 2000)]
    pub triples: usize,
    #[arg(long, default_value = "equal")]
    pub pattern: GrowthPattern,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Explicit per-time sizes; overrides --pattern and --steps.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Run settings shared by `plan`, `train` and `ablate`. Flags override the config file.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One seed or a comma separated list.
    #[arg(long, value_delimiter = ',')]
    pub seed: Option<Vec<u64>>,
    #[arg(long)]
    pub max_layer_size: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub gate_lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Fraction of epochs spent with old parameters frozen.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub norm: Option<ScoreNorm>,
    #[arg(long)]
    pub stage_mode: Option<StageMode>,
    #[arg(long)]
    pub distill_reduction: Option<DistillReduction>,
    #[arg(long)]
    pub betweenness_scale: Option<BetweennessScale>,
    /// Disable early stopping.
    #[arg(long)]
    pub no_early_stop: bool,
    #[arg(long)]
    pub no_ho: bool,
    #[arg(long)]
    pub no_id: bool,
    #[arg(long)]
    pub no_ts: bool,
}

impl RunArgs {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut rc = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag.clone() { rc.$field = v.into(); })*
            };
        }
        set!(dataset => dataset, out => out, max_layer_size => max_layer_size, dim => dim, margin => margin,
            lr => learning_rate, batch => batch_size, negatives => negatives, epochs => epochs,
            rho => stage1_fraction, norm => norm, stage_mode => stage_mode,
            distill_reduction => distill_reduction, betweenness_scale => betweenness_scale);
        if let Some(seeds) = &self.seed {
            rc.seeds = seeds.clone();
        }
        if self.gate_lr.is_some() {
            rc.gate_learning_rate = self.gate_lr;
        }
        if self.no_early_stop {
            rc.early_stop_every = 0;
        }
        rc.no_ho |= self.no_ho;
        rc.no_id |= self.no_id;
        rc.no_ts |= self.no_ts;
        rc.validate()?;
        Ok(rc)
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Only this time step.
    #[arg(long)]
    pub time: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Continue each seed's run after its last checkpoint.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run directory containing manifest.json, or a training output directory with seed-* runs.
    #[arg(long)]
    pub run: PathBuf,
    /// Model time to evaluate; the last checkpoint by default.
    #[arg(long)]
    pub time: Option<usize>,
    /// Also report raw (unfiltered) metrics.
    #[arg(long)]
    pub raw: bool,
    /// Write the model-time by test-time MRR matrix.
    #[arg(long)]
    pub matrix: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub path: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Validation => EXIT_VALIDATION,
        ErrorKind::Runtime => EXIT_RUNTIME,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => {
            let source = match a.base {
                Some(path) => BaseSource::File(path),
                None => BaseSource::Synthetic(SyntheticKgConfig {
                    num_entities: a.entities,
                    num_relations: a.relations,
                    num_triples: a.triples,
                    seed: a.seed,
                    ..SyntheticKgConfig::default()
                }),
            };
            let schedule = match a.sizes {
                Some(sizes) => GrowthSchedule::explicit(sizes),
                None => GrowthSchedule::new(a.pattern, a.steps),
            };
            let dataset = prepare(&source, &schedule, a.seed, &a.out)?;
            for (s, d) in dataset.stats().iter().zip(&dataset.deltas) {
                println!(
                    "time {}: {} entities, {} relations, {} new triples",
                    s.time,
                    s.num_entities,
                    s.num_relations,
                    d.num_new_triples()
                );
            }
            Ok(())
        }
        Command::Plan(a) => {
            let rc = a.run.resolve()?;
            let dataset = open_dataset(rc.dataset()?)?;
            let config = rc.train_config(rc.seeds[0])?;
            let plans = plans(&dataset, &config, a.time)?;
            write_json(&plans, a.output.as_deref())
        }
        Command::Train(a) => {
            let rc = a.run.resolve()?;
            let (dataset, out) = (rc.dataset()?, rc.out()?);
            for &seed in &rc.seeds {
                let config = rc.train_config(seed)?;
                let run_dir = seed_dir(out, seed);
                let manifest = train_run(dataset, &config, &run_dir, a.resume)?;
                println!(
                    "seed {seed}: trained through time {} into {}",
                    manifest.last_time(),
                    run_dir.display()
                );
            }
            Ok(())
        }
        Command::Eval(a) => {
            let modes = if a.raw {
                vec![EvalMode::Filtered, EvalMode::Raw]
            } else {
                vec![EvalMode::Filtered]
            };
            for run_dir in run_dirs(&a.run)? {
                for r in eval_run(&run_dir, a.time, &modes, a.matrix)? {
                    let m = r.aggregate.mean;
                    println!(
                        "{} seed {} time {} {:?}: MRR {:.4} H@1 {:.4} H@3 {:.4} H@10 {:.4}",
                        run_dir.display(),
                        r.seed,
                        r.aggregate.model_time,
                        r.aggregate.mode,
                        m.mrr,
                        m.hits1,
                        m.hits3,
                        m.hits10
                    );
                }
            }
            Ok(())
        }
        Command::Ablate(a) => {
            let rc = a.run.resolve()?;
            let out = rc.out()?.to_path_buf();
            let summary = ablate(&rc, &out)?;
            print!("{}", summary.to_markdown());
            Ok(())
        }
        Command::Report(a) => {
            print!("{}", report(&a.path)?);
            Ok(())
        }
    }
}

/// A run directory itself, or every `seed-*` run below a training output directory.
fn run_dirs(path: &std::path::Path) -> Result<Vec<PathBuf>> {
    if path.join(MANIFEST_FILE).is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Config(format!("no training runs under {}", path.display())));
    }
    Ok(dirs)
}
