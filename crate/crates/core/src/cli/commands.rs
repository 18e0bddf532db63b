use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{EvalChoice, RunConfig};
use super::manifest::{checkpoint_name, dataset_fingerprint, RunManifest, StepEntry, MANIFEST_FILE};
use crate::datagen::{generate_base_kg, prepare_dataset, BaseKg, GrowthSchedule, SyntheticKgConfig};
use crate::error::{Error, Result};
use crate::eval::{
    emit_mrr_matrix, emit_report, evaluate_snapshot, load_report, time_averaged_metrics, EvalMode, EvalReport,
    MetricsReport, MrrCell, ReportFormat,
};
use crate::kg::{load_dataset_with, EntityId, GrowingDataset, LoadOptions};
use crate::ordering::PlanExport;
use crate::pipeline::train_continual;
use crate::trainer::{load_checkpoint, plan_time_step, save_checkpoint, Ablation, Checkpoint, IncdeModel, TrainConfig};

pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_CSV: &str = "ablation.csv";
pub const ABLATION_RUNS_CSV: &str = "ablation_runs.csv";
pub const MRR_MATRIX_FILE: &str = "mrr_matrix.csv";

/// The five variants compared by `ablate`, in table order.
pub const ABLATION_VARIANTS: [Ablation; 5] = [
    Ablation::FULL,
    Ablation { no_ho: true, no_id: false, no_ts: false },
    Ablation { no_ho: false, no_id: true, no_ts: false },
    Ablation { no_ho: false, no_id: false, no_ts: true },
    Ablation::FINE_TUNE,
];

pub fn open_dataset(root: &Path) -> Result<GrowingDataset> {
    load_dataset_with(
        root,
        &LoadOptions {
            dedupe_within_delta: false,
            write_vocab_sidecars: true,
        },
    )
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Source of base triples for `prepare`.
#[derive(Debug, Clone)]
pub enum BaseSource {
    File(PathBuf),
    Synthetic(SyntheticKgConfig),
}

pub fn prepare(source: &BaseSource, schedule: &GrowthSchedule, seed: u64, out: &Path) -> Result<GrowingDataset> {
    let base = match source {
        BaseSource::File(path) => BaseKg::load(path)?,
        BaseSource::Synthetic(config) => generate_base_kg(config)?,
    };
    prepare_dataset(&base, schedule, seed, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePlan {
    pub time: usize,
    pub plan: PlanExport,
}

/// Layer plans of the given times (all times when `time` is `None`).
pub fn plans(dataset: &GrowingDataset, config: &TrainConfig, time: Option<usize>) -> Result<Vec<TimePlan>> {
    let times: Vec<usize> = match time {
        Some(t) => vec![t],
        None => (1..=dataset.num_times()).collect(),
    };
    times
        .into_iter()
        .map(|time| {
            let (_, plan) = plan_time_step(dataset, time, config)?;
            Ok(TimePlan {
                time,
                plan: plan.to_export(),
            })
        })
        .collect()
}

/// Trains one seed into `run_dir`, writing a checkpoint and an updated
/// manifest after every time step. With `resume`, training continues after
/// the last checkpoint recorded in the existing manifest, provided the
/// configuration and dataset are unchanged.
pub fn train_run(dataset_root: &Path, config: &TrainConfig, run_dir: &Path, resume: bool) -> Result<RunManifest> {
    config.validate()?;
    let dataset = open_dataset(dataset_root)?;
    let fingerprint = dataset_fingerprint(dataset_root)?;
    fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;

    let (mut manifest, mut model) = if resume {
        let manifest = RunManifest::load(run_dir)?;
        if manifest.config_hash != config.hash() {
            return Err(Error::Config(format!(
                "cannot resume {}: config hash {} differs from the run's {}",
                run_dir.display(),
                config.hash(),
                manifest.config_hash
            )));
        }
        if manifest.dataset_fingerprint != fingerprint {
            return Err(Error::Config(format!(
                "cannot resume {}: dataset contents changed",
                run_dir.display()
            )));
        }
        let model = match manifest.steps.last() {
            Some(step) => {
                let path = run_dir.join(&step.checkpoint);
                let ckpt = load_checkpoint(&path)?;
                if ckpt.config_hash != manifest.config_hash {
                    return Err(Error::Checkpoint {
                        path,
                        message: "config hash does not match the manifest".into(),
                    });
                }
                ckpt.model
            }
            None => IncdeModel::new(config.dim),
        };
        (manifest, model)
    } else {
        (
            RunManifest::new(dataset_root, fingerprint, config),
            IncdeModel::new(config.dim),
        )
    };

    let log_path = run_dir.join(&manifest.log);
    let log_file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(resume)
        .truncate(!resume)
        .open(&log_path)
        .map_err(|e| Error::io(&log_path, e))?;
    let mut log = BufWriter::new(log_file);
    if !resume {
        manifest.save(run_dir)?;
    }

    let mut log_error: Option<Error> = None;
    let hash = manifest.config_hash.clone();
    let mut observer = |record: &crate::trainer::EpochRecord| {
        if log_error.is_some() {
            return;
        }
        let line = serde_json::to_string(record).expect("epoch record serializes");
        if let Err(e) = writeln!(log, "{line}") {
            log_error = Some(Error::io(&log_path, e));
        }
    };
    let manifest_ref = &mut manifest;
    let mut after_step = |model: &IncdeModel, outcome: &crate::pipeline::StepOutcome| -> Result<()> {
        let rel = PathBuf::from(checkpoint_name(model.time));
        save_checkpoint(
            &Checkpoint {
                model: model.clone(),
                config_hash: hash.clone(),
            },
            run_dir.join(&rel),
        )?;
        manifest_ref.steps.retain(|s| s.time != model.time);
        manifest_ref.steps.push(StepEntry {
            time: model.time,
            checkpoint: rel,
            wall_ms: outcome.wall_ms,
            layer_sizes: outcome.layer_sizes.clone(),
        });
        manifest_ref.save(run_dir)
    };
    let result = train_continual(&mut model, &dataset, config, &mut observer, &mut after_step);
    if let Some(e) = log_error {
        return Err(e);
    }
    log.flush().map_err(|e| Error::io(run_dir.join(&manifest.log), e))?;
    result?;
    Ok(manifest)
}

fn load_run_model(run_dir: &Path, manifest: &RunManifest, time: usize) -> Result<IncdeModel> {
    let step = manifest
        .step(time)
        .ok_or_else(|| Error::Eval(format!("run {} has no checkpoint for time {time}", run_dir.display())))?;
    Ok(load_checkpoint(run_dir.join(&step.checkpoint))?.model)
}

fn mode_name(mode: EvalMode) -> &'static str {
    match mode {
        EvalMode::Filtered => "filtered",
        EvalMode::Raw => "raw",
    }
}

pub fn eval_modes(choice: EvalChoice) -> Vec<EvalMode> {
    match choice {
        EvalChoice::Filtered => vec![EvalMode::Filtered],
        EvalChoice::Raw => vec![EvalMode::Raw],
        EvalChoice::Both => vec![EvalMode::Filtered, EvalMode::Raw],
    }
}

/// Evaluates the checkpoint of `time` (default: the last one) of a run,
/// writing `reports/eval_t{T}_{mode}.{json,csv}` and, with `matrix`, the
/// filtered MRR of every checkpoint on every test set it has seen.
pub fn eval_run(run_dir: &Path, time: Option<usize>, modes: &[EvalMode], matrix: bool) -> Result<Vec<EvalReport>> {
    let mut manifest = RunManifest::load(run_dir)?;
    let time = time.unwrap_or_else(|| manifest.last_time());
    if time == 0 {
        return Err(Error::Eval(format!("run {} has no checkpoints", run_dir.display())));
    }
    let dataset = open_dataset(&manifest.dataset)?;
    let model = load_run_model(run_dir, &manifest, time)?;
    let reports_dir = run_dir.join("reports");
    fs::create_dir_all(&reports_dir).map_err(|e| Error::io(&reports_dir, e))?;

    let mut reports = Vec::new();
    for &mode in modes {
        let aggregate = time_averaged_metrics(&model.table, manifest.config.norm, &dataset, time, mode)?;
        let report = EvalReport {
            dataset: manifest.dataset.display().to_string(),
            seed: manifest.seed,
            config_hash: manifest.config_hash.clone(),
            aggregate,
        };
        let stem = format!("reports/eval_t{time}_{}", mode_name(mode));
        for (ext, format) in [("json", ReportFormat::Json), ("csv", ReportFormat::Csv)] {
            let rel = PathBuf::from(format!("{stem}.{ext}"));
            emit_report(&report, run_dir.join(&rel), format)?;
            manifest.add_report(rel);
        }
        reports.push(report);
    }

    if matrix {
        let mut cells = Vec::new();
        for model_time in 1..=time {
            let m = load_run_model(run_dir, &manifest, model_time)?;
            let snapshot = dataset.snapshot(model_time).expect("checkpointed time exists");
            let candidates: Vec<EntityId> = snapshot.entities.iter().copied().collect();
            for test_time in 1..=model_time {
                let delta = dataset.delta(test_time).expect("earlier time exists");
                let metrics = evaluate_snapshot(
                    &m.table,
                    manifest.config.norm,
                    &delta.test,
                    &candidates,
                    Some(&snapshot.cumulative),
                )?;
                cells.push(MrrCell {
                    model_time,
                    test_time,
                    mrr: metrics.mrr,
                });
            }
        }
        let rel = PathBuf::from(format!("reports/{MRR_MATRIX_FILE}"));
        emit_mrr_matrix(&cells, run_dir.join(&rel))?;
        manifest.add_report(rel);
    }
    manifest.save(run_dir)?;
    Ok(reports)
}

/// Final filtered metrics of one variant and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub variant: String,
    pub seed: u64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single seed.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub seeds: usize,
    pub mrr: MeanStd,
    pub hits1: MeanStd,
    pub hits10: MeanStd,
    /// Mean MRR minus the full model's mean MRR.
    pub delta_mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub dataset: PathBuf,
    pub seeds: Vec<u64>,
    pub runs: Vec<AblationRun>,
    pub rows: Vec<AblationRow>,
}

impl AblationSummary {
    pub fn from_runs(dataset: PathBuf, seeds: Vec<u64>, runs: Vec<AblationRun>) -> Self {
        let mut names: Vec<String> = Vec::new();
        for r in &runs {
            if !names.contains(&r.variant) {
                names.push(r.variant.clone());
            }
        }
        let mut rows: Vec<AblationRow> = names
            .into_iter()
            .map(|variant| {
                let of = |f: fn(&MetricsReport) -> f64| {
                    let v: Vec<f64> = runs.iter().filter(|r| r.variant == variant).map(|r| f(&r.metrics)).collect();
                    MeanStd::of(&v)
                };
                AblationRow {
                    seeds: runs.iter().filter(|r| r.variant == variant).count(),
                    mrr: of(|m| m.mrr),
                    hits1: of(|m| m.hits1),
                    hits10: of(|m| m.hits10),
                    delta_mrr: 0.0,
                    variant,
                }
            })
            .collect();
        let full = rows.iter().find(|r| r.variant == "full").map(|r| r.mrr.mean);
        if let Some(full) = full {
            for row in &mut rows {
                row.delta_mrr = row.mrr.mean - full;
            }
        }
        AblationSummary {
            dataset,
            seeds,
            runs,
            rows,
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| variant | MRR | H@1 | H@10 | ΔMRR |\n|---|---|---|---|---|\n");
        for r in &self.rows {
            s += &format!(
                "| {} | {:.3} ± {:.3} | {:.3} ± {:.3} | {:.3} ± {:.3} | {:+.3} |\n",
                r.variant, r.mrr.mean, r.mrr.std, r.hits1.mean, r.hits1.std, r.hits10.mean, r.hits10.std, r.delta_mrr
            );
        }
        s
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        let path = out.join(ABLATION_JSON);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;

        let mut w = csv::Writer::from_path(out.join(ABLATION_CSV))?;
        w.write_record([
            "variant", "seeds", "mrr_mean", "mrr_std", "h1_mean", "h1_std", "h10_mean", "h10_std", "delta_mrr",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.variant.clone(),
                r.seeds.to_string(),
                format!("{:.6}", r.mrr.mean),
                format!("{:.6}", r.mrr.std),
                format!("{:.6}", r.hits1.mean),
                format!("{:.6}", r.hits1.std),
                format!("{:.6}", r.hits10.mean),
                format!("{:.6}", r.hits10.std),
                format!("{:.6}", r.delta_mrr),
            ])?;
        }
        w.flush().map_err(|e| Error::io(out, e))?;

        let mut w = csv::Writer::from_path(out.join(ABLATION_RUNS_CSV))?;
        w.write_record(["variant", "seed", "mrr", "h1", "h3", "h10"])?;
        for r in &self.runs {
            w.write_record([
                r.variant.clone(),
                r.seed.to_string(),
                format!("{:.6}", r.metrics.mrr),
                format!("{:.6}", r.metrics.hits1),
                format!("{:.6}", r.metrics.hits3),
                format!("{:.6}", r.metrics.hits10),
            ])?;
        }
        w.flush().map_err(|e| Error::io(out, e))
    }
}

/// Trains and evaluates every ablation variant for every seed under
/// `out/<variant>/seed-<s>/`, then writes the summary tables to `out`.
pub fn ablate(run: &RunConfig, out: &Path) -> Result<AblationSummary> {
    run.validate()?;
    let dataset = run.dataset()?.to_path_buf();
    let mut runs = Vec::new();
    for ablation in ABLATION_VARIANTS {
        let mut rc = run.clone();
        rc.set_ablation(ablation);
        for &seed in &run.seeds {
            let config = rc.train_config(seed)?;
            let run_dir = seed_dir(&out.join(ablation.name()), seed);
            train_run(&dataset, &config, &run_dir, false)?;
            let report = eval_run(&run_dir, None, &[EvalMode::Filtered], false)?;
            runs.push(AblationRun {
                variant: ablation.name().to_owned(),
                seed,
                metrics: report[0].aggregate.mean,
            });
        }
    }
    let summary = AblationSummary::from_runs(dataset, run.seeds.clone(), runs);
    summary.write(out)?;
    Ok(summary)
}

/// Markdown summary of an ablation directory, a run directory or a single
/// evaluation report file.
pub fn report(path: &Path) -> Result<String> {
    if path.is_file() {
        let r = load_report(path)?;
        return Ok(report_table(&[(path.display().to_string(), r)]));
    }
    let ablation = path.join(ABLATION_JSON);
    if ablation.is_file() {
        let text = fs::read_to_string(&ablation).map_err(|e| Error::io(&ablation, e))?;
        let summary: AblationSummary = serde_json::from_str(&text)?;
        return Ok(summary.to_markdown());
    }
    if path.join(MANIFEST_FILE).is_file() {
        let manifest = RunManifest::load(path)?;
        let mut out = format!(
            "run `{}` seed {} variant {} config {}\n\n| time | layers | wall ms |\n|---|---|---|\n",
            path.display(),
            manifest.seed,
            manifest.variant,
            &manifest.config_hash[..12]
        );
        for s in &manifest.steps {
            out += &format!("| {} | {:?} | {:.0} |\n", s.time, s.layer_sizes, s.wall_ms);
        }
        let reports: Vec<(String, EvalReport)> = manifest
            .reports
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .map(|p| Ok((p.display().to_string(), load_report(path.join(p))?)))
            .collect::<Result<_>>()?;
        if !reports.is_empty() {
            out += "\n";
            out += &report_table(&reports);
        }
        return Ok(out);
    }
    Err(Error::Config(format!(
        "{} is neither a report file, a run directory nor an ablation directory",
        path.display()
    )))
}

fn report_table(reports: &[(String, EvalReport)]) -> String {
    let mut s = String::from("| report | time | mode | MRR | H@1 | H@3 | H@10 |\n|---|---|---|---|---|---|---|\n");
    for (name, r) in reports {
        let m = r.aggregate.mean;
        s += &format!(
            "| {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
            name,
            r.aggregate.model_time,
            mode_name(r.aggregate.mode),
            m.mrr,
            m.hits1,
            m.hits3,
            m.hits10
        );
    }
    s
}

/// Writes `value` as pretty JSON to `path`, or to stdout when `path` is `None`.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let mut f = File::create(p).map_err(|e| Error::io(p, e))?;
            f.write_all(text.as_bytes()).map_err(|e| Error::io(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
