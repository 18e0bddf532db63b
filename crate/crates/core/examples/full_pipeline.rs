//! End to end through the command-line layer: prepare a dataset, train with
//! checkpoints, evaluate, resume from a checkpoint and print the report.
//!
//! cargo run --release --example full_pipeline -- [WORK_DIR]

use incde::cli::{
    eval_run, prepare, report, seed_dir, train_run, BaseSource, RunConfig, RunManifest,
};
use incde::datagen::{GrowthPattern, GrowthSchedule, SyntheticKgConfig};
use incde::eval::EvalMode;
use incde::trainer::load_checkpoint;

fn main() -> incde::Result<()> {
    let work = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("incde-pipeline"));
    let data = work.join("data");
    let kg = SyntheticKgConfig {
        num_entities: 100,
        num_relations: 12,
        num_triples: 1200,
        seed: 5,
        ..SyntheticKgConfig::default()
    };
    prepare(&BaseSource::Synthetic(kg), &GrowthSchedule::new(GrowthPattern::Lower, 4), 5, &data)?;

    // Same knobs as a TOML file passed with `incde train --config`.
    let run: RunConfig = toml::from_str(
        r#"
        seeds = [3]
        dim = 24
        margin = 4.0
        learning_rate = 0.02
        batch_size = 128
        epochs = 40
        early_stop_every = 0
        "#,
    )
    .expect("valid config");
    let config = run.train_config(3)?;
    let run_dir = seed_dir(&work.join("runs"), 3);

    let manifest = train_run(&data, &config, &run_dir, false)?;
    println!("trained through time {} (config {})", manifest.last_time(), manifest.config_hash);

    // Pretend the run stopped after time 2 and pick it up again.
    let mut cut = manifest.clone();
    cut.steps.retain(|s| s.time <= 2);
    cut.save(&run_dir)?;
    let resumed = train_run(&data, &config, &run_dir, true)?;
    let ckpt = load_checkpoint(run_dir.join(&resumed.step(resumed.last_time()).expect("last step").checkpoint))?;
    println!("resumed to time {}, {} entity rows", ckpt.model.time, ckpt.model.table.entities.rows());

    eval_run(&run_dir, None, &[EvalMode::Filtered, EvalMode::Raw], true)?;
    println!("reports: {:?}", RunManifest::load(&run_dir)?.reports);
    print!("{}", report(&run_dir)?);
    Ok(())
}
