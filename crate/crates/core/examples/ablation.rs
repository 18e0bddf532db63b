//! Trains the full model and its four ablations on a synthetic dataset for a
//! few seeds and prints the summary table. Runs and reports land in OUT_DIR.
//!
//! cargo run --release --example ablation -- [OUT_DIR]

use incde::cli::{ablate, prepare, BaseSource, RunConfig};
use incde::datagen::{GrowthPattern, GrowthSchedule, SyntheticKgConfig};

fn main() -> incde::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("incde-ablation"));
    let data = out.join("data");
    let kg = SyntheticKgConfig {
        num_entities: 80,
        num_relations: 30,
        num_triples: 2000,
        seed: 1,
        ..SyntheticKgConfig::default()
    };
    prepare(&BaseSource::Synthetic(kg), &GrowthSchedule::new(GrowthPattern::Equal, 5), 1, &data)?;

    let run = RunConfig {
        dataset: Some(data),
        out: Some(out.join("runs")),
        seeds: vec![0, 1],
        dim: 32,
        margin: 4.0,
        learning_rate: 0.03,
        gate_learning_rate: Some(0.003),
        batch_size: 128,
        epochs: 100,
        early_stop_every: 0,
        ..RunConfig::default()
    };
    let summary = ablate(&run, run.out()?)?;
    print!("{}", summary.to_markdown());
    println!("reports in {}", run.out()?.display());
    Ok(())
}
