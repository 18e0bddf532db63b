//! Link prediction evaluation: a single ranked query, then filtered and raw
//! metrics per test snapshot and the model-time by test-time MRR matrix.
//!
//! cargo run --release --example evaluate

use incde::datagen::{build_growth_dataset, generate_base_kg, GrowthPattern, GrowthSchedule, SyntheticKgConfig};
use incde::eval::{evaluate_snapshot, rank_triple, time_averaged_metrics, EvalMode, RankQuery};
use incde::pipeline::train_continual;
use incde::trainer::{IncdeModel, TrainConfig};

fn main() -> incde::Result<()> {
    let base = generate_base_kg(&SyntheticKgConfig {
        num_entities: 80,
        num_relations: 30,
        num_triples: 1000,
        seed: 3,
        ..SyntheticKgConfig::default()
    })?;
    let dataset = build_growth_dataset(&base, &GrowthSchedule::new(GrowthPattern::Equal, 3), 3)?;
    let config = TrainConfig {
        dim: 32,
        margin: 4.0,
        learning_rate: 0.03,
        batch_size: 128,
        epochs: 60,
        early_stop: None,
        ..TrainConfig::default()
    };

    // Keep a copy of the model after every step for the matrix.
    let mut models = Vec::new();
    let mut model = IncdeModel::new(config.dim);
    train_continual(&mut model, &dataset, &config, &mut |_| {}, &mut |m, _| {
        models.push(m.clone());
        Ok(())
    })?;

    let last = dataset.snapshot(model.time).expect("trained time exists");
    let candidates: Vec<_> = last.entities.iter().copied().collect();
    let triple = dataset.delta(1).expect("time 1").test[0];
    let query = RankQuery::tail(triple);
    let raw = rank_triple(&model.table, config.norm, &query, &candidates, None)?;
    let filtered = rank_triple(&model.table, config.norm, &query, &candidates, Some(&last.cumulative))?;
    println!("tail query {triple}: raw rank {raw}, filtered rank {filtered}");

    for mode in [EvalMode::Filtered, EvalMode::Raw] {
        let report = time_averaged_metrics(&model.table, config.norm, &dataset, model.time, mode)?;
        for s in &report.per_snapshot {
            println!(
                "{mode:?} test {}: MRR {:.4} H@1 {:.4} H@3 {:.4} H@10 {:.4}",
                s.time, s.metrics.mrr, s.metrics.hits1, s.metrics.hits3, s.metrics.hits10
            );
        }
        println!("{mode:?} mean MRR {:.4}", report.mean.mrr);
    }

    println!("MRR matrix (rows: model time, columns: test time)");
    for m in &models {
        let snapshot = dataset.snapshot(m.time).expect("trained time exists");
        let candidates: Vec<_> = snapshot.entities.iter().copied().collect();
        let row: Vec<String> = (1..=m.time)
            .map(|t| {
                let test = &dataset.delta(t).expect("earlier time").test;
                evaluate_snapshot(&m.table, config.norm, test, &candidates, Some(&snapshot.cumulative))
                    .map(|r| format!("{:.3}", r.mrr))
            })
            .collect::<incde::Result<_>>()?;
        println!("  {}: {}", m.time, row.join(" "));
    }
    Ok(())
}
