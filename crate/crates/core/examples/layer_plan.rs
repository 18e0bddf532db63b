//! Hierarchical ordering of one time step: breadth-first layers from the old
//! graph, sorted by triple importance and cut into chunks of at most M triples.
//!
//! cargo run --example layer_plan -- [MAX_LAYER_SIZE]

use incde::datagen::{build_growth_dataset, generate_base_kg, GrowthPattern, GrowthSchedule, SyntheticKgConfig};
use incde::trainer::{plan_time_step, TrainConfig};

fn main() -> incde::Result<()> {
    let max_layer_size = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let base = generate_base_kg(&SyntheticKgConfig {
        num_entities: 300,
        num_relations: 8,
        num_triples: 800,
        ..SyntheticKgConfig::default()
    })?;
    let dataset = build_growth_dataset(&base, &GrowthSchedule::new(GrowthPattern::Equal, 4), 0)?;
    let config = TrainConfig {
        max_layer_size,
        ..TrainConfig::default()
    };

    let time = 2;
    let (_, plan) = plan_time_step(&dataset, time, &config)?;
    println!(
        "time {time}: {} new training triples, {} old entities, M = {max_layer_size}",
        plan.num_triples(),
        dataset.old_entities(time).len()
    );
    for (i, layer) in plan.layers.iter().enumerate() {
        let top = layer.importance.first().copied().unwrap_or(0.0);
        println!(
            "layer {:>2} (bfs {}{}): {:>3} triples, top importance {top:.4}",
            i + 1,
            layer.source_layer,
            if layer.remainder { ", remainder" } else { "" },
            layer.len()
        );
    }

    let export = serde_json::to_string(&plan.to_export()).expect("plan serializes");
    println!("json export: {} bytes", export.len());
    Ok(())
}
