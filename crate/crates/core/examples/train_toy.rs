//! Continual training on a small synthetic dataset, printing each layer's final epoch.
//!
//! cargo run --release --example train_toy

use incde::datagen::{build_growth_dataset, generate_base_kg, GrowthPattern, GrowthSchedule, SyntheticKgConfig};
use incde::eval::{time_averaged_metrics, EvalMode};
use incde::pipeline::train_continual;
use incde::trainer::{IncdeModel, TrainConfig};

fn main() -> incde::Result<()> {
    let base = generate_base_kg(&SyntheticKgConfig {
        num_entities: 80,
        num_relations: 30,
        num_triples: 1000,
        seed: 1,
        ..SyntheticKgConfig::default()
    })?;
    let dataset = build_growth_dataset(&base, &GrowthSchedule::new(GrowthPattern::Equal, 3), 1)?;
    let config = TrainConfig {
        dim: 32,
        margin: 4.0,
        learning_rate: 0.03,
        gate_learning_rate: Some(0.003),
        batch_size: 128,
        epochs: 100,
        early_stop: None,
        ..TrainConfig::default()
    };

    let mut model = IncdeModel::new(config.dim);
    let mut epochs = 0;
    let outcomes = train_continual(&mut model, &dataset, &config, &mut |_| epochs += 1, &mut |_, _| Ok(()))?;
    for o in &outcomes {
        println!("time {} trained in {:.0} ms, layers {:?}", o.report.time, o.wall_ms, o.layer_sizes);
        // Epoch indices are zero-based; the last record of each layer is its final epoch.
        for (i, r) in o.report.records.iter().enumerate() {
            if o.report.records.get(i + 1).is_none_or(|next| next.layer != r.layer) {
                println!(
                    "  layer {}: {} epochs, stage {}, l_ckge {:.4}, l_distill {:.5}, mean gate {:.3}",
                    r.layer,
                    r.epoch + 1,
                    r.stage,
                    r.l_ckge,
                    r.l_distill,
                    r.w_mean
                );
            }
        }
    }
    println!("{epochs} epoch records");

    let report = time_averaged_metrics(&model.table, config.norm, &dataset, model.time, EvalMode::Filtered)?;
    println!("time-averaged filtered MRR {:.4}, H@10 {:.4}", report.mean.mrr, report.mean.hits10);
    Ok(())
}
