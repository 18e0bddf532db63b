//! Loads a growing dataset (one directory per time with train/valid/test
//! files) and prints its snapshot statistics and deltas.
//!
//! cargo run --example load_dataset -- DATASET_DIR
//!
//! Without an argument a small synthetic dataset is written to a temporary
//! directory first.

use incde::cli::{prepare, BaseSource};
use incde::datagen::{GrowthPattern, GrowthSchedule, SyntheticKgConfig};
use incde::kg::{load_dataset, validate_dataset};

fn main() -> incde::Result<()> {
    let root = match std::env::args().nth(1) {
        Some(dir) => dir.into(),
        None => {
            let dir = std::env::temp_dir().join("incde-load-example");
            let kg = SyntheticKgConfig {
                num_entities: 120,
                num_relations: 6,
                num_triples: 600,
                ..SyntheticKgConfig::default()
            };
            prepare(&BaseSource::Synthetic(kg), &GrowthSchedule::new(GrowthPattern::Equal, 4), 0, &dir)?;
            dir
        }
    };

    let dataset = load_dataset(&root)?;
    println!(
        "{}: {} times, {} entities, {} relations in the vocabulary",
        root.display(),
        dataset.num_times(),
        dataset.vocab.entities.len(),
        dataset.vocab.relations.len()
    );
    for (s, d) in dataset.stats().iter().zip(&dataset.deltas) {
        println!(
            "time {}: {:>5} entities {:>4} relations {:>6} triples | new: {} entities, {} relations, {} triples",
            s.time,
            s.num_entities,
            s.num_relations,
            s.num_triples,
            d.new_entities.len(),
            d.new_relations.len(),
            d.num_new_triples()
        );
    }

    let report = validate_dataset(&dataset);
    println!("validation: {report}");
    Ok(())
}
