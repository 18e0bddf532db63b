//! Builds growing datasets from a synthetic base graph under each growth
//! pattern and writes one of them to disk.
//!
//! cargo run --example generate_dataset -- [OUT_DIR]

use incde::datagen::{generate_base_kg, prepare_dataset, GrowthPattern, GrowthSchedule, SyntheticKgConfig};

fn main() -> incde::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("incde-generated"));

    let base = generate_base_kg(&SyntheticKgConfig {
        num_entities: 200,
        num_relations: 10,
        num_triples: 1600,
        seed: 7,
        ..SyntheticKgConfig::default()
    })?;
    println!("base graph: {} triples", base.triples.len());

    for pattern in [GrowthPattern::Equal, GrowthPattern::Higher, GrowthPattern::Lower] {
        let sizes = GrowthSchedule::new(pattern, 5).sizes(base.triples.len())?;
        println!("{pattern:?}: {sizes:?}");
    }

    let dataset = prepare_dataset(&base, &GrowthSchedule::new(GrowthPattern::Higher, 5), 7, &out)?;
    for s in dataset.stats() {
        println!(
            "time {}: {} entities, {} relations, {} triples",
            s.time, s.num_entities, s.num_relations, s.num_triples
        );
    }
    println!("written to {}", out.display());
    Ok(())
}
