//! Node centrality, betweenness and triple importance on a small emerging graph.
//!
//! cargo run --example centrality

use incde::kg::Triple;
use incde::ordering::{triple_importance, BetweennessConfig, BetweennessScale, CentralityScores};

fn main() -> incde::Result<()> {
    // Two triangles joined by a bridge (2 -r3-> 3), plus a parallel edge.
    let triples = vec![
        Triple::new(0, 0, 1),
        Triple::new(1, 1, 2),
        Triple::new(2, 0, 0),
        Triple::new(2, 3, 3),
        Triple::new(3, 2, 4),
        Triple::new(4, 1, 5),
        Triple::new(5, 2, 3),
        Triple::new(4, 2, 3),
    ];

    let raw = CentralityScores::compute(&triples);
    let normalized = CentralityScores::compute_with(
        &triples,
        &BetweennessConfig {
            scale: BetweennessScale::Normalized,
            ..BetweennessConfig::default()
        },
    );

    println!("entity  f_nc   betweenness  normalized");
    for (e, nc) in &raw.node_centrality {
        println!(
            "{e:>6}  {nc:.3}  {:>11.3}  {:>10.4}",
            raw.entity_betweenness[e], normalized.entity_betweenness[e]
        );
    }
    println!("relation  betweenness  normalized");
    for (r, bc) in &raw.relation_betweenness {
        println!("{r:>8}  {bc:>11.3}  {:>10.4}", normalized.relation_betweenness[r]);
    }

    println!("triple importance (normalized scores):");
    for t in &triples {
        println!("  {t}: {:.4}", triple_importance(t, &normalized)?);
    }
    Ok(())
}
