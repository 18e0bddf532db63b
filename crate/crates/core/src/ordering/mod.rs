//! Hierarchical ordering of the new triples of a time step.
//!
//! Breadth-first layering from the old graph decides the coarse order; inside a
//! layer, triples are sorted by an importance score built from node centrality
//! and relation betweenness, then split into chunks of bounded size.

mod centrality;
mod layering;

pub use self::centrality::{
    entity_betweenness, node_centrality, relation_betweenness, triple_importance,
    BetweennessConfig, BetweennessScale, CentralityScores, EmergingGraph,
};
pub use self::layering::{
    build_layer_plan, inter_hierarchical_layering, Layer, LayerExport, LayerPlan, PlanExport,
    RawLayer,
};
