//! Growing knowledge graphs, embedded one snapshot at a time with TransE.
//!
//! The crate is organised bottom-up: [`kg`] holds growing snapshot data,
//! [`ordering`] scores and layers new triples, [`trainer`] fits TransE
//! embeddings step by step, and [`eval`] runs filtered link prediction.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod kg;
pub mod ordering;
pub mod pipeline;
pub mod trainer;

pub use error::{Error, Result};
