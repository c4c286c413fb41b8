//! Building an operator knowledge base from geospatial JavaScript corpora.
//!
//! The pipeline loads scripts, strips comments, parses them into a
//! normalized syntax tree, extracts pairwise operator relationships and
//! per-script relationship chains, mines frequent operator itemsets, and
//! serves the resulting tables through a vector retrieval layer that
//! assembles augmented prompts.

pub mod ast;
pub mod chains;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod miner;
pub mod pipeline;
pub mod relations;
pub mod retrieval;
pub mod syntax_kb;

pub use error::{Error, Result};
