//! Anytime node embeddings from streamed personalized-PageRank similarity rows.
//!
//! The pipeline is `graph` → `similarity` → `sketch` → `eval`:
//!
//! * [`graph::Graph`] is a compressed adjacency structure loaded from an edge list.
//! * [`similarity`] produces, one node at a time, rows of the truncated
//!   `log(n · PPR)` matrix using exact power iteration or Monte-Carlo walks.
//! * [`sketch`] streams those rows through Frequent Directions (or the hashing,
//!   random-projection and sampling baselines) and extracts an embedding after
//!   any prefix of processed nodes.
//! * [`linalg`] holds the dense kernels (thin SVD, symmetric eigensolver) and the
//!   covariance / projection error metrics.
//! * [`eval`] is the downstream harness: multi-label node classification and
//!   link prediction.
//!
//! Data-parallel loops go through [`exec::Execution`]; with the `parallel`
//! feature disabled everything runs sequentially.

pub mod error;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod linalg;
pub mod similarity;
pub mod sketch;

pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{Graph, IdMap};
pub use similarity::{PprConfig, PprMethod, SimilarityRow};
pub use sketch::{Embedding, SketcherKind};
