//! Subgraph-pair relationship classification on sparse graphs.
//!
//! Given a large sparse graph, per-node subgraph (label) memberships, and
//! labeled subgraph pairs, this crate builds node embeddings, computes
//! subgraph positional encodings, trains an encoder-decoder transformer
//! with a column-norm scoring head to classify pair relationships, and
//! evaluates with stratified k-fold cross-validation.
//!
//! The library is the primary interface; each major capability has a
//! runnable example:
//!
//! ```text
//! cargo run --release -p tspe --example synth_dataset
//! cargo run --release -p tspe --example node_embeddings
//! cargo run --release -p tspe --example laplacian_pe
//! cargo run --release -p tspe --example subgraph_pe
//! cargo run --release -p tspe --example train_overfit
//! cargo run --release -p tspe --example cross_validate_ablation
//! cargo run --release -p tspe --example checkpoint_roundtrip
//! ```
//!
//! A thin `tspe` binary wraps the same pipelines behind the subcommands
//! `synth`, `embed`, `pe`, `train`, `eval`, and `cv`; see the README.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod encoding;
pub mod error;
pub mod graph;
pub mod model;
pub mod node2vec;
pub mod numerics;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
