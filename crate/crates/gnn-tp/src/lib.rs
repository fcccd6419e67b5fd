//! Multi-worker full-graph GNN training with feature-dimension tensor parallelism.
//!
//! This crate implements two ways of parallelising full-graph GNN training
//! across an in-process worker group, plus the scaffolding needed to compare
//! them exactly:
//!
//! * **Tensor parallelism** — the feature dimension is partitioned across
//!   workers. Every worker aggregates its column slice over the *whole* graph
//!   (aggregation is column-separable, so this is exact), and `gather`/`split`
//!   collectives convert between dimension-partitioned slices and
//!   vertex-partitioned full-width embeddings whenever an NN stage needs full
//!   feature vectors.
//! * **Data parallelism** — vertices are partitioned across workers and each
//!   worker fetches remote in-neighbor embeddings before aggregating, the
//!   classic baseline with cross-worker vertex dependencies.
//!
//! On top of the tensor-parallel substrate the crate provides *decoupled*
//! training (`decoupled`): all k NN layers run first as an MLP over vertices,
//! then L rounds of scaled normalized-adjacency propagation run on slices.
//! Because the propagation block touches full embeddings only at its two
//! boundaries, a whole epoch needs exactly four gather/split rounds no matter
//! how deep the propagation is, while the layer-interleaved ("naive")
//! tensor-parallel schedule needs 4L-2.
//!
//! Module map:
//!
//! * [`graph`] — CSR/CSC graph storage, degree/normalization coefficients,
//!   contiguous chunk partitioning, edge-list ingestion.
//! * [`dense`] — row-major f64 matrices, feature slices, activations,
//!   softmax/cross-entropy, deterministic matmul kernels.
//! * [`layers`] — sparse aggregation (forward + transpose) and GCN/GAT
//!   building blocks shared by every engine.
//! * [`decoupled`] — the decoupled model: MLP, propagation, attention
//!   precompute, and the single-worker forward/backward oracle.
//! * [`collective`] — the in-process worker group: gather, split, all-share,
//!   all-reduce, barriers, and an exact per-worker communication ledger.
//! * [`scheduler`] — chunk-based propagation with communication dedup and
//!   optional compute/communication pipelining.
//! * [`engine`] — four interchangeable training engines (single-worker
//!   oracle, data-parallel, naive TP, decoupled TP).
//! * [`bench`] — experiment configs, analytic cost predictions, and report
//!   emission (CSV metrics, JSON ledger, JSONL schedule trace).
//!
//! All numerics are f64 and every reduction order is fixed, so engine runs
//! are bitwise reproducible for a given seed and worker count.

pub mod bench;
pub mod collective;
pub mod decoupled;
pub mod dense;
pub mod engine;
mod error;
pub mod graph;
pub mod layers;
pub mod partition;
pub mod scheduler;
pub mod synth;

pub use error::{Error, Result};
