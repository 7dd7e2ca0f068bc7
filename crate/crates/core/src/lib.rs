//! Does a graph dataset actually need joint feature+edge reasoning?
//!
//! This crate trains feature-only, edge-only, and composed GNN models many
//! times, derives per-prediction solvable sets via exact binomial hypothesis
//! tests, and computes the FandE / ForE / GaP / Jaccard measures from the
//! resulting sets.
//!
//! - [`graph`]: graph and task representations (CSR adjacency, splits).
//! - [`models`]: numeric kernels and the three model families.
//! - [`training`]: Adam, early stopping, the multi-seed run harness.
//! - [`stats`]: binomial tests turning run matrices into solvable sets.
//! - [`measures`]: set algebra producing the report measures.
//! - [`synth`]: seeded synthetic tasks with known solvability structure.
//! - [`io`]: the dataset / run-matrix / solvable-set / report file formats.

pub mod dense;
pub mod graph;
pub mod io;
pub mod measures;
pub mod models;
pub mod stats;
pub mod synth;
pub mod training;
