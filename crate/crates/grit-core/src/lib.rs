//! Desk-scale toolkit for the GRIT graph transformer's mathematical core.
//!
//! The pieces fit together bottom-up:
//!
//! - [`graph`]: CSR graphs, edge-list parsing, named graphs, seeded generators
//! - [`encodings`]: random-walk probability stacks (RRWP), node-level walk
//!   encodings (RWSE), all-pairs shortest path distances, k-hop targets
//! - [`gdwl`]: generalized-distance Weisfeiler-Leman color refinement with
//!   pluggable distances and collision-free canonical signatures
//! - [`tensor`]: a small reverse-mode tape (float64) with gradient checking
//!   and Adam, enough to train attention blocks
//! - [`grit`]: the GRIT attention block — node/node-pair attention with
//!   signed-square-root gating, degree scaling, normalization, FFN
//! - [`propcheck`]: executable forms of the expressivity constructions
//!   (shortest paths, propagation families, and the LayerNorm degree result)
//! - [`synth`]: the k-hop attention learning experiment with baselines
//!
//! [`presets`] carries the published full-scale benchmark configurations as
//! reference data; nothing here trains at that scale.

pub mod encodings;
pub mod gdwl;
pub mod generate;
pub mod graph;
pub mod grit;
pub mod mat;
pub mod named;
pub mod presets;
pub mod propcheck;
pub mod rng;
pub mod synth;
pub mod tensor;

pub use graph::{DegreeVector, Graph, GraphError};
pub use named::NamedGraph;
