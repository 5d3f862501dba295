//! Embedding spanning trees of large maximum degree into randomly perturbed dense graphs.
//!
//! The crate builds the host `G u R`, partitions `G` into super-regular pairs,
//! decomposes the tree into forests, distributes tree vertices over clusters
//! and embeds the forests round by round into the random layers.

pub mod assignment;
pub mod decomposition;
pub mod embedder;
pub mod error;
pub mod graph;
pub mod host;
pub mod matching;
pub mod oracle;
pub mod params;
pub mod primitives;
pub mod regularity;
pub mod report;
pub mod rng;
pub mod tree;
pub mod vector_partition;

pub use error::{Error, Result};
