//! Good random partitions of dense k-uniform hypergraphs, stitching of Hamilton
//! ℓ-cycles, powers of tight cycles and F-factors across partition blocks, and
//! exact counting oracles for checking counting lower bounds on small instances.

pub mod absorb;
mod bitset;
pub mod bounds;
mod budget;
pub mod combinat;
mod error;
pub mod factors;
pub mod hypergraph;
pub mod partition;
pub mod paths;
pub mod stitch;

pub use bitset::VertexSet;
pub use budget::Budget;
pub use error::{Error, Result};
pub use hypergraph::{dirac_threshold, gen_random, parse_rational, GoodnessSpec, Hypergraph, Induced};

/// Vertices are dense indices `0..n`.
pub type Vertex = u32;
