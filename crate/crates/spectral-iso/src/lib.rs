//! Spectral partition machinery for graph automorphism and isomorphism
//! detection.
//!
//! The pipeline decomposes the adjacency matrix of a simple graph into
//! eigenspaces, partitions vertices by the geometry of their projected
//! basis vectors (regions, types, angles, balance conditions), aggregates
//! the per-vertex partitions into a global uniform partition, hunts for
//! permutation-group blocks, and finally decides isomorphism with an
//! individualization-refinement search seeded by all of the above.
//! Every structure can be cross-checked against a brute-force
//! permutation-group oracle at small orders.

pub mod balanced;
pub mod config;
pub mod corpus;
pub mod error;
pub mod global;
pub mod graph;
pub mod iso;
pub mod linalg;
pub mod oracle;
pub mod partition;
pub mod quantize;
pub mod region;
pub mod spectral;
pub mod subspace;
pub mod verify;

pub use config::Config;
pub use error::Error;
pub use graph::Graph;
pub use partition::Partition;
pub use spectral::SpectralDecomposition;
pub use subspace::Subspace;
