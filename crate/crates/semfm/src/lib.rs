//! Spectral shape correspondence with semantic anchors.
//!
//! Given two triangle meshes carrying per-point semantic embeddings and a
//! demonstrated interaction region on the source mesh, this crate computes a
//! dense vertex-level correspondence anchored at semantically matching
//! surface regions and transfers the region to the target mesh.
//!
//! The pipeline: cluster each shape's sparse semantic point cloud, pick
//! mutually exclusive high-similarity cluster pairs as anchors, diffuse their
//! indicator functions into smooth descriptors, estimate a functional map in
//! the truncated Laplace-Beltrami eigenbasis, refine it by alternating
//! pointwise/spectral conversion at growing basis size, and read off the
//! vertex map by nearest-neighbor search in the spectral embedding.

pub mod descriptors;
pub mod error;
pub mod fmap;
pub mod mesh;
pub mod pipeline;
pub mod rng;
pub mod semantics;
pub mod spectral;
pub mod synthbench;
pub mod transfer;

pub use error::{Error, Result};
pub use mesh::TriangleMesh;
pub use spectral::SpectralBasis;
