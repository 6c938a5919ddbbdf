//! Consensus community detection for multi-layer networks.
//!
//! A multi-layer network is a stack of undirected graphs over one node set.
//! This crate estimates the single partition shared by all layers with five
//! methods:
//!
//! * orthogonal linked matrix factorization ([`methods::olmf_fit`]),
//! * co-regularized spectral clustering ([`methods::coreg_fit`]),
//! * spectral clustering of the mean adjacency matrix ([`methods::mean_adjacency_sc`]),
//! * spectral clustering of the aggregate spectral kernel ([`methods::spectral_kernel_sc`]),
//! * spectral clustering of the module allegiance matrix ([`methods::module_allegiance_sc`]).
//!
//! It also ships a multi-layer stochastic block model generator ([`mlsbm`]),
//! partition metrics ([`metrics`]), computable concentration and
//! misclustering bounds ([`theory`]) and a reproducible simulation harness
//! ([`harness`]) behind the `multiplex` binary.

pub mod error;
pub mod graph;
pub mod harness;
pub mod methods;
pub mod metrics;
pub mod mlsbm;
pub(crate) mod seed;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{AdjacencyTensor, DegreeTable, MultiLayerGraph, SymMatrix};
pub use methods::Method;
pub use mlsbm::{BlockModel, FourParamSpec, PopulationTensor, Scenario};
pub use spectral::{Embedding, Mode, Partition};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
