//! Semantic level-of-detail on graphs and hyperbolic embeddings.
//!
//! Core algorithms are generic over the scalar type (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

// negated comparisons are how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod boundary;
pub mod error;
pub mod frechet;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::PoincarePoint<f64>;
pub type Tangent = geometry::TangentVector<f64>;
pub type Weights = frechet::WeightVector<f64>;
pub type Graph = graph::SparseGraph<f64>;
pub type Laplacian = graph::CsrMatrix<f64>;
pub type TreeF64 = graph::Tree<f64>;
pub type Spectrum = spectral::SpectralDecomposition<f64>;
