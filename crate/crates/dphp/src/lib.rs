//! Differentially private synthetic data generation with Hermite-polynomial
//! mean embeddings.
//!
//! The pipeline: encode a labeled dataset, summarize it as labeled kernel
//! mean embeddings under a combined sum/product Hermite feature map (or a
//! random-Fourier baseline), privatize those embeddings once with the
//! Gaussian mechanism, and train a small feedforward generator against the
//! noisy embeddings by minimizing a weighted feature-space MMD. Because the
//! data only enters through the privatized embeddings, the generator and all
//! of its samples inherit the (ε, δ) guarantee.

pub mod autodiff;
pub mod config;
pub mod dataeval;
pub mod embedding;
pub mod error;
pub mod featuremaps;
pub mod generator;
pub mod hermite;
pub mod privacy;
pub mod rng;

pub use error::{Error, Result};
