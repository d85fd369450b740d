//! Supervised linear dimensionality reduction with Linear Optimal Low-rank
//! (LOL) projections and the related family of embeddings, Gaussian
//! classifiers, Chernoff-information tools, synthetic benchmarks and a
//! cross-validation harness.

pub mod chernoff;
pub mod classify;
pub mod embed;
pub mod error;
pub mod extensions;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod par;
pub mod rng;
pub mod scaling;
pub mod sim;

pub use error::{Error, Result};
pub use model::{DataMatrix, LabeledDataset, Method, Projection};
pub use rng::RngSeed;
