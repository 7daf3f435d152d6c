//! Sparse Boltzmann Machines for bag-of-words text.
//!
//! Replicated Softmax and tree-coupled sparse variants, contrastive
//! divergence training, structure learning by conditional mutual
//! information, magnitude pruning, and annealed-importance-sampling
//! evaluation. All numerics are generic over `f32`/`f64` via [`Scalar`].

pub mod corpus;
pub mod error;
pub mod eval;
pub mod mask;
pub mod model;
pub mod pruning;
pub mod replicated_softmax;
pub mod rng;
pub mod sbm;
pub mod scalar;
pub mod structure;
pub mod synthetic;
mod textfmt;
pub mod train;
pub mod tree;

pub use corpus::{Corpus, CorpusSplit, Document};
pub use error::{Error, Result};
pub use model::BoltzmannModel;
pub use replicated_softmax::RsModel;
pub use sbm::{SbmModel, SbmStructure};
pub use scalar::Scalar;
pub use structure::Skeleton;
pub use train::TrainConfig;

pub type RsModel64 = RsModel<f64>;
pub type RsModel32 = RsModel<f32>;
pub type SbmModel64 = SbmModel<f64>;
pub type SbmModel32 = SbmModel<f32>;
