//! Held-out evaluation: partition functions, perplexity and interpretability.

pub mod ais;
pub mod exact;
pub mod interpret;
pub mod perplexity;

pub use ais::{ais_log_z, AisEstimate, AisSchedule, Segment};
pub use exact::{enumeration_cost, exact_log_z_hidden, exact_gradient, exact_log_prob, exact_log_z, exact_model_expectations};
pub use interpret::{interpretability_model, interpretability_unit, load_embeddings, EmbeddingTable, UnitScore, UnitWeights};
pub use perplexity::{perplexity, DocScore, PartitionMethod, PerplexityOptions, PerplexityReport};
