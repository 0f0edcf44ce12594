//! Zero-shot video classification harness over precomputed clip features.
//!
//! The pipeline: embed class names with pretrained word vectors, curate the
//! training classes against the test vocabularies, train a linear semantic
//! encoder by word-vector regression, and classify test videos by
//! nearest-neighbor search in the semantic space. Ken Burns clip synthesis
//! and the dataset-ablation drivers round out the experiment surface.
//!
//! Core math is generic over the scalar type (`math::Scalar`); `f32` is the
//! on-disk pipeline type and `f64` is available for high-precision checks.

pub mod config;
pub mod curation;
pub mod encoder;
pub mod error;
pub mod evaluate;
pub mod experiments;
pub mod features;
pub mod kenburns;
pub mod math;
pub mod rng;
pub mod wordvec;

pub use encoder::LinearEncoder;
pub use error::{Result, ZslError};

/// Pipeline-precision aliases (match the binary file formats).
pub type WordVectorTable32 = wordvec::WordVectorTable<f32>;
pub type SemanticEmbedding32 = wordvec::SemanticEmbedding<f32>;
pub type ClassSet32 = curation::ClassSet<f32>;
pub type FeatureStore32 = features::FeatureStore<f32>;
pub type LabeledDataset32 = features::LabeledDataset<f32>;
pub type LinearEncoder32 = encoder::LinearEncoder<f32>;

/// High-precision aliases for analysis and verification.
pub type WordVectorTable64 = wordvec::WordVectorTable<f64>;
pub type SemanticEmbedding64 = wordvec::SemanticEmbedding<f64>;
pub type ClassSet64 = curation::ClassSet<f64>;
pub type LabeledDataset64 = features::LabeledDataset<f64>;
pub type LinearEncoder64 = encoder::LinearEncoder<f64>;
