//! Interpretable speech-transcript screening toolkit.
//!
//! The pipeline runs transcript ingestion ([`corpus`]), dictionary and
//! lexical-diversity feature extraction ([`lexicon`], [`features`]), random
//! forest classification and regression ([`models`]), exact TreeSHAP
//! attributions ([`explain`]), evaluation with bootstrap intervals
//! ([`eval`]) and Green/Amber/Red risk stratification ([`risk`]).

pub mod corpus;
pub mod eval;
pub mod explain;
pub mod features;
pub mod lexicon;
pub mod models;
pub mod risk;
pub mod rng;

pub use corpus::{Dataset, SeverityGroup, TranscriptRecord};
pub use features::{Extractor, FeatureSchema, FeatureTable, FeatureVector};
pub use lexicon::Lexicon;
pub use models::{ForestModel, ForestParams, Samples, Task};

/// Crate version, embedded in every written artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
