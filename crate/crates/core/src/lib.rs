//! Measures the political alignment of aggregate audience interests, adjusts
//! those alignments for demographic-subgroup composition, and quantifies the
//! resulting distribution shifts, topic-level shifts, and clustering
//! structure. Validated end to end on seeded synthetic data with planted
//! confounding.

pub mod alignment;
pub mod deconfound;
pub mod diag;
pub mod error;
pub mod graph;
pub mod reach;
pub mod regression;
pub mod report;
pub mod shiftstats;
pub mod stats;
pub mod synth;
pub mod topics;

pub use error::{Error, Result};
