//! Centroid-based multi-document extractive summarization and
//! utility-based summary evaluation.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod lexstats;
pub mod summarizer;
pub mod text;

pub use error::{MeadError, Result};
