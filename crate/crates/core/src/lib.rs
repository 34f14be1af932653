//! Data-parallel document classification: corpus ingestion, Turkish text
//! preprocessing, TF-IDF vectors, seeded splits, multinomial and complement
//! Naive Bayes, and evaluation reports.

pub mod bayes;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
mod io;
pub mod pipeline;
pub mod synth;
pub mod text_prep;
pub mod vectorizer;

pub use error::{Error, Result};
