//! Typological collaborative filtering: predicting missing typological
//! feature values from a language-by-feature knowledge base with logistic
//! matrix factorization, optionally informed by language embeddings.

pub mod analysis;
pub mod baselines;
pub mod binarize;
pub mod config;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod harness;
pub mod kb;
pub mod model;
pub mod optim;
pub mod rng;
pub mod split;
pub mod synth;

pub use error::{Error, Result};
