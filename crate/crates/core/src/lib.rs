//! Trainable stress scansion for English and Spanish verse.
//!
//! Lines of verse are labeled syllable by syllable as stressed (`+`) or
//! unstressed (`-`). Four tagger families are provided (averaged perceptron,
//! trigram HMM, linear-chain CRF and a character-aware BiLSTM-CRF), together
//! with three input encodings and an edit-distance based cross-validation
//! harness.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod phonology;

pub use error::{Error, Result};
pub mod crf;
pub mod encoding;
pub mod features;
pub mod hmm;
pub mod lattice;
pub mod neural;
pub mod perceptron;
pub mod summary;
pub mod system;
