//! ASR-plausible noise injection for clean text corpora.
//!
//! The crate covers the whole augmentation loop: a pronouncing dictionary
//! and phone transform ([`lexicon`]), token alignment ([`alignment`]),
//! substitution tables ([`confusion`]), a small transformer noise generator
//! ([`generator`]), phone-edit-rate filtering and corpus augmentation
//! ([`augment`]), an intent classifier with robustness metrics ([`slu`]),
//! and corpus handling plus a synthetic benchmark ([`corpus`],
//! [`benchmark`]).

pub mod alignment;
pub mod augment;
pub mod benchmark;
pub mod config;
pub mod confusion;
pub mod corpus;
pub mod error;
pub mod generator;
pub mod lexicon;
pub mod rng;
pub mod slu;
pub mod text;

pub use error::{Error, Result};
