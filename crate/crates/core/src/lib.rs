//! Reading-time prediction for eye-tracking corpora in a shared IPA space.
//!
//! Words from any language are transcribed to IPA with a rule-file driven
//! transducer ([`g2p`]), turned into fourteen per-word predictors
//! ([`features`], [`lm`], [`lexicon`]) and fed to four classical regressor
//! families ([`models`]). [`eval`] wires them into cross-validation, the
//! FFD→TRT cascade and the four-model ensemble that produces the standard
//! deviation columns of a submission.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod g2p;
pub mod lexicon;
pub mod lm;
pub mod models;

pub use error::{Error, Result};
