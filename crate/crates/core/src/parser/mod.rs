//! A greedy arc-eager dependency parser with an averaged perceptron.
//!
//! In [`ParserMode::NoPunct`] the parser never sees dots and commas: they
//! are stripped before training and before decoding, and reattached by
//! convention after decoding.

use std::io;

use thiserror::Error;

use crate::tree::ValidationReport;

mod features;
mod model;
mod system;

pub use features::FEATURE_VERSION;
pub use model::{train, ParserMode, ParserModel, TrainingMeta, MODEL_FORMAT_VERSION};
pub use system::{oracle_transitions, replay, Move, ParserState, Transition};

#[derive(Debug, Error)]
pub enum ParserError {
    #[error("sentence is not a well-formed tree: {0}")]
    Invalid(ValidationReport),

    #[error("no oracle sequence exists for a non-projective tree")]
    NonProjective,

    #[error("training needs at least one epoch")]
    NoEpochs,

    #[error("no projective training sentence ({nonprojective} non-projective, {unstrippable} could not be stripped)")]
    NoTrainingData { nonprojective: usize, unstrippable: usize },

    #[error("model file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
