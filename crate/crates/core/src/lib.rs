//! Punctuation robustness toolkit for dependency treebanks.
//!
//! * [`conll`] reads and writes CoNLL-X / CoNLL-U files.
//! * [`tree`] holds the tree model, validation and projectivity checks.
//! * [`perturb`] removes or injects dots and commas while keeping trees
//!   well-formed.
//! * [`eval`] scores parses with punctuation excluded and computes the
//!   relative error increase between conditions.
//! * [`parser`] is a small arc-eager reference parser that can be trained
//!   with or without punctuation.

pub mod conll;
pub mod eval;
pub mod parser;
pub mod perturb;
pub mod tree;

pub use conll::{read_conll, write_conll, Document};
pub use tree::{is_punct, validate, PunctClass, Sentence, Token};
