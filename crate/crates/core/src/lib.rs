//! Sentence informativeness toward a target word.
//!
//! This crate holds the algorithmic side of the toolkit and needs only
//! `alloc`: tagged sentence stores and masking, distractor selection from
//! n-gram slots, a backoff trigram model, context vectors and similarity
//! features, the three cloze classifiers, skip-gram fine-tuning with
//! informativeness-based sentence selection, rank statistics, and the
//! annotation protocol state machine.
//!
//! File formats, persistence, the HTTP service and the command line live in
//! the `infolab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod annotate;
pub mod classify;
pub mod corpus;
pub mod curate;
pub mod distractors;
pub mod lm;
mod math;
pub mod resources;
pub mod rng;
pub mod stats;
pub mod vectors;

pub use corpus::{MaskedSentence, Pos, Sentence, SentenceStore, Token};
pub use distractors::DistractorSet;
pub use lm::TrigramLm;
pub use vectors::{ContextVector, VectorStore};
