//! File formats, pipeline commands and the annotation service built on
//! `infolab-core`.

pub mod annoserve;
pub mod arpa;
pub mod cli;
pub mod config;
pub mod corpus_io;
pub mod error;
pub mod jsonl;
pub mod model_io;
pub mod pipeline;
pub mod report;
pub mod resources_io;
pub mod synthetic;
pub mod vectors_io;
pub mod wordnet;

pub use error::{Error, ExitCode, FormatError, Result};
