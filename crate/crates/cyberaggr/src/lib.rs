//! File formats, ingestion and the command pipeline around
//! [`cyberaggr_core`].

pub mod config;
pub mod embedding_file;
pub mod error;
pub mod feature_io;
pub mod ingest;
pub mod manifest;
pub mod model_file;
pub mod pipeline;
pub mod report;
pub mod resources;
pub mod survey;
pub mod synth;

pub use cyberaggr_core as core;
pub use error::{CliError, Result};
