//! Algorithmic core of the cyber-aggression prediction pipeline.
//!
//! Everything here is a pure transformation over in-memory values: survey
//! scoring and trisection labeling, per-user feature extraction, the four
//! classifier families, metrics and the cross-validation protocol. File
//! formats, ingestion and the command line live in the `cyberaggr` crate.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod cv;
pub mod data;
pub mod embedding;
mod error;
pub mod features;
pub mod labeling;
mod math;
pub mod metrics;
pub mod models;
pub mod time;

pub use error::{Error, Result};
pub use labeling::{Level, Target};
