//! File formats, benchmark harness and CLI for `sparseprep-core`.

pub mod bench;
pub mod cli;
pub mod formats;

pub use sparseprep_core as core;
