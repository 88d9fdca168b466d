//! Mesh texturing with a pluggable image-generation backend.
//!
//! This crate adds the std-side pieces on top of `uvforge-core`: OBJ and PNG
//! files, the `uvforge/1` HTTP client, the two-stage pipeline and the CLI.

pub mod backend;
pub mod cli;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod wire;

pub use backend::{http_backend, sample, BackendConfig, BackendKind, HttpBackend};
pub use error::{Error, Result};
pub use pipeline::{run, run_coarse, run_refine, PipelineConfig, RunOutput, StageTrace};
pub use uvforge_core as core;
