//! Batch experiments over [`convdom_core`]: configuration, named operators,
//! file formats and report artifacts. The `convdom` binary is a thin shell
//! around [`run::run`].

pub mod config;
pub mod error;
pub mod format;
pub mod preset;
pub mod report;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use error::{RunError, RunResult};
pub use report::Report;
pub use run::{run, Outcome};
