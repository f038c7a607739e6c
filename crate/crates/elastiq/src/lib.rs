//! File formats, orchestration, and the command-line pipeline around
//! [`elastiq_core`]: dataset CSV parsing, JSON checkpoints and bundles,
//! scenario files, evaluation reports, and the end-to-end run driver.

pub mod bundle;
pub mod checkpoint;
pub mod csvio;
pub mod pipeline;
pub mod report;
pub mod runcfg;
pub mod scenario;

pub use pipeline::run_pipeline;
pub use runcfg::{Method, RunConfig};
