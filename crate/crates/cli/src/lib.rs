//! Library side of the `gmol-shape` command: configuration, run dispatch and
//! output files.

pub mod config;
pub mod expr;
pub mod output;
pub mod run;

pub use config::{parse_config, read_config, ConfigError, Mode, RunConfig};
pub use output::{emit_outputs, OutputError};
pub use run::{run, Check, RunArtifacts, RunError, Summary};
