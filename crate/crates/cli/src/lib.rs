//! Front end of the `bbsi` binary: problem generation, timed solver runs,
//! oracle validation, scaling sweeps, kernel microbenchmarks and plan tuning.
//!
//! Run records are written as CSV with the columns of
//! [`RUN_RECORD_COLUMNS`](run::RUN_RECORD_COLUMNS), or as a JSON array with
//! the same fields when `--out` ends in `.json`.

pub mod commands;
pub mod error;
pub mod fit;
pub mod output;
pub mod run;

pub use commands::{execute, Cli};
pub use error::{CliError, Result};
