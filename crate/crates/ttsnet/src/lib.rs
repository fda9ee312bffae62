//! File formats, the experiment harness and the thread-pool executor for
//! [`ttsnet_core`]. The `ttsnet` binary is a thin command-line layer over
//! this library.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod pool;

pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, ExperimentConfig, Method, Summary};
pub use pool::ThreadPoolExecutor;
