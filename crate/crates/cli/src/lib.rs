//! Command-line front end: model specification and simulation design
//! files (TOML), CSV datasets and tables, JSON fit archives.

pub mod archive;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod simdesign;
pub mod specfile;
pub mod summary;

pub use cli::{run, Cli, Status};
pub use error::{CliError, Result};
