//! File formats, table cache, command implementations and the verification
//! suite behind the `mqci` binary.

pub mod cache;
pub mod cli;
pub mod error;
pub mod format;
pub mod run;
pub mod tablefile;
pub mod verify;

pub use error::AppError;
