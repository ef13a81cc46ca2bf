//! File formats, experiment harness and command-line front end over
//! `amie-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod harness;

pub use error::{AppError, AppResult};
