//! File formats, offline analysis and the live session service built on
//! `satf-core`.

pub mod analysis;
pub mod directives;
pub mod error;
pub mod eventlog;
pub mod server;
pub mod svg;
pub mod trials_csv;
pub mod wire;

pub use error::{ServiceError, ServiceResult};
