//! Command-line front end for `ncb-core` and the `ncb-1` JSON document format.

pub mod commands;
pub mod document;

pub use commands::{Outcome, Tolerances};
pub use document::{Document, Kind};
