//! Command-line tools and HTTP service for interactive hyperspectral
//! segmentation.
//!
//! The binary is a thin wrapper over [`run`]; everything it does is
//! reachable from here so the service can be embedded or tested without a
//! socket (see [`service::router`]).

pub mod args;
pub mod commands;
pub mod dataset;
pub mod manifest;
pub mod method;
pub mod preview;
pub mod service;

pub use args::{Cli, Command};
pub use commands::run;
pub use method::Method;
