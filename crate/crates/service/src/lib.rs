//! Map bundles, the HTTP API that serves them, and the `topicmap` command
//! line.
//!
//! [`build_bundle`] runs the full pipeline of the `topicmap` library over a
//! corpus and writes an immutable bundle directory; [`Bundle::load`]
//! validates it and answers search, node and overlay queries, which
//! [`server::router`] exposes over HTTP.

pub mod bundle;
pub mod cli;
pub mod config;
pub mod server;

pub use bundle::{build_bundle, verify, BuildReport, BuildStatus, Bundle, BundleError, Manifest};
pub use config::{BuildConfig, ConfigError};
