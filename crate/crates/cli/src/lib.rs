//! Library half of the `rankward` binary: run configuration, artifact
//! layout, and one function per subcommand. Keeping these in a library
//! lets integration tests drive whole pipelines in-process and lets the
//! binary stay a thin argument parser.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod manifest;
