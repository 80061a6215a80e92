//! Spec-file parsing, subcommand drivers and CSV/SVG output for the `glancing` binary.

pub mod commands;
pub mod output;
pub mod spec;
