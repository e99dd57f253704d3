//! File formats, seeded instances and subcommands of the `sosmm` tool.

pub mod commands;
pub mod format;
pub mod instances;
pub mod problem;
