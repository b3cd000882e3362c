//! File formats, reports and subcommands behind the `unicov` binary.

pub mod commands;
pub mod io;
pub mod report;
