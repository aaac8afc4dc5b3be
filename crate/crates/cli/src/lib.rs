//! Library side of the `slod` command-line tool.

pub mod app;
pub mod experiments;
