//! Spec files, system emission and the `morphic` command line.

pub mod app;
pub mod emit;
pub mod sequence;
pub mod spec;
