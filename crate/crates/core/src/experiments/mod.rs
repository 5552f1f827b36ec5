//! Experiment drivers used by the command-line tool.

pub mod analysis;
pub mod figures;
pub mod spec_file;
pub mod sweep;
pub mod threshold;
