//! Host side of silloc: file formats, a rayon executor and the command line.

pub mod cli;
pub mod dataio;
pub mod parallel;

pub use silloc_core;
