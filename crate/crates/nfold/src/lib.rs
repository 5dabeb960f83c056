//! File formats, threaded search and the command-line interface on top of
//! `nfold-core`.

pub mod cli;
pub mod format;
pub mod search;
