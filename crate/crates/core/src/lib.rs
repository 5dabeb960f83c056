//! Huge n-fold integer programming over compactly presented solutions.
//!
//! An n-fold program is built from an `(r, s) x d` bimatrix `(A1, A2)`: the
//! variable vector splits into `n` bricks of `d` coordinates, each brick is
//! constrained by `A2`, and all bricks are coupled through `A1` applied to
//! their sum. In the huge regime the bricks are grouped into a handful of
//! types whose multiplicities are arbitrary-precision integers, so solutions
//! are only ever handled as per-type multisets of distinct bricks
//! ([`CompactPresentation`]).
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. File formats
//! and the command-line front end live in the `nfold` crate.

#![no_std]

extern crate alloc;

pub mod augment;
pub mod budget;
pub mod conesolver;
pub mod error;
pub mod graver;
pub mod int;
pub mod oracle;
pub mod presentation;
pub mod tables;

pub use budget::Budgets;
pub use error::{Error, Result};
pub use int::{Bimatrix, ExtInt, Int, IntMatrix, IntVec};
pub use presentation::{BrickType, CompactPresentation, HugeNFoldInstance, ValidationReport};

