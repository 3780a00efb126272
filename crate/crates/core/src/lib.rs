//! Mining, measuring and ranking: extract commit history from Git
//! repositories, compute per-file complexity metrics, normalize them into
//! Squale marks and attribute quality deltas to the developers who caused
//! them.
//!
//! The crate is organized along the pipeline:
//!
//! - [`miner`] — reads branch history and file contents out of a Git clone.
//! - [`analyzer`] — tokenizes c-family source and computes cyclomatic
//!   complexity, Halstead counts, SLOC and import coupling.
//! - [`squale`] — maps raw metrics onto the bounded [0,3] mark scale and
//!   aggregates marks with the lambda-weighted global mark.
//! - [`store`] — incremental on-disk cache of per-(revision, file) results.
//! - [`expertise`] — windows commits, attributes global-mark deltas to
//!   authors and ranks component experts.

pub mod analyzer;
pub mod error;
pub mod expertise;
pub mod miner;
mod par;
pub mod squale;
pub mod store;

pub use error::{Error, Result};
