//! Cross-condition transfer analysis over a shared voxel space.
//!
//! Given a source and a target binary task sampled on the same grid, this
//! crate computes three accuracy curves over a cubic scale of
//! feature-selection fractions:
//!
//! * **inline learning**: cross-validated accuracy on the target alone,
//! * **transfer learning**: a classifier trained on the source predicts the target,
//! * **selection transfer**: voxels ranked on the source, classifier trained
//!   and tested on the target.
//!
//! The [`scale`] module compares curves with per-scale t-tests, picks the
//! characteristic spatial scale and measures task similarity as the area
//! under the p-value curve. [`synth`] plants Gaussian activation blobs so
//! spatial selectivity can be scored against ground truth.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
mod linalg;
pub mod linmodel;
pub mod par;
pub mod protocols;
pub mod scale;
pub mod selection;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
