//! Measure the spuriousness of a labeled dataset as the unique information
//! `Uni(Y; B | F)` that the spurious features `B` hold about the label `Y`
//! beyond the core features `F`.
//!
//! The crate is organized bottom-up:
//!
//! - [`dist`]: exact discrete pmfs, channels and classical information measures.
//! - [`lp`]: a small dense simplex solver.
//! - [`pid`]: the unique-information convex program and the four-term
//!   partial information decomposition.
//! - [`blackwell`]: garbling search deciding Blackwell sufficiency.
//! - [`disentangler`]: PCA + k-means and the autoencoder clustering estimator
//!   that discretize high-dimensional features.
//! - [`estimation`]: histogram joints and the end-to-end pipeline.
//! - [`synth`]: synthetic grouped image datasets, mitigation transforms and a
//!   linear probe for worst-group accuracy.
//! - [`experiment`]: sweeps over dataset variants and seeds.

// `!(x >= 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod blackwell;
pub mod disentangler;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod fixtures;
pub mod lp;
pub mod pid;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
