//! Bayesian tree-ensemble model for discrete-time survival on sparse
//! longitudinal records.
//!
//! Patients are expanded into person-period rows on a global time grid; a
//! sum of regression trees over (covariates, time) gives the probit of the
//! per-interval event probability. Posterior draws come from backfitting
//! MCMC with truncated-normal data augmentation, and survival curves are
//! products of per-interval survival probabilities under each draw.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line
//! live in the companion `treesurv` crate.

#![no_std]
extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod bench;
pub mod error;
pub mod forest;
pub mod math;
pub mod mcmc;
pub mod predict;
pub mod records;

pub use error::{Error, Result};
