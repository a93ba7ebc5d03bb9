//! Detection and localization of a single change point in the covariance
//! matrix of a sequence of high-dimensional observations.
//!
//! The test statistic is the minimum over candidate splits of the
//! standardized sequential likelihood-ratio statistic
//! `(2 log Λ_{n,t} - μ̃_{n,t}) / (n σ_{n,t})`; its critical value is the
//! simulated lower quantile of the standardized minimum of the limiting
//! Gaussian process, evaluated with `y = p/n`.
//!
//! Modules, bottom-up:
//! - [`covstream`]: sequential segment covariances and log-determinants
//! - [`moments`]: kurtosis estimate, centering and scale terms
//! - [`nullsim`]: limiting kernel and Monte Carlo null quantiles
//! - [`detector`]: profile, min statistic, decision, location estimate
//! - [`datagen`]: synthetic data for experiments
//! - [`cli`]: the `covcp` command-line tool

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod covstream;
pub mod data;
pub mod datagen;
pub mod detector;
pub mod error;
mod linalg;
pub mod moments;
pub mod nullsim;

pub use data::DataMatrix;
pub use detector::{detect, DetectConfig, DetectionReport};
pub use error::{Error, Result};
