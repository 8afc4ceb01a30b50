//! Accurate-fairness testing for small tabular neural classifiers.
//!
//! The crate trains dense binary classifiers, searches for adversarial
//! instances along fairness-confusion directions (with FGSM and PGD as
//! robustness baselines), labels perturbed instances through a first-order
//! Taylor expansion of the loss, and tallies everything into a fairness
//! confusion matrix (true/false × fair/biased).
//!
//! Modules:
//! - [`nncore`]: dense network, MSE loss, backpropagation, training.
//! - [`data`]: schemas, CSV loading, similar sub-populations, K-Means seeds.
//! - [`perturb`]: direction rules and ground-truth approximation.
//! - [`confusion`]: per-instance classification and reports.
//! - [`generate`]: global/local search and baseline attacks.
//! - [`harness`]: the commands behind the `fairsearch` CLI.

pub mod confusion;
pub mod data;
pub mod error;
pub mod generate;
pub mod harness;
pub mod io;
pub mod nncore;
pub mod perturb;

pub use error::{Error, Result};
