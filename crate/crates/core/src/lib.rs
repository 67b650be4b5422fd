//! Maximum-likelihood learning from aggregate observations.
//!
//! Supervision arrives for *sets* of instances (pairwise similarity, triplet
//! comparisons, multiple-instance labels, set means and sums, pairwise and
//! listwise ranks) while the learned model still predicts each individual.
//! Each aggregate function is paired with a distribution family for the
//! individual targets so that `p(Y | X_1..X_K)` has a closed form; the
//! negative log-likelihood and its gradient then drive ordinary first-order
//! training of a linear model or small MLP.

pub mod aggregate;
pub mod cli;
pub mod data;
pub mod dists;
pub mod error;
pub mod eval;
pub mod likelihood;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
