//! Classifiers for binary classification under label shift.
//!
//! Under label shift the class-conditional feature densities `g₀`, `g₁`
//! agree between a source domain `P` and a target domain `Q`; only the class
//! priors differ. The target regression function is then
//! `η_Q(x) = π_Q g₁(x) / (π_Q g₁(x) + (1 − π_Q) g₀(x))`, and the crate
//! estimates it two ways:
//!
//! * [`supervised`]: labeled target data is available, so `π_Q` is a target
//!   label frequency and `g₀`, `g₁` are kernel density estimates on the
//!   pooled source and target samples.
//! * [`unsupervised`]: the target is unlabeled. Class-probability ratios are
//!   recovered by [`shift_weights`] from a pilot classifier's confusion
//!   matrix, and the source kernel regression is reweighted.
//!
//! [`baselines`] holds the comparison classifiers, [`datagen`] the
//! truncated-normal simulation family with its analytic Bayes rule, and
//! [`experiments`] the seeded Monte Carlo excess-risk harness.

pub mod baselines;
pub mod datagen;
mod error;
pub mod experiments;
pub mod kernel_density;
pub mod numeric;
mod plugin;
pub mod shift_weights;
pub mod supervised;
pub mod unsupervised;

pub use error::{Error, Result};
pub use plugin::{plugin_eta, threshold};
