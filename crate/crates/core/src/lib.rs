//! Robust query-by-committee active learning for generalized linear models.
//!
//! Committee disagreement at a candidate input is measured in one of three
//! ways:
//!
//! | Measure | Consensus model | Acquisition |
//! |---------|-----------------|-------------|
//! | Kullback–Leibler | canonical parameter `ξ̄ = Σ w_c ξ_c` | [`acquisition::acquisition_kl`] |
//! | β-divergence | u-mixture `[Σ w_c p_c^β − βb]^{1/β}` | [`acquisition::acquisition_beta`] |
//! | dual γ-power | `(Σ w_c p_c^γ)^{1/γ} / z(w)` | [`acquisition::acquisition_gamma`] |
//!
//! The [`influence`] module carries closed-form influence functions of every
//! consensus model and acquisition function under ε-contamination of the
//! committee weights, together with the finite-difference oracle that checks
//! them. KL-based quantities grow without bound in the outlying canonical
//! parameter; the β and γ variants saturate.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! threading live in the `robust-qbc` companion crate.

#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod acquisition;
pub mod active;
pub mod data;
pub mod divergence;
mod error;
pub mod family;
pub mod influence;
pub mod linalg;
pub mod mixture;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};

pub use acquisition::{AcquisitionMethod, AcquisitionResult, Committee};
pub use active::{ExperimentConfig, IterationRecord, LabeledPool, SamplingMethod, Trajectory};
pub use data::{Dataset, Provenance, SplitResult};
pub use divergence::{BregmanGenerator, DensityFn};
pub use family::{FitOptions, GlmFamily, GlmModel, Support};
pub use linalg::Matrix;
pub use mixture::{ConsensusModel, Weights};
pub use quadrature::{Grid, SupportSpec};
