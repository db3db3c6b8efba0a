//! Stream-based active learning for soft-sensor regression.
//!
//! The pipeline has four stages:
//!
//! 1. An orthogonal autoencoder ([`oae`]) is pretrained on an unlabeled
//!    historical pool and maps process variables `x ∈ ℝᵖ` to bottleneck
//!    features `z ∈ ℝᵏ`.
//! 2. An ordinary least-squares model ([`regression`]) predicts the
//!    hard-to-measure response from the encoded features.
//! 3. Every streamed observation is scored by an informativeness criterion
//!    ([`criteria`]): Hotelling T², committee ambiguity, or expected model
//!    change.
//! 4. A Gaussian-KDE upper control limit ([`threshold`]), fit on the scores
//!    of the historical pool, decides whether the label is bought.
//!
//! [`engine`] runs the online loop, [`datagen`] provides a synthetic
//! correlated process to run it on, and [`bench`] compares the criteria
//! over many seeded runs.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod criteria;
pub mod dataset;
pub mod datagen;
pub mod engine;
mod error;
pub mod oae;
pub mod regression;
pub mod threshold;

pub use criteria::{CriterionKind, CriterionState, GaussianSummary};
pub use dataset::{RawDataset, Standardizer, StreamSource};
pub use engine::{EngineConfig, RunTrace};
pub use error::{Error, Result};
pub use oae::{OaeArchitecture, OaeModel, TrainConfig};
pub use regression::{Committee, LinearModel};
pub use threshold::ControlLimit;
