//! Gaze analysis and saliency prediction, tuned per observer age group.
//!
//! The crate covers two halves of one workflow:
//!
//! * analysis of recorded fixations per age group ([`analysis`]): explorativeness
//!   entropy, intra/inter group AUC agreement and center bias;
//! * saliency models tuned per age group: a scale-subset center-surround
//!   pipeline ([`itti`]), a learned linear combination of its conspicuity maps
//!   with an age-specific center weight ([`learned`]), and a PCA patch
//!   dissimilarity model ([`patch`]).
//!
//! [`eval`] ties the models to datasets (train/test split, scoring,
//! synthetic cohorts, table-shaped reports) and [`cli`] exposes everything
//! as the `agesal` command.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod eval;
pub mod export;
pub mod gaze;
pub mod itti;
pub mod learned;
pub(crate) mod linalg;
pub mod patch;
pub mod raster;
pub mod roc;

pub use error::{Error, Result};
