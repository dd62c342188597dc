//! Unsupervised network-intrusion detection with a β-variational
//! autoencoder trained on normal NSL-KDD traffic only.
//!
//! Two anomaly scores come out of one trained model:
//!
//! * the per-sample reconstruction error (categorical cross-entropy, binary
//!   cross-entropy and squared error over the mixed-type features), and
//! * `Z_k`, the mean Euclidean distance from a sample's latent projection
//!   to its `k` nearest training projections.
//!
//! Both are evaluated threshold-free with ROC curves and AUROC, globally
//! and per attack category, and swept over a grid of β, `k` and seeds.
//!
//! The crate is laid out as a pipeline:
//!
//! | module         | role                                                    |
//! |----------------|---------------------------------------------------------|
//! | [`dataset`]    | parse NSL-KDD, re-split, one-hot/standardize             |
//! | [`nn`]         | layers, losses, KL, reparameterization, Adam             |
//! | [`model`]      | the β-VAE, its backward pass, training, checkpoints      |
//! | [`scoring`]    | reconstruction and latent k-NN detectors                 |
//! | [`eval`]       | ROC curves and AUROC                                     |
//! | [`experiment`] | β × k × seed sweeps, caching, reports                    |

pub mod dataset;
pub mod eval;
pub mod experiment;
pub mod model;
pub mod nn;
pub mod rng;
pub mod scoring;
pub mod synth;

mod container;
mod error;

use serde::{Deserialize, Serialize};

pub use error::{Error, ErrorCategory, Result};

/// Encoding and loss conventions that affect results. Written into
/// manifests, checkpoints and sweep cache keys so artifacts produced under
/// different conventions are never mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    /// How loss terms are reduced over samples and features.
    pub loss_reduction: String,
    pub log_clamp: f64,
    pub std_floor: f64,
    pub hidden_activation: String,
    /// Which records the categorical vocabularies are built from.
    pub vocabulary_source: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            loss_reduction: "mean over samples, sum over features of each type, unit-weight sum of cat+bool+cont".into(),
            log_clamp: nn::LOG_CLAMP,
            std_floor: dataset::STD_FLOOR,
            hidden_activation: "relu".into(),
            vocabulary_source: "train+test".into(),
        }
    }
}

/// The guide's snippets run as doctests so the book cannot drift from the code.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
