//! Superpixel conditional random fields for semantic segmentation.
//!
//! The crate covers the whole pipeline: SLIC over-segmentation and adjacency
//! extraction, unary/pairwise feature maps, CRF energies with spatially
//! related co-occurrence potentials, MAP and loss-augmented inference,
//! max-margin learning with a 1-slack cutting-plane solver, and the usual
//! segmentation metrics.
//!
//! Graphs, co-occurrence tables and models are exchanged as small
//! line-oriented text files; see [`graph::format`], [`energy::cooccur`] and
//! [`model`].

// `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod color;
pub mod energy;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod inference;
pub mod model;
pub mod ssvm;
pub mod superpixels;

mod number;

pub use energy::cooccur::CoOccurrenceTable;
pub use energy::{JointFeatureMap, PairwiseMode, WeightVector};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, MetricsReport};
pub use features::{LinearSvmModel, UnaryFeatureMap, UnaryMode};
pub use graph::{Edge, Labeling, Relation, SuperpixelGraph, SuperpixelNode, VOID_LABEL};
pub use inference::{Algorithm, InferenceConfig, LossSpec};
pub use model::CrfModel;
pub use ssvm::{SsvmConfig, TrainingState};
pub use superpixels::{LabelRaster, SlicConfig};
