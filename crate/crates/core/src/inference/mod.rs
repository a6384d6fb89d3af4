//! MAP and loss-augmented inference.
//!
//! Inference runs on a [`LabelingProblem`] built from a graph, a weight
//! vector and a pairwise context. Three solvers are available: exhaustive
//! enumeration (exact, small graphs only), iterated conditional modes, and
//! alpha-expansion.

mod exhaustive;
mod expansion;
mod icm;
mod loss;
mod maxflow;
mod problem;

pub use exhaustive::{exhaustive, MAX_STATES};
pub use expansion::{alpha_expansion, alpha_expansion_from, expansion_move};
pub use icm::{icm, icm_from};
pub use loss::{weighted_hamming, LossSpec};
pub use problem::LabelingProblem;

use crate::energy::cooccur::CoOccurrenceTable;
use crate::energy::{build_problem, JointFeatureMap, PairwiseContext, PairwiseMode, WeightVector};
use crate::error::{Error, Result};
use crate::graph::{Labeling, SuperpixelGraph, VOID_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Exhaustive,
    Icm,
    AlphaExpansion,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::Icm => "icm",
            Algorithm::AlphaExpansion => "expansion",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "exhaustive" => Some(Algorithm::Exhaustive),
            "icm" => Some(Algorithm::Icm),
            "expansion" | "alpha-expansion" => Some(Algorithm::AlphaExpansion),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    pub algorithm: Algorithm,
    pub max_sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub mode: PairwiseMode,
    pub alpha: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            algorithm: Algorithm::AlphaExpansion,
            max_sweeps: 20,
            restarts: 3,
            seed: 0,
            mode: PairwiseMode::Plain,
            alpha: 1.0,
        }
    }
}

impl InferenceConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        InferenceConfig {
            algorithm,
            ..Self::default()
        }
    }

    pub fn context<'a>(&self, table: Option<&'a CoOccurrenceTable>) -> Result<PairwiseContext<'a>> {
        PairwiseContext::new(self.mode, self.alpha, table)
    }
}

/// Minimizes the problem's energy with the configured algorithm.
pub fn minimize(problem: &LabelingProblem, cfg: &InferenceConfig) -> Result<(Vec<usize>, f64)> {
    match cfg.algorithm {
        Algorithm::Exhaustive => exhaustive(problem),
        Algorithm::Icm => Ok(icm(problem, cfg.max_sweeps, cfg.restarts, cfg.seed)),
        Algorithm::AlphaExpansion => Ok(alpha_expansion(problem, cfg.max_sweeps)),
    }
}

/// `argmin_y E(y, x; w)`; returns the labeling and its energy.
pub fn map_inference(
    g: &SuperpixelGraph,
    w: &WeightVector,
    map: &JointFeatureMap,
    cfg: &InferenceConfig,
    table: Option<&CoOccurrenceTable>,
) -> Result<(Labeling, f64)> {
    let ctx = cfg.context(table)?;
    let problem = build_problem(g, w, map, &ctx)?;
    let (y, e) = minimize(&problem, cfg)?;
    Ok((Labeling(y), e))
}

/// Folds the weighted Hamming loss against `y_true` into the unary terms:
/// every label other than the true one is cheaper by `c[y_true]`.
pub fn augment_with_loss(
    problem: &mut LabelingProblem,
    y_true: &Labeling,
    loss: &LossSpec,
) -> Result<()> {
    if y_true.len() != problem.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: problem.num_nodes(),
            found: y_true.len(),
        });
    }
    for (p, &t) in y_true.as_slice().iter().enumerate() {
        if t == VOID_LABEL || t >= problem.num_labels() {
            return Err(Error::LabelOutOfRange {
                label: t,
                num_classes: problem.num_labels(),
            });
        }
        let c = loss.weight(t);
        for (k, u) in problem.unary_mut(p).iter_mut().enumerate() {
            if k != t {
                *u -= c;
            }
        }
    }
    Ok(())
}

/// `argmin_y E(y) - Delta(y_true, y)`; returns the labeling and the value of
/// that objective.
pub fn loss_augmented_inference(
    g: &SuperpixelGraph,
    y_true: &Labeling,
    w: &WeightVector,
    map: &JointFeatureMap,
    loss: &LossSpec,
    cfg: &InferenceConfig,
    table: Option<&CoOccurrenceTable>,
) -> Result<(Labeling, f64)> {
    let ctx = cfg.context(table)?;
    let mut problem = build_problem(g, w, map, &ctx)?;
    augment_with_loss(&mut problem, y_true, loss)?;
    let (y, v) = minimize(&problem, cfg)?;
    Ok((Labeling(y), v))
}
