//! Max-margin CRF learning with the 1-slack cutting-plane method.
//!
//! The learning problem asks the ground-truth energy of every training image
//! to undercut every other labeling by the weighted Hamming loss:
//!
//! ```text
//! min 1/2 |w|^2 + C xi
//! s.t. 1/m sum_i [E(y_i', x_i) - E(y_i, x_i)] >= 1/m sum_i Delta(y_i, y_i') - xi   for all (y_1', ..., y_m')
//! ```
//!
//! which has the same optimum as the per-example slack formulation with
//! `C/m sum_i xi_i`. Each round calls loss-augmented inference on every
//! example to find the most violated aggregated constraint, adds it to the
//! working set, and re-solves the restricted QP. Training uses plain
//! pairwise potentials and `alpha = 1`; co-occurrence potentials are a
//! prediction-time device.

pub mod qp;

use std::time::Instant;

use rayon::prelude::*;

use crate::energy::{build_problem, JointFeatureMap, PairwiseContext, PairwiseMode, WeightVector};
use crate::error::{Error, Result};
use crate::graph::{Labeling, SuperpixelGraph};
use crate::inference::{augment_with_loss, minimize, weighted_hamming, InferenceConfig, LossSpec};
pub use qp::{qp_solve, Constraint, QpSolution, QpSolver};

#[derive(Debug, Clone, PartialEq)]
pub struct SsvmConfig {
    pub c: f64,
    /// Tolerance on the violation of the most violated constraint.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Separation oracle. Its pairwise mode and alpha are ignored.
    pub inference: InferenceConfig,
    pub seed: u64,
}

impl Default for SsvmConfig {
    fn default() -> Self {
        SsvmConfig {
            c: 100.0,
            epsilon: 1e-3,
            max_iterations: 200,
            inference: InferenceConfig::default(),
            seed: 0,
        }
    }
}

impl SsvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingStatus {
    Converged,
    MaxIterationsReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Optimal value of the QP restricted to the working set after this
    /// round's update.
    pub lower_bound: f64,
    /// Violation `1/m sum_i [Delta_i - <w, dPsi_i>]` of the constraint found
    /// this round, measured before the update.
    pub max_violation: f64,
    /// Slack before the update (the value the violation is compared to).
    pub xi: f64,
    pub oracle_called: bool,
    pub wall_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingState {
    pub w: Vec<f64>,
    pub xi: f64,
    pub working_set: Vec<Constraint>,
    pub history: Vec<IterationRecord>,
    pub status: TrainingStatus,
}

impl TrainingState {
    /// Per-iteration log as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,lower_bound,max_violation,xi,oracle,wall_time_s\n");
        for r in &self.history {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6}\n",
                r.iteration,
                crate::number::fmt_f64(r.lower_bound),
                crate::number::fmt_f64(r.max_violation),
                crate::number::fmt_f64(r.xi),
                u8::from(r.oracle_called),
                r.wall_secs
            ));
        }
        out
    }
}

struct Example<'a> {
    graph: &'a SuperpixelGraph,
    truth: &'a Labeling,
    payloads: Vec<Vec<f64>>,
    psi_truth: Vec<f64>,
    cache: Vec<Candidate>,
}

#[derive(Clone)]
struct Candidate {
    labeling: Labeling,
    /// Psi(candidate) - Psi(truth)
    psi_diff: Vec<f64>,
    loss: f64,
}

impl Candidate {
    fn violation(&self, w: &WeightVector) -> f64 {
        self.loss - w.dot(&self.psi_diff)
    }
}

fn check_corpus(corpus: &[SuperpixelGraph], map: &JointFeatureMap) -> Result<usize> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::InconsistentCorpus("empty corpus".into()))?;
    for (i, g) in corpus.iter().enumerate() {
        if g.num_classes != first.num_classes
            || g.feat_dim != first.feat_dim
            || g.pfeat_dim != first.pfeat_dim
        {
            return Err(Error::InconsistentCorpus(format!(
                "graph {i} has (classes, feat_dim, pfeat_dim) = ({}, {}, {}), expected ({}, {}, {})",
                g.num_classes, g.feat_dim, g.pfeat_dim, first.num_classes, first.feat_dim, first.pfeat_dim
            )));
        }
        g.validate()
            .map_err(|e| Error::InconsistentCorpus(format!("graph {i}: {e}")))?;
        let y = g
            .ground_truth()
            .map_err(|_| Error::InconsistentCorpus(format!("graph {i} has no ground truth")))?;
        g.check_labeling(y, false).map_err(|e| {
            Error::InconsistentCorpus(format!(
                "graph {i}: ground truth unusable for training: {e}"
            ))
        })?;
    }
    map.check(first, None)?;
    Ok(first.pfeat_dim)
}

/// Learns the CRF weights. Returns the weights and the training record;
/// hitting `max_iterations` is reported through [`TrainingState::status`].
pub fn train(
    corpus: &[SuperpixelGraph],
    map: &JointFeatureMap,
    loss: &LossSpec,
    cfg: &SsvmConfig,
) -> Result<(WeightVector, TrainingState)> {
    cfg.validate()?;
    let pfeat_dim = check_corpus(corpus, map)?;
    if loss.num_classes() != map.num_classes() {
        return Err(Error::DimensionMismatch {
            what: "loss weights",
            expected: map.num_classes(),
            found: loss.num_classes(),
        });
    }
    let du = map.unary_dim();
    let dim = map.dim(pfeat_dim);
    let m = corpus.len() as f64;

    let mut examples: Vec<Example> = corpus
        .iter()
        .map(|g| {
            let truth = g.ground_truth()?;
            let payloads = map.unary.graph_payloads(g)?;
            let psi_truth = map.joint_feature_map_with(g, &payloads, truth)?;
            Ok(Example {
                graph: g,
                truth,
                payloads,
                psi_truth,
                cache: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    let start = Instant::now();
    let mut solver = QpSolver::new(cfg.c, dim);
    let mut w = WeightVector::zeros(du, dim - du);
    let mut xi = 0.0;
    let mut history = Vec::new();
    let mut status = TrainingStatus::MaxIterationsReached;

    for iteration in 1..=cfg.max_iterations {
        // cached labelings first
        let cached: Vec<Option<&Candidate>> = examples
            .iter()
            .map(|ex| best_cached(&ex.cache, &w))
            .collect();
        let cached_violation = cached
            .iter()
            .map(|c| c.map_or(0.0, |c| c.violation(&w).max(0.0)))
            .sum::<f64>()
            / m;

        let (chosen, violation, oracle_called) = if cached_violation > xi + cfg.epsilon {
            let chosen: Vec<Option<Candidate>> = cached
                .iter()
                .map(|c| c.filter(|c| c.violation(&w) > 0.0).cloned())
                .collect();
            (chosen, cached_violation, false)
        } else {
            let found: Vec<Candidate> = examples
                .par_iter()
                .enumerate()
                .map(|(i, ex)| separate(ex, &w, map, loss, cfg, i))
                .collect::<Result<_>>()?;
            let mut chosen = Vec::with_capacity(examples.len());
            for (ex, cand) in examples.iter_mut().zip(found) {
                if cand.labeling != *ex.truth
                    && !ex.cache.iter().any(|c| c.labeling == cand.labeling)
                {
                    ex.cache.push(cand.clone());
                }
                let best = best_cached(&ex.cache, &w)
                    .filter(|c| c.violation(&w) > cand.violation(&w))
                    .cloned();
                let pick = best.unwrap_or(cand);
                chosen
                    .push((pick.violation(&w) > 0.0 && pick.labeling != *ex.truth).then_some(pick));
            }
            let violation = chosen
                .iter()
                .flatten()
                .map(|c| c.violation(&w))
                .sum::<f64>()
                / m;
            (chosen, violation, true)
        };

        if oracle_called && violation <= xi + cfg.epsilon {
            history.push(IterationRecord {
                iteration,
                lower_bound: history
                    .last()
                    .map_or(0.0, |r: &IterationRecord| r.lower_bound),
                max_violation: violation,
                xi,
                oracle_called,
                wall_secs: start.elapsed().as_secs_f64(),
            });
            status = TrainingStatus::Converged;
            break;
        }

        let mut direction = vec![0.0; dim];
        let mut total_loss = 0.0;
        for c in chosen.iter().flatten() {
            for (d, v) in direction.iter_mut().zip(&c.psi_diff) {
                *d += v;
            }
            total_loss += c.loss;
        }
        direction.iter_mut().for_each(|d| *d /= m);
        solver.add(Constraint {
            direction,
            loss: total_loss / m,
        });
        let sol = solver.solve();
        history.push(IterationRecord {
            iteration,
            lower_bound: sol.dual_objective,
            max_violation: violation,
            xi,
            oracle_called,
            wall_secs: start.elapsed().as_secs_f64(),
        });
        w = WeightVector::from_stacked(&sol.w, du);
        xi = sol.xi;
    }

    if status == TrainingStatus::MaxIterationsReached {
        log::warn!(
            "cutting-plane training stopped after {} iterations without converging",
            cfg.max_iterations
        );
    }
    let state = TrainingState {
        w: w.stacked(),
        xi,
        working_set: solver.constraints().to_vec(),
        history,
        status,
    };
    Ok((w, state))
}

fn best_cached<'c>(cache: &'c [Candidate], w: &WeightVector) -> Option<&'c Candidate> {
    cache
        .iter()
        .fold(None, |best: Option<&Candidate>, c| match best {
            Some(b) if b.violation(w) >= c.violation(w) => Some(b),
            _ => Some(c),
        })
}

fn separate(
    ex: &Example,
    w: &WeightVector,
    map: &JointFeatureMap,
    loss: &LossSpec,
    cfg: &SsvmConfig,
    index: usize,
) -> Result<Candidate> {
    let mut problem = build_problem(ex.graph, w, map, &PairwiseContext::plain())?;
    augment_with_loss(&mut problem, ex.truth, loss)?;
    let inference = InferenceConfig {
        mode: PairwiseMode::Plain,
        alpha: 1.0,
        seed: cfg.seed.wrapping_add(index as u64),
        ..cfg.inference.clone()
    };
    let (y, _) = minimize(&problem, &inference)?;
    let labeling = Labeling(y);
    let psi = map.joint_feature_map_with(ex.graph, &ex.payloads, &labeling)?;
    let psi_diff = psi.iter().zip(&ex.psi_truth).map(|(a, b)| a - b).collect();
    let loss = weighted_hamming(ex.truth, &labeling, loss)?;
    Ok(Candidate {
        labeling,
        psi_diff,
        loss,
    })
}
