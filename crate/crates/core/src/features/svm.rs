//! One-vs-all linear SVMs trained by deterministic epoch-based subgradient
//! descent on the L2-regularized hinge loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LinearSvmModel {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn feat_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Signed margins `w_k . x + b_k`, one per class.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect()
    }

    /// Highest-scoring class; ties go to the smaller id.
    pub fn predict(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        let mut best = 0;
        for k in 1..s.len() {
            if s[k] > s[best] {
                best = k;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrainConfig {
    /// L2 regularization strength.
    pub reg: f64,
    pub max_epochs: usize,
    /// Relative objective decrease below which training stops.
    pub tol: f64,
    pub initial_step: f64,
    pub seed: u64,
}

impl SvmTrainConfig {
    pub fn new(reg: f64) -> Self {
        SvmTrainConfig {
            reg,
            max_epochs: 300,
            tol: 1e-7,
            initial_step: 0.1,
            seed: 0,
        }
    }
}

/// Objective values of the accepted iterates, per class.
#[derive(Debug, Clone, Default)]
pub struct SvmTrace {
    pub objectives: Vec<Vec<f64>>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn objective(w: &[f64], b: f64, xs: &[&[f64]], ys: &[f64], reg: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * reg * dot(w, w) + hinge / xs.len() as f64
}

pub fn train_linear_svm(
    examples: &[(Vec<f64>, usize)],
    num_classes: usize,
    cfg: &SvmTrainConfig,
) -> Result<LinearSvmModel> {
    train_linear_svm_traced(examples, num_classes, cfg).map(|(m, _)| m)
}

/// Trains K binary classifiers, class k against the rest. An epoch whose
/// objective is higher than the previous accepted one is rolled back and the
/// step size halved, so the accepted objective sequence never increases.
pub fn train_linear_svm_traced(
    examples: &[(Vec<f64>, usize)],
    num_classes: usize,
    cfg: &SvmTrainConfig,
) -> Result<(LinearSvmModel, SvmTrace)> {
    if !(cfg.reg > 0.0) {
        return Err(Error::InvalidConfig(
            "SVM regularization must be positive".into(),
        ));
    }
    if num_classes < 2 {
        return Err(Error::InvalidConfig(
            "SVM needs at least two classes".into(),
        ));
    }
    let dim = examples.first().map_or(0, |e| e.0.len());
    let mut present = vec![false; num_classes];
    for (x, y) in examples {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "SVM example",
                expected: dim,
                found: x.len(),
            });
        }
        if *y >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: *y,
                num_classes,
            });
        }
        present[*y] = true;
    }
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::SingleClassCorpus);
    }
    let xs: Vec<&[f64]> = examples.iter().map(|e| e.0.as_slice()).collect();

    let per_class: Vec<(Vec<f64>, f64, Vec<f64>)> = (0..num_classes)
        .into_par_iter()
        .map(|k| {
            let ys: Vec<f64> = examples
                .iter()
                .map(|e| if e.1 == k { 1.0 } else { -1.0 })
                .collect();
            train_binary(&xs, &ys, dim, cfg, cfg.seed.wrapping_add(k as u64))
        })
        .collect();

    let mut model = LinearSvmModel {
        weights: Vec::new(),
        biases: Vec::new(),
    };
    let mut trace = SvmTrace::default();
    for (w, b, obj) in per_class {
        model.weights.push(w);
        model.biases.push(b);
        trace.objectives.push(obj);
    }
    Ok((model, trace))
}

fn train_binary(
    xs: &[&[f64]],
    ys: &[f64],
    dim: usize,
    cfg: &SvmTrainConfig,
    seed: u64,
) -> (Vec<f64>, f64, Vec<f64>) {
    let n = xs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = objective(&w, b, xs, ys, cfg.reg);
    let mut history = vec![best];
    let mut step = cfg.initial_step;
    let mut t = 0.0f64;

    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut cw, mut cb, mut ct) = (w.clone(), b, t);
        for &i in &order {
            let eta = step / (1.0 + cfg.reg * step * ct);
            let margin = ys[i] * (dot(&cw, xs[i]) + cb);
            let shrink = 1.0 - eta * cfg.reg;
            cw.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, x) in cw.iter_mut().zip(xs[i]) {
                    *v += eta * ys[i] * x;
                }
                cb += eta * ys[i];
            }
            ct += 1.0;
        }
        let obj = objective(&cw, cb, xs, ys, cfg.reg);
        if obj <= best {
            let gain = best - obj;
            w = cw;
            b = cb;
            t = ct;
            best = obj;
            history.push(obj);
            if gain <= cfg.tol * best.max(1e-12) {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    (w, b, history)
}
