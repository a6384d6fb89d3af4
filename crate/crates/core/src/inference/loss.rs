use crate::error::{Error, Result};
use crate::graph::{Labeling, SuperpixelGraph, VOID_LABEL};

/// Per-class weights of the weighted Hamming loss
/// `Delta(y, y') = sum_p c[y_p] * I(y_p != y'_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    weights: Vec<f64>,
}

impl LossSpec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidConfig(
                "loss weights must be positive and finite".into(),
            ));
        }
        Ok(LossSpec { weights })
    }

    pub fn uniform(num_classes: usize) -> Self {
        LossSpec {
            weights: vec![1.0; num_classes],
        }
    }

    /// All-zero weights. Only meaningful in tests, where it reduces
    /// loss-augmented inference to plain MAP inference.
    #[doc(hidden)]
    pub fn zeros_for_testing(num_classes: usize) -> Self {
        LossSpec {
            weights: vec![0.0; num_classes],
        }
    }

    /// Weights inversely proportional to each class's pixel frequency in the
    /// labeled corpus, normalized to mean 1. Classes absent from the corpus
    /// get the largest weight among present classes.
    pub fn inverse_frequency(corpus: &[SuperpixelGraph], num_classes: usize) -> Result<Self> {
        let mut pixels = vec![0u64; num_classes];
        for g in corpus {
            let y = g.ground_truth()?;
            for (node, &c) in g.nodes.iter().zip(y.as_slice()) {
                if c == VOID_LABEL {
                    continue;
                }
                if c >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        label: c,
                        num_classes,
                    });
                }
                pixels[c] += node.area;
            }
        }
        let total: u64 = pixels.iter().sum();
        if total == 0 {
            return Err(Error::InconsistentCorpus("no labeled pixels".into()));
        }
        let raw: Vec<Option<f64>> = pixels
            .iter()
            .map(|&n| (n > 0).then(|| total as f64 / n as f64))
            .collect();
        let fallback = raw.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
        let raw: Vec<f64> = raw.into_iter().map(|v| v.unwrap_or(fallback)).collect();
        let mean = raw.iter().sum::<f64>() / num_classes as f64;
        LossSpec::new(raw.iter().map(|v| v / mean).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, class: usize) -> f64 {
        self.weights[class]
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }
}

/// Weighted Hamming loss, weighted by the class of `y` (the reference).
pub fn weighted_hamming(y: &Labeling, y2: &Labeling, loss: &LossSpec) -> Result<f64> {
    if y.len() != y2.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: y2.len(),
        });
    }
    let mut total = 0.0;
    for (&a, &b) in y.as_slice().iter().zip(y2.as_slice()) {
        if a != b {
            let w = *loss.weights.get(a).ok_or(Error::LabelOutOfRange {
                label: a,
                num_classes: loss.num_classes(),
            })?;
            total += w;
        }
    }
    Ok(total)
}
