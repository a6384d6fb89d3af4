//! Unary and pairwise feature construction.
//!
//! The unary map places a per-node payload into the block selected by the
//! node's label: `[I(y=0) x, ..., I(y=K-1) x]`. The payload is either the
//! (standardized) raw feature vector or the K signed margins of a
//! one-vs-all linear SVM, which keeps the unary dimension at `K*K` for
//! high-dimensional inputs.

pub mod pairwise;
pub mod svm;

pub use pairwise::{PairwiseChannel, PairwiseFeatureSpec, RegionDescriptor};
pub use svm::{train_linear_svm, LinearSvmModel, SvmTrainConfig};

use crate::error::{Error, Result};
use crate::graph::{SuperpixelGraph, SuperpixelNode};

/// Per-dimension affine normalization `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fits zero mean / unit variance. Constant dimensions get scale 1.
    pub fn fit<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        let mut n = 0usize;
        for row in rows {
            for (i, v) in row.iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
            n += 1;
        }
        let n = n.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let scale = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / n - m * m).max(0.0);
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnaryMode {
    RawIndicator,
    SvmConfidence(LinearSvmModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnaryFeatureMap {
    pub num_classes: usize,
    pub feat_dim: usize,
    pub mode: UnaryMode,
    pub standardizer: Option<Standardizer>,
}

impl UnaryFeatureMap {
    pub fn raw(num_classes: usize, feat_dim: usize) -> Self {
        UnaryFeatureMap {
            num_classes,
            feat_dim,
            mode: UnaryMode::RawIndicator,
            standardizer: None,
        }
    }

    pub fn svm(model: LinearSvmModel) -> Self {
        UnaryFeatureMap {
            num_classes: model.num_classes(),
            feat_dim: model.feat_dim(),
            mode: UnaryMode::SvmConfidence(model),
            standardizer: None,
        }
    }

    pub fn with_standardizer(mut self, s: Standardizer) -> Self {
        self.standardizer = Some(s);
        self
    }

    /// Length of one label block.
    pub fn payload_dim(&self) -> usize {
        match &self.mode {
            UnaryMode::RawIndicator => self.feat_dim,
            UnaryMode::SvmConfidence(m) => m.num_classes(),
        }
    }

    /// Length of the full unary feature vector (`du`).
    pub fn unary_dim(&self) -> usize {
        self.num_classes * self.payload_dim()
    }

    /// Block payload for a raw feature vector.
    pub fn payload(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feat_dim {
            return Err(Error::DimensionMismatch {
                what: "node features",
                expected: self.feat_dim,
                found: features.len(),
            });
        }
        let x = match &self.standardizer {
            Some(s) => s.apply(features),
            None => features.to_vec(),
        };
        Ok(match &self.mode {
            UnaryMode::RawIndicator => x,
            UnaryMode::SvmConfidence(m) => m.scores(&x),
        })
    }

    pub fn graph_payloads(&self, g: &SuperpixelGraph) -> Result<Vec<Vec<f64>>> {
        if g.num_classes != self.num_classes {
            return Err(Error::DimensionMismatch {
                what: "classes",
                expected: self.num_classes,
                found: g.num_classes,
            });
        }
        g.nodes.iter().map(|n| self.payload(&n.features)).collect()
    }

    /// Dense unary feature vector of `node` under `label`.
    pub fn unary_map(&self, node: &SuperpixelNode, label: usize) -> Result<Vec<f64>> {
        if label >= self.num_classes {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: self.num_classes,
            });
        }
        let payload = self.payload(&node.features)?;
        let d = payload.len();
        let mut out = vec![0.0; self.unary_dim()];
        out[label * d..(label + 1) * d].copy_from_slice(&payload);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(features: Vec<f64>) -> SuperpixelNode {
        SuperpixelNode {
            id: 0,
            centroid_row: 0.0,
            centroid_col: 0.0,
            area: 1,
            features,
        }
    }

    #[test]
    fn raw_indicator_blocks() {
        let map = UnaryFeatureMap::raw(2, 2);
        let n = node(vec![0.5, -1.0]);
        assert_eq!(map.unary_map(&n, 0).unwrap(), vec![0.5, -1.0, 0.0, 0.0]);
        assert_eq!(map.unary_map(&n, 1).unwrap(), vec![0.0, 0.0, 0.5, -1.0]);
        assert!(matches!(
            map.unary_map(&node(vec![1.0]), 0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(map.unary_map(&n, 2).is_err());
    }

    #[test]
    fn svm_confidence_block() {
        // scores: w_k . x + b_k with x = (1, 2)
        let svm = LinearSvmModel {
            weights: vec![vec![0.1, 0.05], vec![-0.3, 0.1], vec![0.5, 0.2]],
            biases: vec![0.0, 0.0, 0.0],
        };
        let map = UnaryFeatureMap::svm(svm);
        let v = map.unary_map(&node(vec![1.0, 2.0]), 2).unwrap();
        assert_eq!(v.len(), 9);
        let expected = [0.1 + 0.1, -0.3 + 0.2, 0.5 + 0.4];
        assert!(v[..6].iter().all(|&x| x == 0.0));
        for (a, b) in v[6..].iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn standardizer_zero_mean_unit_variance() {
        let rows = [vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(2, rows.iter().map(|r| r.as_slice()));
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 5.0]), vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn blocks_are_disjoint_and_sum_to_payload(
            k in 2usize..5,
            feats in proptest::collection::vec(-10.0f64..10.0, 1..5),
        ) {
            let map = UnaryFeatureMap::raw(k, feats.len());
            let n = node(feats.clone());
            let maps: Vec<Vec<f64>> = (0..k).map(|y| map.unary_map(&n, y).unwrap()).collect();
            for a in 0..k {
                for b in 0..k {
                    if a != b {
                        let dot: f64 = maps[a].iter().zip(&maps[b]).map(|(x, y)| x * y).sum();
                        prop_assert_eq!(dot, 0.0);
                    }
                }
            }
            let d = feats.len();
            for block in 0..k {
                for i in 0..d {
                    let s: f64 = maps.iter().map(|m| m[block * d + i]).sum();
                    prop_assert_eq!(s, feats[i]);
                }
            }
        }
    }
}
