//! Superpixel graph data model.
//!
//! A graph is one image: nodes are superpixels with a feature vector, edges
//! connect adjacent superpixels. Every edge is stored once with `p < q`,
//! tagged with the spatial [`Relation`] of `p` with respect to `q`.

pub mod format;

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Ground-truth class id that is ignored by statistics and evaluation.
pub const VOID_LABEL: usize = 255;

/// Position of `p` relative to `q` on a directed edge `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Above = 0,
    Below = 1,
    LeftOf = 2,
    RightOf = 3,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Above,
        Relation::Below,
        Relation::LeftOf,
        Relation::RightOf,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn opposite(self) -> Self {
        match self {
            Relation::Above => Relation::Below,
            Relation::Below => Relation::Above,
            Relation::LeftOf => Relation::RightOf,
            Relation::RightOf => Relation::LeftOf,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Above => "above",
            Relation::Below => "below",
            Relation::LeftOf => "left_of",
            Relation::RightOf => "right_of",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelNode {
    pub id: usize,
    pub centroid_row: f64,
    pub centroid_col: f64,
    pub area: u64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub p: usize,
    pub q: usize,
    pub relation: Relation,
    pub boundary_length: f64,
    pub pairwise_features: Vec<f64>,
}

/// One class per superpixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn constant(n: usize, class: usize) -> Self {
        Labeling(vec![class; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Labeling {
    fn from(v: Vec<usize>) -> Self {
        Labeling(v)
    }
}

impl std::ops::Index<usize> for Labeling {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelGraph {
    pub nodes: Vec<SuperpixelNode>,
    pub edges: Vec<Edge>,
    pub feat_dim: usize,
    pub pfeat_dim: usize,
    pub num_classes: usize,
    pub ground_truth: Option<Labeling>,
}

impl SuperpixelGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn ground_truth(&self) -> Result<&Labeling> {
        self.ground_truth.as_ref().ok_or(Error::MissingGroundTruth)
    }

    /// Edges whose relation tag equals `relation` (one of the sets S1..S4).
    pub fn edges_with(&self, relation: Relation) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.relation == relation)
    }

    /// Checks every structural invariant of the data model.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.num_classes == 0 {
            return Err(Error::InvalidGraph("num_classes must be positive".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::InvalidGraph(format!(
                    "node at position {i} has id {}",
                    node.id
                )));
            }
            if node.area == 0 {
                return Err(Error::InvalidGraph(format!("node {i} has zero area")));
            }
            if node.features.len() != self.feat_dim {
                return Err(Error::DimensionMismatch {
                    what: "node features",
                    expected: self.feat_dim,
                    found: node.features.len(),
                });
            }
        }
        let mut seen = HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.p >= e.q {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) is not canonical (p < q)",
                    e.p, e.q
                )));
            }
            if e.q >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has a dangling endpoint",
                    e.p, e.q
                )));
            }
            if !seen.insert((e.p, e.q)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.p, e.q
                )));
            }
            if !(e.boundary_length > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive boundary length",
                    e.p, e.q
                )));
            }
            if e.pairwise_features.len() != self.pfeat_dim {
                return Err(Error::DimensionMismatch {
                    what: "edge pairwise features",
                    expected: self.pfeat_dim,
                    found: e.pairwise_features.len(),
                });
            }
        }
        if let Some(gt) = &self.ground_truth {
            self.check_labeling(gt, true)?;
        }
        Ok(())
    }

    /// Checks length and label range. `allow_void` admits [`VOID_LABEL`].
    pub fn check_labeling(&self, y: &Labeling, allow_void: bool) -> Result<()> {
        if y.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                found: y.len(),
            });
        }
        for &label in y.as_slice() {
            if label >= self.num_classes && !(allow_void && label == VOID_LABEL) {
                return Err(Error::LabelOutOfRange {
                    label,
                    num_classes: self.num_classes,
                });
            }
        }
        Ok(())
    }

    /// Total pixel count covered by the superpixels.
    pub fn total_area(&self) -> u64 {
        self.nodes.iter().map(|n| n.area).sum()
    }
}
