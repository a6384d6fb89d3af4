//! CRF energy `E(y, x; w) = <w, Psi(x, y)>` and its potential tables.
//!
//! The joint feature map stacks the summed unary maps and the summed
//! pairwise maps. A pairwise map places `L_pq * I(y_p != y_q) * f_pq` into
//! the sub-block of the edge's spatial relation, where `f_pq` is the edge's
//! pairwise feature vector (or the scalar 1 when the graph carries none).

pub mod cooccur;

use crate::error::{Error, Result};
use crate::features::UnaryFeatureMap;
use crate::graph::{Edge, Labeling, SuperpixelGraph};
use crate::inference::LabelingProblem;
use cooccur::{CoOccurrenceTable, Multiplier};

/// Base factor of the finite stand-in for an infinite co-occurrence potential.
pub const CLAMP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub unary: Vec<f64>,
    pub pairwise: Vec<f64>,
}

impl WeightVector {
    pub fn zeros(unary_dim: usize, pairwise_dim: usize) -> Self {
        WeightVector {
            unary: vec![0.0; unary_dim],
            pairwise: vec![0.0; pairwise_dim],
        }
    }

    pub fn from_stacked(v: &[f64], unary_dim: usize) -> Self {
        WeightVector {
            unary: v[..unary_dim].to_vec(),
            pairwise: v[unary_dim..].to_vec(),
        }
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.unary.clone();
        v.extend(&self.pairwise);
        v
    }

    pub fn len(&self) -> usize {
        self.unary.len() + self.pairwise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm(&self) -> f64 {
        (dot(&self.unary, &self.unary) + dot(&self.pairwise, &self.pairwise)).sqrt()
    }

    /// `<w1, psi_unary> + <w2, psi_pairwise>` for a stacked feature vector.
    pub fn dot(&self, psi: &[f64]) -> f64 {
        let du = self.unary.len();
        dot(&self.unary, &psi[..du]) + dot(&self.pairwise, &psi[du..])
    }

    pub fn is_finite(&self) -> bool {
        self.unary
            .iter()
            .chain(&self.pairwise)
            .all(|v| v.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairwiseMode {
    /// `I(y_p != y_q)` only.
    Plain,
    /// Plain, but label pairs never seen in the edge's relation are forbidden.
    Mutex,
    /// Scaled by the co-occurrence potential `g_i = N_pq / N^i_pq`.
    CoOccur,
}

impl PairwiseMode {
    pub fn name(self) -> &'static str {
        match self {
            PairwiseMode::Plain => "plain",
            PairwiseMode::Mutex => "mutex",
            PairwiseMode::CoOccur => "cooccur",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(PairwiseMode::Plain),
            "mutex" => Some(PairwiseMode::Mutex),
            "cooccur" => Some(PairwiseMode::CoOccur),
            _ => None,
        }
    }

    pub fn needs_table(self) -> bool {
        self != PairwiseMode::Plain
    }
}

/// Unary map plus the layout of the pairwise block.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFeatureMap {
    pub unary: UnaryFeatureMap,
    /// One pairwise sub-block per spatial relation (4 blocks) or a single
    /// shared block.
    pub relation_blocks: bool,
}

impl JointFeatureMap {
    pub fn new(unary: UnaryFeatureMap) -> Self {
        JointFeatureMap {
            unary,
            relation_blocks: true,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.unary.num_classes
    }

    pub fn unary_dim(&self) -> usize {
        self.unary.unary_dim()
    }

    pub fn edge_payload_dim(pfeat_dim: usize) -> usize {
        pfeat_dim.max(1)
    }

    pub fn pairwise_dim(&self, pfeat_dim: usize) -> usize {
        let blocks = if self.relation_blocks { 4 } else { 1 };
        blocks * Self::edge_payload_dim(pfeat_dim)
    }

    pub fn dim(&self, pfeat_dim: usize) -> usize {
        self.unary_dim() + self.pairwise_dim(pfeat_dim)
    }

    fn block_offset(&self, e: &Edge, payload_dim: usize) -> usize {
        if self.relation_blocks {
            e.relation.code() * payload_dim
        } else {
            0
        }
    }

    /// `L_pq * f_pq`, or `[L_pq]` for graphs without pairwise features.
    pub fn edge_payload(e: &Edge) -> Vec<f64> {
        if e.pairwise_features.is_empty() {
            vec![e.boundary_length]
        } else {
            e.pairwise_features
                .iter()
                .map(|f| e.boundary_length * f)
                .collect()
        }
    }

    pub fn check(&self, g: &SuperpixelGraph, w: Option<&WeightVector>) -> Result<()> {
        if g.num_classes != self.num_classes() {
            return Err(Error::DimensionMismatch {
                what: "classes",
                expected: self.num_classes(),
                found: g.num_classes,
            });
        }
        if g.feat_dim != self.unary.feat_dim {
            return Err(Error::DimensionMismatch {
                what: "feat_dim",
                expected: self.unary.feat_dim,
                found: g.feat_dim,
            });
        }
        if let Some(w) = w {
            if w.unary.len() != self.unary_dim() {
                return Err(Error::DimensionMismatch {
                    what: "unary weights",
                    expected: self.unary_dim(),
                    found: w.unary.len(),
                });
            }
            let dp = self.pairwise_dim(g.pfeat_dim);
            if w.pairwise.len() != dp {
                return Err(Error::DimensionMismatch {
                    what: "pairwise weights",
                    expected: dp,
                    found: w.pairwise.len(),
                });
            }
        }
        Ok(())
    }

    /// `Psi(x, y)`: summed unary maps followed by summed pairwise maps.
    pub fn joint_feature_map(&self, g: &SuperpixelGraph, y: &Labeling) -> Result<Vec<f64>> {
        self.check(g, None)?;
        g.check_labeling(y, false)?;
        let payloads = self.unary.graph_payloads(g)?;
        self.joint_feature_map_with(g, &payloads, y)
    }

    /// As [`joint_feature_map`](Self::joint_feature_map) with precomputed
    /// node payloads.
    pub fn joint_feature_map_with(
        &self,
        g: &SuperpixelGraph,
        payloads: &[Vec<f64>],
        y: &Labeling,
    ) -> Result<Vec<f64>> {
        let du = self.unary_dim();
        let mut psi = vec![0.0; self.dim(g.pfeat_dim)];
        for (p, payload) in payloads.iter().enumerate() {
            let off = y[p] * payload.len();
            for (i, v) in payload.iter().enumerate() {
                psi[off + i] += v;
            }
        }
        let pd = Self::edge_payload_dim(g.pfeat_dim);
        for e in &g.edges {
            if y[e.p] != y[e.q] {
                let off = du + self.block_offset(e, pd);
                for (i, v) in Self::edge_payload(e).iter().enumerate() {
                    psi[off + i] += v;
                }
            }
        }
        Ok(psi)
    }
}

/// Everything that shapes the pairwise term at prediction time.
#[derive(Debug, Clone, Copy)]
pub struct PairwiseContext<'a> {
    pub mode: PairwiseMode,
    pub alpha: f64,
    pub table: Option<&'a CoOccurrenceTable>,
}

impl<'a> PairwiseContext<'a> {
    pub fn plain() -> Self {
        PairwiseContext {
            mode: PairwiseMode::Plain,
            alpha: 1.0,
            table: None,
        }
    }

    pub fn new(
        mode: PairwiseMode,
        alpha: f64,
        table: Option<&'a CoOccurrenceTable>,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if mode.needs_table() && table.is_none() {
            return Err(Error::MissingTable(mode.name()));
        }
        Ok(PairwiseContext { mode, alpha, table })
    }

    fn multiplier(&self, e: &Edge, a: usize, b: usize) -> Multiplier {
        match (self.mode, self.table) {
            (PairwiseMode::Plain, _) | (_, None) => Multiplier::Scale(1.0),
            (mode, Some(t)) => t.multiplier(mode, e.relation, a, b),
        }
    }
}

/// Precomputed per-graph quantities shared by energy evaluation and
/// potential-table construction.
struct Prepared {
    /// Unary potential per node and label.
    unary: Vec<Vec<f64>>,
    /// `<w2 block, edge payload>` per edge.
    edge_base: Vec<f64>,
}

fn prepare(g: &SuperpixelGraph, w: &WeightVector, map: &JointFeatureMap) -> Result<Prepared> {
    map.check(g, Some(w))?;
    let payloads = map.unary.graph_payloads(g)?;
    let k = map.num_classes();
    let unary = payloads
        .iter()
        .map(|x| {
            (0..k)
                .map(|c| dot(&w.unary[c * x.len()..(c + 1) * x.len()], x))
                .collect()
        })
        .collect();
    let pd = JointFeatureMap::edge_payload_dim(g.pfeat_dim);
    let edge_base = g
        .edges
        .iter()
        .map(|e| {
            let off = map.block_offset(e, pd);
            dot(
                &w.pairwise[off..off + pd],
                &JointFeatureMap::edge_payload(e),
            )
        })
        .collect();
    Ok(Prepared { unary, edge_base })
}

/// Finite penalty standing in for an infinite co-occurrence potential:
/// `CLAMP_FACTOR * (1 + max |unary| + max |finite pairwise|)` over the graph.
/// It exceeds the total energy swing of any labeling on graphs with fewer than
/// `CLAMP_FACTOR / 2` nodes plus edges, so a forbidden pair is never chosen
/// when an alternative exists.
fn clamp_from(prep: &Prepared, g: &SuperpixelGraph, ctx: &PairwiseContext) -> f64 {
    let k = prep.unary.first().map_or(0, Vec::len);
    let max_unary = prep
        .unary
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut max_pair = 0.0f64;
    for (e, base) in g.edges.iter().zip(&prep.edge_base) {
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    if let Multiplier::Scale(s) = ctx.multiplier(e, a, b) {
                        max_pair = max_pair.max((ctx.alpha * s * base).abs());
                    }
                }
            }
        }
    }
    CLAMP_FACTOR * (1.0 + max_unary + max_pair)
}

/// The clamp value used for `g` under the given weights and context.
pub fn clamp_value(
    g: &SuperpixelGraph,
    w: &WeightVector,
    map: &JointFeatureMap,
    ctx: &PairwiseContext,
) -> Result<f64> {
    let prep = prepare(g, w, map)?;
    Ok(clamp_from(&prep, g, ctx))
}

/// Energy of labeling `y`, evaluated through the feature-map route:
/// `<w1, Psi_1> + alpha * <w2, sum_e s_e * phi_e> + M * (#forbidden edges)`.
/// In plain mode with `alpha = 1` this is exactly `w.dot(Psi)`.
pub fn energy(
    g: &SuperpixelGraph,
    y: &Labeling,
    w: &WeightVector,
    map: &JointFeatureMap,
    ctx: &PairwiseContext,
) -> Result<f64> {
    map.check(g, Some(w))?;
    g.check_labeling(y, false)?;
    let payloads = map.unary.graph_payloads(g)?;
    let du = map.unary_dim();
    let mut psi_unary = vec![0.0; du];
    for (p, payload) in payloads.iter().enumerate() {
        let off = y[p] * payload.len();
        for (i, v) in payload.iter().enumerate() {
            psi_unary[off + i] += v;
        }
    }
    let pd = JointFeatureMap::edge_payload_dim(g.pfeat_dim);
    let mut psi_pair = vec![0.0; map.pairwise_dim(g.pfeat_dim)];
    let mut forbidden = 0usize;
    for e in &g.edges {
        let (a, b) = (y[e.p], y[e.q]);
        if a == b {
            continue;
        }
        match ctx.multiplier(e, a, b) {
            Multiplier::Scale(s) => {
                let off = map.block_offset(e, pd);
                for (i, v) in JointFeatureMap::edge_payload(e).iter().enumerate() {
                    psi_pair[off + i] += s * v;
                }
            }
            Multiplier::Forbidden => forbidden += 1,
        }
    }
    let mut total = dot(&w.unary, &psi_unary) + ctx.alpha * dot(&w.pairwise, &psi_pair);
    if forbidden > 0 {
        let prep = prepare(g, w, map)?;
        total += clamp_from(&prep, g, ctx) * forbidden as f64;
    }
    Ok(total)
}

/// Unary and pairwise potential tables of `g`, ready for inference.
pub fn build_problem(
    g: &SuperpixelGraph,
    w: &WeightVector,
    map: &JointFeatureMap,
    ctx: &PairwiseContext,
) -> Result<LabelingProblem> {
    let prep = prepare(g, w, map)?;
    let k = map.num_classes();
    let clamp = clamp_from(&prep, g, ctx);
    let mut problem = LabelingProblem::new(g.num_nodes(), k);
    for (p, row) in prep.unary.iter().enumerate() {
        problem.unary_mut(p).copy_from_slice(row);
    }
    for (e, base) in g.edges.iter().zip(&prep.edge_base) {
        let mut costs = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    costs[a * k + b] = match ctx.multiplier(e, a, b) {
                        Multiplier::Scale(s) => ctx.alpha * (s * base),
                        Multiplier::Forbidden => clamp,
                    };
                }
            }
        }
        problem.add_edge(e.p, e.q, costs);
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Relation, SuperpixelNode};

    fn node(id: usize, features: Vec<f64>) -> SuperpixelNode {
        SuperpixelNode {
            id,
            centroid_row: 0.0,
            centroid_col: id as f64,
            area: 1,
            features,
        }
    }

    fn path_graph() -> SuperpixelGraph {
        SuperpixelGraph {
            nodes: vec![
                node(0, vec![1.0, 2.0]),
                node(1, vec![-1.0, 0.5]),
                node(2, vec![3.0, 0.0]),
            ],
            edges: vec![
                Edge {
                    p: 0,
                    q: 1,
                    relation: Relation::LeftOf,
                    boundary_length: 2.0,
                    pairwise_features: vec![0.5],
                },
                Edge {
                    p: 1,
                    q: 2,
                    relation: Relation::Above,
                    boundary_length: 3.0,
                    pairwise_features: vec![2.0],
                },
            ],
            feat_dim: 2,
            pfeat_dim: 1,
            num_classes: 2,
            ground_truth: None,
        }
    }

    #[test]
    fn path_graph_feature_map_by_hand() {
        let g = path_graph();
        let map = JointFeatureMap::new(UnaryFeatureMap::raw(2, 2));
        let psi = map.joint_feature_map(&g, &Labeling(vec![0, 1, 1])).unwrap();
        // unary: block 0 gets node 0, block 1 gets nodes 1 + 2
        // pairwise: only edge (0,1) is cut, LeftOf block (index 2), payload 2 * 0.5
        assert_eq!(psi, vec![1.0, 2.0, 2.0, 0.5, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn constant_labeling_has_no_pairwise_mass() {
        let g = path_graph();
        let map = JointFeatureMap::new(UnaryFeatureMap::raw(2, 2));
        for c in 0..2 {
            let psi = map
                .joint_feature_map(&g, &Labeling::constant(3, c))
                .unwrap();
            assert!(psi[4..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_node_energy() {
        let g = SuperpixelGraph {
            nodes: vec![node(0, vec![2.0, 3.0])],
            edges: vec![],
            feat_dim: 2,
            pfeat_dim: 0,
            num_classes: 2,
            ground_truth: None,
        };
        let map = JointFeatureMap::new(UnaryFeatureMap::raw(2, 2));
        let w = WeightVector {
            unary: vec![1.0, 0.0, 0.0, 0.0],
            pairwise: vec![0.0; 4],
        };
        let e = energy(&g, &Labeling(vec![0]), &w, &map, &PairwiseContext::plain()).unwrap();
        assert_eq!(e, 2.0);
        let zero = WeightVector::zeros(4, 4);
        assert_eq!(
            energy(
                &g,
                &Labeling(vec![1]),
                &zero,
                &map,
                &PairwiseContext::plain()
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn missing_table_and_bad_alpha() {
        assert!(matches!(
            PairwiseContext::new(PairwiseMode::CoOccur, 1.0, None),
            Err(Error::MissingTable(_))
        ));
        assert!(PairwiseContext::new(PairwiseMode::Plain, 0.0, None).is_err());
        assert!(PairwiseContext::new(PairwiseMode::Plain, f64::INFINITY, None).is_err());
    }

    #[test]
    fn shared_block_layout() {
        let g = path_graph();
        let map = JointFeatureMap {
            unary: UnaryFeatureMap::raw(2, 2),
            relation_blocks: false,
        };
        let psi = map.joint_feature_map(&g, &Labeling(vec![0, 1, 0])).unwrap();
        assert_eq!(psi.len(), 5);
        assert_eq!(psi[4], 1.0 + 6.0);
    }
}
