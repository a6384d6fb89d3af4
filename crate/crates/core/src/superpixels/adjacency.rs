use std::collections::BTreeMap;

use super::LabelRaster;
use crate::graph::{Edge, Labeling, Relation, SuperpixelGraph, SuperpixelNode, VOID_LABEL};

/// Adjacent region pairs `(p, q, boundary_length)` with `p < q`, sorted.
/// The boundary length counts 4-adjacent pixel pairs straddling the regions.
pub fn build_adjacency(raster: &LabelRaster) -> Vec<(usize, usize, u64)> {
    let (w, h) = (raster.width as usize, raster.height as usize);
    let a = &raster.assignments;
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut bump = |x: u32, y: u32| {
        if x != y {
            let (p, q) = if x < y { (x, y) } else { (y, x) };
            *counts.entry((p as usize, q as usize)).or_insert(0) += 1;
        }
    };
    for r in 0..h {
        for c in 0..w {
            let idx = r * w + c;
            if c + 1 < w {
                bump(a[idx], a[idx + 1]);
            }
            if r + 1 < h {
                bump(a[idx], a[idx + w]);
            }
        }
    }
    counts.into_iter().map(|((p, q), n)| (p, q, n)).collect()
}

/// Relation of a region centred at `p` with respect to one centred at `q`,
/// given as `(row, col)`. The axis with the larger displacement decides;
/// equal displacements resolve to the vertical axis. Identical centroids
/// yield `LeftOf`, which for canonical edges means the smaller id is left.
pub fn tag_relation(p: (f64, f64), q: (f64, f64)) -> Relation {
    let (dr, dc) = (q.0 - p.0, q.1 - p.1);
    if dr == 0.0 && dc == 0.0 {
        return Relation::LeftOf;
    }
    if dr.abs() >= dc.abs() {
        if p.0 < q.0 {
            Relation::Above
        } else {
            Relation::Below
        }
    } else if p.1 < q.1 {
        Relation::LeftOf
    } else {
        Relation::RightOf
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub area: u64,
    pub centroid_row: f64,
    pub centroid_col: f64,
}

pub fn region_stats(raster: &LabelRaster) -> Vec<RegionStats> {
    let n = raster.num_regions();
    let mut acc = vec![(0u64, 0.0f64, 0.0f64); n];
    let w = raster.width as usize;
    for (idx, &a) in raster.assignments.iter().enumerate() {
        let s = &mut acc[a as usize];
        s.0 += 1;
        s.1 += (idx / w) as f64;
        s.2 += (idx % w) as f64;
    }
    acc.into_iter()
        .map(|(area, r, c)| {
            let d = area.max(1) as f64;
            RegionStats {
                area,
                centroid_row: r / d,
                centroid_col: c / d,
            }
        })
        .collect()
}

/// Graph skeleton for a raster: nodes with centroids and areas, edges with
/// relations and boundary lengths, empty feature vectors.
pub fn build_skeleton(raster: &LabelRaster, num_classes: usize) -> SuperpixelGraph {
    let stats = region_stats(raster);
    let nodes = stats
        .iter()
        .enumerate()
        .map(|(id, s)| SuperpixelNode {
            id,
            centroid_row: s.centroid_row,
            centroid_col: s.centroid_col,
            area: s.area,
            features: Vec::new(),
        })
        .collect();
    let edges = build_adjacency(raster)
        .into_iter()
        .map(|(p, q, len)| Edge {
            p,
            q,
            relation: tag_relation(
                (stats[p].centroid_row, stats[p].centroid_col),
                (stats[q].centroid_row, stats[q].centroid_col),
            ),
            boundary_length: len as f64,
            pairwise_features: Vec::new(),
        })
        .collect();
    SuperpixelGraph {
        nodes,
        edges,
        feat_dim: 0,
        pfeat_dim: 0,
        num_classes,
        ground_truth: None,
    }
}

/// Majority vote of a per-pixel class map inside each superpixel. Pixels
/// equal to [`VOID_LABEL`] abstain; ties go to the smaller class. Also
/// returns the number of pixels whose class differs from their region's vote.
pub fn project_labels(
    raster: &LabelRaster,
    pixel_classes: &[usize],
    num_classes: usize,
) -> (Labeling, u64) {
    let n = raster.num_regions();
    let mut votes = vec![vec![0u64; num_classes]; n];
    for (&a, &c) in raster.assignments.iter().zip(pixel_classes) {
        if c < num_classes {
            votes[a as usize][c] += 1;
        }
    }
    let labels: Vec<usize> = votes
        .iter()
        .map(|v| {
            let (best, count) =
                v.iter().enumerate().fold(
                    (VOID_LABEL, 0u64),
                    |b, (k, &c)| if c > b.1 { (k, c) } else { b },
                );
            if count == 0 {
                VOID_LABEL
            } else {
                best
            }
        })
        .collect();
    let mismatched = raster
        .assignments
        .iter()
        .zip(pixel_classes)
        .filter(|(&a, &c)| c != VOID_LABEL && labels[a as usize] != c)
        .count() as u64;
    (Labeling(labels), mismatched)
}
