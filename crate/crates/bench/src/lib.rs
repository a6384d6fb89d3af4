//! Fixture generators shared by the benchmarks.

use ctxcrf::{
    Edge, JointFeatureMap, Relation, SuperpixelGraph, SuperpixelNode, UnaryFeatureMap, WeightVector,
};
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A `side x side` grid of superpixels, roughly what SLIC yields on a
/// natural image (side 26 gives ~700 nodes).
pub fn grid_graph(
    side: usize,
    num_classes: usize,
    feat_dim: usize,
    pfeat_dim: usize,
    seed: u64,
) -> SuperpixelGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |r: usize, c: usize| r * side + c;
    let nodes = (0..side * side)
        .map(|i| SuperpixelNode {
            id: i,
            centroid_row: (i / side) as f64 * 10.0,
            centroid_col: (i % side) as f64 * 10.0,
            area: 100,
            features: (0..feat_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect();
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let mut push = |q: usize, relation: Relation, rng: &mut ChaCha8Rng| {
                edges.push(Edge {
                    p: id(r, c),
                    q,
                    relation,
                    boundary_length: 10.0,
                    pairwise_features: (0..pfeat_dim).map(|_| rng.random_range(0.0..1.0)).collect(),
                })
            };
            if c + 1 < side {
                push(id(r, c + 1), Relation::LeftOf, &mut rng);
            }
            if r + 1 < side {
                push(id(r + 1, c), Relation::Above, &mut rng);
            }
        }
    }
    SuperpixelGraph {
        nodes,
        edges,
        feat_dim,
        pfeat_dim,
        num_classes,
        ground_truth: None,
    }
}

/// Raw unary map and weights with non-negative pairwise terms.
pub fn model(g: &SuperpixelGraph, seed: u64) -> (JointFeatureMap, WeightVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map = JointFeatureMap::new(UnaryFeatureMap::raw(g.num_classes, g.feat_dim));
    let w = WeightVector {
        unary: (0..map.unary_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
        pairwise: (0..map.pairwise_dim(g.pfeat_dim))
            .map(|_| rng.random_range(0.0..0.1))
            .collect(),
    };
    (map, w)
}

/// Piecewise-constant regions with pixel noise.
pub fn textured_image(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let palette: Vec<[u8; 3]> = (0..6)
        .map(|_| [rng.random(), rng.random(), rng.random()])
        .collect();
    RgbImage::from_fn(width, height, |x, y| {
        let region = ((x / 40 + y / 30 * 3) as usize) % palette.len();
        let noise: u8 = rng.random_range(0..20);
        Rgb(palette[region].map(|c| c.saturating_add(noise)))
    })
}
