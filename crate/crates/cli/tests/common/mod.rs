#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;

use ctxcrf::features::UnaryFeatureMap;
use ctxcrf::graph::{Edge, Labeling, Relation, SuperpixelGraph, SuperpixelNode};
use ctxcrf::{CoOccurrenceTable, JointFeatureMap, PairwiseMode, WeightVector};
use image::{GrayImage, Luma, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multiple of 1/4 in `[lo/4, hi/4]`. Sums and products of a few of these
/// are exact in f64, so energies computed in different orders agree bitwise.
pub fn dyadic(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    f64::from(rng.random_range(lo..=hi)) / 4.0
}

/// Co-occurrence counts kept independently of the library's table.
#[derive(Debug, Clone, Default)]
pub struct Counts {
    pub coexist: HashMap<(usize, usize), u64>,
    pub adjacent: HashMap<(usize, usize, usize), u64>,
}

impl Counts {
    pub fn n(&self, a: usize, b: usize) -> u64 {
        self.coexist.get(&(a, b)).copied().unwrap_or(0)
    }

    pub fn ni(&self, r: usize, a: usize, b: usize) -> u64 {
        self.adjacent.get(&(r, a, b)).copied().unwrap_or(0)
    }

    pub fn to_table_text(&self, k: usize) -> String {
        let mut out = format!("COOCCUR 1\nclasses {k}\n");
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    out.push_str(&format!(
                        "pair {a} {b} {} {} {} {} {}\n",
                        self.n(a, b),
                        self.ni(0, a, b),
                        self.ni(1, a, b),
                        self.ni(2, a, b),
                        self.ni(3, a, b)
                    ));
                }
            }
        }
        out
    }

    /// Power-of-two counts, so every `N / N_i` is dyadic.
    pub fn random(rng: &mut ChaCha8Rng, k: usize) -> Self {
        let mut c = Counts::default();
        for a in 0..k {
            for b in a + 1..k {
                let n = [0u64, 1, 2, 4][rng.random_range(0..4)];
                c.coexist.insert((a, b), n);
                c.coexist.insert((b, a), n);
                if n == 0 {
                    continue;
                }
                for r in 0..4 {
                    let choices: Vec<u64> =
                        [0u64, 1, 2, 4].into_iter().filter(|&v| v <= n).collect();
                    let v = choices[rng.random_range(0..choices.len())];
                    let opp = [1, 0, 3, 2][r];
                    c.adjacent.insert((r, a, b), v);
                    c.adjacent.insert((opp, b, a), v);
                }
            }
        }
        c
    }
}

/// A random CRF instance with raw indicator unaries and dyadic values.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: SuperpixelGraph,
    pub map: JointFeatureMap,
    pub w: WeightVector,
    pub mode: PairwiseMode,
    pub alpha: f64,
    pub counts: Counts,
    pub table: CoOccurrenceTable,
}

pub fn random_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    d: usize,
    pf: usize,
    density: f64,
) -> SuperpixelGraph {
    let nodes = (0..n)
        .map(|id| SuperpixelNode {
            id,
            centroid_row: f64::from(rng.random_range(0..20)),
            centroid_col: f64::from(rng.random_range(0..20)),
            area: rng.random_range(1..50),
            features: (0..d).map(|_| dyadic(rng, -8, 8)).collect(),
        })
        .collect();
    let mut edges = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            if rng.random_bool(density) {
                edges.push(Edge {
                    p,
                    q,
                    relation: Relation::from_code(rng.random_range(0..4)).unwrap(),
                    boundary_length: f64::from(rng.random_range(1..=4)),
                    pairwise_features: (0..pf).map(|_| dyadic(rng, 0, 8)).collect(),
                });
            }
        }
    }
    SuperpixelGraph {
        nodes,
        edges,
        feat_dim: d,
        pfeat_dim: pf,
        num_classes: k,
        ground_truth: None,
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_nodes: usize, max_classes: usize) -> Instance {
    let n = rng.random_range(1..=max_nodes);
    let k = rng.random_range(1..=max_classes);
    let d = rng.random_range(1..=3);
    let pf = rng.random_range(0..=2);
    let graph = random_graph(rng, n, k, d, pf, 0.5);
    let map = JointFeatureMap {
        unary: UnaryFeatureMap::raw(k, d),
        relation_blocks: rng.random_bool(0.5),
    };
    let w = WeightVector {
        unary: (0..map.unary_dim()).map(|_| dyadic(rng, -8, 8)).collect(),
        pairwise: (0..map.pairwise_dim(pf))
            .map(|_| dyadic(rng, -8, 8))
            .collect(),
    };
    let mode = [
        PairwiseMode::Plain,
        PairwiseMode::Mutex,
        PairwiseMode::CoOccur,
    ][rng.random_range(0..3)];
    let alpha = [0.5, 1.0, 1.5, 2.0][rng.random_range(0..4)];
    let counts = Counts::random(rng, k);
    let table =
        CoOccurrenceTable::parse(&counts.to_table_text(k)).expect("generated table is valid");
    Instance {
        graph,
        map,
        w,
        mode,
        alpha,
        counts,
        table,
    }
}

impl Instance {
    /// Energy computed straight from the definition; `None` when an adjacent
    /// pair is forbidden by the table.
    pub fn oracle_energy(&self, y: &[usize], mode: PairwiseMode) -> Option<f64> {
        let g = &self.graph;
        let d = g.feat_dim;
        let mut e = 0.0;
        for (p, node) in g.nodes.iter().enumerate() {
            for j in 0..d {
                e += self.w.unary[y[p] * d + j] * node.features[j];
            }
        }
        let pd = g.pfeat_dim.max(1);
        for edge in &g.edges {
            let (a, b) = (y[edge.p], y[edge.q]);
            if a == b {
                continue;
            }
            let r = edge.relation as usize;
            let ni = self.counts.ni(r, a, b);
            let mult = match mode {
                PairwiseMode::Plain => 1.0,
                PairwiseMode::Mutex if ni > 0 => 1.0,
                PairwiseMode::CoOccur if ni > 0 => self.counts.n(a, b) as f64 / ni as f64,
                _ => return None,
            };
            let payload: Vec<f64> = if edge.pairwise_features.is_empty() {
                vec![edge.boundary_length]
            } else {
                edge.pairwise_features
                    .iter()
                    .map(|f| edge.boundary_length * f)
                    .collect()
            };
            let off = if self.map.relation_blocks { r * pd } else { 0 };
            let base: f64 = (0..pd).map(|j| self.w.pairwise[off + j] * payload[j]).sum();
            e += self.alpha * mult * base;
        }
        Some(e)
    }
}

pub fn oracle_loss(truth: &[usize], y: &[usize], weights: &[f64]) -> f64 {
    truth
        .iter()
        .zip(y)
        .filter(|(t, p)| t != p)
        .map(|(t, _)| weights[*t])
        .sum()
}

/// Lexicographically first minimizer of `objective` over all `k^n`
/// labelings, skipping labelings where it returns `None`.
pub fn brute_force(
    n: usize,
    k: usize,
    objective: impl Fn(&[usize]) -> Option<f64>,
) -> Option<(Vec<usize>, f64)> {
    let total = (k as u64).pow(n as u32);
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut y = vec![0usize; n];
    for index in 0..total {
        let mut rest = index;
        for p in (0..n).rev() {
            y[p] = (rest % k as u64) as usize;
            rest /= k as u64;
        }
        if let Some(v) = objective(&y) {
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((y.clone(), v));
            }
        }
    }
    best
}

/// Synthetic outdoor scene: sky (0) above grass (1) with an object (2)
/// standing on the horizon. Returns the image and its class map.
pub fn scene(seed: u64, width: u32, height: u32, texture: bool) -> (RgbImage, GrayImage) {
    let mut rng = rng(seed);
    let (w, h) = (f64::from(width), f64::from(height));
    let horizon = rng.random_range(0.35..0.6) * h;
    let wave = rng.random_range(0.0..0.06) * h;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let cx = rng.random_range(0.25..0.75) * w;
    let rx = rng.random_range(0.1..0.18) * w;
    let ry = rng.random_range(0.1..0.16) * h;
    let cy = horizon + 0.3 * ry;
    let palette = [
        [
            rng.random_range(90..130),
            rng.random_range(150..190),
            rng.random_range(210..250),
        ],
        [
            rng.random_range(50..90),
            rng.random_range(140..180),
            rng.random_range(40..80),
        ],
        [
            rng.random_range(150..200),
            rng.random_range(60..100),
            rng.random_range(40..70),
        ],
    ];
    let mut img = RgbImage::new(width, height);
    let mut truth = GrayImage::new(width, height);
    for row in 0..height {
        for col in 0..width {
            let (r, c) = (f64::from(row), f64::from(col));
            let inside = ((c - cx) / rx).powi(2) + ((r - cy) / ry).powi(2) <= 1.0;
            let class = if inside {
                2
            } else if r < horizon + wave * (c / w * std::f64::consts::TAU + phase).sin() {
                0
            } else {
                1
            };
            let base: [i32; 3] = palette[class];
            let shade = if texture {
                (8.0 * ((r * 0.7).sin() + (c * 0.45).cos())) as i32
            } else {
                0
            };
            let px = base.map(|v| (v + shade + rng.random_range(-12..=12)).clamp(0, 255) as u8);
            img.put_pixel(col, row, Rgb(px));
            truth.put_pixel(col, row, Luma([class as u8]));
        }
    }
    (img, truth)
}

pub fn write_scene_corpus(dir: &Path, count: usize, size: u32, seed: u64) {
    let images = dir.join("images");
    let truth = dir.join("truth");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&truth).unwrap();
    for i in 0..count {
        let (img, gt) = scene(seed + i as u64, size, size, false);
        img.save(images.join(format!("img{i:03}.png"))).unwrap();
        gt.save(truth.join(format!("img{i:03}.png"))).unwrap();
    }
}

pub fn labeling(y: &[usize]) -> Labeling {
    Labeling(y.to_vec())
}
