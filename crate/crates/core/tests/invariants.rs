use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ctxcrf::energy::{build_problem, energy, PairwiseContext};
use ctxcrf::inference::{alpha_expansion_from, expansion_move, icm_from};
use ctxcrf::superpixels::{build_skeleton, slic_segment_traced, tag_relation};
use ctxcrf::{
    CoOccurrenceTable, Edge, JointFeatureMap, Labeling, PairwiseMode, Relation, SlicConfig,
    SuperpixelGraph, SuperpixelNode, UnaryFeatureMap, WeightVector,
};
use image::{Rgb, RgbImage};

fn quarter(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    rng.random_range(lo * 4..=hi * 4) as f64 / 4.0
}

struct Fixture {
    g: SuperpixelGraph,
    map: JointFeatureMap,
    w: WeightVector,
    table: CoOccurrenceTable,
    y: Labeling,
}

fn fixture(seed: u64, n: usize, k: usize, nonneg_pairwise: bool) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=3);
    let pf = rng.random_range(0..=2);
    let mut edges = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            if q == p + 1 || rng.random_bool(0.3) {
                edges.push(Edge {
                    p,
                    q,
                    relation: Relation::from_code(rng.random_range(0..4)).unwrap(),
                    boundary_length: rng.random_range(1..6) as f64,
                    pairwise_features: (0..pf).map(|_| quarter(&mut rng, 0, 2)).collect(),
                });
            }
        }
    }
    let mut g = SuperpixelGraph {
        nodes: (0..n)
            .map(|id| SuperpixelNode {
                id,
                centroid_row: id as f64,
                centroid_col: 0.0,
                area: rng.random_range(1..50),
                features: (0..d).map(|_| quarter(&mut rng, -2, 2)).collect(),
            })
            .collect(),
        edges,
        feat_dim: d,
        pfeat_dim: pf,
        num_classes: k,
        ground_truth: None,
    };
    // table from a few labelings of the same graph
    let corpus: Vec<SuperpixelGraph> = (0..3)
        .map(|_| {
            let mut h = g.clone();
            h.ground_truth = Some(Labeling((0..n).map(|_| rng.random_range(0..k)).collect()));
            h
        })
        .collect();
    let table = CoOccurrenceTable::build(&corpus).unwrap();
    let mut map = JointFeatureMap::new(UnaryFeatureMap::raw(k, d));
    map.relation_blocks = rng.random_bool(0.5);
    let lo = if nonneg_pairwise { 0 } else { -2 };
    let w = WeightVector {
        unary: (0..map.unary_dim())
            .map(|_| quarter(&mut rng, -3, 3))
            .collect(),
        pairwise: (0..map.pairwise_dim(pf))
            .map(|_| quarter(&mut rng, lo, 2))
            .collect(),
    };
    let y = Labeling((0..n).map(|_| rng.random_range(0..k)).collect());
    g.ground_truth = Some(y.clone());
    Fixture {
        g,
        map,
        w,
        table,
        y,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn modes() -> impl Strategy<Value = PairwiseMode> {
    prop_oneof![
        Just(PairwiseMode::Plain),
        Just(PairwiseMode::Mutex),
        Just(PairwiseMode::CoOccur)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn energy_is_linear_in_the_joint_feature_map(seed in any::<u64>(), n in 1usize..9, k in 1usize..4) {
        let f = fixture(seed, n, k, false);
        let psi = f.map.joint_feature_map(&f.g, &f.y).unwrap();
        prop_assert_eq!(psi.len(), f.map.dim(f.g.pfeat_dim));
        let e = energy(&f.g, &f.y, &f.w, &f.map, &PairwiseContext::plain()).unwrap();
        prop_assert!(close(e, f.w.dot(&psi)));

        let w2 = WeightVector { unary: f.w.unary.iter().map(|x| 0.5 - x).collect(), pairwise: f.w.pairwise.iter().map(|x| x * 3.0).collect() };
        let sum = WeightVector::from_stacked(&f.w.stacked().iter().zip(w2.stacked()).map(|(a, b)| a + b).collect::<Vec<_>>(), f.w.unary.len());
        let e2 = energy(&f.g, &f.y, &w2, &f.map, &PairwiseContext::plain()).unwrap();
        let es = energy(&f.g, &f.y, &sum, &f.map, &PairwiseContext::plain()).unwrap();
        prop_assert!(close(es, e + e2));
    }

    #[test]
    fn energy_decomposes_into_unary_and_pairwise_costs(seed in any::<u64>(), n in 1usize..9, k in 1usize..4, mode in modes(), alpha in 0.0f64..3.0) {
        let f = fixture(seed, n, k, false);
        let ctx = PairwiseContext::new(mode, alpha, Some(&f.table)).unwrap();
        let problem = build_problem(&f.g, &f.w, &f.map, &ctx).unwrap();
        let direct = energy(&f.g, &f.y, &f.w, &f.map, &ctx).unwrap();
        let y = f.y.as_slice();
        let unary: f64 = (0..n).map(|p| problem.unary(p)[y[p]]).sum();
        let pairwise: f64 = (0..problem.num_edges()).map(|e| { let (p, q) = problem.edge(e); problem.pair_cost(e, y[p], y[q]) }).sum();
        prop_assert!(close(direct, problem.energy(y)));
        prop_assert!(close(direct, unary + pairwise));
        // equal labels never pay a pairwise cost
        for e in 0..problem.num_edges() {
            for a in 0..k {
                prop_assert_eq!(problem.pair_cost(e, a, a), 0.0);
            }
        }
    }

    #[test]
    fn unary_blocks_sum_to_the_node_payloads(seed in any::<u64>(), n in 1usize..9, k in 1usize..4) {
        let f = fixture(seed, n, k, false);
        let psi = f.map.joint_feature_map(&f.g, &f.y).unwrap();
        let d = f.g.feat_dim;
        for j in 0..d {
            let over_labels: f64 = (0..k).map(|c| psi[c * d + j]).sum();
            let over_nodes: f64 = f.g.nodes.iter().map(|nd| nd.features[j]).sum();
            prop_assert!(close(over_labels, over_nodes));
        }
    }

    #[test]
    fn energy_ignores_node_order(seed in any::<u64>(), n in 2usize..9, k in 1usize..4, mode in modes()) {
        let mut f = fixture(seed, n, k, false);
        // relation sub-blocks follow edge orientation, so only a shared block is order-free
        f.map.relation_blocks = false;
        f.w.pairwise.truncate(f.map.pairwise_dim(f.g.pfeat_dim));
        // reverse node ids; edges flip orientation and relation
        let rev = |i: usize| n - 1 - i;
        let mut h = f.g.clone();
        h.nodes = f.g.nodes.iter().rev().cloned().enumerate().map(|(id, nd)| SuperpixelNode { id, ..nd }).collect();
        h.edges = f.g.edges.iter().map(|e| Edge { p: rev(e.q), q: rev(e.p), relation: e.relation.opposite(), ..e.clone() }).collect();
        let y2 = Labeling((0..n).map(|i| f.y[rev(i)]).collect());
        h.ground_truth = Some(y2.clone());
        h.validate().unwrap();
        let ctx = PairwiseContext::new(mode, 1.5, Some(&f.table)).unwrap();
        let a = energy(&f.g, &f.y, &f.w, &f.map, &ctx).unwrap();
        let b = energy(&h, &y2, &f.w, &f.map, &ctx).unwrap();
        prop_assert!(close(a, b), "{} vs {}", a, b);
    }

    #[test]
    fn cooccurrence_tables_are_consistent(seed in any::<u64>(), n in 1usize..9, k in 1usize..5) {
        let f = fixture(seed, n, k, false);
        f.table.check_invariants().unwrap();
        f.table.thresholded().check_invariants().unwrap();
        for r in Relation::ALL {
            for a in 0..k {
                for b in 0..k {
                    prop_assert_eq!(f.table.adjacent(r, a, b), f.table.adjacent(r.opposite(), b, a));
                    prop_assert_eq!(f.table.coexist(a, b), f.table.coexist(b, a));
                    prop_assert!(f.table.adjacent(r, a, b) <= f.table.coexist(a, b) || a == b);
                }
            }
        }
    }

    #[test]
    fn icm_descends_to_a_local_minimum(seed in any::<u64>(), n in 1usize..10, k in 1usize..4, mode in modes()) {
        let f = fixture(seed, n, k, false);
        let ctx = PairwiseContext::new(mode, 1.0, Some(&f.table)).unwrap();
        let problem = build_problem(&f.g, &f.w, &f.map, &ctx).unwrap();
        let start = f.y.as_slice().to_vec();
        let (y, e) = icm_from(&problem, start.clone(), 1000);
        prop_assert!(e <= problem.energy(&start));
        prop_assert!(close(e, problem.energy(&y)));
        for p in 0..n {
            for a in 0..k {
                let mut z = y.to_vec();
                z[p] = a;
                prop_assert!(problem.energy(&z) >= e - 1e-9 * (1.0 + e.abs()));
            }
        }
    }

    #[test]
    fn expansion_descends_and_admits_no_improving_move(seed in any::<u64>(), n in 1usize..10, k in 1usize..4) {
        let f = fixture(seed, n, k, true);
        let problem = build_problem(&f.g, &f.w, &f.map, &PairwiseContext::plain()).unwrap();
        let start = f.y.as_slice().to_vec();
        let (y, e) = alpha_expansion_from(&problem, start.clone(), 1000);
        prop_assert!(e <= problem.energy(&start));
        for a in 0..k {
            let z = expansion_move(&problem, &y, a);
            prop_assert!(problem.energy(&z) >= e - 1e-9 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn tag_relation_is_antisymmetric(p in (-50.0f64..50.0, -50.0f64..50.0), q in (-50.0f64..50.0, -50.0f64..50.0)) {
        prop_assume!(p != q);
        prop_assert_eq!(tag_relation(q, p), tag_relation(p, q).opposite());
    }

    #[test]
    fn slic_covers_the_image_and_descends(seed in any::<u64>(), w in 12u32..40, h in 12u32..40, target in 4usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks: Vec<[u8; 3]> = (0..4).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let img = RgbImage::from_fn(w, h, |x, y| {
            let b = blocks[(2 * y / h * 2 + 2 * x / w) as usize];
            let jitter: u8 = rng.random_range(0..12);
            Rgb(b.map(|c| c.saturating_add(jitter)))
        });
        let (raster, trace) = slic_segment_traced(&img, &SlicConfig { target_count: target, ..SlicConfig::default() }).unwrap();
        raster.validate().unwrap();
        prop_assert_eq!(raster.assignments.len(), (w * h) as usize);
        for pair in trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "objective rose: {:?}", trace);
        }
        let g = build_skeleton(&raster, 1);
        prop_assert_eq!(g.total_area(), (w * h) as u64);
        // every edge lands in exactly one relation, consistent with its centroids
        let per_relation: usize = Relation::ALL.iter().map(|&r| g.edges_with(r).count()).sum();
        prop_assert_eq!(per_relation, g.edges.len());
        for e in &g.edges {
            let (a, b) = (&g.nodes[e.p], &g.nodes[e.q]);
            prop_assert_eq!(e.relation, tag_relation((a.centroid_row, a.centroid_col), (b.centroid_row, b.centroid_col)));
            prop_assert!(e.boundary_length > 0.0);
        }
    }
}
