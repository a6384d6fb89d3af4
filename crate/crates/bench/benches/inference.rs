use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ctxcrf::energy::{build_problem, PairwiseContext};
use ctxcrf::inference::{alpha_expansion, icm};
use ctxcrf_bench::{grid_graph, model};

fn inference(c: &mut Criterion) {
    let mut group = c.benchmark_group("inference");
    for classes in [2usize, 8, 21] {
        let g = grid_graph(26, classes, 16, 4, 1);
        let (map, w) = model(&g, 2);
        let problem = build_problem(&g, &w, &map, &PairwiseContext::plain()).unwrap();
        group.bench_with_input(BenchmarkId::new("expansion", classes), &problem, |b, p| {
            b.iter(|| alpha_expansion(p, 20))
        });
        group.bench_with_input(BenchmarkId::new("icm", classes), &problem, |b, p| {
            b.iter(|| icm(p, 20, 3, 0))
        });
    }
    group.finish();
}

fn problem_construction(c: &mut Criterion) {
    let g = grid_graph(26, 8, 86, 4, 3);
    let (map, w) = model(&g, 4);
    c.bench_function("build_problem/700x8", |b| {
        b.iter(|| build_problem(&g, &w, &map, &PairwiseContext::plain()).unwrap())
    });
}

criterion_group!(benches, inference, problem_construction);
criterion_main!(benches);
