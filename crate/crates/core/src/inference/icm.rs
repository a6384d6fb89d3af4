use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabelingProblem;

/// Iterated conditional modes from `y`: visits nodes in order and moves a
/// node to its best label when that strictly lowers its local cost. Stops
/// after a sweep without changes or after `max_sweeps` sweeps.
pub fn icm_from(
    problem: &LabelingProblem,
    mut y: Vec<usize>,
    max_sweeps: usize,
) -> (Vec<usize>, f64) {
    for _ in 0..max_sweeps {
        let mut changed = false;
        for p in 0..problem.num_nodes() {
            let mut best_label = y[p];
            let mut best = problem.local_cost(p, y[p], &y);
            for k in 0..problem.num_labels() {
                let c = problem.local_cost(p, k, &y);
                if c < best {
                    best = c;
                    best_label = k;
                }
            }
            if best_label != y[p] {
                y[p] = best_label;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let e = problem.energy(&y);
    (y, e)
}

/// ICM with `restarts` runs: the first from the unary argmin, the rest from
/// seeded random labelings. Returns the lowest energy, ties to the
/// lexicographically smaller labeling.
pub fn icm(
    problem: &LabelingProblem,
    max_sweeps: usize,
    restarts: usize,
    seed: u64,
) -> (Vec<usize>, f64) {
    let mut best = icm_from(problem, problem.unary_argmin(), max_sweeps);
    let k = problem.num_labels();
    for r in 1..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let init = (0..problem.num_nodes())
            .map(|_| rng.random_range(0..k))
            .collect();
        let cand = icm_from(problem, init, max_sweeps);
        if cand.1 < best.1 || (cand.1 == best.1 && cand.0 < best.0) {
            best = cand;
        }
    }
    best
}
