//! Alpha-expansion move making.
//!
//! Each move lets every node either keep its label or switch to a fixed label
//! `a`; the binary move energy is minimized exactly by a minimum cut when it
//! is submodular. Non-submodular edge terms are made submodular by raising
//! the cost of the (switch, keep) assignment. Raising a term never lowers the
//! move energy and leaves the all-keep assignment unchanged, so an accepted
//! move never increases the true energy.

use super::maxflow::FlowGraph;
use super::LabelingProblem;

/// Runs expansion sweeps over all labels from `y` until a full sweep brings
/// no strict improvement or `max_sweeps` is reached.
pub fn alpha_expansion_from(
    problem: &LabelingProblem,
    mut y: Vec<usize>,
    max_sweeps: usize,
) -> (Vec<usize>, f64) {
    let mut energy = problem.energy(&y);
    for _ in 0..max_sweeps {
        let mut improved = false;
        for a in 0..problem.num_labels() {
            let candidate = expansion_move(problem, &y, a);
            let e = problem.energy(&candidate);
            if e < energy {
                energy = e;
                y = candidate;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    (y, energy)
}

pub fn alpha_expansion(problem: &LabelingProblem, max_sweeps: usize) -> (Vec<usize>, f64) {
    alpha_expansion_from(problem, problem.unary_argmin(), max_sweeps)
}

/// Best labeling reachable from `y` by one expansion towards `a`
/// (exact for submodular move energies).
pub fn expansion_move(problem: &LabelingProblem, y: &[usize], a: usize) -> Vec<usize> {
    let n = problem.num_nodes();
    let (s, t) = (n, n + 1);
    // coefficient of x_p, where x_p = 1 means "switch to a"
    let mut linear: Vec<f64> = (0..n)
        .map(|p| problem.unary(p)[a] - problem.unary(p)[y[p]])
        .collect();
    let mut graph = FlowGraph::new(n + 2);
    for e in 0..problem.num_edges() {
        let (p, q) = problem.edge(e);
        let keep_keep = problem.pair_cost(e, y[p], y[q]);
        let keep_switch = problem.pair_cost(e, y[p], a);
        let mut switch_keep = problem.pair_cost(e, a, y[q]);
        let switch_switch = problem.pair_cost(e, a, a);
        let excess = keep_keep + switch_switch - keep_switch - switch_keep;
        if excess > 0.0 {
            switch_keep += excess;
        }
        // E = A + (C - A) x_p + (D - C) x_q + (B + C - A - D)(1 - x_p) x_q
        linear[p] += switch_keep - keep_keep;
        linear[q] += switch_switch - switch_keep;
        let coupling = keep_switch + switch_keep - keep_keep - switch_switch;
        graph.add_edge(p, q, coupling.max(0.0));
    }
    for (p, &c) in linear.iter().enumerate() {
        if c > 0.0 {
            graph.add_edge(s, p, c);
        } else if c < 0.0 {
            graph.add_edge(p, t, -c);
        }
    }
    graph.max_flow(s, t);
    let source = graph.source_side(s);
    (0..n).map(|p| if source[p] { y[p] } else { a }).collect()
}
