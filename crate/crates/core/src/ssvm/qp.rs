//! The quadratic program restricted to the working set:
//!
//! ```text
//! min_{w, xi >= 0}  1/2 |w|^2 + C xi   s.t.  <w, a_j> >= b_j - xi  for all j
//! ```
//!
//! solved in the dual, `max sum_j l_j b_j - 1/2 |sum_j l_j a_j|^2` over
//! `l >= 0, sum_j l_j <= C`. The inequality on the sum is turned into an
//! equality by a zero constraint (`a = 0, b = 0`, i.e. `xi >= 0`), and the
//! dual is optimized by pairwise coordinate ascent that moves mass from the
//! worst to the best constraint, as in SMO.

use crate::energy::dot;

/// An aggregated cutting-plane constraint `<w, direction> >= loss - xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub direction: Vec<f64>,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub w: Vec<f64>,
    pub xi: f64,
    /// Dual objective; equals the restricted primal optimum up to the gap.
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub multipliers: Vec<f64>,
}

/// Relative duality-gap tolerance of the inner solver.
pub const GAP_TOLERANCE: f64 = 1e-8;
const MAX_STEPS: usize = 1_000_000;

/// Incremental solver that keeps the Gram matrix and warm-starts from the
/// previous multipliers when constraints are added.
#[derive(Debug, Clone)]
pub struct QpSolver {
    c: f64,
    dim: usize,
    constraints: Vec<Constraint>,
    /// Gram matrix over [null constraint, constraints...].
    gram: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

impl QpSolver {
    pub fn new(c: f64, dim: usize) -> Self {
        QpSolver {
            c,
            dim,
            constraints: Vec::new(),
            gram: vec![vec![0.0]],
            lambda: vec![c],
        }
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add(&mut self, constraint: Constraint) {
        assert_eq!(constraint.direction.len(), self.dim, "constraint dimension");
        let mut row = vec![0.0];
        row.extend(
            self.constraints
                .iter()
                .map(|c| dot(&c.direction, &constraint.direction)),
        );
        row.push(dot(&constraint.direction, &constraint.direction));
        for (g, v) in self.gram.iter_mut().zip(&row) {
            g.push(*v);
        }
        self.gram.push(row);
        self.constraints.push(constraint);
        self.lambda.push(0.0);
    }

    fn loss(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.constraints[k - 1].loss
        }
    }

    fn gradients(&self) -> Vec<f64> {
        (0..self.lambda.len())
            .map(|k| {
                self.loss(k)
                    - self
                        .lambda
                        .iter()
                        .zip(&self.gram)
                        .map(|(l, row)| l * row[k])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn solve(&mut self) -> QpSolution {
        let mut grad = self.gradients();
        let n = self.lambda.len();
        for _ in 0..MAX_STEPS {
            let up = (0..n).fold(0, |b, k| if grad[k] > grad[b] { k } else { b });
            let down = (0..n)
                .filter(|&k| self.lambda[k] > 0.0)
                .fold(None, |b: Option<usize>, k| match b {
                    Some(j) if grad[j] <= grad[k] => Some(j),
                    _ => Some(k),
                })
                .expect("multipliers sum to C > 0");
            let gap = self.c * grad[up]
                - self
                    .lambda
                    .iter()
                    .zip(&grad)
                    .map(|(l, g)| l * g)
                    .sum::<f64>();
            let scale = 1.0 + (self.c * grad[up]).abs();
            if gap <= GAP_TOLERANCE * scale || up == down {
                break;
            }
            let curvature = self.gram[up][up] + self.gram[down][down] - 2.0 * self.gram[up][down];
            let diff = grad[up] - grad[down];
            let mut step = if curvature > 0.0 {
                diff / curvature
            } else {
                f64::INFINITY
            };
            step = step.min(self.lambda[down]);
            if !(step > 0.0) {
                break;
            }
            self.lambda[up] += step;
            self.lambda[down] -= step;
            if self.lambda[down] < 1e-300 {
                self.lambda[down] = 0.0;
            }
            for (k, g) in grad.iter_mut().enumerate() {
                *g -= step * (self.gram[up][k] - self.gram[down][k]);
            }
        }
        self.solution()
    }

    fn solution(&self) -> QpSolution {
        let mut w = vec![0.0; self.dim];
        for (l, c) in self.lambda[1..].iter().zip(&self.constraints) {
            if *l != 0.0 {
                for (wi, ai) in w.iter_mut().zip(&c.direction) {
                    *wi += l * ai;
                }
            }
        }
        let xi = self
            .constraints
            .iter()
            .map(|c| c.loss - dot(&w, &c.direction))
            .fold(0.0f64, f64::max);
        let half_norm = 0.5 * dot(&w, &w);
        let dual = self.lambda[1..]
            .iter()
            .zip(&self.constraints)
            .map(|(l, c)| l * c.loss)
            .sum::<f64>()
            - half_norm;
        QpSolution {
            primal_objective: half_norm + self.c * xi,
            dual_objective: dual,
            w,
            xi,
            multipliers: self.lambda[1..].to_vec(),
        }
    }
}

/// One-shot solve of the restricted QP.
pub fn qp_solve(working_set: &[Constraint], c: f64) -> QpSolution {
    let dim = working_set.first().map_or(0, |k| k.direction.len());
    let mut solver = QpSolver::new(c, dim);
    for k in working_set {
        solver.add(k.clone());
    }
    solver.solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(direction: Vec<f64>, loss: f64) -> Constraint {
        Constraint { direction, loss }
    }

    #[test]
    fn single_constraint_kkt() {
        for c in [1.0, 5.0, 100.0] {
            let s = qp_solve(&[k(vec![1.0, 0.0], 1.0)], c);
            assert!((s.w[0] - 1.0).abs() < 1e-8 && s.w[1] == 0.0, "{s:?}");
            assert!(s.xi < 1e-8);
        }
        // below C = 1 the multiplier saturates: w = C, xi = 1 - C
        let s = qp_solve(&[k(vec![1.0, 0.0], 1.0)], 0.25);
        assert!((s.w[0] - 0.25).abs() < 1e-12 && (s.xi - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_direction() {
        let s = qp_solve(&[k(vec![0.0, 0.0], 1.0)], 10.0);
        assert_eq!(s.w, vec![0.0, 0.0]);
        assert_eq!(s.xi, 1.0);
    }

    #[test]
    fn opposing_constraints() {
        let s = qp_solve(&[k(vec![1.0], 1.0), k(vec![-1.0], 1.0)], 10.0);
        assert!(s.w[0].abs() < 1e-8);
        assert!((s.xi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gap_closes_and_bound_grows() {
        let mut solver = QpSolver::new(3.0, 3);
        let mut last = f64::NEG_INFINITY;
        let dirs = [
            (vec![1.0, 0.5, 0.0], 1.0),
            (vec![0.0, 1.0, -1.0], 2.0),
            (vec![-0.5, 0.2, 1.0], 0.5),
            (vec![2.0, -1.0, 0.3], 3.0),
        ];
        for (d, l) in dirs {
            solver.add(k(d, l));
            let s = solver.solve();
            assert!(
                s.primal_objective - s.dual_objective <= 1e-7 * (1.0 + s.primal_objective.abs())
            );
            assert!(s.dual_objective >= last - 1e-12);
            assert!(s.multipliers.iter().sum::<f64>() <= 3.0 + 1e-12);
            last = s.dual_objective;
        }
    }
}
