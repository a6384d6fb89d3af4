use super::LabelingProblem;
use crate::error::{Error, Result};

/// Largest state space the exhaustive solver accepts.
pub const MAX_STATES: u64 = 1 << 20;

/// Global minimizer by enumeration in lexicographic order. Only strictly
/// lower energies replace the incumbent, so ties resolve to the
/// lexicographically smallest labeling.
pub fn exhaustive(problem: &LabelingProblem) -> Result<(Vec<usize>, f64)> {
    let (n, k) = (problem.num_nodes(), problem.num_labels());
    let too_large = || Error::StateSpaceTooLarge {
        num_nodes: n,
        num_labels: k,
    };
    let states = (0..n).try_fold(1u64, |acc, _| {
        acc.checked_mul(k as u64).filter(|s| *s <= MAX_STATES)
    });
    if states.is_none() || k == 0 {
        return Err(too_large());
    }
    let mut y = vec![0usize; n];
    let mut best = y.clone();
    let mut best_energy = problem.energy(&y);
    loop {
        // odometer with the last node varying fastest
        let mut i = n;
        loop {
            if i == 0 {
                return Ok((best, best_energy));
            }
            i -= 1;
            y[i] += 1;
            if y[i] < k {
                break;
            }
            y[i] = 0;
        }
        let e = problem.energy(&y);
        if e < best_energy {
            best_energy = e;
            best.copy_from_slice(&y);
        }
    }
}
