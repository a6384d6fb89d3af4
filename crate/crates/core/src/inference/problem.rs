/// A pairwise discrete labeling problem given by explicit potential tables.
///
/// Energy: `sum_p unary[p][y_p] + sum_e cost_e[y_p][y_q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelingProblem {
    num_nodes: usize,
    num_labels: usize,
    unary: Vec<f64>,
    edges: Vec<(usize, usize)>,
    costs: Vec<f64>,
    incident: Vec<Vec<usize>>,
}

impl LabelingProblem {
    pub fn new(num_nodes: usize, num_labels: usize) -> Self {
        LabelingProblem {
            num_nodes,
            num_labels,
            unary: vec![0.0; num_nodes * num_labels],
            edges: Vec::new(),
            costs: Vec::new(),
            incident: vec![Vec::new(); num_nodes],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn unary(&self, p: usize) -> &[f64] {
        &self.unary[p * self.num_labels..(p + 1) * self.num_labels]
    }

    pub fn unary_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.unary[p * self.num_labels..(p + 1) * self.num_labels]
    }

    /// Adds edge `(p, q)` with a row-major `K x K` cost table indexed `[y_p][y_q]`.
    pub fn add_edge(&mut self, p: usize, q: usize, costs: Vec<f64>) {
        assert_eq!(
            costs.len(),
            self.num_labels * self.num_labels,
            "edge cost table size"
        );
        assert!(
            p != q && p < self.num_nodes && q < self.num_nodes,
            "edge endpoints"
        );
        let e = self.edges.len();
        self.edges.push((p, q));
        self.costs.extend(costs);
        self.incident[p].push(e);
        self.incident[q].push(e);
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn pair_cost(&self, e: usize, a: usize, b: usize) -> f64 {
        let k = self.num_labels;
        self.costs[e * k * k + a * k + b]
    }

    pub fn energy(&self, y: &[usize]) -> f64 {
        let unary: f64 = (0..self.num_nodes).map(|p| self.unary(p)[y[p]]).sum();
        let pair: f64 = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &(p, q))| self.pair_cost(e, y[p], y[q]))
            .sum();
        unary + pair
    }

    /// Energy terms touching node `p` when it takes `label`, other nodes fixed.
    pub fn local_cost(&self, p: usize, label: usize, y: &[usize]) -> f64 {
        let mut c = self.unary(p)[label];
        for &e in &self.incident[p] {
            let (a, b) = self.edges[e];
            c += if a == p {
                self.pair_cost(e, label, y[b])
            } else {
                self.pair_cost(e, y[a], label)
            };
        }
        c
    }

    /// Per-node argmin of the unary terms, ties to the smaller label.
    pub fn unary_argmin(&self) -> Vec<usize> {
        (0..self.num_nodes)
            .map(|p| {
                let u = self.unary(p);
                (1..u.len()).fold(0, |best, k| if u[k] < u[best] { k } else { best })
            })
            .collect()
    }
}
