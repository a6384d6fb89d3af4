//! Dinic max-flow on real capacities, used for binary expansion moves.

use std::collections::VecDeque;

struct Arc {
    to: usize,
    cap: f64,
    rev: usize,
}

pub(crate) struct FlowGraph {
    adj: Vec<Vec<Arc>>,
    level: Vec<i64>,
    cursor: Vec<usize>,
    eps: f64,
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        FlowGraph {
            adj: (0..n).map(|_| Vec::new()).collect(),
            level: vec![0; n],
            cursor: vec![0; n],
            eps: 0.0,
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64) {
        if cap <= 0.0 || u == v {
            return;
        }
        let (ru, rv) = (self.adj[v].len(), self.adj[u].len());
        self.adj[u].push(Arc {
            to: v,
            cap,
            rev: ru,
        });
        self.adj[v].push(Arc {
            to: u,
            cap: 0.0,
            rev: rv,
        });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for a in &self.adj[u] {
                if a.cap > self.eps && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[u] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.cursor[u] < self.adj[u].len() {
            let i = self.cursor[u];
            let (to, cap) = (self.adj[u][i].to, self.adj[u][i].cap);
            if cap > self.eps && self.level[to] == self.level[u] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    let rev = self.adj[u][i].rev;
                    self.adj[u][i].cap -= got;
                    self.adj[to][rev].cap += got;
                    return got;
                }
            }
            self.cursor[u] += 1;
        }
        0.0
    }

    /// Maximum flow from `s` to `t`. Residual capacities below a tiny
    /// fraction of the largest capacity are treated as saturated.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let max_cap = self.adj.iter().flatten().fold(0.0f64, |m, a| m.max(a.cap));
        self.eps = max_cap * 1e-13;
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    /// Nodes reachable from `s` in the residual graph after [`max_flow`].
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for a in &self.adj[u] {
                if a.cap > self.eps && !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        seen
    }
}
