//! Spatially related co-occurrence statistics.
//!
//! For classes `a != b`, `N(a, b)` counts training images in which both
//! classes appear and `N_i(a, b)` counts images with an edge whose `a`-labeled
//! endpoint is in relation `i` to its `b`-labeled endpoint. Counting is per
//! image: an image contributes at most one to every count. The potential
//! `g_i(a, b) = N(a, b) / N_i(a, b)` is infinite when `N_i(a, b) = 0`.
//!
//! File format:
//!
//! ```text
//! COOCCUR 1
//! classes <K>
//! pair <a> <b> <N> <N_above> <N_below> <N_left> <N_right>   (ordered pairs with a nonzero count)
//! ```

use std::collections::BTreeSet;

use crate::energy::PairwiseMode;
use crate::error::{Error, FormatError, Result};
use crate::graph::format::{parse_keyed_header, parse_num, Lines};
use crate::graph::{Relation, SuperpixelGraph, VOID_LABEL};
use crate::number::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    Scale(f64),
    Forbidden,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoOccurrenceTable {
    num_classes: usize,
    coexist: Vec<u64>,
    adjacent: [Vec<u64>; 4],
    /// Additive smoothing of both counts in `g`; 0 keeps the hard potentials.
    pub smoothing: f64,
}

impl CoOccurrenceTable {
    pub fn empty(num_classes: usize) -> Self {
        let kk = num_classes * num_classes;
        CoOccurrenceTable {
            num_classes,
            coexist: vec![0; kk],
            adjacent: std::array::from_fn(|_| vec![0; kk]),
            smoothing: 0.0,
        }
    }

    /// Counts a labeled corpus. Void-labeled nodes are ignored.
    pub fn build(corpus: &[SuperpixelGraph]) -> Result<Self> {
        let Some(first) = corpus.first() else {
            return Err(Error::InconsistentCorpus("empty corpus".into()));
        };
        let k = first.num_classes;
        let mut table = CoOccurrenceTable::empty(k);
        for g in corpus {
            if g.num_classes != k {
                return Err(Error::InconsistentCorpus(format!(
                    "class counts {k} and {}",
                    g.num_classes
                )));
            }
            let y = g.ground_truth()?;
            g.check_labeling(y, true)?;
            table.add_image(g, y.as_slice());
        }
        Ok(table)
    }

    fn add_image(&mut self, g: &SuperpixelGraph, y: &[usize]) {
        let k = self.num_classes;
        let present: BTreeSet<usize> = y.iter().copied().filter(|&c| c != VOID_LABEL).collect();
        for &a in &present {
            for &b in &present {
                if a != b {
                    self.coexist[a * k + b] += 1;
                }
            }
        }
        let mut seen: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
        for e in &g.edges {
            let (a, b) = (y[e.p], y[e.q]);
            if a == b || a == VOID_LABEL || b == VOID_LABEL {
                continue;
            }
            seen.insert((e.relation.code(), a, b));
            seen.insert((e.relation.opposite().code(), b, a));
        }
        for (r, a, b) in seen {
            self.adjacent[r][a * k + b] += 1;
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of images in which `a` and `b` co-exist.
    pub fn coexist(&self, a: usize, b: usize) -> u64 {
        self.coexist[a * self.num_classes + b]
    }

    /// Number of images in which an `a` region is in `relation` to an
    /// adjacent `b` region.
    pub fn adjacent(&self, relation: Relation, a: usize, b: usize) -> u64 {
        self.adjacent[relation.code()][a * self.num_classes + b]
    }

    /// `f_i(a, b) = N_i / N`, or `None` when the classes never co-exist.
    pub fn frequency(&self, relation: Relation, a: usize, b: usize) -> Option<f64> {
        let n = self.coexist(a, b);
        (n > 0).then(|| self.adjacent(relation, a, b) as f64 / n as f64)
    }

    /// `g_i(a, b) = 1 / f_i(a, b)`; `None` stands for an infinite potential.
    /// Diagonal pairs are 0 by convention.
    pub fn potential(&self, relation: Relation, a: usize, b: usize) -> Option<f64> {
        if a == b {
            return Some(0.0);
        }
        let n = self.coexist(a, b) as f64;
        let ni = self.adjacent(relation, a, b) as f64;
        if self.smoothing > 0.0 {
            return Some((n + self.smoothing) / (ni + self.smoothing));
        }
        (ni > 0.0).then(|| n / ni)
    }

    pub fn multiplier(
        &self,
        mode: PairwiseMode,
        relation: Relation,
        a: usize,
        b: usize,
    ) -> Multiplier {
        match mode {
            PairwiseMode::Plain => Multiplier::Scale(1.0),
            PairwiseMode::Mutex => {
                if self.adjacent(relation, a, b) > 0 {
                    Multiplier::Scale(1.0)
                } else {
                    Multiplier::Forbidden
                }
            }
            PairwiseMode::CoOccur => match self.potential(relation, a, b) {
                Some(g) => Multiplier::Scale(g),
                None => Multiplier::Forbidden,
            },
        }
    }

    /// The table the mutex rule corresponds to: every observed pair keeps
    /// multiplier 1, every unobserved pair stays forbidden. Co-occurrence
    /// potentials over this table reproduce [`PairwiseMode::Mutex`].
    pub fn thresholded(&self) -> Self {
        let mut t = self.clone();
        t.smoothing = 0.0;
        let k = self.num_classes;
        for a in 0..k {
            for b in 0..k {
                if a == b {
                    continue;
                }
                let observed = Relation::ALL.map(|r| self.adjacent(r, a, b) > 0);
                let any = u64::from(observed.iter().any(|o| *o));
                t.coexist[a * k + b] = any;
                for r in Relation::ALL {
                    t.adjacent[r.code()][a * k + b] = u64::from(observed[r.code()]);
                }
            }
        }
        t
    }

    pub fn check_invariants(&self) -> Result<()> {
        let k = self.num_classes;
        let bad = |msg: String| Err(Error::InvalidConfig(format!("co-occurrence table: {msg}")));
        for a in 0..k {
            if self.coexist(a, a) != 0 || Relation::ALL.iter().any(|&r| self.adjacent(r, a, a) != 0)
            {
                return bad(format!("diagonal entry for class {a}"));
            }
            for b in 0..k {
                if self.coexist(a, b) != self.coexist(b, a) {
                    return bad(format!("N({a},{b}) != N({b},{a})"));
                }
                for r in Relation::ALL {
                    if self.adjacent(r, a, b) > self.coexist(a, b) {
                        return bad(format!("N_{}({a},{b}) exceeds N({a},{b})", r.name()));
                    }
                    if self.adjacent(r, a, b) != self.adjacent(r.opposite(), b, a) {
                        return bad(format!(
                            "N_{}({a},{b}) != N_{}({b},{a})",
                            r.name(),
                            r.opposite().name()
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write(&self) -> String {
        let k = self.num_classes;
        let mut out = format!("COOCCUR 1\nclasses {k}\n");
        for a in 0..k {
            for b in 0..k {
                if a == b {
                    continue;
                }
                let counts = Relation::ALL.map(|r| self.adjacent(r, a, b));
                let n = self.coexist(a, b);
                if n > 0 || counts.iter().any(|&c| c > 0) {
                    out.push_str(&format!(
                        "pair {a} {b} {n} {} {} {} {}\n",
                        counts[0], counts[1], counts[2], counts[3]
                    ));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (ln, toks) = lines.next_tokens().ok_or(FormatError::MalformedHeader {
            line: 1,
            msg: "empty input".into(),
        })?;
        if toks != ["COOCCUR", "1"] {
            return Err(FormatError::MalformedHeader {
                line: ln,
                msg: "expected \"COOCCUR 1\"".into(),
            }
            .into());
        }
        let (ln, toks) = lines.expect("classes header")?;
        let k = parse_keyed_header(ln, &toks, &["classes"])?[0];
        let mut table = CoOccurrenceTable::empty(k);
        while let Some((ln, toks)) = lines.next_tokens() {
            if toks.len() != 8 || toks[0] != "pair" {
                return Err(FormatError::Malformed {
                    line: ln,
                    msg: "expected \"pair a b N N1 N2 N3 N4\"".into(),
                }
                .into());
            }
            let a: usize = parse_num(ln, toks[1], "class")?;
            let b: usize = parse_num(ln, toks[2], "class")?;
            if a >= k || b >= k || a == b {
                return Err(FormatError::Malformed {
                    line: ln,
                    msg: format!("invalid class pair ({a}, {b})"),
                }
                .into());
            }
            table.coexist[a * k + b] = parse_num(ln, toks[3], "count")?;
            for r in 0..4 {
                table.adjacent[r][a * k + b] = parse_num(ln, toks[4 + r], "count")?;
            }
        }
        table.check_invariants()?;
        Ok(table)
    }

    /// Human-readable `g` listing, mainly for logs.
    pub fn describe_potential(&self, relation: Relation, a: usize, b: usize) -> String {
        self.potential(relation, a, b)
            .map_or_else(|| "inf".to_string(), fmt_f64)
    }
}
