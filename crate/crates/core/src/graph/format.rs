//! The SPGRAPH text format.
//!
//! ```text
//! SPGRAPH 1
//! nodes <n> feat_dim <d> classes <K>
//! node <id> <centroid_row> <centroid_col> <area> <f_1> ... <f_d>      (n lines)
//! edges <m> pfeat_dim <e>
//! edge <p> <q> <relation 0-3> <boundary_length> <pf_1> ... <pf_e>     (m lines)
//! label <id> <class>                                                  (optional, n lines)
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Edges written with
//! `p > q` are canonicalized on read by swapping the endpoints and taking the
//! opposite relation.

use std::collections::HashSet;
use std::str::FromStr;

use super::{Edge, Labeling, Relation, SuperpixelGraph, SuperpixelNode, VOID_LABEL};
use crate::error::FormatError;
use crate::number::{push_f64, push_values};

pub const MAGIC: &str = "SPGRAPH";
pub const VERSION: &str = "1";

/// Iterator over significant lines as `(line_number, tokens)`.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    pub last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    pub(crate) fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, t.split_whitespace().collect()));
        }
        None
    }

    pub(crate) fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), FormatError> {
        let last = self.last;
        self.next_tokens()
            .ok_or_else(|| FormatError::UnexpectedEof {
                line: last,
                msg: format!("expected {what}"),
            })
    }
}

pub(crate) fn parse_num<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T, FormatError> {
    tok.parse().map_err(|_| FormatError::Malformed {
        line,
        msg: format!("cannot parse {what} from {tok:?}"),
    })
}

pub(crate) fn parse_f64(line: usize, tok: &str, what: &str) -> Result<f64, FormatError> {
    let v: f64 = parse_num(line, tok, what)?;
    if !v.is_finite() {
        return Err(FormatError::Malformed {
            line,
            msg: format!("{what} is not finite"),
        });
    }
    Ok(v)
}

pub(crate) fn parse_f64s(line: usize, toks: &[&str], what: &str) -> Result<Vec<f64>, FormatError> {
    toks.iter().map(|t| parse_f64(line, t, what)).collect()
}

/// Parses a `<keyword> <value> <keyword> <value> ...` header line.
pub(crate) fn parse_keyed_header(
    line: usize,
    toks: &[&str],
    keys: &[&str],
) -> Result<Vec<usize>, FormatError> {
    let bad = || FormatError::MalformedHeader {
        line,
        msg: format!(
            "expected \"{}\"",
            keys.iter()
                .map(|k| format!("{k} <n>"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    };
    if toks.len() != 2 * keys.len() {
        return Err(bad());
    }
    keys.iter()
        .enumerate()
        .map(|(i, k)| {
            if toks[2 * i] != *k {
                return Err(bad());
            }
            toks[2 * i + 1].parse().map_err(|_| bad())
        })
        .collect()
}

pub fn parse_graph_bytes(bytes: &[u8]) -> Result<SuperpixelGraph, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Malformed {
        line: 0,
        msg: format!("input is not UTF-8: {e}"),
    })?;
    parse_graph(text)
}

pub fn parse_graph(text: &str) -> Result<SuperpixelGraph, FormatError> {
    let mut lines = Lines::new(text);

    let (ln, toks) = lines.next_tokens().ok_or(FormatError::MalformedHeader {
        line: 1,
        msg: "empty input".into(),
    })?;
    if toks != [MAGIC, VERSION] {
        return Err(FormatError::MalformedHeader {
            line: ln,
            msg: format!("expected \"{MAGIC} {VERSION}\""),
        });
    }

    let (ln, toks) = lines.expect("nodes header")?;
    let dims = parse_keyed_header(ln, &toks, &["nodes", "feat_dim", "classes"])?;
    let (n, feat_dim, num_classes) = (dims[0], dims[1], dims[2]);
    if num_classes == 0 {
        return Err(FormatError::MalformedHeader {
            line: ln,
            msg: "classes must be positive".into(),
        });
    }

    let mut slots: Vec<Option<SuperpixelNode>> = vec![None; n];
    for _ in 0..n {
        let (ln, toks) = lines.expect("node line")?;
        if toks[0] != "node" {
            return Err(FormatError::Malformed {
                line: ln,
                msg: format!("expected node line, found {:?}", toks[0]),
            });
        }
        if toks.len() != 5 + feat_dim {
            return Err(FormatError::DimensionMismatch {
                line: ln,
                expected: 4 + feat_dim,
                found: toks.len() - 1,
            });
        }
        let id: usize = parse_num(ln, toks[1], "node id")?;
        if id >= n {
            return Err(FormatError::Malformed {
                line: ln,
                msg: format!("node id {id} outside dense range 0..{n}"),
            });
        }
        if slots[id].is_some() {
            return Err(FormatError::Malformed {
                line: ln,
                msg: format!("node id {id} defined twice"),
            });
        }
        let area: u64 = parse_num(ln, toks[4], "area")?;
        if area == 0 {
            return Err(FormatError::Malformed {
                line: ln,
                msg: "area must be at least 1".into(),
            });
        }
        slots[id] = Some(SuperpixelNode {
            id,
            centroid_row: parse_f64(ln, toks[2], "centroid row")?,
            centroid_col: parse_f64(ln, toks[3], "centroid col")?,
            area,
            features: parse_f64s(ln, &toks[5..], "feature")?,
        });
    }
    // n lines, ids unique and < n: every slot is filled.
    let nodes: Vec<SuperpixelNode> = slots.into_iter().map(Option::unwrap).collect();

    let (ln, toks) = lines.expect("edges header")?;
    let dims = parse_keyed_header(ln, &toks, &["edges", "pfeat_dim"])?;
    let (m, pfeat_dim) = (dims[0], dims[1]);

    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m);
    for _ in 0..m {
        let (ln, toks) = lines.expect("edge line")?;
        if toks[0] != "edge" {
            return Err(FormatError::Malformed {
                line: ln,
                msg: format!("expected edge line, found {:?}", toks[0]),
            });
        }
        if toks.len() != 5 + pfeat_dim {
            return Err(FormatError::DimensionMismatch {
                line: ln,
                expected: 4 + pfeat_dim,
                found: toks.len() - 1,
            });
        }
        let mut p: usize = parse_num(ln, toks[1], "edge endpoint")?;
        let mut q: usize = parse_num(ln, toks[2], "edge endpoint")?;
        let code: usize = parse_num(ln, toks[3], "relation")?;
        let mut relation = Relation::from_code(code).ok_or_else(|| FormatError::Malformed {
            line: ln,
            msg: format!("relation code {code} not in 0..=3"),
        })?;
        if p == q {
            return Err(FormatError::SelfLoop { line: ln, p });
        }
        if p >= n || q >= n {
            return Err(FormatError::DanglingEdgeEndpoint { line: ln, p, q, n });
        }
        let boundary_length: f64 = parse_num(ln, toks[4], "boundary length")?;
        if !(boundary_length > 0.0) || !boundary_length.is_finite() {
            return Err(FormatError::NonPositiveBoundaryLength {
                line: ln,
                value: boundary_length,
            });
        }
        if p > q {
            std::mem::swap(&mut p, &mut q);
            relation = relation.opposite();
        }
        if !seen.insert((p, q)) {
            return Err(FormatError::DuplicateEdge { line: ln, p, q });
        }
        edges.push(Edge {
            p,
            q,
            relation,
            boundary_length,
            pairwise_features: parse_f64s(ln, &toks[5..], "pairwise feature")?,
        });
    }

    let mut ground_truth = None;
    if let Some((ln, toks)) = lines.next_tokens() {
        let mut labels: Vec<Option<usize>> = vec![None; n];
        let mut handle = |ln: usize, toks: Vec<&str>| -> Result<(), FormatError> {
            if toks.len() != 3 || toks[0] != "label" {
                return Err(FormatError::Malformed {
                    line: ln,
                    msg: "expected \"label <id> <class>\"".into(),
                });
            }
            let id: usize = parse_num(ln, toks[1], "label id")?;
            let class: usize = parse_num(ln, toks[2], "class")?;
            if id >= n || labels[id].is_some() {
                return Err(FormatError::Malformed {
                    line: ln,
                    msg: format!("label id {id} invalid or repeated"),
                });
            }
            if class >= num_classes && class != VOID_LABEL {
                return Err(FormatError::Malformed {
                    line: ln,
                    msg: format!("class {class} outside 0..{num_classes}"),
                });
            }
            labels[id] = Some(class);
            Ok(())
        };
        handle(ln, toks)?;
        for _ in 1..n {
            let (ln, toks) = lines.expect("label line")?;
            handle(ln, toks)?;
        }
        ground_truth = Some(Labeling(labels.into_iter().map(Option::unwrap).collect()));
    }
    if let Some((ln, _)) = lines.next_tokens() {
        return Err(FormatError::Malformed {
            line: ln,
            msg: "trailing content".into(),
        });
    }

    Ok(SuperpixelGraph {
        nodes,
        edges,
        feat_dim,
        pfeat_dim,
        num_classes,
        ground_truth,
    })
}

/// Serializes a valid graph. Real values use the shortest representation
/// that round-trips, so `parse_graph(&write_graph(g)) == g`.
pub fn write_graph(g: &SuperpixelGraph) -> String {
    let mut out = String::with_capacity(64 * (g.nodes.len() + g.edges.len()));
    out.push_str("SPGRAPH 1\n");
    out.push_str(&format!(
        "nodes {} feat_dim {} classes {}\n",
        g.nodes.len(),
        g.feat_dim,
        g.num_classes
    ));
    for node in &g.nodes {
        out.push_str(&format!("node {} ", node.id));
        push_f64(&mut out, node.centroid_row);
        out.push(' ');
        push_f64(&mut out, node.centroid_col);
        out.push_str(&format!(" {}", node.area));
        if !node.features.is_empty() {
            out.push(' ');
            push_values(&mut out, &node.features);
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "edges {} pfeat_dim {}\n",
        g.edges.len(),
        g.pfeat_dim
    ));
    for e in &g.edges {
        out.push_str(&format!("edge {} {} {} ", e.p, e.q, e.relation.code()));
        push_f64(&mut out, e.boundary_length);
        if !e.pairwise_features.is_empty() {
            out.push(' ');
            push_values(&mut out, &e.pairwise_features);
        }
        out.push('\n');
    }
    if let Some(gt) = &g.ground_truth {
        for (id, class) in gt.as_slice().iter().enumerate() {
            out.push_str(&format!("label {id} {class}\n"));
        }
    }
    out
}
