//! Trained CRF model and its text format.
//!
//! ```text
//! MODEL 1
//! classes <K> unary_dim <du> pairwise_dim <dp>
//! <w1 values>
//! <w2 values>
//! feat_dim <d> pfeat_dim <e>
//! unary_mode raw|svm
//! relation_blocks 0|1
//! pairwise_mode plain|mutex|cooccur
//! alpha <a>
//! pairwise_channels <name> ... | none
//! standardize <d>                 (optional; followed by a mean line and a scale line)
//! svm <K> <d>                     (optional; followed by K lines "<bias> <w_1> ... <w_d>")
//! ```
//!
//! Only the first four lines are mandatory; a file that stops there
//! describes a raw-indicator model with relation blocks and plain
//! pairwise mode.

use std::path::Path;

use crate::energy::{JointFeatureMap, PairwiseMode, WeightVector};
use crate::error::{Error, FormatError, Result};
use crate::features::{LinearSvmModel, PairwiseChannel, Standardizer, UnaryFeatureMap, UnaryMode};
use crate::graph::format::{parse_f64, parse_f64s, parse_keyed_header, parse_num, Lines};
use crate::graph::SuperpixelGraph;
use crate::number::{push_f64, push_values};

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub map: JointFeatureMap,
    pub w: WeightVector,
    pub pfeat_dim: usize,
    /// Pairwise mode and alpha recorded at export time.
    pub pairwise_mode: PairwiseMode,
    pub alpha: f64,
    /// Pairwise channels the graphs were built with; empty when edges carry
    /// no pairwise features.
    pub pairwise_channels: Vec<PairwiseChannel>,
}

impl CrfModel {
    pub fn new(map: JointFeatureMap, w: WeightVector, pfeat_dim: usize) -> Result<Self> {
        if w.unary.len() != map.unary_dim() {
            return Err(Error::DimensionMismatch {
                what: "unary weights",
                expected: map.unary_dim(),
                found: w.unary.len(),
            });
        }
        let dp = map.pairwise_dim(pfeat_dim);
        if w.pairwise.len() != dp {
            return Err(Error::DimensionMismatch {
                what: "pairwise weights",
                expected: dp,
                found: w.pairwise.len(),
            });
        }
        Ok(CrfModel {
            map,
            w,
            pfeat_dim,
            pairwise_mode: PairwiseMode::Plain,
            alpha: 1.0,
            pairwise_channels: Vec::new(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.map.num_classes()
    }

    /// Checks that `g` has the dimensions this model was trained on.
    pub fn check_graph(&self, g: &SuperpixelGraph) -> Result<()> {
        if g.pfeat_dim != self.pfeat_dim {
            return Err(Error::DimensionMismatch {
                what: "pfeat_dim",
                expected: self.pfeat_dim,
                found: g.pfeat_dim,
            });
        }
        self.map.check(g, Some(&self.w))
    }

    pub fn write(&self) -> String {
        let k = self.num_classes();
        let mut out = String::from("MODEL 1\n");
        out.push_str(&format!(
            "classes {k} unary_dim {} pairwise_dim {}\n",
            self.w.unary.len(),
            self.w.pairwise.len()
        ));
        push_values(&mut out, &self.w.unary);
        out.push('\n');
        push_values(&mut out, &self.w.pairwise);
        out.push('\n');
        out.push_str(&format!(
            "feat_dim {} pfeat_dim {}\n",
            self.map.unary.feat_dim, self.pfeat_dim
        ));
        let mode = match self.map.unary.mode {
            UnaryMode::RawIndicator => "raw",
            UnaryMode::SvmConfidence(_) => "svm",
        };
        out.push_str(&format!("unary_mode {mode}\n"));
        out.push_str(&format!(
            "relation_blocks {}\n",
            u8::from(self.map.relation_blocks)
        ));
        out.push_str(&format!("pairwise_mode {}\n", self.pairwise_mode.name()));
        out.push_str("alpha ");
        push_f64(&mut out, self.alpha);
        out.push('\n');
        out.push_str("pairwise_channels");
        if self.pairwise_channels.is_empty() {
            out.push_str(" none");
        }
        for c in &self.pairwise_channels {
            out.push(' ');
            out.push_str(c.name());
        }
        out.push('\n');
        if let Some(s) = &self.map.unary.standardizer {
            out.push_str(&format!("standardize {}\n", s.mean.len()));
            push_values(&mut out, &s.mean);
            out.push('\n');
            push_values(&mut out, &s.scale);
            out.push('\n');
        }
        if let UnaryMode::SvmConfidence(m) = &self.map.unary.mode {
            out.push_str(&format!("svm {} {}\n", m.num_classes(), m.feat_dim()));
            for (b, w) in m.biases.iter().zip(&m.weights) {
                push_f64(&mut out, *b);
                for v in w {
                    out.push(' ');
                    push_f64(&mut out, *v);
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(parse_model(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.write())?;
        Ok(())
    }
}

fn values_line(lines: &mut Lines, len: usize, what: &str) -> Result<Vec<f64>, FormatError> {
    if len == 0 {
        return Ok(Vec::new());
    }
    let (ln, toks) = lines.expect(what)?;
    if toks.len() != len {
        return Err(FormatError::DimensionMismatch {
            line: ln,
            expected: len,
            found: toks.len(),
        });
    }
    parse_f64s(ln, &toks, what)
}

fn single<'a>(ln: usize, toks: &[&'a str], key: &str) -> Result<&'a str, FormatError> {
    match toks {
        [k, v] if *k == key => Ok(v),
        _ => Err(FormatError::Malformed {
            line: ln,
            msg: format!("expected \"{key} <value>\""),
        }),
    }
}

fn parse_model(text: &str) -> Result<CrfModel, FormatError> {
    let mut lines = Lines::new(text);
    let (ln, toks) = lines.next_tokens().ok_or(FormatError::MalformedHeader {
        line: 1,
        msg: "empty input".into(),
    })?;
    if toks != ["MODEL", "1"] {
        return Err(FormatError::MalformedHeader {
            line: ln,
            msg: "expected \"MODEL 1\"".into(),
        });
    }
    let (ln, toks) = lines.expect("dimension header")?;
    let dims = parse_keyed_header(ln, &toks, &["classes", "unary_dim", "pairwise_dim"])?;
    let (k, du, dp) = (dims[0], dims[1], dims[2]);
    if k == 0 {
        return Err(FormatError::MalformedHeader {
            line: ln,
            msg: "classes must be positive".into(),
        });
    }
    let w1 = values_line(&mut lines, du, "unary weights")?;
    let w2 = values_line(&mut lines, dp, "pairwise weights")?;

    // Defaults for the short form.
    let mut feat_dim = du / k;
    let mut pfeat_dim = if dp >= 4 && dp % 4 == 0 { dp / 4 } else { dp };
    if pfeat_dim == 1 {
        pfeat_dim = 0;
    }
    let mut unary_mode = "raw".to_string();
    let mut relation_blocks = true;
    let mut pairwise_mode = PairwiseMode::Plain;
    let mut alpha = 1.0;
    let mut channels = Vec::new();
    let mut standardizer = None;
    let mut svm = None;

    while let Some((ln, toks)) = lines.next_tokens() {
        match toks[0] {
            "feat_dim" => {
                let d = parse_keyed_header(ln, &toks, &["feat_dim", "pfeat_dim"])?;
                feat_dim = d[0];
                pfeat_dim = d[1];
            }
            "unary_mode" => {
                let v = single(ln, &toks, "unary_mode")?;
                if v != "raw" && v != "svm" {
                    return Err(FormatError::Malformed {
                        line: ln,
                        msg: format!("unknown unary mode {v:?}"),
                    });
                }
                unary_mode = v.to_string();
            }
            "relation_blocks" => {
                relation_blocks = match single(ln, &toks, "relation_blocks")? {
                    "0" => false,
                    "1" => true,
                    v => {
                        return Err(FormatError::Malformed {
                            line: ln,
                            msg: format!("relation_blocks must be 0 or 1, got {v:?}"),
                        })
                    }
                };
            }
            "pairwise_mode" => {
                let v = single(ln, &toks, "pairwise_mode")?;
                pairwise_mode =
                    PairwiseMode::from_name(v).ok_or_else(|| FormatError::Malformed {
                        line: ln,
                        msg: format!("unknown pairwise mode {v:?}"),
                    })?;
            }
            "alpha" => {
                alpha = parse_f64(ln, single(ln, &toks, "alpha")?, "alpha")?;
                if !(alpha > 0.0) {
                    return Err(FormatError::Malformed {
                        line: ln,
                        msg: "alpha must be positive".into(),
                    });
                }
            }
            "pairwise_channels" => {
                channels.clear();
                if toks[1..] != ["none"] {
                    for t in &toks[1..] {
                        channels.push(PairwiseChannel::from_name(t).ok_or_else(|| {
                            FormatError::Malformed {
                                line: ln,
                                msg: format!("unknown pairwise channel {t:?}"),
                            }
                        })?);
                    }
                }
            }
            "standardize" => {
                let d: usize = parse_num(
                    ln,
                    single(ln, &toks, "standardize")?,
                    "standardize dimension",
                )?;
                let mean = values_line(&mut lines, d, "standardizer mean")?;
                let scale = values_line(&mut lines, d, "standardizer scale")?;
                if let Some(i) = scale.iter().position(|s| !(*s > 0.0)) {
                    return Err(FormatError::Malformed {
                        line: lines.last,
                        msg: format!("standardizer scale {i} is not positive"),
                    });
                }
                standardizer = Some(Standardizer { mean, scale });
            }
            "svm" => {
                if toks.len() != 3 {
                    return Err(FormatError::Malformed {
                        line: ln,
                        msg: "expected \"svm <K> <d>\"".into(),
                    });
                }
                let sk: usize = parse_num(ln, toks[1], "svm classes")?;
                let sd: usize = parse_num(ln, toks[2], "svm dimension")?;
                let mut weights = Vec::with_capacity(sk);
                let mut biases = Vec::with_capacity(sk);
                for _ in 0..sk {
                    let row = values_line(&mut lines, sd + 1, "svm weights")?;
                    biases.push(row[0]);
                    weights.push(row[1..].to_vec());
                }
                svm = Some(LinearSvmModel { weights, biases });
            }
            other => {
                return Err(FormatError::Malformed {
                    line: ln,
                    msg: format!("unknown model section {other:?}"),
                });
            }
        }
    }

    let last = lines.last;
    let mode = match (unary_mode.as_str(), svm) {
        ("raw", _) => UnaryMode::RawIndicator,
        ("svm", Some(m)) => {
            if m.num_classes() != k || m.feat_dim() != feat_dim {
                return Err(FormatError::Malformed {
                    line: last,
                    msg: format!(
                        "svm section is {}x{}, expected {k}x{feat_dim}",
                        m.num_classes(),
                        m.feat_dim()
                    ),
                });
            }
            UnaryMode::SvmConfidence(m)
        }
        _ => {
            return Err(FormatError::Malformed {
                line: last,
                msg: "unary_mode svm requires an svm section".into(),
            })
        }
    };
    if let Some(s) = &standardizer {
        if s.mean.len() != feat_dim {
            return Err(FormatError::DimensionMismatch {
                line: last,
                expected: feat_dim,
                found: s.mean.len(),
            });
        }
    }
    let map = JointFeatureMap {
        unary: UnaryFeatureMap {
            num_classes: k,
            feat_dim,
            mode,
            standardizer,
        },
        relation_blocks,
    };
    if map.unary_dim() != du {
        return Err(FormatError::DimensionMismatch {
            line: 2,
            expected: map.unary_dim(),
            found: du,
        });
    }
    if map.pairwise_dim(pfeat_dim) != dp {
        return Err(FormatError::DimensionMismatch {
            line: 2,
            expected: map.pairwise_dim(pfeat_dim),
            found: dp,
        });
    }
    Ok(CrfModel {
        map,
        w: WeightVector {
            unary: w1,
            pairwise: w2,
        },
        pfeat_dim,
        pairwise_mode,
        alpha,
        pairwise_channels: channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Standardizer;

    fn raw_model() -> CrfModel {
        let map = JointFeatureMap::new(UnaryFeatureMap::raw(2, 3));
        let w = WeightVector {
            unary: vec![0.1, -2.5, 3.0, 1e-9, 0.0, 7.25],
            pairwise: vec![0.5, 1.5, -0.25, 2.0],
        };
        CrfModel::new(map, w, 0).unwrap()
    }

    #[test]
    fn raw_round_trip() {
        let m = raw_model();
        let text = m.write();
        assert!(text.starts_with("MODEL 1\nclasses 2 unary_dim 6 pairwise_dim 4\n"));
        assert_eq!(CrfModel::parse(&text).unwrap(), m);
    }

    #[test]
    fn short_form_parses() {
        let m = CrfModel::parse(
            "MODEL 1\nclasses 2 unary_dim 6 pairwise_dim 4\n1 2 3 4 5 6\n1 1 1 1\n",
        )
        .unwrap();
        assert_eq!(m.map.unary.feat_dim, 3);
        assert_eq!(m.pfeat_dim, 0);
        assert_eq!(m.pairwise_mode, PairwiseMode::Plain);
    }

    #[test]
    fn svm_round_trip() {
        let svm = LinearSvmModel {
            weights: vec![vec![1.0, -1.0], vec![0.5, 0.25], vec![0.0, 3.0]],
            biases: vec![0.1, 0.2, -0.3],
        };
        let unary = UnaryFeatureMap::svm(svm).with_standardizer(Standardizer {
            mean: vec![1.0, 2.0],
            scale: vec![0.5, 4.0],
        });
        let map = JointFeatureMap {
            unary,
            relation_blocks: false,
        };
        let w = WeightVector {
            unary: (0..9).map(f64::from).collect(),
            pairwise: vec![0.1, 0.2, 0.3, 0.4],
        };
        let mut m = CrfModel::new(map, w, 4).unwrap();
        m.pairwise_mode = PairwiseMode::CoOccur;
        m.alpha = 1.5;
        m.pairwise_channels = PairwiseChannel::ALL.to_vec();
        assert_eq!(CrfModel::parse(&m.write()).unwrap(), m);
    }

    #[test]
    fn wrong_weight_count() {
        let err =
            CrfModel::parse("MODEL 1\nclasses 2 unary_dim 6 pairwise_dim 4\n1 2 3\n1 1 1 1\n")
                .unwrap_err();
        assert!(matches!(
            err,
            Error::Format(FormatError::DimensionMismatch {
                line: 3,
                expected: 6,
                found: 3
            })
        ));
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(
            CrfModel::parse("SPGRAPH 1\n"),
            Err(Error::Format(FormatError::MalformedHeader { line: 1, .. }))
        ));
    }

    #[test]
    fn svm_mode_without_section() {
        let mut text = raw_model().write();
        text = text.replace("unary_mode raw", "unary_mode svm");
        assert!(CrfModel::parse(&text).is_err());
    }

    #[test]
    fn new_checks_dimensions() {
        let map = JointFeatureMap::new(UnaryFeatureMap::raw(2, 3));
        assert!(CrfModel::new(map, WeightVector::zeros(6, 3), 0).is_err());
    }
}
