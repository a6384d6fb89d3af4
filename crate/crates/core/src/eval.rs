//! Confusion matrices and segmentation metrics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Labeling, SuperpixelGraph, VOID_LABEL};
use crate::number::fmt_f64;
use crate::superpixels::LabelRaster;

/// Pixel counts, rows = ground truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.num_classes + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize, count: u64) -> Result<()> {
        let k = self.num_classes;
        for label in [truth, pred] {
            if label >= k {
                return Err(Error::LabelOutOfRange {
                    label,
                    num_classes: k,
                });
            }
        }
        self.counts[truth * k + pred] += count;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.num_classes).map(|j| self.get(truth, j)).sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.num_classes).map(|i| self.get(i, pred)).sum()
    }

    /// Adds every node's area to `cm[truth][pred]`. Void truth is skipped.
    pub fn accumulate(&mut self, g: &SuperpixelGraph, y_pred: &Labeling) -> Result<()> {
        let truth = g.ground_truth()?;
        if y_pred.len() != g.num_nodes() {
            return Err(Error::LengthMismatch {
                expected: g.num_nodes(),
                found: y_pred.len(),
            });
        }
        for (node, (&t, &p)) in g
            .nodes
            .iter()
            .zip(truth.as_slice().iter().zip(y_pred.as_slice()))
        {
            if t == VOID_LABEL {
                continue;
            }
            self.add(t, p, node.area)?;
        }
        Ok(())
    }

    /// Pixel-exact accumulation: the prediction of each superpixel is spread
    /// over its pixels and compared with a per-pixel ground truth.
    pub fn accumulate_pixels(
        &mut self,
        raster: &LabelRaster,
        y_pred: &Labeling,
        pixel_truth: &[u8],
    ) -> Result<()> {
        let n = raster.num_regions();
        if y_pred.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: y_pred.len(),
            });
        }
        if pixel_truth.len() != raster.assignments.len() {
            return Err(Error::LengthMismatch {
                expected: raster.assignments.len(),
                found: pixel_truth.len(),
            });
        }
        for (&region, &t) in raster.assignments.iter().zip(pixel_truth) {
            let t = usize::from(t);
            if t == VOID_LABEL {
                continue;
            }
            self.add(t, y_pred[region as usize], 1)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::DimensionMismatch {
                what: "confusion matrix classes",
                expected: self.num_classes,
                found: other.num_classes,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn metrics(&self, foreground: Option<usize>) -> Result<MetricsReport> {
        MetricsReport::from_confusion(self, foreground)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundScores {
    pub class: usize,
    /// Foreground intersection over union, `TP / (TP + FP + FN)`.
    pub s_o: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub background_iou: f64,
    /// Mean of foreground and background IoU.
    pub fg_bg_mean_iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Global pixel accuracy.
    pub s_a: f64,
    /// Per-class accuracy; `None` for classes absent from the ground truth.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub per_class_iou: Vec<Option<f64>>,
    /// Mean of the defined per-class accuracies.
    pub average_accuracy: f64,
    pub mean_iou: f64,
    pub foreground: Option<ForegroundScores>,
    pub total_pixels: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn iou(cm: &ConfusionMatrix, k: usize) -> Option<f64> {
    let tp = cm.get(k, k);
    let union = cm.row_sum(k) + cm.col_sum(k) - tp;
    (union > 0).then(|| tp as f64 / union as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// `2pr / (p + r)`, 0 when both vanish.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix, foreground: Option<usize>) -> Result<Self> {
        let total = cm.total();
        if total == 0 {
            return Err(Error::EmptyMatrix);
        }
        let k = cm.num_classes();
        let trace: u64 = (0..k).map(|i| cm.get(i, i)).sum();
        let per_class_accuracy: Vec<Option<f64>> = (0..k)
            .map(|i| {
                let row = cm.row_sum(i);
                (row > 0).then(|| cm.get(i, i) as f64 / row as f64)
            })
            .collect();
        let per_class_iou: Vec<Option<f64>> = (0..k).map(|i| iou(cm, i)).collect();
        let foreground = match foreground {
            None => None,
            Some(fg) if fg >= k => {
                return Err(Error::LabelOutOfRange {
                    label: fg,
                    num_classes: k,
                })
            }
            Some(fg) => {
                let tp = cm.get(fg, fg);
                let precision = ratio(tp, cm.col_sum(fg));
                let recall = ratio(tp, cm.row_sum(fg));
                let s_o = iou(cm, fg).unwrap_or(0.0);
                // everything that is not the foreground class counts as background
                let bg_tp = total + tp - cm.row_sum(fg) - cm.col_sum(fg);
                let background_iou = ratio(bg_tp, total - tp);
                Some(ForegroundScores {
                    class: fg,
                    s_o,
                    precision,
                    recall,
                    f_score: f_score(precision, recall),
                    background_iou,
                    fg_bg_mean_iou: 0.5 * (s_o + background_iou),
                })
            }
        };
        Ok(MetricsReport {
            s_a: trace as f64 / total as f64,
            average_accuracy: mean(per_class_accuracy.iter().flatten().copied()),
            mean_iou: mean(per_class_iou.iter().flatten().copied()),
            per_class_accuracy,
            per_class_iou,
            foreground,
            total_pixels: total,
        })
    }

    fn class_name(names: Option<&[String]>, k: usize) -> String {
        names
            .and_then(|n| n.get(k))
            .cloned()
            .unwrap_or_else(|| format!("class{k}"))
    }

    /// Aligned text table.
    pub fn to_text(&self, names: Option<&[String]>) -> String {
        let pct =
            |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v));
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>10} {:>10}", "class", "accuracy", "iou");
        for (k, (acc, iou)) in self
            .per_class_accuracy
            .iter()
            .zip(&self.per_class_iou)
            .enumerate()
        {
            let _ = writeln!(
                out,
                "{:<16} {:>10} {:>10}",
                Self::class_name(names, k),
                pct(*acc),
                pct(*iou)
            );
        }
        let _ = writeln!(
            out,
            "{:<16} {:>10} {:>10}",
            "Average",
            pct(Some(self.average_accuracy)),
            pct(Some(self.mean_iou))
        );
        let _ = writeln!(out, "{:<16} {:>10}", "Global", pct(Some(self.s_a)));
        if let Some(fg) = &self.foreground {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "foreground class {}",
                Self::class_name(names, fg.class)
            );
            let _ = writeln!(out, "{:<16} {:>10}", "S_a", pct(Some(self.s_a)));
            let _ = writeln!(out, "{:<16} {:>10}", "S_o", pct(Some(fg.s_o)));
            let _ = writeln!(out, "{:<16} {:>10}", "precision", pct(Some(fg.precision)));
            let _ = writeln!(out, "{:<16} {:>10}", "recall", pct(Some(fg.recall)));
            let _ = writeln!(out, "{:<16} {:>10}", "F", pct(Some(fg.f_score)));
            let _ = writeln!(
                out,
                "{:<16} {:>10}",
                "background IoU",
                pct(Some(fg.background_iou))
            );
            let _ = writeln!(
                out,
                "{:<16} {:>10}",
                "fg/bg mean IoU",
                pct(Some(fg.fg_bg_mean_iou))
            );
        }
        let _ = writeln!(out, "pixels {}", self.total_pixels);
        out
    }

    /// CSV with one row per class, then `Average` and `Global` rows.
    /// Foreground scores, when requested, follow as `metric,value` rows.
    pub fn to_csv(&self, names: Option<&[String]>) -> String {
        let cell = |v: Option<f64>| v.map_or_else(String::new, fmt_f64);
        let mut out = String::from("class,accuracy,iou\n");
        for (k, (acc, iou)) in self
            .per_class_accuracy
            .iter()
            .zip(&self.per_class_iou)
            .enumerate()
        {
            let _ = writeln!(
                out,
                "{},{},{}",
                Self::class_name(names, k),
                cell(*acc),
                cell(*iou)
            );
        }
        let _ = writeln!(
            out,
            "Average,{},{}",
            fmt_f64(self.average_accuracy),
            fmt_f64(self.mean_iou)
        );
        let _ = writeln!(out, "Global,{},", fmt_f64(self.s_a));
        if let Some(fg) = &self.foreground {
            out.push_str("\nmetric,value\n");
            for (name, v) in [
                ("S_a", self.s_a),
                ("S_o", fg.s_o),
                ("precision", fg.precision),
                ("recall", fg.recall),
                ("F", fg.f_score),
                ("background_iou", fg.background_iou),
                ("fg_bg_mean_iou", fg.fg_bg_mean_iou),
            ] {
                let _ = writeln!(out, "{name},{}", fmt_f64(v));
            }
        }
        out
    }
}
