//! Region appearance descriptors and pairwise (edge) features.

use std::collections::HashSet;

use image::RgbImage;

use crate::color::{gray, rgb_to_luv};
use crate::error::{Error, Result};
use crate::graph::SuperpixelGraph;
use crate::superpixels::LabelRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairwiseChannel {
    BoundaryLength,
    LuvColorDiff,
    ColorHistDiff,
    LbpDiff,
}

impl PairwiseChannel {
    pub const ALL: [PairwiseChannel; 4] = [
        PairwiseChannel::BoundaryLength,
        PairwiseChannel::LuvColorDiff,
        PairwiseChannel::ColorHistDiff,
        PairwiseChannel::LbpDiff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairwiseChannel::BoundaryLength => "boundary_length",
            PairwiseChannel::LuvColorDiff => "luv_diff",
            PairwiseChannel::ColorHistDiff => "color_hist",
            PairwiseChannel::LbpDiff => "lbp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseFeatureSpec {
    pub channels: Vec<PairwiseChannel>,
    /// Histogram bins per RGB channel.
    pub hist_bins: usize,
    pub lbp_radius: usize,
}

impl Default for PairwiseFeatureSpec {
    fn default() -> Self {
        PairwiseFeatureSpec {
            channels: PairwiseChannel::ALL.to_vec(),
            hist_bins: 8,
            lbp_radius: 1,
        }
    }
}

impl PairwiseFeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one pairwise channel must be enabled".into(),
            ));
        }
        if self.hist_bins == 0 || self.hist_bins > 256 || self.lbp_radius == 0 {
            return Err(Error::InvalidConfig(
                "histogram bins must be in 1..=256 and LBP radius positive".into(),
            ));
        }
        Ok(())
    }
}

/// Number of uniform-LBP histogram bins for 8 neighbours.
pub const LBP_BINS: usize = 59;

/// Maps an 8-bit LBP code to its uniform-pattern bin (58 uniform patterns,
/// everything else shares bin 58).
fn lbp_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut next = 0u8;
    for code in 0..256u32 {
        let rotated = (code >> 1) | ((code & 1) << 7);
        let transitions = (code ^ rotated).count_ones();
        table[code as usize] = if transitions <= 2 {
            next += 1;
            next - 1
        } else {
            58
        };
    }
    table
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionDescriptor {
    pub mean_luv: [f64; 3],
    /// Per-channel RGB histograms, each normalized to sum 1.
    pub color_hist: Vec<f64>,
    /// Uniform LBP histogram normalized to sum 1.
    pub lbp_hist: Vec<f64>,
}

impl RegionDescriptor {
    /// Concatenated appearance vector `[mean LUV, color hist, LBP hist]`,
    /// usable as a hand-crafted unary feature.
    pub fn appearance(&self) -> Vec<f64> {
        let mut v = self.mean_luv.to_vec();
        v.extend(&self.color_hist);
        v.extend(&self.lbp_hist);
        v
    }
}

/// Describes every region of `raster` in one pass over the image.
pub fn describe_regions(
    image: &RgbImage,
    raster: &LabelRaster,
    spec: &PairwiseFeatureSpec,
) -> Result<Vec<RegionDescriptor>> {
    if image.dimensions() != (raster.width, raster.height) {
        return Err(Error::DimensionMismatch {
            what: "image vs raster pixels",
            expected: raster.assignments.len(),
            found: image.len() / 3,
        });
    }
    let n = raster.num_regions();
    let mut acc = vec![Accumulator::new(spec); n];
    let codes = lbp_codes(image, spec.lbp_radius);
    for (idx, &a) in raster.assignments.iter().enumerate() {
        let px = image.as_raw()[idx * 3..idx * 3 + 3].try_into().unwrap();
        acc[a as usize].add(px, codes[idx], spec);
    }
    Ok(acc.into_iter().map(Accumulator::finish).collect())
}

/// Describes a single region given its pixel coordinates `(row, col)`.
pub fn describe_region(
    pixels: &[(u32, u32)],
    image: &RgbImage,
    spec: &PairwiseFeatureSpec,
) -> RegionDescriptor {
    let codes = lbp_codes(image, spec.lbp_radius);
    let w = image.width() as usize;
    let mut acc = Accumulator::new(spec);
    for &(r, c) in pixels {
        let idx = r as usize * w + c as usize;
        acc.add(image.get_pixel(c, r).0, codes[idx], spec);
    }
    acc.finish()
}

#[derive(Clone)]
struct Accumulator {
    luv: [f64; 3],
    hist: Vec<f64>,
    lbp: Vec<f64>,
    count: f64,
}

impl Accumulator {
    fn new(spec: &PairwiseFeatureSpec) -> Self {
        Accumulator {
            luv: [0.0; 3],
            hist: vec![0.0; 3 * spec.hist_bins],
            lbp: vec![0.0; LBP_BINS],
            count: 0.0,
        }
    }

    fn add(&mut self, px: [u8; 3], lbp_bin: u8, spec: &PairwiseFeatureSpec) {
        let luv = rgb_to_luv(px);
        for i in 0..3 {
            self.luv[i] += luv[i];
            self.hist[i * spec.hist_bins + usize::from(px[i]) * spec.hist_bins / 256] += 1.0;
        }
        self.lbp[usize::from(lbp_bin)] += 1.0;
        self.count += 1.0;
    }

    fn finish(self) -> RegionDescriptor {
        let n = self.count.max(1.0);
        RegionDescriptor {
            mean_luv: self.luv.map(|v| v / n),
            color_hist: self.hist.iter().map(|v| v / n).collect(),
            lbp_hist: self.lbp.iter().map(|v| v / n).collect(),
        }
    }
}

fn lbp_codes(image: &RgbImage, radius: usize) -> Vec<u8> {
    let table = lbp_table();
    let (w, h) = (image.width() as isize, image.height() as isize);
    let luma: Vec<f64> = image.pixels().map(|p| gray(p.0)).collect();
    let r = radius as isize;
    let offsets = [
        (-r, -r),
        (-r, 0),
        (-r, r),
        (0, r),
        (r, r),
        (r, 0),
        (r, -r),
        (0, -r),
    ];
    let mut out = Vec::with_capacity(luma.len());
    for row in 0..h {
        for col in 0..w {
            let center = luma[(row * w + col) as usize];
            let mut code = 0usize;
            for (bit, (dr, dc)) in offsets.iter().enumerate() {
                let rr = (row + dr).clamp(0, h - 1);
                let cc = (col + dc).clamp(0, w - 1);
                if luma[(rr * w + cc) as usize] >= center {
                    code |= 1 << bit;
                }
            }
            out.push(table[code]);
        }
    }
    out
}

/// Chi-squared histogram distance `1/2 sum (a-b)^2 / (a+b)`.
pub fn chi_squared(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let s = x + y;
            if s > 0.0 {
                (x - y) * (x - y) / s
            } else {
                0.0
            }
        })
        .sum::<f64>()
}

/// Edge feature vector in channel order. Symmetric in `(p, q)`.
pub fn edge_features(
    p: &RegionDescriptor,
    q: &RegionDescriptor,
    boundary_length: f64,
    spec: &PairwiseFeatureSpec,
) -> Vec<f64> {
    spec.channels
        .iter()
        .map(|c| match c {
            PairwiseChannel::BoundaryLength => boundary_length,
            PairwiseChannel::LuvColorDiff => (0..3)
                .map(|i| (p.mean_luv[i] - q.mean_luv[i]).powi(2))
                .sum::<f64>()
                .sqrt(),
            PairwiseChannel::ColorHistDiff => chi_squared(&p.color_hist, &q.color_hist),
            PairwiseChannel::LbpDiff => chi_squared(&p.lbp_hist, &q.lbp_hist),
        })
        .collect()
}

/// Pairwise features of two pixel regions of `image`, boundary length
/// included (4-adjacent pixel pairs straddling the regions).
pub fn pairwise_features(
    p: &[(u32, u32)],
    q: &[(u32, u32)],
    image: &RgbImage,
    spec: &PairwiseFeatureSpec,
) -> Vec<f64> {
    let qs: HashSet<(u32, u32)> = q.iter().copied().collect();
    let boundary = p
        .iter()
        .map(|&(r, c)| {
            let n = [
                (r.wrapping_sub(1), c),
                (r + 1, c),
                (r, c.wrapping_sub(1)),
                (r, c + 1),
            ];
            n.iter().filter(|x| qs.contains(x)).count()
        })
        .sum::<usize>() as f64;
    let dp = describe_region(p, image, spec);
    let dq = describe_region(q, image, spec);
    edge_features(&dp, &dq, boundary, spec)
}

/// Fills the pairwise features of every edge of `g` and sets `pfeat_dim`.
pub fn fill_pairwise(
    g: &mut SuperpixelGraph,
    descriptors: &[RegionDescriptor],
    spec: &PairwiseFeatureSpec,
) -> Result<()> {
    spec.validate()?;
    if descriptors.len() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            what: "region descriptors",
            expected: g.num_nodes(),
            found: descriptors.len(),
        });
    }
    for e in &mut g.edges {
        e.pairwise_features = edge_features(
            &descriptors[e.p],
            &descriptors[e.q],
            e.boundary_length,
            spec,
        );
    }
    g.pfeat_dim = spec.channels.len();
    Ok(())
}

/// Replaces every node's features with its appearance descriptor.
pub fn fill_appearance(g: &mut SuperpixelGraph, descriptors: &[RegionDescriptor]) -> Result<()> {
    if descriptors.len() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            what: "region descriptors",
            expected: g.num_nodes(),
            found: descriptors.len(),
        });
    }
    for (node, d) in g.nodes.iter_mut().zip(descriptors) {
        node.features = d.appearance();
    }
    g.feat_dim = descriptors.first().map_or(0, |d| d.appearance().len());
    Ok(())
}
