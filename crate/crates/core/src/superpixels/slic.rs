use image::RgbImage;

use super::LabelRaster;
use crate::color::rgb_to_lab;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SlicConfig {
    pub target_count: usize,
    /// Weight of spatial distance relative to color distance.
    pub compactness: f64,
    pub max_iterations: usize,
}

impl Default for SlicConfig {
    fn default() -> Self {
        SlicConfig {
            target_count: 700,
            compactness: 10.0,
            max_iterations: 10,
        }
    }
}

impl SlicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_count == 0 {
            return Err(Error::InvalidConfig(
                "target_count must be at least 1".into(),
            ));
        }
        if !(self.compactness > 0.0) || !self.compactness.is_finite() {
            return Err(Error::InvalidConfig("compactness must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Center {
    lab: [f64; 3],
    row: f64,
    col: f64,
}

pub fn slic_segment(image: &RgbImage, cfg: &SlicConfig) -> Result<LabelRaster> {
    slic_segment_traced(image, cfg).map(|(raster, _)| raster)
}

/// Runs SLIC and also returns the clustering objective (sum of squared
/// joint color/space distances) after every assignment step. The objective
/// never increases: each pixel may always keep its current center, and the
/// center update is the exact mean.
pub fn slic_segment_traced(image: &RgbImage, cfg: &SlicConfig) -> Result<(LabelRaster, Vec<f64>)> {
    cfg.validate()?;
    let (w, h) = (image.width() as usize, image.height() as usize);
    let npix = w * h;
    if npix == 0 || npix < cfg.target_count {
        return Err(Error::ImageTooSmall {
            pixels: npix,
            target: cfg.target_count,
        });
    }
    let lab: Vec<[f64; 3]> = image.pixels().map(|p| rgb_to_lab(p.0)).collect();

    let step = (npix as f64 / cfg.target_count as f64).sqrt();
    let nx = ((w as f64 / step).round() as usize).clamp(1, w);
    let ny = ((h as f64 / step).round() as usize).clamp(1, h);
    let (step_r, step_c) = (h as f64 / ny as f64, w as f64 / nx as f64);
    let radius = step_r.max(step_c).ceil() as isize;
    let spatial_weight = (cfg.compactness / step).powi(2);

    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let r = (((j as f64 + 0.5) * step_r) as usize).min(h - 1);
            let c = (((i as f64 + 0.5) * step_c) as usize).min(w - 1);
            let (r, c) = lowest_gradient(&lab, w, h, r, c);
            centers.push(Center {
                lab: lab[r * w + c],
                row: r as f64,
                col: c as f64,
            });
        }
    }

    let dist2 = |c: &Center, idx: usize| -> f64 {
        let (r, col) = ((idx / w) as f64, (idx % w) as f64);
        let p = &lab[idx];
        let dc = (p[0] - c.lab[0]).powi(2) + (p[1] - c.lab[1]).powi(2) + (p[2] - c.lab[2]).powi(2);
        let ds = (r - c.row).powi(2) + (col - c.col).powi(2);
        dc + spatial_weight * ds
    };

    let mut assign = vec![u32::MAX; npix];
    let mut dist = vec![f64::INFINITY; npix];
    let mut trace = Vec::with_capacity(cfg.max_iterations);
    for _ in 0..cfg.max_iterations.max(1) {
        for (idx, a) in assign.iter().enumerate() {
            dist[idx] = if *a == u32::MAX {
                f64::INFINITY
            } else {
                dist2(&centers[*a as usize], idx)
            };
        }
        let previous = assign.clone();
        for (k, c) in centers.iter().enumerate() {
            let (cr, cc) = (c.row.round() as isize, c.col.round() as isize);
            let r0 = (cr - radius).max(0) as usize;
            let r1 = ((cr + radius) as usize).min(h - 1);
            let c0 = (cc - radius).max(0) as usize;
            let c1 = ((cc + radius) as usize).min(w - 1);
            for r in r0..=r1 {
                for col in c0..=c1 {
                    let idx = r * w + col;
                    let d = dist2(c, idx);
                    if d < dist[idx] {
                        dist[idx] = d;
                        assign[idx] = k as u32;
                    }
                }
            }
        }
        for idx in 0..npix {
            if assign[idx] == u32::MAX {
                let (k, d) = centers
                    .iter()
                    .enumerate()
                    .map(|(k, c)| (k, dist2(c, idx)))
                    .fold(
                        (0, f64::INFINITY),
                        |best, cur| if cur.1 < best.1 { cur } else { best },
                    );
                assign[idx] = k as u32;
                dist[idx] = d;
            }
        }
        trace.push(dist.iter().sum());

        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (idx, &a) in assign.iter().enumerate() {
            let s = &mut sums[a as usize];
            let p = &lab[idx];
            s[0] += p[0];
            s[1] += p[1];
            s[2] += p[2];
            s[3] += (idx / w) as f64;
            s[4] += (idx % w) as f64;
            s[5] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[5] > 0.0 {
                *c = Center {
                    lab: [s[0] / s[5], s[1] / s[5], s[2] / s[5]],
                    row: s[3] / s[5],
                    col: s[4] / s[5],
                };
            }
        }
        if previous == assign {
            break;
        }
    }

    let min_size = (npix as f64 / centers.len() as f64 / 4.0).floor() as usize;
    let labels = enforce_connectivity(w, h, &assign, min_size);
    Ok((LabelRaster::new(w as u32, h as u32, labels)?, trace))
}

fn lowest_gradient(lab: &[[f64; 3]], w: usize, h: usize, r: usize, c: usize) -> (usize, usize) {
    if w < 3 || h < 3 {
        return (r, c);
    }
    let grad = |r: usize, c: usize| -> f64 {
        let (rl, rh) = (r.saturating_sub(1), (r + 1).min(h - 1));
        let (cl, ch) = (c.saturating_sub(1), (c + 1).min(w - 1));
        let d = |a: usize, b: usize| (0..3).map(|i| (lab[a][i] - lab[b][i]).powi(2)).sum::<f64>();
        d(r * w + ch, r * w + cl) + d(rh * w + c, rl * w + c)
    };
    let mut best = (r, c);
    let mut best_g = grad(r, c);
    for rr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
        for cc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
            let g = grad(rr, cc);
            if g < best_g {
                best_g = g;
                best = (rr, cc);
            }
        }
    }
    best
}

pub(crate) struct Components {
    pub count: usize,
    /// Component id per pixel, numbered in row-major order of first pixel.
    pub ids: Vec<u32>,
}

/// 4-connected components of equal-label pixel regions.
pub(crate) fn connected_components(w: usize, h: usize, labels: &[u32]) -> Components {
    let mut ids = vec![u32::MAX; w * h];
    let mut count = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if ids[start] != u32::MAX {
            continue;
        }
        ids[start] = count;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (r, c) = (idx / w, idx % w);
            let mut visit = |n: usize| {
                if ids[n] == u32::MAX && labels[n] == labels[start] {
                    ids[n] = count;
                    stack.push(n);
                }
            };
            if r > 0 {
                visit(idx - w);
            }
            if r + 1 < h {
                visit(idx + w);
            }
            if c > 0 {
                visit(idx - 1);
            }
            if c + 1 < w {
                visit(idx + 1);
            }
        }
        count += 1;
    }
    Components {
        count: count as usize,
        ids,
    }
}

/// Splits every cluster into its 4-connected components, merges components
/// smaller than `min_size` into the largest adjacent component, and numbers
/// the result densely in row-major order of first appearance.
fn enforce_connectivity(w: usize, h: usize, assign: &[u32], min_size: usize) -> Vec<u32> {
    let comps = connected_components(w, h, assign);
    let mut owner = comps.ids;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps.count];
    for (idx, &c) in owner.iter().enumerate() {
        members[c as usize].push(idx);
    }

    for comp in 0..comps.count {
        let size = members[comp].len();
        if size == 0 || size >= min_size {
            continue;
        }
        let mut best: Option<(usize, u32)> = None;
        for &idx in &members[comp] {
            let (r, c) = (idx / w, idx % w);
            let neighbors = [
                (r > 0).then(|| idx - w),
                (r + 1 < h).then(|| idx + w),
                (c > 0).then(|| idx - 1),
                (c + 1 < w).then(|| idx + 1),
            ];
            for n in neighbors.into_iter().flatten() {
                let other = owner[n];
                if other as usize == comp {
                    continue;
                }
                let other_size = members[other as usize].len();
                let better = match best {
                    None => true,
                    Some((s, id)) => other_size > s || (other_size == s && other < id),
                };
                if better {
                    best = Some((other_size, other));
                }
            }
        }
        if let Some((_, target)) = best {
            let moved = std::mem::take(&mut members[comp]);
            for &idx in &moved {
                owner[idx] = target;
            }
            members[target as usize].extend(moved);
        }
    }

    let mut remap = vec![u32::MAX; comps.count];
    let mut next = 0u32;
    owner
        .iter()
        .map(|&c| {
            let slot = &mut remap[c as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect()
}
