//! SLIC over-segmentation and superpixel adjacency.

mod adjacency;
mod slic;

pub use adjacency::{
    build_adjacency, build_skeleton, project_labels, region_stats, tag_relation, RegionStats,
};
pub use slic::{slic_segment, slic_segment_traced, SlicConfig};

use std::path::Path;

use image::{ImageBuffer, Luma, RgbImage};

use crate::error::{Error, Result};

/// Per-pixel superpixel assignment, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRaster {
    pub width: u32,
    pub height: u32,
    pub assignments: Vec<u32>,
}

impl LabelRaster {
    pub fn new(width: u32, height: u32, assignments: Vec<u32>) -> Result<Self> {
        if assignments.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch {
                what: "raster pixels",
                expected: width as usize * height as usize,
                found: assignments.len(),
            });
        }
        Ok(LabelRaster {
            width,
            height,
            assignments,
        })
    }

    pub fn get(&self, row: u32, col: u32) -> u32 {
        self.assignments[(row * self.width + col) as usize]
    }

    pub fn num_regions(&self) -> usize {
        self.assignments.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Region ids are dense and every region is 4-connected.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_regions();
        let mut seen = vec![false; n];
        for &a in &self.assignments {
            seen[a as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGraph(format!(
                "raster ids not dense: {missing} unused"
            )));
        }
        let components = slic::connected_components(
            self.width as usize,
            self.height as usize,
            &self.assignments,
        );
        if components.count != n {
            return Err(Error::InvalidGraph(format!(
                "{} connected components for {n} superpixels",
                components.count
            )));
        }
        Ok(())
    }

    /// Writes ids as a 16-bit grayscale PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        if self.num_regions() > usize::from(u16::MAX) + 1 {
            return Err(Error::InvalidConfig(
                "more than 65536 regions cannot be stored in a 16-bit PNG".into(),
            ));
        }
        let data: Vec<u16> = self.assignments.iter().map(|&a| a as u16).collect();
        let img: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width, self.height, data)
                .expect("buffer size matches raster");
        img.save(path)?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.into_luma16();
        let (w, h) = img.dimensions();
        LabelRaster::new(w, h, img.into_raw().into_iter().map(u32::from).collect())
    }
}

/// Reads an 8-bit RGB image (PNG or PPM).
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)?.into_rgb8())
}
