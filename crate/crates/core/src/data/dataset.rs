use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{idx, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::rng;

/// Single-channel image with row-major pixels in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ShapeMismatch(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// Build from values that are clamped into `[0, 1]` first.
    pub fn from_clamped(height: usize, width: usize, mut pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), height * width);
        for v in &mut pixels {
            // NaN maps to 0 so the invariant always holds.
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Pixel lookup with clamp-to-edge addressing.
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.pixels[r * self.width + c]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Images with labels, plus the index of each image in its source file.
///
/// `sample_ids` survive subsampling so prediction records always point back
/// at the original IDX position.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<u8>,
    pub sample_ids: Vec<u64>,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(images: Vec<ImageTensor>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some((index, &value)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= NUM_CLASSES)
        {
            return Err(Error::LabelOutOfRange { index, value });
        }
        let sample_ids = (0..images.len() as u64).collect();
        Ok(Self {
            images,
            labels,
            sample_ids,
            split,
        })
    }

    /// Load an image file and a label file in IDX format.
    pub fn load_idx(images: &Path, labels: &Path, split: Split) -> Result<Self> {
        let image_bytes = std::fs::read(images).map_err(|e| Error::io(images, e))?;
        let label_bytes = std::fs::read(labels).map_err(|e| Error::io(labels, e))?;
        Self::new(
            idx::parse_idx_images(&image_bytes)?,
            idx::parse_idx_labels(&label_bytes)?,
            split,
        )
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Per-class image counts.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Keep the listed positions (in the given order).
    pub fn select(&self, positions: &[usize]) -> Self {
        Self {
            images: positions.iter().map(|&i| self.images[i].clone()).collect(),
            labels: positions.iter().map(|&i| self.labels[i]).collect(),
            sample_ids: positions.iter().map(|&i| self.sample_ids[i]).collect(),
            split: self.split,
        }
    }

    /// Seeded subset of `ceil(fraction * len)` images, kept in source order.
    pub fn subsample(&self, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!(
                "subsample fraction {fraction} outside (0, 1]"
            )));
        }
        if fraction == 1.0 {
            return Ok(self.clone());
        }
        let keep = ((self.len() as f64 * fraction).ceil() as usize).clamp(1, self.len());
        Ok(self.select(&subset_positions(self.len(), keep, seed)))
    }
}

/// First `keep` entries of a seeded Fisher–Yates permutation, sorted.
pub fn subset_positions(n: usize, keep: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    rng::fisher_yates(&mut order, &mut rng::seeded_rng(seed));
    order.truncate(keep.min(n));
    order.sort_unstable();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(ImageTensor::new(1, 2, vec![0.0, 1.5]).is_err());
        assert!(ImageTensor::new(1, 2, vec![0.0]).is_err());
        assert!(ImageTensor::new(1, 2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn clamped_constructor_sanitizes() {
        let img = ImageTensor::from_clamped(1, 3, vec![-0.5, f64::NAN, 2.0]);
        assert_eq!(img.pixels(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let err = LabeledDataset::new(vec![ImageTensor::zeros(2, 2)], vec![], Split::Test);
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn subsample_keeps_source_ids() {
        let images = (0..20).map(|_| ImageTensor::zeros(1, 1)).collect();
        let labels = (0..20).map(|i| (i % 10) as u8).collect();
        let ds = LabeledDataset::new(images, labels, Split::Train).unwrap();
        let sub = ds.subsample(0.25, 9).unwrap();
        assert_eq!(sub.len(), 5);
        assert!(sub.sample_ids.windows(2).all(|w| w[0] < w[1]));
        for (id, label) in sub.sample_ids.iter().zip(&sub.labels) {
            assert_eq!(*label as u64, id % 10);
        }
        assert_eq!(sub, ds.subsample(0.25, 9).unwrap());
        assert!(ds.subsample(0.0, 1).is_err());
    }
}
