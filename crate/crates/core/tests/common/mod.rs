#![allow(dead_code)]

use std::path::Path;

use mlm_core::data::idx::{encode_idx_images, encode_idx_labels};
use mlm_core::data::{ImageTensor, LabeledDataset, Split};
use mlm_core::rng::{below, derive_seed, seeded_rng, unit_f64};

pub const SIDE: usize = 28;

/// MNIST-shaped toy digits: class `c` is a thick stroke through the centre
/// at angle `c * 18` degrees, jittered and lightly noised.
pub fn toy_digits(n: usize, seed: u64, split: Split) -> LabeledDataset {
    let mut rng = seeded_rng(derive_seed(seed, &[0x70e]));
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i % 10) as u8;
        let theta = (c as f64 * 18.0 + 6.0 * (unit_f64(&mut rng) - 0.5)).to_radians();
        let (dx, dy) = (below(&mut rng, 5) as f64 - 2.0, below(&mut rng, 5) as f64 - 2.0);
        let mut px = vec![0.0; SIDE * SIDE];
        for y in 0..SIDE {
            for x in 0..SIDE {
                let (u, v) = (x as f64 - 13.5 - dx, y as f64 - 13.5 - dy);
                let along = u * theta.cos() + v * theta.sin();
                let across = -u * theta.sin() + v * theta.cos();
                let ink = if across.abs() < 1.6 && along.abs() < 10.0 { 0.9 } else { 0.0 };
                px[y * SIDE + x] = (ink + 0.1 * unit_f64(&mut rng)).min(1.0);
            }
        }
        images.push(ImageTensor::new(SIDE, SIDE, px).unwrap());
        labels.push(c);
    }
    LabeledDataset::new(images, labels, split).unwrap()
}

/// Write `train` and `test` as the four standard IDX files into `dir`.
pub fn write_idx(dir: &Path, train: &LabeledDataset, test: &LabeledDataset) {
    std::fs::create_dir_all(dir).unwrap();
    for (ds, stem) in [(train, "train"), (test, "t10k")] {
        std::fs::write(dir.join(format!("{stem}-images-idx3-ubyte")), encode_idx_images(&ds.images).unwrap()).unwrap();
        std::fs::write(dir.join(format!("{stem}-labels-idx1-ubyte")), encode_idx_labels(&ds.labels)).unwrap();
    }
}

/// IDX round trip quantises pixels to multiples of 1/255.
pub fn quantised(ds: &LabeledDataset) -> LabeledDataset {
    let images = ds
        .images
        .iter()
        .map(|im| ImageTensor::new(im.height(), im.width(), im.pixels().iter().map(|v| (v * 255.0).round() / 255.0).collect()).unwrap())
        .collect();
    LabeledDataset::new(images, ds.labels.clone(), ds.split).unwrap()
}

pub struct GradientCheck {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradientCheck {
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.numeric).abs() / self.analytic.abs().max(self.numeric.abs()).max(1e-6)
    }
}

/// Central differences of the batch loss at `count` seeded coordinates,
/// spread evenly over the eight parameter tensors.
pub fn gradient_check(seed: u64, count: usize, h: f64) -> Vec<GradientCheck> {
    use mlm_core::classifier::{loss_and_grad, NetworkParams, Tensor};
    let params = NetworkParams::init(seed);
    let data = toy_digits(4, seed, Split::Train);
    let images: Vec<&ImageTensor> = data.images.iter().collect();
    let (_, grad) = loss_and_grad(&params, &images, &data.labels).unwrap();
    let mut rng = seeded_rng(derive_seed(seed, &[0x96ad]));
    let mut offsets = Vec::new();
    let mut start = 0;
    for t in Tensor::ALL {
        offsets.push((start, t.len()));
        start += t.len();
    }
    (0..count)
        .map(|k| {
            let (base, len) = offsets[k % offsets.len()];
            let index = base + below(&mut rng, len as u64) as usize;
            let loss_at = |delta: f64| {
                let mut p = params.clone();
                p.as_mut_slice()[index] += delta;
                loss_and_grad(&p, &images, &data.labels).unwrap().0
            };
            let numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            GradientCheck { index, analytic: grad.as_slice()[index], numeric }
        })
        .collect()
}
