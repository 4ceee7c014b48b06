//! Shared setup for the examples: locate MNIST and obtain a model.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mlm_core::classifier::{evaluate_accuracy, read_checkpoint, train, write_checkpoint, NetworkParams, TrainConfig};
use mlm_core::data::{LabeledDataset, Split};

/// `$MNIST_DIR`, else `data/mnist` under the workspace root.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn load(split: Split) -> LabeledDataset {
    let dir = mnist_dir();
    let stem = if split == Split::Train { "train" } else { "t10k" };
    LabeledDataset::load_idx(
        &dir.join(format!("{stem}-images-idx3-ubyte")),
        &dir.join(format!("{stem}-labels-idx1-ubyte")),
        split,
    )
    .unwrap_or_else(|e| panic!("cannot load MNIST from {}: {e}", dir.display()))
}

pub fn scratch_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../runs/examples");
    std::fs::create_dir_all(&dir).unwrap();
    dir.canonicalize().unwrap()
}

/// The checkpoint named by `$MLM_CHECKPOINT`, or a small model trained on a
/// tenth of the training split and cached under `runs/examples`.
pub fn model() -> NetworkParams {
    if let Some(p) = std::env::var_os("MLM_CHECKPOINT") {
        return read_checkpoint(Path::new(&p)).expect("readable checkpoint");
    }
    let cached = scratch_dir().join("quick.ckpt");
    if let Ok(params) = read_checkpoint(&cached) {
        return params;
    }
    let subset = load(Split::Train).subsample(0.1, 0).unwrap();
    println!("training a quick model on {} images (cached at {})", subset.len(), cached.display());
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let params = train(&subset, &cfg, None).unwrap().params;
    let test = load(Split::Test);
    println!("quick model test accuracy {:.4}", evaluate_accuracy(&params, &test).unwrap());
    write_checkpoint(&params, &cached).unwrap();
    params
}
