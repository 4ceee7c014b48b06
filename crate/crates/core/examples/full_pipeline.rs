//! Run every stage from a config file and print the summary.
//!
//! cargo run --release --example full_pipeline -- [config.toml]

mod support;

use std::path::PathBuf;

use mlm_core::report::{run_pipeline, RunConfig};

fn main() {
    let path = std::env::args().nth(1).map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml"), PathBuf::from);
    let mut cfg = RunConfig::load(Some(path.as_path())).unwrap();
    cfg.data.dir = support::mnist_dir();
    if cfg.output_dir.is_relative() {
        cfg.output_dir = support::scratch_dir().join(cfg.output_dir.file_name().unwrap());
    }
    let s = run_pipeline(&cfg).unwrap();
    println!("{} train / {} test images, clean accuracy {:.4}", s.train_size, s.test_size, s.test_accuracy);
    println!("max centroid displacement {:.3e}", s.max_displacement);
    println!("{} predictions ({} perturbed), peak {} slice(s) in memory", s.predictions, s.perturbed_predictions, s.peak_live_slices);
    println!("mean accuracy by level {:?}", s.level_mean_accuracy.map(|a| (a * 1000.0).round() / 1000.0));
    for (stage, secs) in &s.stage_seconds {
        println!("  {stage:<15} {secs:>8.1}s");
    }
    println!("{} files in {}; manifest sha256 {}", s.manifest.files.len(), s.output_dir.display(), s.manifest_sha256);
}
