//! How the likelihood matrix drifts as perturbations grow: per-level
//! matrices over a perturbed sweep, their mean and standard deviation.
//!
//! cargo run --release --example stability -- [test_images]

mod support;

use mlm_core::analysis::{stability, HeatmapAccumulator, LevelAccumulator};
use mlm_core::classifier::predict_dataset;
use mlm_core::clustering::{initial_centroids, kmeans_refine, KMeansOptions};
use mlm_core::data::Split;
use mlm_core::perturb::{generate_perturbed_dataset, Family, Schedule};

fn main() {
    let n: usize = std::env::args().nth(1).map_or(300, |a| a.parse().expect("image count"));
    let params = support::model();
    let train_records = predict_dataset(&params, &support::load(Split::Train).subsample(0.2, 1).unwrap(), None).unwrap();
    let set = kmeans_refine(&train_records, &initial_centroids(&train_records, 10).unwrap(), KMeansOptions::default()).unwrap();
    let full = support::load(Split::Test);
    let keep: Vec<usize> = (0..n.min(full.len())).collect();
    let test = full.select(&keep);

    let schedule = Schedule::linear();
    let mut levels = LevelAccumulator::new(&set.centroids, false);
    let mut heat = HeatmapAccumulator::new();
    for slice in generate_perturbed_dataset(&test, &schedule, 0) {
        let slice = slice.unwrap();
        for r in predict_dataset(&params, &slice.dataset, Some((slice.family, slice.level))).unwrap() {
            heat.push(&r);
            levels.push(&r).unwrap();
        }
    }
    let families: Vec<Family> = schedule.families().collect();
    println!("mean accuracy by level: {:?}", heat.finish(&families).unwrap().level_means().map(|a| (a * 1000.0).round() / 1000.0));
    let (per_level, _) = levels.finish().unwrap();
    let stats = stability(&per_level.into_iter().map(|m| m.likelihood).collect::<Vec<_>>()).unwrap();
    let mut cells: Vec<(usize, usize)> = (0..10).flat_map(|y| (0..10).map(move |c| (y, c))).filter(|(y, c)| y != c).collect();
    cells.sort_by(|a, b| stats.std[b.0 * 10 + b.1].total_cmp(&stats.std[a.0 * 10 + a.1]));
    println!("least stable cells (true -> target: mean, std):");
    for &(y, c) in cells.iter().take(8) {
        println!("  {y} -> {c}: {:.4}, {:.4}", stats.mean.get(y, c), stats.std[y * 10 + c]);
    }
}
