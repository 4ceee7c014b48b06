//! One function per CLI subcommand. Each writes into the configured output
//! directory and returns a short human-readable summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::artifacts::Bundle;
use super::pipeline::{self, stage, PipelineSummary};
use super::svg::{render_heatmap_file, ColorScale};
use super::RunConfig;
use crate::analysis::{mlm, DistanceAccumulator, HeatmapAccumulator, LevelAccumulator, Provenance};
use crate::classifier::{accuracy, read_checkpoint};
use crate::clustering::read_centroids_csv;
use crate::data::{LabeledDataset, RecordReader, Split};
use crate::error::{Error, Result};
use crate::perturb::{Family, Schedule};

/// Parse all four IDX files and describe them.
pub fn cmd_ingest_check(cfg: &RunConfig) -> Result<String> {
    let mut out = String::new();
    for (split, (images, labels)) in [(Split::Train, cfg.data.train()), (Split::Test, cfg.data.test())] {
        let ds = LabeledDataset::load_idx(&images, &labels, split)?;
        let (h, w) = ds.images.first().map_or((0, 0), |im| (im.height(), im.width()));
        let mean = ds.images.iter().map(|im| im.mean()).sum::<f64>() / ds.len().max(1) as f64;
        writeln!(out, "{split}: {} images of {h}x{w}, mean pixel {mean:.4}, classes {:?}", ds.len(), ds.class_counts()).unwrap();
    }
    Ok(out)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<String> {
    let (train_set, test, _) = stage("ingest", || pipeline::load_splits(cfg))?;
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    let params = stage("train", || pipeline::train_into(&mut bundle, cfg, &train_set, &test))?;
    let acc = crate::classifier::evaluate_accuracy(&params, &test)?;
    Ok(format!(
        "trained on {} images; test accuracy {acc:.4}; wrote {}",
        train_set.len(),
        cfg.output_dir.join("model.ckpt").display()
    ))
}

fn checkpoint_or_config(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<PathBuf> {
    checkpoint
        .map(Path::to_path_buf)
        .or_else(|| cfg.checkpoint.clone())
        .ok_or_else(|| Error::Config("no checkpoint given (flag or `checkpoint` key)".into()))
}

pub fn cmd_predict(cfg: &RunConfig, checkpoint: Option<&Path>, split: Split) -> Result<String> {
    let params = read_checkpoint(&checkpoint_or_config(cfg, checkpoint)?)?;
    let (train_set, test, _) = pipeline::load_splits(cfg)?;
    let ds = if split == Split::Train { train_set } else { test };
    let name = format!("predictions_{}.jsonl", if split == Split::Train { "train" } else { "clean" });
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    let records = stage("predict", || pipeline::predict_into(&mut bundle, &name, &params, &ds))?;
    Ok(format!("{} predictions, accuracy {:.4}; wrote {name}", records.len(), accuracy(&records)))
}

pub fn cmd_calibrate(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<String> {
    let params = read_checkpoint(&checkpoint_or_config(cfg, checkpoint)?)?;
    let (_, _, full_test) = pipeline::load_splits(cfg)?;
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    let mut cfg = cfg.clone();
    cfg.calibration.schedule = None;
    let schedule = stage("calibrate", || pipeline::schedule_into(&mut bundle, &cfg, &params, &full_test))?;
    Ok(format!("calibrated {} families; wrote schedule.toml and calibration.csv", schedule.families().count()))
}

pub fn cmd_perturb_sweep(cfg: &RunConfig, checkpoint: Option<&Path>, schedule: Option<&Path>) -> Result<String> {
    let params = read_checkpoint(&checkpoint_or_config(cfg, checkpoint)?)?;
    let schedule_path = schedule
        .map(Path::to_path_buf)
        .or_else(|| cfg.calibration.schedule.clone())
        .ok_or_else(|| Error::Config("no schedule given (flag or `calibration.schedule` key)".into()))?;
    let schedule = Schedule::read(&schedule_path)?;
    let (_, test, _) = pipeline::load_splits(cfg)?;
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    let sweep = stage("perturb-sweep", || pipeline::sweep_into(&mut bundle, cfg, &params, &test, &schedule, None))?;
    pipeline::heatmap_into(&mut bundle, &sweep.heatmap, cfg.report.svg)?;
    Ok(format!(
        "{} perturbed predictions over {} slices (peak {} in memory); wrote accuracy_heatmap.csv",
        sweep.predictions,
        sweep.heatmap.families.len() * 10,
        sweep.peak_live_slices
    ))
}

pub fn cmd_cluster(cfg: &RunConfig, train_records: &Path) -> Result<String> {
    let records = crate::data::read_records(train_records)?;
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    let set = stage("cluster", || pipeline::cluster_into(&mut bundle, &records, cfg.kmeans.options()))?;
    let mut out = format!("{} k-means iterations; displacement per class:\n", set.iterations);
    for (c, d) in set.displacement.iter().enumerate() {
        writeln!(out, "  {c}: {d:.3e} (support {})", set.support[c]).unwrap();
    }
    Ok(out)
}

/// Likelihood matrix of a record file. Perturbed records are grouped by
/// level when `by_level` is set; otherwise every record is pooled.
pub fn cmd_mlm(cfg: &RunConfig, records: &Path, centroids: &Path, by_level: bool) -> Result<String> {
    let (mus, _, _) = read_centroids_csv(centroids)?;
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    if by_level {
        let mut acc = LevelAccumulator::new(&mus, cfg.report.per_family);
        for r in RecordReader::open(records)? {
            acc.push(&r?)?;
        }
        let (levels, by_family) = acc.finish()?;
        for m in &levels {
            bundle.write(&format!("distance_level_{:02}.csv", m.level), m.distances.to_grid().to_csv())?;
            bundle.write(&format!("mlm_level_{:02}.csv", m.level), m.likelihood.to_grid().to_csv())?;
        }
        for (f, m) in &by_family {
            bundle.write(&format!("mlm_{f}_level_{:02}.csv", m.level), m.likelihood.to_grid().to_csv())?;
        }
        return Ok(format!("wrote {} per-level likelihood matrices", levels.len() + by_family.len()));
    }
    let mut acc = DistanceAccumulator::new(&mus);
    for r in RecordReader::open(records)? {
        acc.push(&r?)?;
    }
    let d = acc.finish(Provenance::Records(records.display().to_string()))?;
    let l = mlm(&d)?;
    bundle.write("distance.csv", d.to_grid().to_csv())?;
    bundle.write("distance_argmin.csv", d.argmin_grid().to_csv())?;
    bundle.write("mlm.csv", l.to_grid().to_csv())?;
    let mut out = String::from("most likely confusion per class:");
    for y in 0..l.n() {
        let c = l.most_likely_confusion(y);
        write!(out, " {y}->{c} ({:.3})", l.get(y, c)).unwrap();
    }
    Ok(out)
}

/// Per-level matrices, their mean and spread, and the accuracy heatmap of
/// a perturbed record file.
pub fn cmd_stability(cfg: &RunConfig, records: &Path, centroids: &Path) -> Result<String> {
    let (mus, _, _) = read_centroids_csv(centroids)?;
    let mut levels = LevelAccumulator::new(&mus, cfg.report.per_family);
    let mut heat = HeatmapAccumulator::new();
    let mut families = std::collections::BTreeSet::new();
    for r in RecordReader::open(records)? {
        let r = r?;
        families.extend(r.perturbation_type);
        heat.push(&r);
        levels.push(&r)?;
    }
    let families: Vec<Family> = families.into_iter().collect();
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    let (levels, by_family) = levels.finish()?;
    pipeline::heatmap_into(&mut bundle, &heat.finish(&families)?, cfg.report.svg)?;
    let stats = pipeline::levels_into(&mut bundle, &levels, &by_family, cfg.report.svg)?;
    let top = stats.std.iter().cloned().fold(0.0, f64::max);
    Ok(format!("{} levels; largest cell standard deviation {top:.4}; wrote mlm_mean.csv and mlm_std.csv", stats.levels.len()))
}

pub fn cmd_render(matrix: &Path, scale: ColorScale, out: &Path) -> Result<String> {
    render_heatmap_file(matrix, scale, out)?;
    Ok(format!("wrote {}", out.display()))
}

pub fn cmd_pipeline(cfg: &RunConfig) -> Result<PipelineSummary> {
    pipeline::run_pipeline(cfg)
}
