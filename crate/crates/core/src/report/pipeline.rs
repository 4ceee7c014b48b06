use std::fmt::Write as _;
use std::path::PathBuf;

use log::info;

use super::artifacts::{Bundle, Manifest};
use super::svg::{render_heatmap, ColorScale};
use super::RunConfig;
use crate::analysis::{mlm, nearest_distance_matrix, stability, Grid, HeatmapAccumulator, LevelAccumulator, LevelMatrices, Provenance, StabilityStats};
use crate::analysis::{confusion_matrix, AccuracyHeatmap, ConfusionMatrix, LikelihoodMatrix};
use crate::classifier::{accuracy, predict_dataset, read_checkpoint, train, write_checkpoint, EpochStats, NetworkParams};
use crate::clustering::{initial_centroids, kmeans_refine, misclustered_report, write_centroids_csv, CentroidSet, Centroids, KMeansOptions, MisclusteredRow};
use crate::data::{LabeledDataset, PredictionRecord, RecordWriter, Split};
use crate::error::{Error, Result};
use crate::perturb::{calibrate_schedule, generate_perturbed_dataset, Calibration, Family, Schedule};
use crate::rng::derive_seed;

/// Wrap a stage's error with its name.
pub fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    info!("stage {name}");
    f().map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage { stage: name, source: Box::new(other) },
    })
}

fn timed<T>(log: &mut Vec<(&'static str, f64)>, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = std::time::Instant::now();
    let out = stage(name, f);
    log.push((name, t.elapsed().as_secs_f64()));
    out
}

/// Load both splits, subsampled as configured. The full test split is
/// returned as well, for calibration.
pub fn load_splits(cfg: &RunConfig) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let (ti, tl) = cfg.data.train();
    let (vi, vl) = cfg.data.test();
    let train = LabeledDataset::load_idx(&ti, &tl, Split::Train)?;
    let full_test = LabeledDataset::load_idx(&vi, &vl, Split::Test)?;
    if cfg.subsample >= 1.0 {
        return Ok((train, full_test.clone(), full_test));
    }
    let train = train.subsample(cfg.subsample, derive_seed(cfg.seed, &[0x5ab5, 0]))?;
    let test = full_test.subsample(cfg.subsample, derive_seed(cfg.seed, &[0x5ab5, 1]))?;
    Ok((train, test, full_test))
}

pub fn train_log_csv(epochs: &[EpochStats]) -> String {
    let mut out = String::from("epoch,mean_loss,running_accuracy,eval_accuracy\n");
    for e in epochs {
        let eval = e.eval_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
        writeln!(out, "{},{:.11e},{:.6},{eval}", e.epoch, e.mean_loss, e.running_accuracy).unwrap();
    }
    out
}

/// Train and write `model.ckpt` and `train_log.csv`.
pub fn train_into(bundle: &mut Bundle, cfg: &RunConfig, train_set: &LabeledDataset, eval: &LabeledDataset) -> Result<NetworkParams> {
    let outcome = train(train_set, &cfg.train, Some(eval))?;
    write_checkpoint(&outcome.params, &bundle.partial_path("model.ckpt")?)?;
    bundle.commit("model.ckpt")?;
    bundle.write("train_log.csv", train_log_csv(&outcome.epochs))?;
    Ok(outcome.params)
}

/// Predict `dataset` and stream the records to `name`.
pub fn predict_into(bundle: &mut Bundle, name: &str, params: &NetworkParams, dataset: &LabeledDataset) -> Result<Vec<PredictionRecord>> {
    let records = predict_dataset(params, dataset, None)?;
    let mut w = RecordWriter::create(&bundle.partial_path(name)?)?;
    records.iter().try_for_each(|r| w.write(r))?;
    w.finish()?;
    bundle.commit(name)?;
    Ok(records)
}

pub fn misclustered_csv(rows: &[MisclusteredRow]) -> String {
    let mut out = String::from("sample_id,label,cluster");
    for c in 0..crate::data::NUM_CLASSES {
        write!(out, ",d{c}").unwrap();
    }
    out.push('\n');
    for r in rows {
        write!(out, "{},{},{}", r.sample_id, r.label, r.cluster).unwrap();
        for d in &r.distances {
            write!(out, ",{d:.11e}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Centroids from the training records, plus the misclustered report.
pub fn cluster_into(bundle: &mut Bundle, train_records: &[PredictionRecord], opts: KMeansOptions) -> Result<CentroidSet> {
    let init = initial_centroids(train_records, crate::data::NUM_CLASSES)?;
    let set = kmeans_refine(train_records, &init, opts)?;
    write_centroids_csv(&set.centroids, &set.support, &set.displacement, &bundle.partial_path("centroids.csv")?)?;
    bundle.commit("centroids.csv")?;
    let zeros = vec![0.0; set.support.len()];
    write_centroids_csv(&set.init_centroids, &set.support, &zeros, &bundle.partial_path("centroids_init.csv")?)?;
    bundle.commit("centroids_init.csv")?;
    let report = misclustered_report(train_records, &set.centroids);
    bundle.write("misclustered.csv", misclustered_csv(&report))?;
    bundle.count("misclustered", report.len() as u64);
    info!(
        "centroids: {} k-means iterations, max displacement {:.3e}, {} misclustered",
        set.iterations,
        set.displacement.iter().cloned().fold(0.0, f64::max),
        report.len()
    );
    Ok(set)
}

fn write_grid(bundle: &mut Bundle, name: &str, grid: &Grid, svg: Option<ColorScale>) -> Result<()> {
    bundle.write(&format!("{name}.csv"), grid.to_csv())?;
    if let Some(scale) = svg {
        bundle.write(&format!("{name}.svg"), render_heatmap(grid, scale, name)?)?;
    }
    Ok(())
}

fn write_level(bundle: &mut Bundle, stem: &str, m: &LevelMatrices, svg: bool) -> Result<()> {
    write_grid(bundle, &format!("distance_{stem}"), &m.distances.to_grid(), None)?;
    write_grid(bundle, &format!("mlm_{stem}"), &m.likelihood.to_grid(), svg.then_some(ColorScale::Likelihood))
}

pub struct CleanAnalysis {
    pub confusion: ConfusionMatrix,
    pub likelihood: LikelihoodMatrix,
}

/// Confusion matrix, distance matrix and likelihood matrix of the clean
/// test predictions.
pub fn clean_analysis_into(bundle: &mut Bundle, records: &[PredictionRecord], centroids: &Centroids, svg: bool) -> Result<CleanAnalysis> {
    let confusion = confusion_matrix(records)?;
    write_grid(bundle, "confusion_clean", &confusion.to_grid(), None)?;
    let d = nearest_distance_matrix(records, centroids, Provenance::CleanTest)?;
    write_grid(bundle, "distance_clean", &d.to_grid(), None)?;
    write_grid(bundle, "distance_clean_argmin", &d.argmin_grid(), None)?;
    let likelihood = mlm(&d)?;
    write_grid(bundle, "mlm_clean", &likelihood.to_grid(), svg.then_some(ColorScale::Likelihood))?;
    Ok(CleanAnalysis { confusion, likelihood })
}

pub fn calibration_csv(cal: &Calibration) -> String {
    let mut out = String::from("family,level,severity,subset_accuracy\n");
    for (family, acc) in &cal.achieved {
        for (i, a) in acc.iter().enumerate() {
            let sev = cal.schedule.levels(*family).map_or(f64::NAN, |s| s[i]);
            writeln!(out, "{family},{},{sev:.11e},{a:.6}", i + 1).unwrap();
        }
    }
    out
}

/// Calibrate (or load) the schedule and write `schedule.toml`.
pub fn schedule_into(bundle: &mut Bundle, cfg: &RunConfig, params: &NetworkParams, full_test: &LabeledDataset) -> Result<Schedule> {
    let schedule = match &cfg.calibration.schedule {
        Some(path) => Schedule::read(path)?,
        None => {
            let cal = calibrate_schedule(params, full_test, &cfg.calibration.targets, &Family::ALL, cfg.seed)?;
            bundle.write("calibration.csv", calibration_csv(&cal))?;
            info!("calibrated mean subset accuracy by level: {:?}", cal.mean_by_level().map(|a| (a * 1e4).round() / 1e4));
            cal.schedule
        }
    };
    bundle.write("schedule.toml", schedule.to_toml())?;
    Ok(schedule)
}

pub struct SweepOutcome {
    pub heatmap: AccuracyHeatmap,
    pub levels: Vec<LevelMatrices>,
    pub by_family: Vec<(Family, LevelMatrices)>,
    pub predictions: u64,
    pub peak_live_slices: usize,
}

/// Stream the perturbed test set through the model one slice at a time,
/// folding each slice into the heatmap and, given centroids, the per-level
/// accumulators.
pub fn sweep_into(
    bundle: &mut Bundle,
    cfg: &RunConfig,
    params: &NetworkParams,
    test: &LabeledDataset,
    schedule: &Schedule,
    centroids: Option<&Centroids>,
) -> Result<SweepOutcome> {
    const NAME: &str = "predictions_perturbed.jsonl";
    let mut sweep = generate_perturbed_dataset(test, schedule, cfg.seed);
    if let Some(dir) = &cfg.slice_cache {
        sweep = sweep.with_cache(dir.clone());
    }
    let gauge = sweep.gauge();
    let total = sweep.slice_count();
    let mut writer = if cfg.report.perturbed_records { Some(RecordWriter::create(&bundle.partial_path(NAME)?)?) } else { None };
    let mut heat = HeatmapAccumulator::new();
    let mut levels = centroids.map(|c| LevelAccumulator::new(c, cfg.report.per_family));
    for (i, slice) in sweep.enumerate() {
        let slice = slice?;
        let records = predict_dataset(params, &slice.dataset, Some((slice.family, slice.level)))?;
        for r in &records {
            heat.push(r);
            if let Some(acc) = &mut levels {
                acc.push(r)?;
            }
            if let Some(w) = &mut writer {
                w.write(r)?;
            }
        }
        log::debug!(
            "slice {}/{total}: {} level {} severity {:.4} accuracy {:.4}",
            i + 1,
            slice.family,
            slice.level.get(),
            slice.severity,
            accuracy(&records)
        );
    }
    if let Some(w) = writer.as_mut() {
        w.flush()?;
    }
    let families: Vec<Family> = schedule.families().collect();
    let heatmap = heat.finish(&families)?;
    let (levels, by_family) = match levels {
        Some(acc) => acc.finish()?,
        None => Default::default(),
    };
    if let Some(w) = writer {
        w.finish()?;
        bundle.commit(NAME)?;
    }
    Ok(SweepOutcome { heatmap, levels, by_family, predictions: heat.total(), peak_live_slices: gauge.peak() })
}

pub fn heatmap_into(bundle: &mut Bundle, heatmap: &AccuracyHeatmap, svg: bool) -> Result<()> {
    write_grid(bundle, "accuracy_heatmap", &heatmap.to_grid(), svg.then_some(ColorScale::Accuracy))
}

/// Per-level matrices and their stability statistics.
pub fn levels_into(bundle: &mut Bundle, levels: &[LevelMatrices], by_family: &[(Family, LevelMatrices)], svg: bool) -> Result<StabilityStats> {
    for m in levels {
        write_level(bundle, &format!("level_{:02}", m.level), m, svg)?;
    }
    for (family, m) in by_family {
        write_level(bundle, &format!("{family}_level_{:02}", m.level), m, false)?;
    }
    let stats = stability(&levels.iter().map(|m| m.likelihood.clone()).collect::<Vec<_>>())?;
    write_grid(bundle, "mlm_mean", &stats.mean.to_grid(), svg.then_some(ColorScale::Likelihood))?;
    write_grid(bundle, "mlm_std", &stats.std_grid(), svg.then_some(ColorScale::Likelihood))?;
    Ok(stats)
}

#[derive(Debug)]
pub struct PipelineSummary {
    pub output_dir: PathBuf,
    pub train_size: usize,
    pub test_size: usize,
    pub test_accuracy: f64,
    pub max_displacement: f64,
    /// Clean test plus perturbed predictions.
    pub predictions: u64,
    pub perturbed_predictions: u64,
    pub peak_live_slices: usize,
    pub level_mean_accuracy: [f64; 10],
    pub manifest: Manifest,
    pub manifest_sha256: String,
    /// Wall-clock seconds per stage, in run order.
    pub stage_seconds: Vec<(&'static str, f64)>,
}

/// Run every stage and write the artifact bundle into `cfg.output_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineSummary> {
    let mut log = Vec::new();
    timed(&mut log, "config", || {
        cfg.validate()?;
        cfg.check_inputs()
    })?;
    let mut bundle = timed(&mut log, "output", || Bundle::create(&cfg.output_dir))?;
    bundle.write("config.toml", cfg.to_toml())?;
    let (train_set, test, full_test) = timed(&mut log, "ingest", || load_splits(cfg))?;
    info!("{} training and {} test images", train_set.len(), test.len());
    let params = timed(&mut log, "train", || match &cfg.checkpoint {
        Some(p) => read_checkpoint(p),
        None => train_into(&mut bundle, cfg, &train_set, &test),
    })?;
    let train_records = timed(&mut log, "predict-train", || predict_into(&mut bundle, "predictions_train.jsonl", &params, &train_set))?;
    let clean = timed(&mut log, "predict-clean", || predict_into(&mut bundle, "predictions_clean.jsonl", &params, &test))?;
    let test_accuracy = accuracy(&clean);
    info!("clean test accuracy {test_accuracy:.4}");
    let set = timed(&mut log, "cluster", || cluster_into(&mut bundle, &train_records, cfg.kmeans.options()))?;
    drop(train_records);
    timed(&mut log, "clean-analysis", || clean_analysis_into(&mut bundle, &clean, &set.centroids, cfg.report.svg))?;
    let schedule = timed(&mut log, "calibrate", || schedule_into(&mut bundle, cfg, &params, &full_test))?;
    drop(full_test);
    let sweep = timed(&mut log, "perturb-sweep", || sweep_into(&mut bundle, cfg, &params, &test, &schedule, Some(&set.centroids)))?;
    timed(&mut log, "stability", || {
        heatmap_into(&mut bundle, &sweep.heatmap, cfg.report.svg)?;
        levels_into(&mut bundle, &sweep.levels, &sweep.by_family, cfg.report.svg)
    })?;
    let predictions = clean.len() as u64 + sweep.predictions;
    bundle.count("clean_predictions", clean.len() as u64);
    bundle.count("perturbed_predictions", sweep.predictions);
    bundle.count("predictions", predictions);
    bundle.count("train_predictions", train_set.len() as u64);
    let (manifest, manifest_sha256) = timed(&mut log, "manifest", || bundle.finish())?;
    info!("{predictions} predictions; manifest {manifest_sha256}");
    Ok(PipelineSummary {
        output_dir: cfg.output_dir.clone(),
        train_size: train_set.len(),
        test_size: test.len(),
        test_accuracy,
        max_displacement: set.displacement.iter().cloned().fold(0.0, f64::max),
        predictions,
        perturbed_predictions: sweep.predictions,
        peak_live_slices: sweep.peak_live_slices,
        level_mean_accuracy: sweep.heatmap.level_means(),
        manifest,
        manifest_sha256,
        stage_seconds: log,
    })
}
