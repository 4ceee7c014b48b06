use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::clustering::KMeansOptions;
use crate::error::{Error, Result};
use crate::perturb::CalibrationTargets;

/// Environment variable that overrides [`RunConfig::output_dir`].
pub const OUTPUT_DIR_ENV: &str = "MLM_OUTPUT_DIR";

/// Locations of the four MNIST IDX files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Directory the file names below are resolved against.
    pub dir: PathBuf,
    pub train_images: String,
    pub train_labels: String,
    pub test_images: String,
    pub test_labels: String,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("data/mnist"),
            train_images: "train-images-idx3-ubyte".into(),
            train_labels: "train-labels-idx1-ubyte".into(),
            test_images: "t10k-images-idx3-ubyte".into(),
            test_labels: "t10k-labels-idx1-ubyte".into(),
        }
    }
}

impl DataPaths {
    pub fn train(&self) -> (PathBuf, PathBuf) {
        (self.dir.join(&self.train_images), self.dir.join(&self.train_labels))
    }

    pub fn test(&self) -> (PathBuf, PathBuf) {
        (self.dir.join(&self.test_images), self.dir.join(&self.test_labels))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Use this schedule file instead of calibrating.
    pub schedule: Option<PathBuf>,
    pub targets: CalibrationTargets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub reseed_empty: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        let o = KMeansOptions::default();
        Self { max_iters: o.max_iters, tol: o.tol, reseed_empty: o.reseed_empty }
    }
}

impl KMeansConfig {
    pub fn options(&self) -> KMeansOptions {
        KMeansOptions { max_iters: self.max_iters, tol: self.tol, reseed_empty: self.reseed_empty }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Keep the perturbed prediction records on disk.
    pub perturbed_records: bool,
    /// Also write likelihood matrices per (family, level).
    pub per_family: bool,
    /// Render SVG heatmaps next to the CSV files.
    pub svg: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { perturbed_records: true, per_family: false, svg: true }
    }
}

/// Everything a pipeline run depends on. Relative paths resolve against
/// the working directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    pub output_dir: PathBuf,
    /// Seed for subsampling, calibration and perturbations.
    pub seed: u64,
    /// Fraction of each split to use, in `(0, 1]`.
    pub subsample: f64,
    /// Load this checkpoint instead of training.
    pub checkpoint: Option<PathBuf>,
    /// Directory for cached perturbed slices.
    pub slice_cache: Option<PathBuf>,
    pub train: TrainConfig,
    pub calibration: CalibrationConfig,
    pub kmeans: KMeansConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataPaths::default(),
            output_dir: PathBuf::from("runs/default"),
            seed: 0,
            subsample: 1.0,
            checkpoint: None,
            slice_cache: None,
            train: TrainConfig::default(),
            calibration: CalibrationConfig::default(),
            kmeans: KMeansConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Read `path` (or start from defaults), then apply the output
    /// directory override from the environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
            None => Self::default(),
        };
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config(format!("subsample {} outside (0, 1]", self.subsample)));
        }
        self.train.validate()?;
        self.calibration.targets.validate()?;
        if self.kmeans.max_iters == 0 || self.kmeans.tol.is_nan() || self.kmeans.tol < 0.0 {
            return Err(Error::Config("kmeans needs max_iters >= 1 and tol >= 0".into()));
        }
        Ok(())
    }

    /// Fail early if an input file is missing.
    pub fn check_inputs(&self) -> Result<()> {
        let (a, b) = self.data.train();
        let (c, d) = self.data.test();
        let mut inputs = vec![a, b, c, d];
        inputs.extend(self.checkpoint.clone());
        inputs.extend(self.calibration.schedule.clone());
        for p in inputs {
            std::fs::metadata(&p).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
