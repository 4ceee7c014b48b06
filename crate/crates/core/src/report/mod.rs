//! Run configuration, end-to-end orchestration, on-disk artifacts and SVG
//! rendering.

mod artifacts;
pub mod commands;
mod config;
pub mod pipeline;
mod svg;

pub use artifacts::{sha256_file, Bundle, Manifest, ManifestEntry, MANIFEST_NAME, PARTIAL_SUFFIX};
pub use config::{CalibrationConfig, DataPaths, KMeansConfig, ReportConfig, RunConfig, OUTPUT_DIR_ENV};
pub use pipeline::{run_pipeline, PipelineSummary};
pub use svg::{luma, render_heatmap, render_heatmap_file, ColorScale};
