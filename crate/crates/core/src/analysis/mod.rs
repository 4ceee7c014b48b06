//! Distance matrices, misclassification likelihoods, per-level stability and
//! the summary tables built from prediction records.

mod distance;
mod grid;
mod levels;
mod likelihood;
mod summary;

pub use distance::{distance_to_centroids, nearest_distance_matrix, DistanceAccumulator, DistanceMatrix};
pub use grid::{read_grid_csv, Grid, MATRIX_CORNER};
pub use levels::{per_family_level_mlm, per_level_mlm, stability, LevelAccumulator, LevelMatrices, StabilityStats};
pub use likelihood::{mlm, LikelihoodMatrix};
pub use summary::{accuracy_heatmap, confusion_matrix, AccuracyHeatmap, ConfusionMatrix, HeatmapAccumulator};

/// Which records a matrix was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    CleanTest,
    Level(u32),
    FamilyLevel(crate::perturb::Family, u32),
    LevelMean,
    Records(String),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::CleanTest => f.write_str("clean-test"),
            Provenance::Level(p) => write!(f, "level-{p:02}"),
            Provenance::FamilyLevel(fam, p) => write!(f, "{fam}-level-{p:02}"),
            Provenance::LevelMean => f.write_str("level-mean"),
            Provenance::Records(s) => f.write_str(s),
        }
    }
}
