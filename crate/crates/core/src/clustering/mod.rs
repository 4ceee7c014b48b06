//! Class centroids in softmax space: per-class means of correctly
//! classified training outputs, refined by Lloyd's algorithm.

mod assign;
mod centroids;
mod kmeans;

pub use assign::{assign_cluster, misclustered_report, Assignment, MisclusteredRow};
pub use centroids::{initial_centroids, read_centroids_csv, write_centroids_csv, CentroidSet, Centroids};
pub use kmeans::{kmeans_refine, lloyd, KMeansOptions, LloydOutcome};
