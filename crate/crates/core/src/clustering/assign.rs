use serde::Serialize;

use super::centroids::Centroids;
use crate::analysis::distance_to_centroids;
use crate::data::PredictionRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub cluster: usize,
    pub distances: Vec<f64>,
}

/// Nearest centroid to `s`, ties to the lower id, with the full distance
/// profile.
pub fn assign_cluster(s: &[f64], centroids: &Centroids) -> Assignment {
    let distances = distance_to_centroids(s, centroids);
    let mut cluster = 0;
    for (c, &d) in distances.iter().enumerate() {
        if d < distances[cluster] {
            cluster = c;
        }
    }
    Assignment { cluster, distances }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisclusteredRow {
    pub sample_id: u64,
    pub label: u8,
    pub cluster: usize,
    pub distances: Vec<f64>,
}

/// Correctly classified records that sit nearer a foreign centroid than
/// their own.
pub fn misclustered_report(records: &[PredictionRecord], centroids: &Centroids) -> Vec<MisclusteredRow> {
    records
        .iter()
        .filter(|r| r.is_correct())
        .filter_map(|r| {
            let a = assign_cluster(&r.softmax, centroids);
            (a.cluster != r.true_label as usize).then(|| MisclusteredRow {
                sample_id: r.sample_id,
                label: r.true_label,
                cluster: a.cluster,
                distances: a.distances,
            })
        })
        .collect()
}
