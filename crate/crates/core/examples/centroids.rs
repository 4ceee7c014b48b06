//! Class centroids in softmax space: mean-softmax initialisation, K-Means
//! refinement, and the correctly classified digits that sit nearer a
//! foreign centroid.
//!
//! cargo run --release --example centroids -- [fraction]

mod support;

use mlm_core::classifier::predict_dataset;
use mlm_core::clustering::{initial_centroids, kmeans_refine, misclustered_report, KMeansOptions};
use mlm_core::data::Split;

fn main() {
    let fraction: f64 = std::env::args().nth(1).map_or(0.2, |a| a.parse().expect("fraction"));
    let params = support::model();
    let train_set = support::load(Split::Train).subsample(fraction, 1).unwrap();
    let records = predict_dataset(&params, &train_set, None).unwrap();
    let init = initial_centroids(&records, 10).unwrap();
    let refined = kmeans_refine(&records, &init, KMeansOptions::default()).unwrap();
    println!("{} records, {} k-means iterations", records.len(), refined.iterations);
    println!("class  support  own-probability  displacement");
    for c in 0..10 {
        println!("{c:>5}  {:>7}  {:>15.6}  {:>12.3e}", refined.support[c], refined.centroids.get(c)[c], refined.displacement[c]);
    }
    let rows = misclustered_report(&records, &refined.centroids);
    println!("{} misclustered examples", rows.len());
    for r in rows.iter().take(10) {
        println!("  sample {:>5}: label {} nearest centroid {} ({:.4} vs own {:.4})", r.sample_id, r.label, r.cluster, r.distances[r.cluster], r.distances[r.label as usize]);
    }
}
