//! Nearest-distance and likelihood matrices on the clean test split, with
//! the most likely wrong class for each digit.
//!
//! cargo run --release --example mlm_matrix

mod support;

use mlm_core::analysis::{confusion_matrix, mlm, nearest_distance_matrix, Provenance};
use mlm_core::classifier::{accuracy, predict_dataset};
use mlm_core::clustering::{initial_centroids, kmeans_refine, KMeansOptions};
use mlm_core::data::Split;

fn main() {
    let params = support::model();
    let train_records = predict_dataset(&params, &support::load(Split::Train).subsample(0.2, 1).unwrap(), None).unwrap();
    let set = kmeans_refine(&train_records, &initial_centroids(&train_records, 10).unwrap(), KMeansOptions::default()).unwrap();
    let clean = predict_dataset(&params, &support::load(Split::Test), None).unwrap();
    println!("clean accuracy {:.4}", accuracy(&clean));

    let d = nearest_distance_matrix(&clean, &set.centroids, Provenance::CleanTest).unwrap();
    let l = mlm(&d).unwrap();
    print!("{}", l.to_grid().to_csv());
    let off = confusion_matrix(&clean).unwrap().off_diagonal();
    for y in 0..10 {
        let c = l.most_likely_confusion(y);
        println!("digit {y}: most likely read as {c} (L = {:.3}, D = {:.4}); {} errors", l.get(y, c), d.get(y, c), off[y]);
    }
}
