use rayon::prelude::*;

use super::network::Workspace;
use super::params::NetworkParams;
use super::softmax::softmax_unchecked;
use crate::data::{ImageTensor, LabeledDataset, PredictionRecord, NUM_CLASSES};
use crate::error::Result;
use crate::perturb::{Family, Level};

/// Images per inference chunk. Chunk boundaries are fixed by position, so
/// results do not depend on how chunks are spread over threads.
const CHUNK: usize = 64;

fn predict_chunk(
    params: &NetworkParams,
    images: &[ImageTensor],
    labels: &[u8],
    ids: &[u64],
    provenance: Option<(Family, Level)>,
) -> Result<Vec<PredictionRecord>> {
    let mut ws = Workspace::default();
    let refs: Vec<&ImageTensor> = images.iter().collect();
    ws.forward(params, &refs, false)?;
    Ok(ws
        .logits()
        .chunks_exact(NUM_CLASSES)
        .zip(labels.iter().zip(ids))
        .map(|(z, (&label, &id))| PredictionRecord::new(id, label, softmax_unchecked(z), provenance))
        .collect())
}

/// Records for parallel image/label/id slices, computed on the rayon pool.
pub fn predict_images(
    params: &NetworkParams,
    images: &[ImageTensor],
    labels: &[u8],
    ids: &[u64],
    provenance: Option<(Family, Level)>,
) -> Result<Vec<PredictionRecord>> {
    let chunks: Vec<Vec<PredictionRecord>> = images
        .par_chunks(CHUNK)
        .zip(labels.par_chunks(CHUNK))
        .zip(ids.par_chunks(CHUNK))
        .map(|((im, lb), id)| predict_chunk(params, im, lb, id, provenance))
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}

/// One record per image, in dataset order, with the full softmax retained.
pub fn predict_dataset(
    params: &NetworkParams,
    dataset: &LabeledDataset,
    provenance: Option<(Family, Level)>,
) -> Result<Vec<PredictionRecord>> {
    predict_images(params, &dataset.images, &dataset.labels, &dataset.sample_ids, provenance)
}

/// Single-threaded [`predict_dataset`].
pub fn predict_dataset_serial(
    params: &NetworkParams,
    dataset: &LabeledDataset,
    provenance: Option<(Family, Level)>,
) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::with_capacity(dataset.len());
    for ((im, lb), id) in dataset
        .images
        .chunks(CHUNK)
        .zip(dataset.labels.chunks(CHUNK))
        .zip(dataset.sample_ids.chunks(CHUNK))
    {
        out.extend(predict_chunk(params, im, lb, id, provenance)?);
    }
    Ok(out)
}

/// Fraction of records whose prediction matches the label; 0 when empty.
pub fn accuracy(records: &[PredictionRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.is_correct()).count() as f64 / records.len() as f64
}

pub fn evaluate_accuracy(params: &NetworkParams, dataset: &LabeledDataset) -> Result<f64> {
    Ok(accuracy(&predict_dataset(params, dataset, None)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Split;

    fn dataset(n: usize) -> LabeledDataset {
        let images = (0..n)
            .map(|k| {
                let px = (0..784).map(|i| ((i * (k + 3)) % 17) as f64 / 16.0).collect();
                ImageTensor::new(28, 28, px).unwrap()
            })
            .collect();
        LabeledDataset::new(images, (0..n).map(|k| (k % 10) as u8).collect(), Split::Test).unwrap()
    }

    #[test]
    fn empty_dataset() {
        let ds = dataset(0);
        assert!(predict_dataset(&NetworkParams::init(1), &ds, None).unwrap().is_empty());
    }

    #[test]
    fn parallel_matches_serial() {
        let ds = dataset(150);
        let params = NetworkParams::init(3);
        let prov = Some((Family::Snow, Level::new(4).unwrap()));
        let par = predict_dataset(&params, &ds, prov).unwrap();
        let ser = predict_dataset_serial(&params, &ds, prov).unwrap();
        assert_eq!(par, ser);
        assert!(par.iter().all(|r| r.validate().is_ok()));
        assert_eq!(par[17].sample_id, 17);
        assert_eq!(par[17].perturbation_level, Some(4));
    }

    #[test]
    fn predicted_class_is_argmax() {
        let mut p = vec![0.01; 10];
        p[4] = 0.91;
        let r = PredictionRecord::new(0, 4, p, None);
        assert_eq!(r.predicted_label, 4);
    }
}
