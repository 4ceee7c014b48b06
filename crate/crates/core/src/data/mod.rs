//! MNIST ingestion, dataset splits, batching and prediction-record files.

mod batch;
pub(crate) mod dataset;
pub mod idx;
mod records;

pub use batch::batched_indices;
pub use dataset::{ImageTensor, LabeledDataset, Split};
pub use records::{argmax, read_records, write_records, PredictionRecord, RecordReader, RecordWriter};

/// Number of digit classes.
pub const NUM_CLASSES: usize = 10;
