//! Twelve image corruptions at ten severities, the severity schedule and
//! its calibration, and the streamed perturbed-test sweep.

mod calibrate;
mod family;
pub mod kernels;
mod schedule;
mod spec;
mod sweep;
pub mod texture;

pub use calibrate::{calibrate_schedule, Calibration, CalibrationTargets, MIN_CALIBRATION_SUBSET};
pub use family::{Family, Level};
pub use kernels::max_severity;
pub use schedule::Schedule;
pub use spec::{apply_perturbation, sample_seed, PerturbationSpec};
pub use sweep::{generate_perturbed_dataset, perturb_slice, regenerate_image, PerturbedSlice, PerturbedSweep, SliceCache, SliceGauge};
