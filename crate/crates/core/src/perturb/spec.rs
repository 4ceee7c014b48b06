use super::kernels::corrupt;
use super::{Family, Level, Schedule};
use crate::data::ImageTensor;
use crate::error::{Error, Result};
use crate::rng;

/// A fully resolved corruption for one image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub family: Family,
    pub level: Level,
    /// The family's single severity knob after schedule resolution.
    pub severity: f64,
    pub seed: u64,
}

/// Seed of the random stream used for one image of the sweep.
pub fn sample_seed(global_seed: u64, family: Family, level: Level, sample_id: u64) -> u64 {
    rng::derive_seed(global_seed, &[0x5eed, family.index() as u64, level.get() as u64, sample_id])
}

impl PerturbationSpec {
    /// Resolve family and level names against `schedule`.
    pub fn resolve(family: &str, level: u32, schedule: &Schedule, global_seed: u64, sample_id: u64) -> Result<Self> {
        let family: Family = family.parse()?;
        let level = Level::new(level)?;
        let severity = schedule.severity(family, level).ok_or_else(|| Error::UnknownFamily(format!("{family} (not in schedule)")))?;
        Ok(Self::for_sample(family, level, severity, global_seed, sample_id))
    }

    pub fn for_sample(family: Family, level: Level, severity: f64, global_seed: u64, sample_id: u64) -> Self {
        Self {
            family,
            level,
            severity,
            seed: sample_seed(global_seed, family, level, sample_id),
        }
    }
}

pub fn apply_perturbation(image: &ImageTensor, spec: &PerturbationSpec) -> Result<ImageTensor> {
    corrupt(image, spec.family, spec.severity, spec.seed)
}
