//! Choose per-family severities so accuracy falls linearly with level.
//!
//! For each family the level-`l` target is the linear interpolation
//! between the level-1 and level-10 accuracy targets. Severities are found
//! by bisection on the family's knob, starting each level from the
//! previous level's severity so schedules never decrease. Every
//! evaluation is cached and reused to bracket later levels.

use std::collections::BTreeMap;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::{corrupt, max_severity};
use super::{Family, Level, Schedule};
use crate::classifier::{accuracy, predict_images, NetworkParams};
use crate::data::{dataset::subset_positions, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng;

pub const MIN_CALIBRATION_SUBSET: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationTargets {
    /// Accuracy wanted at level 1.
    pub level1: f64,
    /// Accuracy wanted at level 10.
    pub level10: f64,
    /// Size of the seeded test subset used while searching.
    pub subset_size: usize,
    /// A severity is accepted once its accuracy is this close to the target.
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            level1: 0.9761,
            level10: 0.4883,
            subset_size: 2000,
            tolerance: 0.004,
            max_steps: 16,
        }
    }
}

impl CalibrationTargets {
    pub fn target(&self, level: Level) -> f64 {
        let t = (level.get() - 1) as f64 / 9.0;
        self.level1 + (self.level10 - self.level1) * t
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.level1) || !unit(self.level10) || self.level10 > self.level1 {
            return Err(Error::Config("calibration targets must satisfy 0 <= level10 <= level1 <= 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config("calibration tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Calibration {
    pub schedule: Schedule,
    /// Subset accuracy reached at each chosen severity.
    pub achieved: BTreeMap<Family, [f64; 10]>,
    pub clean_accuracy: f64,
    pub evaluations: usize,
}

impl Calibration {
    /// Mean achieved accuracy across families at each level.
    pub fn mean_by_level(&self) -> [f64; 10] {
        let n = self.achieved.len().max(1) as f64;
        std::array::from_fn(|i| self.achieved.values().map(|a| a[i]).sum::<f64>() / n)
    }
}

/// Search one family. `eval` maps a severity to accuracy.
pub(crate) fn solve_family(
    family: Family,
    targets: &CalibrationTargets,
    mut eval: impl FnMut(f64) -> Result<f64>,
) -> Result<([f64; 10], [f64; 10], usize)> {
    let max_s = max_severity(family);
    let tol = targets.tolerance;
    let mut cache: Vec<(f64, f64)> = Vec::new();
    let mut lookup = |s: f64, cache: &mut Vec<(f64, f64)>| -> Result<f64> {
        if let Some(&(_, a)) = cache.iter().find(|(x, _)| *x == s) {
            return Ok(a);
        }
        let a = eval(s)?;
        let at = cache.partition_point(|(x, _)| *x < s);
        cache.insert(at, (s, a));
        Ok(a)
    };
    lookup(0.0, &mut cache)?;
    let floor_acc = lookup(max_s, &mut cache)?;
    let last = Level::new(Level::MAX).unwrap();
    if floor_acc > targets.target(last) + tol {
        return Err(Error::CalibrationFailed {
            family: family.name().to_owned(),
            level: last.get(),
            reason: format!(
                "accuracy at the strongest severity {max_s} is {floor_acc:.4}, above target {:.4}",
                targets.target(last)
            ),
        });
    }

    let mut severities = [0.0; 10];
    let mut achieved = [0.0; 10];
    let mut prev = 0.0;
    for level in Level::all() {
        let target = targets.target(level);
        let start_acc = lookup(prev, &mut cache)?;
        let (chosen, acc) = if start_acc <= target + tol {
            // Already at or below target; severities may not decrease.
            (prev, start_acc)
        } else {
            // Tightest cached bracket above `prev`.
            let (mut hi, mut hi_acc) = *cache
                .iter()
                .find(|(s, a)| *s >= prev && *a <= target + tol)
                .expect("the strongest severity is at or below every target");
            let (mut lo, mut lo_acc) = *cache
                .iter()
                .rev()
                .find(|(s, a)| *s >= prev && *s < hi && *a > target + tol)
                .expect("prev itself is above target");
            let mut steps = 0;
            while (hi_acc - target).abs() > tol && steps < targets.max_steps {
                let mid = 0.5 * (lo + hi);
                let a = lookup(mid, &mut cache)?;
                steps += 1;
                if a > target + tol {
                    (lo, lo_acc) = (mid, a);
                } else {
                    (hi, hi_acc) = (mid, a);
                }
            }
            if (lo_acc - target).abs() < (hi_acc - target).abs() {
                (lo, lo_acc)
            } else {
                (hi, hi_acc)
            }
        };
        debug!("{family} level {level}: severity {chosen:.5} -> accuracy {acc:.4} (target {target:.4})");
        severities[level.get() as usize - 1] = chosen;
        achieved[level.get() as usize - 1] = acc;
        prev = chosen;
    }
    Ok((severities, achieved, cache.len()))
}

/// Calibrate a schedule for `families` against the trained classifier.
///
/// Searches on a seeded subset of `test`; the per-image random streams
/// come from `seed` and do not depend on level, so cached evaluations are
/// comparable across levels.
pub fn calibrate_schedule(
    params: &NetworkParams,
    test: &LabeledDataset,
    targets: &CalibrationTargets,
    families: &[Family],
    seed: u64,
) -> Result<Calibration> {
    targets.validate()?;
    let size = targets.subset_size.min(test.len());
    if size < MIN_CALIBRATION_SUBSET {
        return Err(Error::Config(format!(
            "calibration needs at least {MIN_CALIBRATION_SUBSET} images, have {size}"
        )));
    }
    let subset = test.select(&subset_positions(test.len(), size, rng::derive_seed(seed, &[0xca1b])));
    let clean_accuracy = accuracy(&predict_images(params, &subset.images, &subset.labels, &subset.sample_ids, None)?);
    info!("calibrating on {size} images (clean accuracy {clean_accuracy:.4})");

    let mut severities = BTreeMap::new();
    let mut achieved = BTreeMap::new();
    let mut evaluations = 0;
    for &family in families {
        let eval = |severity: f64| -> Result<f64> {
            let images = subset
                .images
                .par_iter()
                .zip(subset.sample_ids.par_iter())
                .map(|(im, &id)| corrupt(im, family, severity, rng::derive_seed(seed, &[0xca1b, family.index() as u64, id])))
                .collect::<Result<Vec<_>>>()?;
            Ok(accuracy(&predict_images(params, &images, &subset.labels, &subset.sample_ids, None)?))
        };
        let (levels, acc, evals) = solve_family(family, targets, eval)?;
        info!("{family}: severities {levels:.4?}");
        severities.insert(family, levels);
        achieved.insert(family, acc);
        evaluations += evals;
    }
    Ok(Calibration {
        schedule: Schedule::new(severities)?,
        achieved,
        clean_accuracy,
        evaluations,
    })
}
