use std::collections::BTreeMap;

use super::{mlm, DistanceAccumulator, DistanceMatrix, Grid, LikelihoodMatrix, Provenance};
use crate::clustering::Centroids;
use crate::data::PredictionRecord;
use crate::error::{Error, Result};
use crate::perturb::{Family, Level};

#[derive(Clone, Debug, PartialEq)]
pub struct LevelMatrices {
    pub level: u32,
    pub distances: DistanceMatrix,
    pub likelihood: LikelihoodMatrix,
}

/// Per-level nearest-distance accumulators over perturbed records, pooled
/// across families, optionally also split by family.
#[derive(Clone, Debug)]
pub struct LevelAccumulator<'a> {
    centroids: &'a Centroids,
    pooled: BTreeMap<u32, DistanceAccumulator<'a>>,
    by_family: Option<BTreeMap<(Family, u32), DistanceAccumulator<'a>>>,
}

impl<'a> LevelAccumulator<'a> {
    pub fn new(centroids: &'a Centroids, split_families: bool) -> Self {
        Self { centroids, pooled: BTreeMap::new(), by_family: split_families.then(BTreeMap::new) }
    }

    pub fn push(&mut self, record: &PredictionRecord) -> Result<()> {
        let (family, level) = record
            .perturbation()
            .ok_or_else(|| Error::ShapeMismatch(format!("record {} carries no perturbation", record.sample_id)))?;
        let centroids = self.centroids;
        self.pooled.entry(level.get()).or_insert_with(|| DistanceAccumulator::new(centroids)).push(record)?;
        if let Some(map) = &mut self.by_family {
            map.entry((family, level.get())).or_insert_with(|| DistanceAccumulator::new(centroids)).push(record)?;
        }
        Ok(())
    }

    fn build(acc: DistanceAccumulator, level: u32, provenance: Provenance) -> Result<LevelMatrices> {
        let distances = acc.finish(provenance)?;
        let likelihood = mlm(&distances)?;
        Ok(LevelMatrices { level, distances, likelihood })
    }

    /// Pooled matrices in level order, plus the per-family ones if enabled.
    pub fn finish(self) -> Result<(Vec<LevelMatrices>, Vec<(Family, LevelMatrices)>)> {
        let pooled = self
            .pooled
            .into_iter()
            .map(|(p, acc)| Self::build(acc, p, Provenance::Level(p)))
            .collect::<Result<Vec<_>>>()?;
        let by_family = self
            .by_family
            .unwrap_or_default()
            .into_iter()
            .map(|((f, p), acc)| Self::build(acc, p, Provenance::FamilyLevel(f, p)).map(|m| (f, m)))
            .collect::<Result<Vec<_>>>()?;
        Ok((pooled, by_family))
    }
}

/// Likelihood matrix at every perturbation level present in `records`,
/// all families pooled, against fixed `centroids`.
pub fn per_level_mlm(records: &[PredictionRecord], centroids: &Centroids) -> Result<Vec<LevelMatrices>> {
    let mut acc = LevelAccumulator::new(centroids, false);
    records.iter().try_for_each(|r| acc.push(r))?;
    Ok(acc.finish()?.0)
}

/// As [`per_level_mlm`], one set per (family, level).
pub fn per_family_level_mlm(records: &[PredictionRecord], centroids: &Centroids) -> Result<Vec<(Family, LevelMatrices)>> {
    let mut acc = LevelAccumulator::new(centroids, true);
    records.iter().try_for_each(|r| acc.push(r))?;
    Ok(acc.finish()?.1)
}

/// Cell-wise mean and population standard deviation across levels.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityStats {
    pub mean: LikelihoodMatrix,
    pub std: Vec<f64>,
    pub levels: Vec<LikelihoodMatrix>,
}

impl StabilityStats {
    pub fn std_grid(&self) -> Grid {
        Grid::class_matrix(self.mean.n(), self.std.clone()).unwrap()
    }
}

pub fn stability(levels: &[LikelihoodMatrix]) -> Result<StabilityStats> {
    if levels.len() != Level::MAX as usize {
        return Err(Error::ShapeMismatch(format!("stability needs {} level matrices, got {}", Level::MAX, levels.len())));
    }
    let n = levels[0].n();
    if levels.iter().any(|l| l.n() != n) {
        return Err(Error::ShapeMismatch("level matrices differ in size".into()));
    }
    // Welford updates keep a constant column exactly constant.
    let mut mean = vec![0.0; n * n];
    let mut m2 = vec![0.0; n * n];
    for (k, l) in levels.iter().enumerate() {
        for (i, &x) in l.as_slice().iter().enumerate() {
            let delta = x - mean[i];
            mean[i] += delta / (k + 1) as f64;
            m2[i] += delta * (x - mean[i]);
        }
    }
    let count = levels.len() as f64;
    let std = m2.iter().map(|&s| (s.max(0.0) / count).sqrt()).collect();
    Ok(StabilityStats {
        mean: LikelihoodMatrix::from_values(n, mean, Provenance::LevelMean, 1e-9)?,
        std,
        levels: levels.to_vec(),
    })
}
