use std::collections::BTreeMap;

use super::Grid;
use crate::data::{PredictionRecord, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::perturb::{Family, Level};

/// `counts[y][p]`: records of true class `y` predicted as `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Misclassified records per true class.
    pub fn off_diagonal(&self) -> [u64; NUM_CLASSES] {
        std::array::from_fn(|y| self.counts[y].iter().sum::<u64>() - self.counts[y][y])
    }

    pub fn to_grid(&self) -> Grid {
        let mut g = Grid::class_matrix(NUM_CLASSES, self.counts.iter().flatten().map(|&c| c as f64).collect()).unwrap();
        g.integer = true;
        g
    }
}

pub fn confusion_matrix(records: &[PredictionRecord]) -> Result<ConfusionMatrix> {
    if records.is_empty() {
        return Err(Error::ShapeMismatch("confusion matrix of no records".into()));
    }
    let mut counts = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    for r in records {
        let (y, p) = (r.true_label as usize, r.predicted_label as usize);
        if y >= NUM_CLASSES || p >= NUM_CLASSES {
            return Err(Error::LabelOutOfRange { index: r.sample_id as usize, value: r.true_label.max(r.predicted_label) });
        }
        counts[y][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Accuracy per family (rows) and level (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyHeatmap {
    pub families: Vec<Family>,
    pub cells: Vec<[f64; Level::MAX as usize]>,
}

impl AccuracyHeatmap {
    pub fn get(&self, family: Family, level: Level) -> Option<f64> {
        let row = self.families.iter().position(|&f| f == family)?;
        Some(self.cells[row][level.get() as usize - 1])
    }

    /// Mean over families at each level.
    pub fn level_means(&self) -> [f64; Level::MAX as usize] {
        std::array::from_fn(|l| self.cells.iter().map(|row| row[l]).sum::<f64>() / self.cells.len() as f64)
    }

    pub fn to_grid(&self) -> Grid {
        Grid::new(
            "family",
            self.families.iter().map(|f| f.name().to_string()).collect(),
            (1..=Level::MAX).map(|l| l.to_string()).collect(),
            self.cells.iter().flatten().copied().collect(),
        )
        .unwrap()
    }
}

/// Correct/total counts per (family, level) over a record stream.
#[derive(Clone, Debug, Default)]
pub struct HeatmapAccumulator {
    counts: BTreeMap<(Family, u32), (u64, u64)>,
}

impl HeatmapAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: &PredictionRecord) {
        if let Some((f, l)) = record.perturbation() {
            let cell = self.counts.entry((f, l.get())).or_default();
            cell.0 += u64::from(record.is_correct());
            cell.1 += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|c| c.1).sum()
    }

    /// Heatmap over `families`; every level of each must have records.
    pub fn finish(&self, families: &[Family]) -> Result<AccuracyHeatmap> {
        let mut cells = Vec::with_capacity(families.len());
        for &family in families {
            let mut row = [0.0; Level::MAX as usize];
            for level in 1..=Level::MAX {
                let &(correct, total) = self
                    .counts
                    .get(&(family, level))
                    .filter(|c| c.1 > 0)
                    .ok_or_else(|| Error::MissingSlice { family: family.name().to_string(), level })?;
                row[level as usize - 1] = correct as f64 / total as f64;
            }
            cells.push(row);
        }
        Ok(AccuracyHeatmap { families: families.to_vec(), cells })
    }
}

/// Heatmap over all families from perturbed records; clean records are
/// ignored.
pub fn accuracy_heatmap(records: &[PredictionRecord]) -> Result<AccuracyHeatmap> {
    let mut acc = HeatmapAccumulator::new();
    records.iter().for_each(|r| acc.push(r));
    acc.finish(&Family::ALL)
}
