use std::fmt::Write as _;
use std::path::Path;

use crate::data::PredictionRecord;
use crate::error::{Error, Result};

/// `k` points of dimension `dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Centroids {
    dim: usize,
    values: Vec<f64>,
}

impl Centroids {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!("{} values do not tile dimension {dim}", values.len())));
        }
        Ok(Self { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("ragged centroid rows".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn k(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, c: usize) -> &[f64] {
        &self.values[c * self.dim..][..self.dim]
    }

    pub fn get_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * self.dim..][..self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

/// Initial means, K-Means refinement and per-class bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroidSet {
    /// Refined centroids.
    pub centroids: Centroids,
    /// Per-class mean softmax output before refinement.
    pub init_centroids: Centroids,
    /// Correct records contributing to each initial mean.
    pub support: Vec<usize>,
    /// `|refined_c - init_c|` per class.
    pub displacement: Vec<f64>,
    /// Clusters that emptied during refinement and were re-seeded at their
    /// initial mean.
    pub reseeded: Vec<usize>,
    pub iterations: usize,
}

impl CentroidSet {
    /// Set with refined centroids equal to the initial means.
    pub fn unrefined(init: Centroids, support: Vec<usize>) -> Self {
        let k = init.k();
        Self {
            centroids: init.clone(),
            init_centroids: init,
            support,
            displacement: vec![0.0; k],
            reseeded: Vec::new(),
            iterations: 0,
        }
    }
}

/// Mean softmax output of the records whose true and predicted labels
/// both equal each class.
pub fn initial_centroids(records: &[PredictionRecord], classes: usize) -> Result<CentroidSet> {
    let dim = records.first().map_or(classes, |r| r.softmax.len());
    let mut sums = vec![0.0; classes * dim];
    let mut support = vec![0usize; classes];
    for r in records.iter().filter(|r| r.is_correct()) {
        let c = r.true_label as usize;
        if c >= classes || r.softmax.len() != dim {
            return Err(Error::ShapeMismatch(format!("record {} does not fit {classes} classes", r.sample_id)));
        }
        support[c] += 1;
        for (s, v) in sums[c * dim..][..dim].iter_mut().zip(&r.softmax) {
            *s += v;
        }
    }
    if let Some(empty) = support.iter().position(|&m| m == 0) {
        return Err(Error::EmptyClass(empty));
    }
    for (row, &m) in sums.chunks_exact_mut(dim).zip(&support) {
        for v in row {
            *v /= m as f64;
        }
    }
    Ok(CentroidSet::unrefined(Centroids::new(dim, sums)?, support))
}

const CSV_DIGITS: usize = 17;

/// `class,p0..p{dim-1},support,displacement`, one row per class.
pub fn write_centroids_csv(points: &Centroids, support: &[usize], displacement: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("class");
    for i in 0..points.dim() {
        write!(out, ",p{i}").unwrap();
    }
    out.push_str(",support,displacement\n");
    for (c, row) in points.iter().enumerate() {
        write!(out, "{c}").unwrap();
        for v in row {
            write!(out, ",{v:.prec$e}", prec = CSV_DIGITS - 1).unwrap();
        }
        writeln!(out, ",{},{:.prec$e}", support[c], displacement[c], prec = CSV_DIGITS - 1).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a file written by [`write_centroids_csv`]: points, support,
/// displacement.
pub fn read_centroids_csv(path: &Path) -> Result<(Centroids, Vec<usize>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::MalformedMatrix(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').collect();
    if header.len() < 4 || header[0] != "class" || header[header.len() - 2..] != ["support", "displacement"] {
        return Err(bad("unexpected header".into()));
    }
    let dim = header.len() - 3;
    let (mut values, mut support, mut displacement) = (Vec::new(), Vec::new(), Vec::new());
    for (row, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != dim + 3 || cells[0].trim().parse::<usize>().ok() != Some(row) {
            return Err(bad(format!("row {row} malformed")));
        }
        for cell in &cells[1..=dim] {
            values.push(cell.trim().parse::<f64>().map_err(|e| bad(format!("row {row}: {e}")))?);
        }
        support.push(cells[dim + 1].trim().parse().map_err(|e| bad(format!("row {row}: {e}")))?);
        displacement.push(cells[dim + 2].trim().parse().map_err(|e| bad(format!("row {row}: {e}")))?);
    }
    Ok((Centroids::new(dim, values)?, support, displacement))
}
