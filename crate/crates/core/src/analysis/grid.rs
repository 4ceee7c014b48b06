use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Corner cell of a class-by-class matrix file.
pub const MATRIX_CORNER: &str = "true\\target";

/// Labelled rectangular table of reals, the on-disk form of every matrix
/// and heatmap.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<f64>,
    /// Write cells as integers.
    pub integer: bool,
}

impl Grid {
    pub fn new(corner: &str, row_labels: Vec<String>, col_labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != row_labels.len() * col_labels.len() {
            return Err(Error::MalformedMatrix(format!(
                "{} values for a {}x{} grid",
                values.len(),
                row_labels.len(),
                col_labels.len()
            )));
        }
        Ok(Self { corner: corner.to_string(), row_labels, col_labels, values, integer: false })
    }

    /// Square class-by-class matrix with numeric labels.
    pub fn class_matrix(n: usize, values: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = (0..n).map(|c| c.to_string()).collect();
        Self::new(MATRIX_CORNER, labels.clone(), labels, values)
    }

    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols() + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols()..][..self.cols()]
    }

    /// Reals in 12 significant digits; infinities as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = self.corner.clone();
        for l in &self.col_labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (r, label) in self.row_labels.iter().enumerate() {
            out.push_str(label);
            for &v in self.row(r) {
                if self.integer {
                    write!(out, ",{v:.0}").unwrap();
                } else {
                    write!(out, ",{v:.11e}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::MalformedMatrix(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty matrix file".into()))?.split(',').collect();
        if header.len() < 2 {
            return Err(bad("header has no columns".into()));
        }
        let col_labels: Vec<String> = header[1..].iter().map(|s| s.trim().to_string()).collect();
        let (mut row_labels, mut values) = (Vec::new(), Vec::new());
        let mut integer = true;
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != header.len() {
                return Err(bad(format!("row {i} has {} cells, expected {}", cells.len(), header.len())));
            }
            row_labels.push(cells[0].trim().to_string());
            for cell in &cells[1..] {
                let cell = cell.trim();
                let v: f64 = cell.parse().map_err(|_| bad(format!("row {i}: cannot parse {cell:?}")))?;
                if v.is_nan() {
                    return Err(bad(format!("row {i}: NaN cell")));
                }
                integer &= cell.bytes().all(|b| b.is_ascii_digit() || b == b'-');
                values.push(v);
            }
        }
        if row_labels.is_empty() {
            return Err(bad("matrix has no rows".into()));
        }
        let mut grid = Self::new(header[0].trim(), row_labels, col_labels, values)?;
        grid.integer = integer;
        Ok(grid)
    }
}

pub fn read_grid_csv(path: &Path) -> Result<Grid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Grid::parse_csv(&text).map_err(|e| match e {
        Error::MalformedMatrix(m) => Error::MalformedMatrix(format!("{}: {m}", path.display())),
        other => other,
    })
}
