use super::{DistanceMatrix, Grid, Provenance};
use crate::error::{Error, Result};

/// Row-normalised reciprocal distances. `L[y][y] = 0`; each row's
/// off-diagonal entries sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodMatrix {
    n: usize,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl LikelihoodMatrix {
    /// Wrap raw values after checking the row invariants to `tol`.
    pub fn from_values(n: usize, values: Vec<f64>, provenance: Provenance, tol: f64) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::MalformedMatrix(format!("{} values for a {n}x{n} likelihood matrix", values.len())));
        }
        let m = Self { n, values, provenance };
        m.check(tol).map_err(Error::MalformedMatrix)?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, y: usize, c: usize) -> f64 {
        self.values[y * self.n + c]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.values[y * self.n..][..self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Zero diagonal, entries in `[0, 1]`, off-diagonal row sums within
    /// `tol` of one.
    pub fn check(&self, tol: f64) -> std::result::Result<(), String> {
        for y in 0..self.n {
            let row = self.row(y);
            if row[y] != 0.0 {
                return Err(format!("diagonal [{y}][{y}] = {}", row[y]));
            }
            if let Some((c, v)) = row.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(format!("entry [{y}][{c}] = {v} outside [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(format!("row {y} sums to {sum}"));
            }
        }
        Ok(())
    }

    /// Class `c` with the largest likelihood in row `y`, ties to the lower id.
    pub fn most_likely_confusion(&self, y: usize) -> usize {
        let row = self.row(y);
        (0..self.n).filter(|&c| c != y).fold(if y == 0 { 1 } else { 0 }, |best, c| if row[c] > row[best] { c } else { best })
    }

    pub fn to_grid(&self) -> Grid {
        Grid::class_matrix(self.n, self.values.clone()).unwrap()
    }
}

/// Misclassification likelihoods from a nearest-distance matrix.
pub fn mlm(d: &DistanceMatrix) -> Result<LikelihoodMatrix> {
    let n = d.n();
    let mut values = vec![0.0; n * n];
    for y in 0..n {
        let row = d.row(y);
        if let Some(c) = (0..n).find(|&c| c != y && row[c] == 0.0) {
            return Err(Error::ZeroDistance { class: y, centroid: c });
        }
        let norm: f64 = (0..n).filter(|&c| c != y).map(|c| 1.0 / row[c]).sum();
        for c in (0..n).filter(|&c| c != y) {
            values[y * n + c] = (1.0 / row[c]) / norm;
        }
    }
    Ok(LikelihoodMatrix { n, values, provenance: d.provenance.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded_rng, unit_f64};
    use proptest::prelude::*;

    fn dist(n: usize, vals: Vec<f64>) -> DistanceMatrix {
        DistanceMatrix::from_values(n, vals, Provenance::CleanTest).unwrap()
    }

    #[test]
    fn uniform_row_is_one_ninth() {
        let l = mlm(&dist(10, vec![0.5; 100])).unwrap();
        for c in 1..10 {
            assert!((l.get(0, c) - 1.0 / 9.0).abs() < 1e-15);
        }
        assert_eq!(l.get(0, 0), 0.0);
        assert!((l.get(0, 1) - 0.111111).abs() < 1e-6);
    }

    #[test]
    fn reciprocal_ratio() {
        let l = mlm(&dist(3, vec![0.0, 0.1, 0.2, 0.3, 0.0, 0.3, 0.3, 0.3, 0.0])).unwrap();
        assert!((l.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((l.get(0, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_distance_is_an_error() {
        let mut v = vec![1.0; 9];
        v[1 * 3 + 2] = 0.0;
        assert!(matches!(mlm(&dist(3, v)), Err(Error::ZeroDistance { class: 1, centroid: 2 })));
    }

    #[test]
    fn most_likely_confusion_ties_low() {
        let l = mlm(&dist(3, vec![0.0, 0.5, 0.5, 1.0, 0.0, 0.5, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(l.most_likely_confusion(0), 1);
        assert_eq!(l.most_likely_confusion(1), 2);
        assert_eq!(l.most_likely_confusion(2), 0);
    }

    fn oracle(n: usize, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for y in 0..n {
            let mut total = 0.0;
            for c in 0..n {
                if c != y {
                    total += 1.0 / d[y * n + c];
                }
            }
            for c in 0..n {
                if c != y {
                    out[y * n + c] = (1.0 / d[y * n + c]) / total;
                }
            }
        }
        out
    }

    #[test]
    fn random_rows_match_oracle() {
        let mut rng = seeded_rng(31);
        for _ in 0..100 {
            let v: Vec<f64> = (0..100).map(|_| 0.01 + unit_f64(&mut rng)).collect();
            let d = dist(10, v);
            let l = mlm(&d).unwrap();
            let mut raw = d.row(0).to_vec();
            (1..10).for_each(|y| raw.extend_from_slice(d.row(y)));
            assert_eq!(l.as_slice(), oracle(10, &raw).as_slice());
            for y in 0..10 {
                assert!((l.row(y).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            l.check(1e-9).unwrap();
        }
    }

    proptest! {
        #[test]
        fn order_reverses(v in prop::collection::vec(0.001f64..10.0, 100)) {
            let d = dist(10, v);
            let l = mlm(&d).unwrap();
            for y in 0..10 {
                for a in (0..10).filter(|&a| a != y) {
                    for b in (0..10).filter(|&b| b != y) {
                        prop_assert_eq!(d.get(y, a) < d.get(y, b), l.get(y, a) > l.get(y, b));
                    }
                }
            }
        }

        #[test]
        fn rows_are_scale_free(v in prop::collection::vec(0.001f64..10.0, 100), row in 0usize..10, t in 0.01f64..100.0) {
            let scaled: Vec<f64> = v.iter().enumerate().map(|(i, &x)| if i / 10 == row { x * t } else { x }).collect();
            let a = mlm(&dist(10, v)).unwrap();
            let b = mlm(&dist(10, scaled)).unwrap();
            for c in 0..10 {
                prop_assert!((a.get(row, c) - b.get(row, c)).abs() < 1e-12);
            }
        }
    }
}
