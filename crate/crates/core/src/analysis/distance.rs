use rayon::prelude::*;

use super::{Grid, Provenance};
use crate::clustering::Centroids;
use crate::data::PredictionRecord;
use crate::error::{Error, Result};

const FOLD_CHUNK: usize = 4096;

/// Euclidean distance from `s` to every centroid.
pub fn distance_to_centroids(s: &[f64], centroids: &Centroids) -> Vec<f64> {
    centroids
        .iter()
        .map(|mu| s.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect()
}

/// `D[y][c]`: smallest distance from a class-`y` record to centroid `c`.
/// The diagonal holds `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    argmin: Vec<Option<u64>>,
    pub provenance: Provenance,
}

impl DistanceMatrix {
    /// Matrix from raw values. Diagonal entries are replaced by the
    /// sentinel; off-diagonal ones must be finite and non-negative.
    pub fn from_values(n: usize, mut values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::MalformedMatrix(format!("{} values for a {n}x{n} distance matrix", values.len())));
        }
        for y in 0..n {
            values[y * n + y] = f64::INFINITY;
            for c in (0..n).filter(|&c| c != y) {
                let v = values[y * n + c];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::MalformedMatrix(format!("distance [{y}][{c}] = {v}")));
                }
            }
        }
        Ok(Self { n, values, argmin: vec![None; n * n], provenance })
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

    /// Sample id that realised each off-diagonal minimum.
    pub fn argmin(&self, y: usize, c: usize) -> Option<u64> {
        self.argmin[y * self.n + c]
    }

    pub fn to_grid(&self) -> Grid {
        Grid::class_matrix(self.n, self.values.clone()).unwrap()
    }

    /// Off-diagonal minima as a grid of sample ids, `-1` on the diagonal.
    pub fn argmin_grid(&self) -> Grid {
        let vals = self.argmin.iter().map(|a| a.map_or(-1.0, |id| id as f64)).collect();
        let mut g = Grid::class_matrix(self.n, vals).unwrap();
        g.integer = true;
        g
    }
}

/// Running minima over a record stream.
#[derive(Clone, Debug)]
pub struct DistanceAccumulator<'a> {
    centroids: &'a Centroids,
    mins: Vec<f64>,
    argmin: Vec<Option<u64>>,
    seen: Vec<usize>,
}

impl<'a> DistanceAccumulator<'a> {
    pub fn new(centroids: &'a Centroids) -> Self {
        let k = centroids.k();
        Self { centroids, mins: vec![f64::INFINITY; k * k], argmin: vec![None; k * k], seen: vec![0; k] }
    }

    pub fn push(&mut self, record: &PredictionRecord) -> Result<()> {
        let k = self.centroids.k();
        let y = record.true_label as usize;
        if y >= k || record.softmax.len() != self.centroids.dim() {
            return Err(Error::ShapeMismatch(format!("record {} does not fit {k} centroids", record.sample_id)));
        }
        self.seen[y] += 1;
        for (c, d) in distance_to_centroids(&record.softmax, self.centroids).into_iter().enumerate() {
            if c != y && d < self.mins[y * k + c] {
                self.mins[y * k + c] = d;
                self.argmin[y * k + c] = Some(record.sample_id);
            }
        }
        Ok(())
    }

    /// Fold in an accumulator that saw later records. Ties keep the earlier
    /// witness, matching a single sequential pass.
    pub fn merge(&mut self, later: &Self) {
        for i in 0..self.mins.len() {
            if later.mins[i] < self.mins[i] {
                self.mins[i] = later.mins[i];
                self.argmin[i] = later.argmin[i];
            }
        }
        for (a, b) in self.seen.iter_mut().zip(&later.seen) {
            *a += b;
        }
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.seen
    }

    pub fn finish(self, provenance: Provenance) -> Result<DistanceMatrix> {
        if let Some(class) = self.seen.iter().position(|&m| m == 0) {
            let level = match provenance {
                Provenance::Level(p) | Provenance::FamilyLevel(_, p) => Some(p),
                _ => None,
            };
            return Err(Error::EmptyClassSet { class, level });
        }
        Ok(DistanceMatrix { n: self.centroids.k(), values: self.mins, argmin: self.argmin, provenance })
    }
}

/// Nearest-distance matrix of `records` against `centroids`.
pub fn nearest_distance_matrix(records: &[PredictionRecord], centroids: &Centroids, provenance: Provenance) -> Result<DistanceMatrix> {
    let partials: Vec<DistanceAccumulator> = records
        .par_chunks(FOLD_CHUNK)
        .map(|chunk| {
            let mut acc = DistanceAccumulator::new(centroids);
            chunk.iter().try_for_each(|r| acc.push(r)).map(|_| acc)
        })
        .collect::<Result<_>>()?;
    let mut total = DistanceAccumulator::new(centroids);
    for p in &partials {
        total.merge(p);
    }
    total.finish(provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded_rng, unit_f64, Rng};
    use proptest::prelude::*;

    fn one_hot_centroids() -> Centroids {
        let mut v = vec![0.0; 100];
        for c in 0..10 {
            v[c * 11] = 1.0;
        }
        Centroids::new(10, v).unwrap()
    }

    fn simplex(rng: &mut Rng) -> Vec<f64> {
        let mut s: Vec<f64> = (0..10).map(|_| unit_f64(rng)).collect();
        let t: f64 = s.iter().sum();
        s.iter_mut().for_each(|v| *v /= t);
        s
    }

    fn fixture(seed: u64, n: usize) -> (Vec<PredictionRecord>, Centroids) {
        let mut rng = seeded_rng(seed);
        let rows: Vec<Vec<f64>> = (0..10).map(|_| simplex(&mut rng)).collect();
        let recs = (0..n).map(|i| PredictionRecord::new(i as u64, (i % 10) as u8, simplex(&mut rng), None)).collect();
        (recs, Centroids::from_rows(&rows).unwrap())
    }

    #[test]
    fn distances_by_hand() {
        let mus = one_hot_centroids();
        let d = distance_to_centroids(mus.get(3), &mus);
        assert_eq!(d[3], 0.0);
        assert_eq!(distance_to_centroids(mus.get(0), &mus)[1], 2f64.sqrt());
        let mut rng = seeded_rng(1);
        let s = simplex(&mut rng);
        let d = distance_to_centroids(&s, &mus);
        for c in 0..10 {
            let mut acc = 0.0;
            for i in 0..10 {
                let t = if i == c { 1.0 } else { 0.0 };
                acc += (s[i] - t).powi(2);
            }
            assert!((d[c] - acc.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_records_give_root_two() {
        let mus = one_hot_centroids();
        let recs: Vec<_> = (0..10).map(|c| PredictionRecord::new(c, c as u8, mus.get(c as usize).to_vec(), None)).collect();
        let d = nearest_distance_matrix(&recs, &mus, Provenance::CleanTest).unwrap();
        for y in 0..10 {
            for c in 0..10 {
                if y == c {
                    assert_eq!(d.get(y, c), f64::INFINITY);
                } else {
                    assert_eq!(d.get(y, c), 2f64.sqrt());
                    assert_eq!(d.argmin(y, c), Some(y as u64));
                }
            }
        }
    }

    #[test]
    fn missing_class_is_reported() {
        let (recs, mus) = fixture(4, 40);
        let without_seven: Vec<_> = recs.into_iter().filter(|r| r.true_label != 7).collect();
        let err = nearest_distance_matrix(&without_seven, &mus, Provenance::Level(3)).unwrap_err();
        assert!(matches!(err, Error::EmptyClassSet { class: 7, level: Some(3) }));
    }

    #[test]
    fn adding_records_never_raises_entries() {
        let (recs, mus) = fixture(9, 60);
        let before = nearest_distance_matrix(&recs[..40], &mus, Provenance::CleanTest).unwrap();
        let after = nearest_distance_matrix(&recs, &mus, Provenance::CleanTest).unwrap();
        for y in 0..10 {
            for c in 0..10 {
                assert!(after.get(y, c) <= before.get(y, c));
            }
        }
    }

    fn brute_force(recs: &[PredictionRecord], mus: &Centroids) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; 100];
        for y in 0..10 {
            for c in 0..10 {
                if y == c {
                    continue;
                }
                for r in recs.iter().filter(|r| r.true_label as usize == y) {
                    let mut acc = 0.0;
                    for i in 0..10 {
                        acc += (r.softmax[i] - mus.get(c)[i]) * (r.softmax[i] - mus.get(c)[i]);
                    }
                    out[y * 10 + c] = out[y * 10 + c].min(acc.sqrt());
                }
            }
        }
        out
    }

    #[test]
    fn forty_records_match_double_loop() {
        let (recs, mus) = fixture(40, 40);
        let d = nearest_distance_matrix(&recs, &mus, Provenance::CleanTest).unwrap();
        assert_eq!(d.values, brute_force(&recs, &mus));
    }

    #[test]
    fn chunked_merge_equals_single_pass() {
        let (recs, mus) = fixture(2, 10_000);
        let d = nearest_distance_matrix(&recs, &mus, Provenance::CleanTest).unwrap();
        let mut acc = DistanceAccumulator::new(&mus);
        recs.iter().for_each(|r| acc.push(r).unwrap());
        assert_eq!(d, acc.finish(Provenance::CleanTest).unwrap());
    }

    proptest! {
        #[test]
        fn exhaustive_enumeration(seed in any::<u64>(), n in 10usize..=100) {
            let (recs, mus) = fixture(seed, n);
            let d = nearest_distance_matrix(&recs, &mus, Provenance::CleanTest).unwrap();
            prop_assert_eq!(&d.values, &brute_force(&recs, &mus));
        }
    }
}
