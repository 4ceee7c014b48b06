use rayon::prelude::*;

use super::centroids::{CentroidSet, Centroids};
use crate::data::PredictionRecord;
use crate::error::{Error, Result};

const ASSIGN_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansOptions {
    pub max_iters: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// Re-seed an emptied cluster at its starting point instead of failing.
    pub reseed_empty: bool,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { max_iters: 300, tol: 1e-12, reseed_empty: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LloydOutcome {
    pub centroids: Centroids,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    /// Inertia measured right after each assignment step.
    pub inertia: Vec<f64>,
    pub reseeded: Vec<usize>,
    pub converged: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &Centroids) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = squared_distance(point, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm over row-major `points`, started from `init`.
///
/// Ties go to the lower centroid index. Cluster means are accumulated in
/// point order, so results do not depend on the rayon pool size.
pub fn lloyd(points: &[f64], init: &Centroids, opts: KMeansOptions) -> Result<LloydOutcome> {
    let dim = init.dim();
    let k = init.k();
    if points.is_empty() || !points.len().is_multiple_of(dim) {
        return Err(Error::ShapeMismatch(format!("{} point values for dimension {dim}", points.len())));
    }
    if opts.max_iters == 0 || opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(Error::Config("k-means needs max_iters >= 1 and tol >= 0".into()));
    }
    let n = points.len() / dim;
    let mut centroids = init.clone();
    let mut assignments = vec![usize::MAX; n];
    let mut inertia = Vec::new();
    let mut reseeded = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let fresh: Vec<(usize, f64)> = points
            .par_chunks(ASSIGN_CHUNK * dim)
            .flat_map_iter(|chunk| chunk.chunks_exact(dim).map(|p| nearest(p, &centroids)).collect::<Vec<_>>())
            .collect();
        inertia.push(fresh.iter().map(|&(_, d)| d).sum());
        let changed = fresh.iter().zip(&assignments).any(|(&(c, _), &old)| c != old);
        for (slot, &(c, _)) in assignments.iter_mut().zip(&fresh) {
            *slot = c;
        }

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.chunks_exact(dim).zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c * dim..][..dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            let next: Vec<f64> = if counts[c] == 0 {
                if !opts.reseed_empty {
                    return Err(Error::EmptyCluster(c));
                }
                if !reseeded.contains(&c) {
                    reseeded.push(c);
                }
                init.get(c).to_vec()
            } else {
                sums[c * dim..][..dim].iter().map(|s| s / counts[c] as f64).collect()
            };
            movement = movement.max(squared_distance(&next, centroids.get(c)).sqrt());
            centroids.get_mut(c).copy_from_slice(&next);
        }
        if !changed || movement < opts.tol {
            converged = true;
            break;
        }
    }
    reseeded.sort_unstable();
    Ok(LloydOutcome { centroids, assignments, iterations, inertia, reseeded, converged })
}

/// Refine `init` with K-Means over the softmax outputs of the correctly
/// classified records.
pub fn kmeans_refine(records: &[PredictionRecord], init: &CentroidSet, opts: KMeansOptions) -> Result<CentroidSet> {
    let points: Vec<f64> = records.iter().filter(|r| r.is_correct()).flat_map(|r| r.softmax.iter().copied()).collect();
    let outcome = lloyd(&points, &init.init_centroids, opts)?;
    let displacement = outcome
        .centroids
        .iter()
        .zip(init.init_centroids.iter())
        .map(|(a, b)| squared_distance(a, b).sqrt())
        .collect();
    if !outcome.converged {
        log::warn!("k-means stopped after {} iterations without converging", outcome.iterations);
    }
    for &c in &outcome.reseeded {
        log::warn!("cluster {c} emptied during refinement and was re-seeded");
    }
    Ok(CentroidSet {
        centroids: outcome.centroids,
        init_centroids: init.init_centroids.clone(),
        support: init.support.clone(),
        displacement,
        reseeded: outcome.reseeded,
        iterations: outcome.iterations,
    })
}
