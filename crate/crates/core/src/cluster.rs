//! K-means over per-asset feature rows.
//!
//! Features default to the rows of the correlation matrix, so two assets
//! land close together exactly when they co-move with the rest of the
//! universe in the same way. Fitting is Lloyd's algorithm with k-means++
//! seeding, a fixed number of seeded restarts, and deterministic
//! tie-breaking throughout: equidistant points go to the lowest cluster
//! index, equal-inertia restarts keep the lowest restart index.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::market::DescriptiveStats;
use crate::math;
use crate::matrix::Matrix;
use crate::rng;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// How per-asset feature rows are built from descriptive stats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Row i of the correlation matrix describes asset i.
    CorrelationRows,
    /// Standardized (mean, std) pairs: each column centered and scaled to
    /// unit sample variance.
    RawStats,
}

/// One feature row per asset, in the tickers' order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub tickers: Vec<String>,
    pub features: Matrix,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 3,
            seed: 0,
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

/// A fitted model. `inertia` is the sum of squared distances from each
/// feature row to its assigned centroid; `inertia_trace` records that sum
/// after every update step of the winning restart.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
    pub iterations: usize,
    pub inertia_trace: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

pub fn build_features(stats: &DescriptiveStats, kind: FeatureKind) -> FeatureMatrix {
    let n = stats.tickers.len();
    let features = match kind {
        FeatureKind::CorrelationRows => stats.correlation.clone(),
        FeatureKind::RawStats => {
            let mut m = Matrix::zeros(n, 2);
            for (c, col) in [&stats.mean, &stats.std].into_iter().enumerate() {
                let mu = math::mean(col);
                let sd = if n >= 2 { math::sample_std(col) } else { 0.0 };
                for r in 0..n {
                    // a constant column carries no information; leave it at 0
                    let v = if sd > 0.0 { (col[r] - mu) / sd } else { 0.0 };
                    m.set(r, c, v);
                }
            }
            m
        }
    };
    FeatureMatrix {
        tickers: stats.tickers.clone(),
        features,
        kind,
    }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Nearest centroid, ties to the lowest cluster index.
fn nearest(point: &[f64], centroids: &Matrix) -> usize {
    let mut best = 0;
    let mut best_d = sq_dist(point, centroids.row(0));
    for c in 1..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the chosen set.
fn kmeanspp_init<R: RngCore>(points: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = Matrix::zeros(k, d);
    let mut chosen = vec![false; n];

    let first = ((rng::uniform01(rng) * n as f64) as usize).min(n - 1);
    for c in 0..d {
        centroids.set(0, c, points.get(first, c));
    }
    chosen[first] = true;

    let mut dist = vec![0.0; n];
    for i in 0..n {
        dist[i] = sq_dist(points.row(i), centroids.row(0));
    }
    for next in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng::uniform01(rng) * total;
            let mut acc = 0.0;
            let mut pick = usize::MAX;
            for i in 0..n {
                acc += dist[i];
                if acc > target {
                    pick = i;
                    break;
                }
            }
            if pick == usize::MAX {
                // target landed on the accumulated-rounding edge
                (0..n).rev().find(|&i| dist[i] > 0.0).unwrap_or(n - 1)
            } else {
                pick
            }
        } else {
            // all remaining points coincide with a centroid
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        for c in 0..d {
            centroids.set(next, c, points.get(pick, c));
        }
        for i in 0..n {
            let d2 = sq_dist(points.row(i), centroids.row(next));
            if d2 < dist[i] {
                dist[i] = d2;
            }
        }
    }
    centroids
}

/// Moves the point farthest from its assigned centroid (among clusters
/// that can spare one) into each empty cluster. With k <= n a donor
/// cluster with at least two members always exists.
fn repair_empty(assignments: &mut [usize], points: &Matrix, centroids: &Matrix, k: usize) {
    loop {
        let mut count = vec![0usize; k];
        for &a in assignments.iter() {
            count[a] += 1;
        }
        let Some(empty) = count.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = usize::MAX;
        let mut far_d = -1.0;
        for (i, &a) in assignments.iter().enumerate() {
            if count[a] < 2 {
                continue;
            }
            let d = sq_dist(points.row(i), centroids.row(a));
            if d > far_d {
                far_d = d;
                far = i;
            }
        }
        assignments[far] = empty;
    }
}

struct LloydRun {
    centroids: Matrix,
    assignments: Vec<usize>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn lloyd<R: RngCore>(
    points: &Matrix,
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut R,
) -> LloydRun {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = kmeanspp_init(points, k, rng);
    let mut assignments: Vec<usize> = (0..n).map(|i| nearest(points.row(i), &centroids)).collect();
    repair_empty(&mut assignments, points, &centroids, k);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut inertia = f64::INFINITY;
    for _ in 0..max_iter {
        iterations += 1;
        // update step: centroids become the mean of their members
        let mut next = Matrix::zeros(k, d);
        let mut count = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            count[a] += 1;
            for c in 0..d {
                next.set(a, c, next.get(a, c) + points.get(i, c));
            }
        }
        for a in 0..k {
            debug_assert!(count[a] > 0, "repair keeps every cluster non-empty");
            for c in 0..d {
                next.set(a, c, next.get(a, c) / count[a] as f64);
            }
        }
        let mut shift: f64 = 0.0;
        for a in 0..k {
            shift = shift.max(math::sqrt(sq_dist(next.row(a), centroids.row(a))));
        }
        centroids = next;
        inertia = (0..n)
            .map(|i| sq_dist(points.row(i), centroids.row(assignments[i])))
            .sum();
        trace.push(inertia);
        if shift <= tol {
            break;
        }
        let new_assignments: Vec<usize> =
            (0..n).map(|i| nearest(points.row(i), &centroids)).collect();
        assignments = new_assignments;
        repair_empty(&mut assignments, points, &centroids, k);
    }
    LloydRun {
        centroids,
        assignments,
        inertia,
        iterations,
        trace,
    }
}

/// Fits k-means to the feature rows. Restarts run on independent seeded
/// streams; the lowest-inertia restart wins, with exact ties going to the
/// lowest restart index.
pub fn kmeans_fit(features: &FeatureMatrix, config: &KMeansConfig) -> Result<ClusterModel> {
    let n = features.features.rows();
    if n == 0 {
        return Err(Error::EmptyInput("feature rows".into()));
    }
    if config.k == 0 || config.k > n {
        return Err(Error::InvalidInput {
            field: "k".into(),
            reason: format!("k must be in 1..={n}, got {}", config.k),
        });
    }
    if config.n_init == 0 {
        return Err(Error::InvalidInput {
            field: "n_init".into(),
            reason: "at least one restart is required".into(),
        });
    }
    if !(config.tol >= 0.0) {
        return Err(Error::InvalidInput {
            field: "tol".into(),
            reason: "tolerance must be non-negative".into(),
        });
    }
    if config.max_iter == 0 {
        return Err(Error::InvalidInput {
            field: "max_iter".into(),
            reason: "at least one iteration is required".into(),
        });
    }
    let mut best: Option<LloydRun> = None;
    for restart in 0..config.n_init {
        let mut stream = rng::seeded(config.seed, restart as u64);
        let run = lloyd(
            &features.features,
            config.k,
            config.max_iter,
            config.tol,
            &mut stream,
        );
        let better = match &best {
            None => true,
            Some(b) => run.inertia < b.inertia, // strict: ties keep the earlier restart
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("n_init >= 1");
    Ok(ClusterModel {
        k: config.k,
        seed: config.seed,
        assignments: run.assignments,
        centroids: run.centroids,
        inertia: run.inertia,
        iterations: run.iterations,
        inertia_trace: run.trace,
    })
}

/// Tickers per cluster, preserving the input ticker order inside each
/// cluster. Index c of the result is cluster c; clusters are never empty.
pub fn cluster_members(model: &ClusterModel, tickers: &[String]) -> Vec<Vec<String>> {
    let mut members = vec![Vec::new(); model.k];
    for (i, &a) in model.assignments.iter().enumerate() {
        members[a].push(tickers[i].clone());
    }
    members
}
