//! K-means over feature rows, centroid separation and PCA projection.
//!
//! The objective is the sum of squared Euclidean distances between each row
//! and its cluster centre. Runs are fully deterministic for a given seed:
//! restarts draw from independent ChaCha streams, all reductions run in a
//! fixed order, and distance ties go to the lowest cluster index.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("no samples to cluster")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the {n} available samples")]
    TooManyClusters { k: usize, n: usize },
    #[error("rows have inconsistent dimension ({0} vs {1})")]
    RaggedRows(usize, usize),
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
    #[error("n_init must be at least 1")]
    ZeroRestarts,
    #[error("max_iter must be at least 1")]
    ZeroIterations,
    #[error("PCA needs at least 2 rows, got {0}")]
    PcaTooFewRows(usize),
    #[error("PCA target dimension {p} must be in 1..={d}")]
    PcaDimension { p: usize, d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    /// D²-weighted seeding.
    KMeansPlusPlus,
    /// k distinct rows drawn uniformly.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Lloyd iterations stop once the loss improves by less than this and
    /// the assignment is stable.
    pub tol: f64,
    pub seed: u64,
    pub n_init: usize,
    pub init: InitMethod,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 4,
            max_iter: 300,
            tol: 1e-8,
            seed: 0,
            n_init: 10,
            init: InitMethod::KMeansPlusPlus,
        }
    }
}

/// Outcome of the best restart.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index per row, `0..k`. Reports print `index + 1`.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub loss: f64,
    /// Loss after every centroid update of the returned run.
    pub loss_trace: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Which restart produced this result.
    pub restart: usize,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// 1-based labels.
    pub fn labels(&self) -> Vec<usize> {
        self.assignments.iter().map(|a| a + 1).collect()
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn validate<R: AsRef<[f64]>>(data: &[R]) -> Result<usize, ClusterError> {
    let first = data.first().ok_or(ClusterError::Empty)?.as_ref().len();
    for (i, row) in data.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != first {
            return Err(ClusterError::RaggedRows(first, row.len()));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite(i));
        }
    }
    Ok(first)
}

/// Index of the nearest centroid, lowest index on ties.
fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn init_centroids<R: AsRef<[f64]>>(data: &[R], k: usize, method: InitMethod, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    match method {
        InitMethod::Uniform => rand::seq::index::sample(rng, n, k)
            .into_iter()
            .map(|i| data[i].as_ref().to_vec())
            .collect(),
        InitMethod::KMeansPlusPlus => {
            let mut centroids = vec![data[rng.random_range(0..n)].as_ref().to_vec()];
            let mut d2: Vec<f64> = data
                .iter()
                .map(|r| squared_distance(r.as_ref(), &centroids[0]))
                .collect();
            while centroids.len() < k {
                let total: f64 = d2.iter().sum();
                let pick = if total > 0.0 {
                    let target = rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut chosen = n - 1;
                    for (i, &w) in d2.iter().enumerate() {
                        acc += w;
                        if acc > target {
                            chosen = i;
                            break;
                        }
                    }
                    chosen
                } else {
                    // Every row coincides with a centre already.
                    rng.random_range(0..n)
                };
                let next = data[pick].as_ref().to_vec();
                for (d, r) in d2.iter_mut().zip(data) {
                    *d = d.min(squared_distance(r.as_ref(), &next));
                }
                centroids.push(next);
            }
            centroids
        }
    }
}

fn update_centroids<R: AsRef<[f64]>>(data: &[R], labels: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (row, &c) in data.iter().zip(labels) {
        sizes[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(row.as_ref()) {
            *s += x;
        }
    }
    for (s, &size) in sums.iter_mut().zip(&sizes) {
        if size > 0 {
            s.iter_mut().for_each(|v| *v /= size as f64);
        }
    }
    (sums, sizes)
}

/// Give every empty cluster the row lying farthest from its current
/// centre, taken from clusters that can spare a member.
fn repair_empty<R: AsRef<[f64]>>(data: &[R], labels: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&c| sizes[c] += 1);
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in data.iter().enumerate() {
            let c = labels[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = squared_distance(row.as_ref(), &centroids[c]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] = 1;
        }
    }
}

fn loss_of<R: AsRef<[f64]>>(data: &[R], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    data.iter()
        .zip(labels)
        .map(|(r, &c)| squared_distance(r.as_ref(), &centroids[c]))
        .sum()
}

fn lloyd<R: AsRef<[f64]>>(data: &[R], dim: usize, cfg: &KMeansConfig, restart: usize) -> Clustering {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let k = cfg.k;
    let mut centroids = init_centroids(data, k, cfg.init, &mut rng);
    let mut labels: Vec<usize> = vec![usize::MAX; data.len()];
    let mut sizes = vec![0; k];
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let mut next: Vec<usize> = data.iter().map(|r| nearest(r.as_ref(), &centroids).0).collect();
        repair_empty(data, &mut next, &centroids, k);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
        let (c, s) = update_centroids(data, &labels, k, dim);
        centroids = c;
        sizes = s;
        iterations += 1;
        let loss = loss_of(data, &labels, &centroids);
        let improved = trace.last().map_or(f64::INFINITY, |prev| prev - loss);
        trace.push(loss);
        // Small improvements only end the run once a fresh assignment step
        // leaves every row where it is.
        if improved < cfg.tol {
            let stable = data
                .iter()
                .zip(&labels)
                .all(|(r, &c)| nearest(r.as_ref(), &centroids).0 == c);
            if stable {
                converged = true;
                break;
            }
        }
    }

    let loss = trace.last().copied().unwrap_or(0.0);
    Clustering {
        assignments: labels,
        centroids,
        loss,
        loss_trace: trace,
        cluster_sizes: sizes,
        iterations,
        converged,
        restart,
    }
}

/// Lloyd's K-means with `n_init` seeded restarts; the lowest-loss run wins
/// (earliest restart on ties).
pub fn kmeans<R: AsRef<[f64]> + Sync>(data: &[R], cfg: &KMeansConfig) -> Result<Clustering, ClusterError> {
    let dim = validate(data)?;
    if cfg.k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if cfg.k > data.len() {
        return Err(ClusterError::TooManyClusters {
            k: cfg.k,
            n: data.len(),
        });
    }
    if cfg.n_init == 0 {
        return Err(ClusterError::ZeroRestarts);
    }
    if cfg.max_iter == 0 {
        return Err(ClusterError::ZeroIterations);
    }
    let runs: Vec<Clustering> = (0..cfg.n_init)
        .into_par_iter()
        .map(|r| lloyd(data, dim, cfg, r))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.loss < best.loss { run } else { best })
        .expect("n_init >= 1");
    Ok(best)
}

/// Pairwise Euclidean (not squared) distances between centroids.
pub fn centroid_distance_matrix(clustering: &Clustering) -> Vec<Vec<f64>> {
    let c = &clustering.centroids;
    let k = c.len();
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = squared_distance(&c[i], &c[j]).sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let index = |labels: &[usize]| {
        let mut uniq: Vec<usize> = labels.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        labels
            .iter()
            .map(|l| uniq.binary_search(l).expect("present"))
            .collect::<Vec<_>>()
    };
    let (ia, ib) = (index(a), index(b));
    let ka = ia.iter().max().map_or(0, |m| m + 1);
    let kb = ib.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in ia.iter().zip(&ib) {
        table[x][y] += 1;
    }
    let pairs = |m: u64| (m * m.saturating_sub(1)) as f64 / 2.0;
    let sum_cells: f64 = table.iter().flatten().map(|&m| pairs(m)).sum();
    let sum_rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let sum_cols: f64 = (0..kb).map(|j| pairs(table.iter().map(|r| r[j]).sum())).sum();
    let total = pairs(n as u64);
    let expected = sum_rows * sum_cols / total;
    let max_index = (sum_rows + sum_cols) / 2.0;
    if max_index == expected {
        // Both labelings trivial (all one cluster or all singletons).
        return 1.0;
    }
    (sum_cells - expected) / (max_index - expected)
}

/// Principal components of the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// `p` orthonormal directions, each of the input dimension.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues (divisor `n - 1`), descending.
    pub explained_variance: Vec<f64>,
    /// Projected, centred coordinates: one `p`-vector per row.
    pub coords: Vec<Vec<f64>>,
    /// Retained components whose eigenvalue is numerically zero.
    pub null_components: usize,
}

pub fn pca_project<R: AsRef<[f64]>>(data: &[R], p: usize) -> Result<PcaProjection, ClusterError> {
    if data.len() < 2 {
        return Err(ClusterError::PcaTooFewRows(data.len()));
    }
    let d = validate(data)?;
    if p == 0 || p > d {
        return Err(ClusterError::PcaDimension { p, d });
    }
    let n = data.len();
    let mut mean = vec![0.0; d];
    for row in data {
        for (m, x) in mean.iter_mut().zip(row.as_ref()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centred = DMatrix::from_fn(n, d, |i, j| data[i].as_ref()[j] - mean[j]);
    let cov = (centred.transpose() * &centred) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);

    let mut components = Vec::with_capacity(p);
    let mut explained_variance = Vec::with_capacity(p);
    let mut null_components = 0;
    for &idx in order.iter().take(p) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let lambda = eig.eigenvalues[idx];
        if lambda <= 1e-12 * top {
            null_components += 1;
        }
        components.push(v);
        explained_variance.push(lambda);
    }
    if null_components > 0 {
        log::warn!("{null_components} retained principal component(s) carry no variance");
    }

    let coords = centred
        .row_iter()
        .map(|row| {
            components
                .iter()
                .map(|c| row.iter().zip(c).map(|(x, w)| x * w).sum())
                .collect()
        })
        .collect();
    Ok(PcaProjection {
        components,
        explained_variance,
        coords,
        null_components,
    })
}
