//! Diagonal-covariance Gaussian mixtures fitted by Expectation-Maximization.
//!
//! The E-step is evaluated per point in parallel; every reduction over
//! points (log-likelihood, M-step sums) runs sequentially in index order, so
//! a fit is bit-identical for a given seed whatever the thread count.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DIM: usize = 3;
pub type Point = [f64; DIM];

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_NOISE_MAD_FACTOR: f64 = 3.0;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("no points to cluster")]
    Empty,
    #[error("k must be between 1 and the point count ({n}), got {k}")]
    InvalidK { k: usize, n: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("invalid k range {k_min}..={k_max}")]
    InvalidRange { k_min: usize, k_max: usize },
    #[error("cross-validation needs at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("{got} points are too few for {folds}-fold cross-validation up to k={k_max}")]
    InsufficientPoints {
        got: usize,
        folds: usize,
        k_max: usize,
    },
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub k: usize,
    pub seed: u64,
    /// Stop once the log-likelihood gain falls below `tol * max(|ll|, 1)`.
    pub tol: f64,
    pub max_iter: usize,
    pub variance_floor: f64,
}

impl EmConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        EmConfig {
            k,
            seed,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub k: usize,
    pub seed: u64,
    pub weights: Vec<f64>,
    pub centroids: Vec<Point>,
    pub variances: Vec<Point>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub variance_floor: f64,
}

/// Per-component constants for evaluating log densities.
struct Prepared {
    log_weight: f64,
    log_norm: f64,
    mean: Point,
    inv_var: Point,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl MixtureModel {
    fn prepare(&self) -> Vec<Prepared> {
        (0..self.k)
            .map(|j| {
                let var = self.variances[j];
                Prepared {
                    log_weight: self.weights[j].ln(),
                    log_norm: -0.5 * var.iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>(),
                    mean: self.centroids[j],
                    inv_var: var.map(|v| 1.0 / v),
                }
            })
            .collect()
    }

    /// Fills `out[j] = ln w_j + ln N(x | mu_j, sigma_j)`.
    fn log_joint_into(prepared: &[Prepared], x: &Point, out: &mut [f64]) {
        for (slot, c) in out.iter_mut().zip(prepared) {
            let mut quad = 0.0;
            for d in 0..DIM {
                let diff = x[d] - c.mean[d];
                quad += diff * diff * c.inv_var[d];
            }
            *slot = c.log_weight + c.log_norm - 0.5 * quad;
        }
    }

    /// Log of the mixture density at `x`.
    pub fn log_density(&self, x: &Point) -> f64 {
        let prepared = self.prepare();
        let mut buf = vec![0.0; self.k];
        Self::log_joint_into(&prepared, x, &mut buf);
        log_sum_exp(&buf)
    }

    /// Writes responsibilities (rows of length k) and returns per-point log
    /// densities.
    fn e_step(&self, points: &[Point], resp: &mut [f64]) -> Vec<f64> {
        let prepared = self.prepare();
        resp.par_chunks_mut(self.k)
            .zip(points.par_iter())
            .map(|(row, x)| {
                Self::log_joint_into(&prepared, x, row);
                let lse = log_sum_exp(row);
                for r in row.iter_mut() {
                    *r = (*r - lse).exp();
                }
                lse
            })
            .collect()
    }

    pub fn log_densities(&self, points: &[Point]) -> Vec<f64> {
        let mut resp = vec![0.0; points.len() * self.k];
        self.e_step(points, &mut resp)
    }

    pub fn total_log_likelihood(&self, points: &[Point]) -> f64 {
        self.log_densities(points).iter().sum()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), ClusterError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self, ClusterError> {
        Ok(serde_json::from_reader(input)?)
    }
}

/// State handed to an observer after every EM iteration.
pub struct EmStep<'a> {
    pub iteration: usize,
    pub log_likelihood: f64,
    /// Row-major n x k responsibilities under the current parameters.
    pub responsibilities: &'a [f64],
    pub weights: &'a [f64],
}

fn check_points(points: &[Point]) -> Result<(), ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::Empty);
    }
    if let Some(index) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(ClusterError::NonFinite { index });
    }
    Ok(())
}

fn dist2(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn bounding_box(points: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; DIM];
    let mut hi = [f64::NEG_INFINITY; DIM];
    for p in points {
        for d in 0..DIM {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

/// k-means++ seeding of the means.
fn seed_means(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = points.len();
    let mut means = vec![points[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &means[0])).collect();
    while means.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            // Rounding can leave `target` past the last step.
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1);
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let center = points[idx];
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(dist2(p, &center));
        }
        means.push(center);
    }
    means
}

fn global_variance(points: &[Point], floor: f64) -> Point {
    let n = points.len() as f64;
    let mut mean = [0.0; DIM];
    for p in points {
        for d in 0..DIM {
            mean[d] += p[d];
        }
    }
    mean = mean.map(|m| m / n);
    let mut var = [0.0; DIM];
    for p in points {
        for d in 0..DIM {
            var[d] += (p[d] - mean[d]).powi(2);
        }
    }
    var.map(|v| (v / n).max(floor))
}

fn initial_model(points: &[Point], cfg: &EmConfig) -> MixtureModel {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let centroids = seed_means(points, cfg.k, &mut rng);
    let variance = global_variance(points, cfg.variance_floor);
    MixtureModel {
        k: cfg.k,
        seed: cfg.seed,
        weights: vec![1.0 / cfg.k as f64; cfg.k],
        centroids,
        variances: vec![variance; cfg.k],
        log_likelihood: f64::NEG_INFINITY,
        iterations: 0,
        variance_floor: cfg.variance_floor,
    }
}

fn m_step(model: &mut MixtureModel, points: &[Point], resp: &[f64], bbox: &(Point, Point)) {
    let k = model.k;
    let mut mass = vec![0.0; k];
    let mut sums = vec![[0.0; DIM]; k];
    for (x, row) in points.iter().zip(resp.chunks(k)) {
        for j in 0..k {
            mass[j] += row[j];
            for d in 0..DIM {
                sums[j][d] += row[j] * x[d];
            }
        }
    }
    let total: f64 = mass.iter().sum();
    let (lo, hi) = bbox;
    for j in 0..k {
        model.weights[j] = mass[j] / total;
        if mass[j] > 0.0 {
            for d in 0..DIM {
                // Clamp away rounding outside the convex hull's box.
                model.centroids[j][d] = (sums[j][d] / mass[j]).clamp(lo[d], hi[d]);
            }
        }
    }
    let mut sq = vec![[0.0; DIM]; k];
    for (x, row) in points.iter().zip(resp.chunks(k)) {
        for j in 0..k {
            for d in 0..DIM {
                let diff = x[d] - model.centroids[j][d];
                sq[j][d] += row[j] * diff * diff;
            }
        }
    }
    for j in 0..k {
        if mass[j] > 0.0 {
            for d in 0..DIM {
                model.variances[j][d] = (sq[j][d] / mass[j]).max(model.variance_floor);
            }
        }
    }
}

pub fn em_fit(points: &[Point], cfg: &EmConfig) -> Result<MixtureModel, ClusterError> {
    em_fit_observed(points, cfg, |_| {})
}

/// Like [`em_fit`], also returning the log-likelihood of every iteration
/// (index 0 is the initial model).
pub fn em_fit_traced(
    points: &[Point],
    cfg: &EmConfig,
) -> Result<(MixtureModel, Vec<f64>), ClusterError> {
    let mut history = Vec::new();
    let model = em_fit_observed(points, cfg, |step| history.push(step.log_likelihood))?;
    Ok((model, history))
}

pub fn em_fit_observed<F>(
    points: &[Point],
    cfg: &EmConfig,
    mut observe: F,
) -> Result<MixtureModel, ClusterError>
where
    F: FnMut(&EmStep<'_>),
{
    check_points(points)?;
    if cfg.k == 0 || cfg.k > points.len() {
        return Err(ClusterError::InvalidK {
            k: cfg.k,
            n: points.len(),
        });
    }
    let bbox = bounding_box(points);
    let mut model = initial_model(points, cfg);
    let mut resp = vec![0.0; points.len() * cfg.k];
    let mut ll: f64 = model.e_step(points, &mut resp).iter().sum();
    observe(&EmStep {
        iteration: 0,
        log_likelihood: ll,
        responsibilities: &resp,
        weights: &model.weights,
    });

    while model.iterations < cfg.max_iter {
        m_step(&mut model, points, &resp, &bbox);
        model.iterations += 1;
        let next: f64 = model.e_step(points, &mut resp).iter().sum();
        observe(&EmStep {
            iteration: model.iterations,
            log_likelihood: next,
            responsibilities: &resp,
            weights: &model.weights,
        });
        let gain = next - ll;
        ll = next;
        if gain < cfg.tol * ll.abs().max(1.0) {
            break;
        }
    }
    model.log_likelihood = ll;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub folds: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub variance_floor: f64,
    /// Cross-validate on a seeded subsample of at most this many points.
    pub max_points: usize,
}

impl SelectConfig {
    pub fn new(k_min: usize, k_max: usize, seed: u64) -> Self {
        SelectConfig {
            k_min,
            k_max,
            folds: 10,
            seed,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            max_points: 4000,
        }
    }
}

fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Mean held-out per-point log-likelihood for each k in the range.
pub fn cv_scores(points: &[Point], cfg: &SelectConfig) -> Result<Vec<(usize, f64)>, ClusterError> {
    check_points(points)?;
    if cfg.k_min == 0 || cfg.k_max < cfg.k_min {
        return Err(ClusterError::InvalidRange {
            k_min: cfg.k_min,
            k_max: cfg.k_max,
        });
    }
    if cfg.folds < 2 {
        return Err(ClusterError::InvalidFolds(cfg.folds));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let order = shuffled_indices(points.len(), &mut rng);
    let sample: Vec<Point> = order
        .iter()
        .take(cfg.max_points)
        .map(|&i| points[i])
        .collect();
    let n = sample.len();
    let largest_fold = n.div_ceil(cfg.folds);
    if n < cfg.folds || n - largest_fold < cfg.k_max {
        return Err(ClusterError::InsufficientPoints {
            got: n,
            folds: cfg.folds,
            k_max: cfg.k_max,
        });
    }

    let mut scores = Vec::new();
    for k in cfg.k_min..=cfg.k_max {
        let em = EmConfig {
            k,
            seed: cfg.seed,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            variance_floor: cfg.variance_floor,
        };
        let per_fold = (0..cfg.folds)
            .map(|fold| {
                let (test, train): (Vec<_>, Vec<_>) = sample
                    .iter()
                    .enumerate()
                    .partition(|(i, _)| i % cfg.folds == fold);
                let train: Vec<Point> = train.into_iter().map(|(_, p)| *p).collect();
                let test: Vec<Point> = test.into_iter().map(|(_, p)| *p).collect();
                let model = em_fit(&train, &em)?;
                Ok(model.total_log_likelihood(&test) / test.len() as f64)
            })
            .collect::<Result<Vec<f64>, ClusterError>>()?;
        scores.push((k, per_fold.iter().sum::<f64>() / cfg.folds as f64));
    }
    Ok(scores)
}

/// Picks the k with the best cross-validated likelihood; ties go to the
/// smaller k. A single-value range is returned without fitting anything.
pub fn select_k(points: &[Point], cfg: &SelectConfig) -> Result<usize, ClusterError> {
    if cfg.k_min == cfg.k_max && cfg.k_min > 0 {
        return Ok(cfg.k_min);
    }
    let scores = cv_scores(points, cfg)?;
    let mut best = scores[0];
    for &(k, score) in &scores[1..] {
        if score > best.1 {
            best = (k, score);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    /// 1-based cluster id.
    Cluster(usize),
    Noise,
}

impl Label {
    /// Numeric code for exports: the cluster id, or 0 for noise.
    pub fn code(self) -> usize {
        match self {
            Label::Cluster(id) => id,
            Label::Noise => 0,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Cluster(id) => write!(f, "{id}"),
            Label::Noise => f.write_str("NOISE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub k: usize,
    pub labels: Vec<Label>,
    /// Row-major n x k.
    pub responsibilities: Vec<f64>,
    pub log_densities: Vec<f64>,
    /// Log-density below which a point is noise, when the rule is active.
    pub noise_cut: Option<f64>,
}

impl Assignment {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.responsibilities[i * self.k..(i + 1) * self.k]
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Noise).count()
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median minus `factor` median absolute deviations. `None` when the rule
/// is disabled (infinite factor) or the spread is zero.
pub fn noise_threshold(log_densities: &[f64], factor: f64) -> Option<f64> {
    if log_densities.is_empty() || !factor.is_finite() {
        return None;
    }
    let mut sorted = log_densities.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = sorted.iter().map(|v| (v - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    (mad > 0.0).then_some(med - factor * mad)
}

pub fn assign(model: &MixtureModel, points: &[Point], noise_mad_factor: f64) -> Assignment {
    let mut responsibilities = vec![0.0; points.len() * model.k];
    let log_densities = model.e_step(points, &mut responsibilities);
    let noise_cut = noise_threshold(&log_densities, noise_mad_factor);
    let labels = responsibilities
        .chunks(model.k)
        .zip(&log_densities)
        .map(|(row, &ld)| {
            if noise_cut.is_some_and(|cut| ld < cut) {
                return Label::Noise;
            }
            // First maximum wins ties.
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            Label::Cluster(best + 1)
        })
        .collect();
    Assignment {
        k: model.k,
        labels,
        responsibilities,
        log_densities,
        noise_cut,
    }
}
