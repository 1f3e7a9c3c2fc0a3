//! One-dimensional k-means and fuzzy c-means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Mask};

pub const MAX_ITERATIONS: usize = 300;
pub const FCM_TOLERANCE: f64 = 1e-5;
/// Splits whose centroid gap is below this multiple of the pooled
/// within-cluster standard deviation are treated as uniform.
pub const SEPARATION_GATE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterBackend {
    #[default]
    Kmeans,
    Cmeans,
}

/// Hard partition with centroids in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub centroids: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each assignment step (k-means) or iteration (c-means).
    pub inertia_trace: Vec<f64>,
}

fn validate(values: &[f64], k: usize) -> Result<()> {
    if k == 0 || values.len() < k {
        return Err(Error::InvalidArgument(format!(
            "need at least k = {k} >= 1 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }
    if k > 1 && values.iter().all(|&v| v == values[0]) {
        return Err(Error::DegenerateInput { k });
    }
    Ok(())
}

/// k-means++ seeding.
fn seed_centroids(values: &[f64], k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = values.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..values.len())
        };
        let c = values[pick];
        centroids.push(c);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c).powi(2));
        }
    }
    centroids
}

fn nearest(v: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = (v - c).powi(2);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn inertia(values: &[f64], labels: &[usize], centroids: &[f64]) -> f64 {
    values
        .iter()
        .zip(labels)
        .map(|(v, &l)| (v - centroids[l]).powi(2))
        .sum()
}

/// Reorders centroids ascending and relabels to match.
fn canonicalize(mut c: Clustering) -> Clustering {
    let mut order: Vec<usize> = (0..c.centroids.len()).collect();
    order.sort_by(|&a, &b| c.centroids[a].total_cmp(&c.centroids[b]).then(a.cmp(&b)));
    let mut rank = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    c.centroids = order.iter().map(|&i| c.centroids[i]).collect();
    for l in &mut c.labels {
        *l = rank[*l];
    }
    c
}

/// Lloyd's algorithm from k-means++ seeds.
pub fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> Result<Clustering> {
    validate(values, k)?;
    let mut centroids = seed_centroids(values, k, seed);
    let mut labels: Vec<usize> = values.iter().map(|&v| nearest(v, &centroids)).collect();
    let mut trace = vec![inertia(values, &labels, &centroids)];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &l) in values.iter().zip(&labels) {
            sums[l] += v;
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // Re-seed an empty cluster at the worst-fitted point.
                let far = values
                    .iter()
                    .zip(&labels)
                    .enumerate()
                    .max_by(|a, b| {
                        let da = (a.1 .0 - centroids[*a.1 .1]).abs();
                        let db = (b.1 .0 - centroids[*b.1 .1]).abs();
                        da.total_cmp(&db).then(b.0.cmp(&a.0))
                    })
                    .map(|(i, _)| i)
                    .expect("non-empty values");
                centroids[j] = values[far];
                labels[far] = j;
            }
        }
        let next: Vec<usize> = values.iter().map(|&v| nearest(v, &centroids)).collect();
        let changed = next != labels;
        labels = next;
        trace.push(inertia(values, &labels, &centroids));
        if !changed {
            break;
        }
    }
    // Final centroid refresh so that centroids are the member means.
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&v, &l) in values.iter().zip(&labels) {
        sums[l] += v;
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            centroids[j] = sums[j] / counts[j] as f64;
        }
    }
    let total = inertia(values, &labels, &centroids);
    trace.push(total);
    Ok(canonicalize(Clustering {
        labels,
        centroids,
        inertia: total,
        iterations,
        inertia_trace: trace,
    }))
}

fn memberships(v: f64, centroids: &[f64], exponent: f64, out: &mut [f64]) {
    let d: Vec<f64> = centroids.iter().map(|c| (v - c).abs()).collect();
    let zeros = d.iter().filter(|&&x| x == 0.0).count();
    if zeros > 0 {
        for (u, &x) in out.iter_mut().zip(&d) {
            *u = if x == 0.0 { 1.0 / zeros as f64 } else { 0.0 };
        }
        return;
    }
    for (j, u) in out.iter_mut().enumerate() {
        let s: f64 = d.iter().map(|&dl| (d[j] / dl).powf(exponent)).sum();
        *u = 1.0 / s;
    }
}

/// Fuzzy c-means with fuzzifier `m`, initialized from k-means++ seeds.
/// Hard labels take the cluster of maximal membership.
pub fn fuzzy_cmeans_1d(values: &[f64], k: usize, m: f64, seed: u64) -> Result<Clustering> {
    if !(m > 1.0) {
        return Err(Error::InvalidArgument(format!("fuzzifier must exceed 1, got {m}")));
    }
    validate(values, k)?;
    let n = values.len();
    let exponent = 2.0 / (m - 1.0);
    let mut centroids = seed_centroids(values, k, seed);
    let mut u = vec![0.0; n * k];
    for (i, &v) in values.iter().enumerate() {
        memberships(v, &centroids, exponent, &mut u[i * k..(i + 1) * k]);
    }
    let hard = |u: &[f64]| -> Vec<usize> {
        u.chunks(k)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(j, _)| j)
                    .unwrap_or(0)
            })
            .collect()
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut row = vec![0.0; k];
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        for j in 0..k {
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, &v) in values.iter().enumerate() {
                let w = u[i * k + j].powf(m);
                num += w * v;
                den += w;
            }
            if den > 0.0 {
                centroids[j] = num / den;
            }
        }
        let mut delta: f64 = 0.0;
        for (i, &v) in values.iter().enumerate() {
            memberships(v, &centroids, exponent, &mut row);
            for j in 0..k {
                delta = delta.max((row[j] - u[i * k + j]).abs());
                u[i * k + j] = row[j];
            }
        }
        trace.push(inertia(values, &hard(&u), &centroids));
        if delta < FCM_TOLERANCE {
            break;
        }
    }
    let labels = hard(&u);
    let total = inertia(values, &labels, &centroids);
    Ok(canonicalize(Clustering {
        labels,
        centroids,
        inertia: total,
        iterations,
        inertia_trace: trace,
    }))
}

pub fn cluster_values(values: &[f64], k: usize, backend: ClusterBackend, seed: u64) -> Result<Clustering> {
    match backend {
        ClusterBackend::Kmeans => kmeans_1d(values, k, seed),
        ClusterBackend::Cmeans => fuzzy_cmeans_1d(values, k, 2.0, seed),
    }
}

/// Outcome of splitting one segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentSplit {
    /// `low` holds the pixels of the smaller centroid.
    Split { low: Mask, high: Mask },
    Uniform,
}

/// Two-way clustering of the in-segment values of `enhanced`.
pub fn cluster_segment(
    enhanced: &GrayImage,
    segment: &Mask,
    backend: ClusterBackend,
    seed: u64,
) -> Result<SegmentSplit> {
    segment.check_same_dims(enhanced.dims())?;
    let idx: Vec<usize> = (0..segment.data().len()).filter(|&i| segment.data()[i]).collect();
    if idx.is_empty() {
        return Err(Error::InvalidArgument("segment is empty".into()));
    }
    let values: Vec<f64> = idx.iter().map(|&i| enhanced.data()[i]).collect();
    let clustering = match cluster_values(&values, 2, backend, seed) {
        Ok(c) => c,
        Err(Error::DegenerateInput { .. }) => return Ok(SegmentSplit::Uniform),
        Err(Error::InvalidArgument(_)) if values.len() < 2 => return Ok(SegmentSplit::Uniform),
        Err(e) => return Err(e),
    };
    let pooled = (clustering.inertia / values.len() as f64).sqrt();
    let gap = clustering.centroids[1] - clustering.centroids[0];
    if gap < SEPARATION_GATE * pooled || clustering.labels.iter().all(|&l| l == clustering.labels[0]) {
        return Ok(SegmentSplit::Uniform);
    }
    let (w, h) = segment.dims();
    let mut low = Mask::filled(w, h, false);
    let mut high = Mask::filled(w, h, false);
    for (&i, &l) in idx.iter().zip(&clustering.labels) {
        let (r, c) = (i / w, i % w);
        if l == 0 {
            low.set(r, c, true);
        } else {
            high.set(r, c, true);
        }
    }
    Ok(SegmentSplit::Split { low, high })
}
