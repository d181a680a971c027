use itertools::Itertools;
use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::derive_seed;
use crate::diffmath::sq_dist;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const KMEANS_MAX_ITERS: usize = 300;
pub const KMEANS_MAX_ATTEMPTS: usize = 10;
/// Independent seedings per call; the lowest-inertia result wins.
pub const KMEANS_RESTARTS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans<T> {
    pub centroids: Vec<Vec<T>>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: T,
}

fn nearest<T: Scalar>(x: &[T], centroids: &[Vec<T>]) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn plus_plus_seeds<T: Scalar, R: Rng>(vectors: &[Vec<T>], c: usize, rng: &mut R) -> Vec<Vec<T>> {
    let mut centroids = vec![vectors[rng.random_range(0..vectors.len())].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|x| sq_dist(x, &centroids[0]).to_f64_lossy()).collect();
    while centroids.len() < c {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            Err(_) => rng.random_range(0..vectors.len()),
        };
        centroids.push(vectors[next].clone());
        for (d, x) in d2.iter_mut().zip(vectors) {
            *d = d.min(sq_dist(x, centroids.last().expect("just pushed")).to_f64_lossy());
        }
    }
    centroids
}

fn finish<T: Scalar>(vectors: &[Vec<T>], centroids: Vec<Vec<T>>, assignments: Vec<usize>, iterations: usize) -> KMeans<T> {
    let inertia = vectors.iter().zip(&assignments).map(|(x, &a)| sq_dist(x, &centroids[a])).sum();
    KMeans { centroids, assignments, iterations, inertia }
}

fn lloyd<T: Scalar>(vectors: &[Vec<T>], mut centroids: Vec<Vec<T>>) -> Option<KMeans<T>> {
    let dim = vectors[0].len();
    let c = centroids.len();
    let mut assignments: Vec<usize> = vectors.iter().map(|x| nearest(x, &centroids)).collect();
    for iterations in 1..=KMEANS_MAX_ITERS {
        let mut sums = vec![vec![T::zero(); dim]; c];
        let mut counts = vec![0usize; c];
        for (x, &a) in vectors.iter().zip(&assignments) {
            counts[a] += 1;
            sums[a].iter_mut().zip(x).for_each(|(s, &v)| *s += v);
        }
        if counts.contains(&0) {
            return None;
        }
        for ((cent, sum), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            *cent = sum.into_iter().map(|s| s / T::of_usize(n)).collect();
        }
        let next: Vec<usize> = vectors.iter().map(|x| nearest(x, &centroids)).collect();
        if next == assignments {
            return Some(finish(vectors, centroids, assignments, iterations));
        }
        assignments = next;
    }
    Some(finish(vectors, centroids, assignments, KMEANS_MAX_ITERS))
}

fn single_run<T: Scalar>(vectors: &[Vec<T>], c: usize, seed: u64) -> Result<KMeans<T>> {
    for attempt in 0..KMEANS_MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt as u64));
        let seeds = plus_plus_seeds(vectors, c, &mut rng);
        if let Some(result) = lloyd(vectors, seeds) {
            return Ok(result);
        }
        warn!("k-means attempt {} produced an empty cluster; reseeding", attempt + 1);
    }
    Err(Error::EmptyCluster { attempts: KMEANS_MAX_ATTEMPTS })
}

/// k-means++ seeding followed by Lloyd iterations until the assignment is
/// a fixed point (or 300 iterations), best of [`KMEANS_RESTARTS`] seedings.
/// A run that empties a cluster is reseeded, up to 10 attempts.
pub fn kmeans<T: Scalar>(vectors: &[Vec<T>], c: usize, seed: u64) -> Result<KMeans<T>> {
    if c < 2 {
        return Err(Error::InvalidConfig(format!("k-means needs C >= 2, got {c}")));
    }
    if vectors.len() <= c {
        return Err(Error::InvalidConfig(format!("k-means needs more than C = {c} points, got {}", vectors.len())));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::InvalidConfig("vectors of unequal dimension".into()));
    }
    let mut best: Option<KMeans<T>> = None;
    for restart in 0..KMEANS_RESTARTS {
        let run = single_run(vectors, c, derive_seed(seed, 1_000 + restart as u64))?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Mean silhouette `(b − a) / max(a, b)`. Points alone in their cluster
/// score 0. Fails when fewer than two clusters are occupied, when every
/// cluster is a singleton, or when all points coincide.
pub fn silhouette<T: Scalar>(vectors: &[Vec<T>], assignments: &[usize]) -> Result<T> {
    if vectors.len() != assignments.len() {
        return Err(Error::LengthMismatch { context: "silhouette", expected: vectors.len(), actual: assignments.len() });
    }
    let c = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; c];
    assignments.iter().for_each(|&a| sizes[a] += 1);
    let occupied = sizes.iter().filter(|&&s| s > 0).count();
    if occupied < 2 {
        return Err(Error::Degenerate("silhouette needs at least two occupied clusters".into()));
    }
    if sizes.iter().all(|&s| s <= 1) {
        return Err(Error::Degenerate("silhouette undefined: every cluster is a singleton".into()));
    }
    let scores: Vec<Option<T>> = (0..vectors.len())
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return Some(T::zero());
            }
            let mut sums = vec![T::zero(); c];
            for (j, x) in vectors.iter().enumerate() {
                if j != i {
                    sums[assignments[j]] += sq_dist(&vectors[i], x).sqrt();
                }
            }
            let a = sums[own] / T::of_usize(sizes[own] - 1);
            let b = (0..c)
                .filter(|&k| k != own && sizes[k] > 0)
                .map(|k| sums[k] / T::of_usize(sizes[k]))
                .fold(T::infinity(), T::min);
            let m = a.max(b);
            if m == T::zero() { None } else { Some((b - a) / m) }
        })
        .collect();
    if scores.iter().all(Option::is_none) {
        return Err(Error::Degenerate("silhouette undefined: all points coincide".into()));
    }
    let total: T = scores.iter().map(|s| s.unwrap_or_else(T::zero)).sum();
    Ok(total / T::of_usize(vectors.len()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSelection<T> {
    pub best: usize,
    pub scores: Vec<(usize, T)>,
}

/// Runs k-means for every `C` in the range and keeps the best silhouette
/// (smallest `C` on ties).
pub fn select_clusters<T: Scalar>(
    vectors: &[Vec<T>],
    range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<ClusterSelection<T>> {
    let cs: Vec<usize> = range.collect();
    if cs.is_empty() {
        return Err(Error::InvalidConfig("empty cluster-count range".into()));
    }
    let scores: Vec<(usize, T)> = cs
        .par_iter()
        .map(|&c| {
            let km = kmeans(vectors, c, seed)?;
            Ok((c, silhouette(vectors, &km.assignments)?))
        })
        .collect::<Result<_>>()?;
    let best = scores
        .iter()
        .fold(None::<(usize, T)>, |acc, &(c, s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((c, s)),
        })
        .expect("non-empty")
        .0;
    Ok(ClusterSelection { best, scores })
}

/// Cluster → class map maximising agreement with `labels`, by exhaustive
/// search over permutations. Returns the map and the resulting accuracy.
pub fn optimal_bijection(assignments: &[usize], labels: &[usize], k: usize) -> Result<(Vec<usize>, f64)> {
    if assignments.len() != labels.len() || labels.is_empty() {
        return Err(Error::LengthMismatch { context: "cluster bijection", expected: labels.len(), actual: assignments.len() });
    }
    if k > 8 {
        return Err(Error::InvalidConfig(format!("exhaustive bijection limited to 8 clusters, got {k}")));
    }
    if let Some(&bad) = assignments.iter().chain(labels).find(|&&x| x >= k) {
        return Err(Error::OutOfRange { what: "cluster or class", id: bad, len: k });
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for (&a, &l) in assignments.iter().zip(labels) {
        confusion[a][l] += 1;
    }
    let (map, hits) = (0..k)
        .permutations(k)
        .map(|perm| {
            let hits: usize = perm.iter().enumerate().map(|(c, &l)| confusion[c][l]).sum();
            (perm, hits)
        })
        .fold((Vec::new(), 0usize), |best, cand| if cand.1 > best.1 || best.0.is_empty() { cand } else { best });
    Ok((map, hits as f64 / labels.len() as f64))
}
