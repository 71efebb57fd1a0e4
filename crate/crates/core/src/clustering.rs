//! Cluster assignment strategies that distribute training data among the
//! expert paths: by known class labels, by a categorical attribute column,
//! or by k-means when neither is available.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Matrix;
use crate::error::{Error, Result};

/// Distinct-value cap above which a column is rejected as a clustering
/// attribute.
pub const DEFAULT_ATTRIBUTE_CAP: usize = 32;

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ByClass,
    ByAttribute,
    ByAlgorithm,
}

/// Maps every training sample to exactly one expert index in `[0, J)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub expert_index: Vec<usize>,
    pub expert_count: usize,
    pub strategy: Strategy,
}

impl ClusterAssignment {
    pub fn validate(&self) -> Result<()> {
        if self.expert_count == 0 {
            return Err(Error::Config("expert_count must be >= 1".into()));
        }
        let mut seen = vec![false; self.expert_count];
        for (i, &j) in self.expert_index.iter().enumerate() {
            if j >= self.expert_count {
                return Err(Error::Config(format!(
                    "sample {i} assigned to expert {j}, but only {} exist",
                    self.expert_count
                )));
            }
            seen[j] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!("expert {empty} has no samples")));
        }
        Ok(())
    }

    /// Writes one `row_index,expert_index` line per sample.
    pub fn export(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)?;
        for (i, j) in self.expert_index.iter().enumerate() {
            writeln!(file, "{i},{j}")?;
        }
        Ok(())
    }
}

/// One expert per distinct class label, mapped in sorted label order.
pub fn assign_by_class(class_labels: &[String]) -> Result<ClusterAssignment> {
    if class_labels.is_empty() {
        return Err(Error::Config("no samples to assign".into()));
    }
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for label in class_labels {
        let next = index.len();
        index.entry(label).or_insert(next);
    }
    // BTreeMap iteration is sorted; re-number so indices follow sort order
    let sorted: BTreeMap<&str, usize> = index
        .keys()
        .enumerate()
        .map(|(i, k)| (*k, i))
        .collect();
    let assignment = ClusterAssignment {
        expert_index: class_labels.iter().map(|l| sorted[l.as_str()]).collect(),
        expert_count: sorted.len(),
        strategy: Strategy::ByClass,
    };
    assignment.validate()?;
    Ok(assignment)
}

/// One expert per distinct attribute value, mapped in sorted value order.
/// Rejects columns with more than `cap` distinct values.
pub fn assign_by_attribute(values: &[String], cap: usize) -> Result<ClusterAssignment> {
    if values.is_empty() {
        return Err(Error::Config("no samples to assign".into()));
    }
    let mut distinct: Vec<&str> = values.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() > cap {
        return Err(Error::Attribute(format!(
            "attribute has {} distinct values (cap {cap}); use algorithmic clustering instead",
            distinct.len()
        )));
    }
    let index: BTreeMap<&str, usize> = distinct.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let assignment = ClusterAssignment {
        expert_index: values.iter().map(|v| index[v.as_str()]).collect(),
        expert_count: distinct.len(),
        strategy: Strategy::ByAttribute,
    };
    assignment.validate()?;
    Ok(assignment)
}

/// Lloyd's algorithm with k-means++ seeding on already-scaled features.
/// Ties break toward the lowest centroid index; empty clusters are re-seeded
/// to the point farthest from its centroid.
pub fn assign_by_algorithm(features: &Matrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let result = kmeans(features, k, seed)?;
    let assignment = ClusterAssignment {
        expert_index: result.assignment,
        expert_count: k,
        strategy: Strategy::ByAlgorithm,
    };
    assignment.validate()?;
    Ok(assignment)
}

pub struct KmeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    /// Within-cluster sum of squares at convergence.
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans(features: &Matrix, k: usize, seed: u64) -> Result<KmeansResult> {
    let n = features.rows();
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds sample count {n}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_plus_plus(features, k, &mut rng);
    let mut assignment = vec![0usize; n];

    for _ in 0..KMEANS_MAX_ITERS {
        // assignment step
        for (i, point) in features.iter_rows().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for c in 0..k {
                let d = dist2(point, centroids.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            assignment[i] = best.0;
        }

        // update step
        let mut sums = Matrix::zeros(k, features.cols());
        let mut counts = vec![0usize; k];
        for (i, point) in features.iter_rows().enumerate() {
            let c = assignment[i];
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(point) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed to the point farthest from its current centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(features.row(a), centroids.row(assignment[a]))
                            .total_cmp(&dist2(features.row(b), centroids.row(assignment[b])))
                    })
                    .unwrap();
                shift = f64::INFINITY;
                centroids.row_mut(c).copy_from_slice(features.row(far));
                assignment[far] = c;
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let old: Vec<f64> = centroids.row(c).to_vec();
            for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                *dst = s * inv;
            }
            shift = shift.max(dist2(&old, centroids.row(c)).sqrt());
        }

        if shift < KMEANS_TOL {
            break;
        }
    }

    // final assignment against the converged centroids
    let mut inertia = 0.0;
    for (i, point) in features.iter_rows().enumerate() {
        let mut best = (0usize, f64::INFINITY);
        for c in 0..k {
            let d = dist2(point, centroids.row(c));
            if d < best.1 {
                best = (c, d);
            }
        }
        assignment[i] = best.0;
        inertia += best.1;
    }

    Ok(KmeansResult {
        assignment,
        centroids,
        inertia,
    })
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn init_plus_plus<R: Rng>(features: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = features.rows();
    let mut centroids = Matrix::with_cols(features.cols());
    let first = rng.gen_range(0..n);
    centroids.push_row(features.row(first));

    let mut d2: Vec<f64> = features
        .iter_rows()
        .map(|p| dist2(p, centroids.row(0)))
        .collect();
    while centroids.rows() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            WeightedIndex::new(&d2).unwrap().sample(rng)
        } else {
            rng.gen_range(0..n)
        };
        centroids.push_row(features.row(next));
        let c = centroids.rows() - 1;
        for (i, p) in features.iter_rows().enumerate() {
            d2[i] = d2[i].min(dist2(p, centroids.row(c)));
        }
    }
    centroids
}
