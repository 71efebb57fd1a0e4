//! Threshold-free evaluation: ROC AUC, average precision, and the Wilcoxon
//! signed-rank test.
//!
//! Tie conventions: AUC gives half credit (Mann-Whitney form with average
//! ranks), AP groups tied scores at one threshold, Wilcoxon uses average
//! ranks over tied absolute differences. The exact Wilcoxon distribution is
//! enumerated for up to 12 effective pairs, beyond that a tie- and
//! continuity-corrected normal approximation is used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Effective sample size up to which the exact Wilcoxon null distribution is
/// used; 2^12 sign assignments enumerate instantly.
pub const WILCOXON_EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auc: f64,
    pub ap: f64,
    pub n_normal: usize,
    pub n_anomalous: usize,
}

/// Evaluates both ranking metrics at once.
pub fn evaluate(scores: &[f64], labels: &[bool]) -> Result<EvalResult> {
    Ok(EvalResult {
        auc: roc_auc(scores, labels)?,
        ap: average_precision(scores, labels)?,
        n_normal: labels.iter().filter(|l| !**l).count(),
        n_anomalous: labels.iter().filter(|l| **l).count(),
    })
}

fn check_two_classes(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(
            "both classes must be present to rank them".into(),
        ));
    }
    Ok((pos, neg))
}

/// ROC AUC as the Mann-Whitney statistic: the probability that an anomalous
/// sample outranks a normal one, ties counting half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_two_classes(scores, labels)?;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // average ranks over tied scores (1-based)
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let pos = pos as f64;
    let neg = neg as f64;
    Ok((rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// Average precision over descending-score thresholds, tied scores grouped
/// at a single threshold: `AP = sum_k (R_k - R_{k-1}) P_k`.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check_two_classes(scores, labels)?;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let total_pos = pos as f64;
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if labels[idx] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
        }
        let recall = tp / total_pos;
        let precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples.
///
/// Zero differences are dropped; if nothing remains the samples are
/// indistinguishable and `p = 1`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }

    // rank |d| with average ranks; scale by 2 so tied half-ranks stay integral
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut scaled_ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let scaled = (i + 1 + j + 1) as u64; // 2 * average rank
        for &idx in &order[i..=j] {
            scaled_ranks[idx] = scaled;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }

    let w_plus_scaled: u64 = diffs
        .iter()
        .zip(&scaled_ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    if n <= WILCOXON_EXACT_LIMIT {
        Ok(exact_two_sided_p(&scaled_ranks, w_plus_scaled))
    } else {
        Ok(normal_two_sided_p(n, w_plus_scaled, &tie_sizes))
    }
}

/// Exact null distribution of the (scaled) signed-rank sum via subset-sum
/// counting over all 2^n sign assignments.
fn exact_two_sided_p(scaled_ranks: &[u64], w_obs: u64) -> f64 {
    let total: u64 = scaled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    for &r in scaled_ranks {
        let r = r as usize;
        for w in (r..counts.len()).rev() {
            counts[w] += counts[w - r];
        }
    }
    let all: f64 = (1u64 << scaled_ranks.len()) as f64;
    let le: u64 = counts[..=w_obs as usize].iter().sum();
    let ge: u64 = counts[w_obs as usize..].iter().sum();
    let p = 2.0 * (le.min(ge) as f64) / all;
    p.min(1.0)
}

/// Normal approximation with tie correction and continuity correction.
fn normal_two_sided_p(n: usize, w_plus_scaled: u64, tie_sizes: &[usize]) -> f64 {
    let n = n as f64;
    let w_plus = w_plus_scaled as f64 / 2.0;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let diff = w_plus - mean;
    let z = (diff.abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    (2.0 * normal.cdf(-z)).min(1.0)
}
