//! Local outlier factor on one-dimensional data.
//!
//! Neighbourhoods follow Breunig et al.: the k-distance neighbourhood of a
//! point contains every other point no farther than its k-th nearest
//! neighbour, so ties can make it larger than `k`. Duplicate values give a
//! zero reachability sum and an infinite local reachability density; ratios
//! between two infinite densities count as 1, which makes a block of
//! identical values score exactly 1.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LofSettings {
    /// Neighbour count (MinPts).
    pub k: usize,
    /// Points scoring above this are outliers.
    pub threshold: f64,
}

impl Default for LofSettings {
    fn default() -> Self {
        LofSettings { k: 20, threshold: 1.5 }
    }
}

/// Scores plus the retained/outlier partition of the input (as input indices).
#[derive(Debug, Clone, PartialEq)]
pub struct LofResult {
    /// One score per input value; empty when scoring was skipped.
    pub scores: Vec<f64>,
    pub retained: Vec<usize>,
    pub outliers: Vec<usize>,
    pub skipped: bool,
}

/// Scores `values` and splits them at `settings.threshold`.
///
/// With `values.len() <= k` nothing is scored and everything is retained.
pub fn lof_scores(values: &[f64], settings: &LofSettings) -> LofResult {
    if values.len() <= settings.k || settings.k == 0 {
        log::warn!(
            "LOF skipped: {} values with k = {}; all values retained",
            values.len(),
            settings.k
        );
        return LofResult {
            scores: Vec::new(),
            retained: (0..values.len()).collect(),
            outliers: Vec::new(),
            skipped: true,
        };
    }
    let scores = local_outlier_factors(values, settings.k);
    let (outliers, retained): (Vec<usize>, Vec<usize>) =
        (0..values.len()).partition(|&i| scores[i] > settings.threshold);
    LofResult {
        scores,
        retained,
        outliers,
        skipped: false,
    }
}

/// LOF score of every value. Requires `values.len() > k >= 1`.
pub fn local_outlier_factors(values: &[f64], k: usize) -> Vec<f64> {
    assert!(k >= 1 && values.len() > k, "LOF needs more than k values");
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut uniques: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in sorted {
        if uniques.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1;
        } else {
            uniques.push(v);
            counts.push(1);
        }
    }
    let m = uniques.len();

    // k-distance and neighbourhood range (over unique values) of each unique value
    let mut kdist = vec![0.0; m];
    let mut range = vec![(0usize, 0usize); m];
    for j in 0..m {
        let mut have = counts[j] - 1;
        let mut kd = 0.0;
        let (mut l, mut r) = (j, j);
        while have < k {
            let dl = if l > 0 { uniques[j] - uniques[l - 1] } else { f64::INFINITY };
            let dr = if r + 1 < m { uniques[r + 1] - uniques[j] } else { f64::INFINITY };
            if dl <= dr {
                l -= 1;
                have += counts[l];
                kd = dl;
            } else {
                r += 1;
                have += counts[r];
                kd = dr;
            }
        }
        while l > 0 && uniques[j] - uniques[l - 1] <= kd {
            l -= 1;
        }
        while r + 1 < m && uniques[r + 1] - uniques[j] <= kd {
            r += 1;
        }
        kdist[j] = kd;
        range[j] = (l, r);
    }

    let others = |j: usize, l: usize| if l == j { counts[l] - 1 } else { counts[l] };

    let mut lrd = vec![0.0; m];
    for j in 0..m {
        let (lo, hi) = range[j];
        let mut size = 0usize;
        let mut reach = 0.0;
        for l in lo..=hi {
            let c = others(j, l);
            size += c;
            reach += c as f64 * kdist[l].max((uniques[l] - uniques[j]).abs());
        }
        lrd[j] = if reach == 0.0 { f64::INFINITY } else { size as f64 / reach };
    }

    let mut lof = vec![0.0; m];
    for j in 0..m {
        let (lo, hi) = range[j];
        let mut size = 0usize;
        let mut sum = 0.0;
        for l in lo..=hi {
            let c = others(j, l);
            size += c;
            sum += c as f64 * density_ratio(lrd[l], lrd[j]);
        }
        lof[j] = sum / size as f64;
    }

    values
        .iter()
        .map(|v| {
            let j = uniques.partition_point(|u| u < v);
            lof[j]
        })
        .collect()
}

/// `neighbour / own` with the infinite-density conventions.
pub(crate) fn density_ratio(neighbour: f64, own: f64) -> f64 {
    match (neighbour.is_infinite(), own.is_infinite()) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        (false, true) => 0.0,
        (false, false) => neighbour / own,
    }
}
