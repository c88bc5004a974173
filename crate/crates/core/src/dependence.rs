//! Rank-based dependence estimation and copula-scale transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VineError};
use crate::numeric::average_ranks;

/// An n x d sample on the copula scale, stored column-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CopulaSample {
    columns: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl CopulaSample {
    pub fn new(columns: Vec<Vec<f64>>, labels: Vec<String>) -> Result<CopulaSample> {
        if columns.len() < 2 {
            return Err(VineError::DataDomain(format!(
                "need at least 2 columns, got {}",
                columns.len()
            )));
        }
        if labels.len() != columns.len() {
            return Err(VineError::DimensionMismatch(format!(
                "{} labels for {} columns",
                labels.len(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        if n < 10 {
            return Err(VineError::DataDomain(format!(
                "need at least 10 observations, got {n}"
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(VineError::DimensionMismatch(format!(
                    "column {j} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                return Err(VineError::DataDomain(format!(
                    "column {:?} contains values outside (0, 1); \
                     raw data needs the rank transform first",
                    labels[j]
                )));
            }
        }
        Ok(CopulaSample { columns, labels })
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Rank transform of one column: rank / (n + 1) with average ranks on ties.
pub fn rank_transform_column(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(VineError::DataDomain("rank transform needs n >= 2".into()));
    }
    let first = raw[0];
    if raw.iter().all(|&x| x == first) {
        return Err(VineError::DataDomain("constant column".into()));
    }
    let n1 = raw.len() as f64 + 1.0;
    Ok(average_ranks(raw).into_iter().map(|r| r / n1).collect())
}

/// Column-wise empirical probability integral transform of raw data.
pub fn to_copula_scale(raw_columns: &[Vec<f64>], labels: Vec<String>) -> Result<CopulaSample> {
    let transformed = raw_columns
        .iter()
        .map(|c| rank_transform_column(c))
        .collect::<Result<Vec<_>>>()?;
    CopulaSample::new(transformed, labels)
}

/// Tie-corrected (tau-b) Kendall rank correlation in O(n log n).
///
/// Agrees exactly with the O(n^2) pair-count definition: after sorting
/// lexicographically by (x, y), discordant pairs are precisely the strict
/// inversions of the y sequence, which a merge sort counts.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(VineError::DimensionMismatch(format!(
            "kendall inputs {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(VineError::DataDomain("kendall tau needs n >= 2".into()));
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    // Tie counts: n1 over x groups, n2 over y groups, n3 over joint groups.
    let pairs = |t: u64| t * (t - 1) / 2;
    let mut n1 = 0u64;
    let mut n3 = 0u64;
    {
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
                j += 1;
            }
            n1 += pairs((j - i + 1) as u64);
            // joint ties inside the x group
            let mut k = i;
            while k <= j {
                let mut m = k;
                while m < j && y[idx[m + 1]] == y[idx[k]] {
                    m += 1;
                }
                n3 += pairs((m - k + 1) as u64);
                k = m + 1;
            }
            i = j + 1;
        }
    }
    let mut y_sorted: Vec<f64> = y.to_vec();
    y_sorted.sort_by(f64::total_cmp);
    let mut n2 = 0u64;
    {
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && y_sorted[j + 1] == y_sorted[i] {
                j += 1;
            }
            n2 += pairs((j - i + 1) as u64);
            i = j + 1;
        }
    }

    let n0 = pairs(n as u64);
    if n1 == n0 || n2 == n0 {
        return Err(VineError::DataDomain(
            "kendall tau undefined for a constant column".into(),
        ));
    }

    let mut seq: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count_inversions(&mut seq, &mut buf);

    let num = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * discordant as f64;
    let den = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((num / den).clamp(-1.0, 1.0))
}

/// Bottom-up merge sort counting strict inversions (a[i] > a[j], i < j).
fn merge_count_inversions(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    let mut count = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (lo + 2 * width).min(n);
            // merge a[lo..mid] and a[mid..hi]
            buf[lo..hi].copy_from_slice(&a[lo..hi]);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if buf[i] <= buf[j] {
                    a[k] = buf[i];
                    i += 1;
                } else {
                    a[k] = buf[j];
                    j += 1;
                    count += (mid - i) as u64;
                }
                k += 1;
            }
            while i < mid {
                a[k] = buf[i];
                i += 1;
                k += 1;
            }
            while j < hi {
                a[k] = buf[j];
                j += 1;
                k += 1;
            }
            lo += 2 * width;
        }
        width *= 2;
    }
    count
}

/// Quadratic-time pair count; the independent oracle for `kendall_tau`.
pub fn kendall_tau_brute(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(VineError::DataDomain("invalid inputs".into()));
    }
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if dx * dy > 0.0 {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let denom1 = (conc + disc + tx) as f64;
    let denom2 = (conc + disc + ty) as f64;
    if denom1 == 0.0 || denom2 == 0.0 {
        return Err(VineError::DataDomain("constant column".into()));
    }
    Ok((conc - disc) as f64 / (denom1 * denom2).sqrt())
}
