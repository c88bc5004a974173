//! Test of constant conditional correlation (CCC) for a conditional pair.
//!
//! The conditioning support is divided by a partition into L groups; under
//! the null the Pearson correlation of the pair is the same in every group.
//! With A the (L-1) x L first-difference matrix and Sigma-hat a diagonal
//! consistent estimator of the asymptotic covariance of the group
//! correlations, the statistic
//!
//!   n * T_n = n * (A R)' (A Sigma A')^{-1} (A R)
//!
//! is asymptotically chi-squared with L-1 degrees of freedom. Groups are
//! found by a greedy depth-2 decision tree splitting conditioning
//! coordinates at empirical quartiles, keeping the split that maximizes the
//! statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VineError};
use crate::numeric::chi2_sf;

/// Estimator of the asymptotic variance of a group's Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceEstimator {
    /// Fourth-moment delta-method variance; default, valid for non-normal
    /// copula data.
    MomentBased,
    /// Normal approximation (1 - rho^2)^2.
    NormalApprox,
}

#[derive(Debug, Clone, Copy)]
pub struct CccConfig {
    /// Smallest admissible group; `None` uses max(30, n/20).
    pub min_leaf: Option<usize>,
    pub variance: VarianceEstimator,
}

impl Default for CccConfig {
    fn default() -> Self {
        CccConfig {
            min_leaf: None,
            variance: VarianceEstimator::MomentBased,
        }
    }
}

impl CccConfig {
    pub fn min_leaf_for(&self, n: usize) -> usize {
        self.min_leaf.unwrap_or_else(|| 30.max(n / 20))
    }
}

/// Axis-aligned box constraints of one group: (coordinate, lo, hi] bounds.
pub type GroupBox = Vec<(usize, f64, f64)>;

/// A partition of the sample by axis-aligned boxes over the conditioning
/// coordinates, in leaf order.
#[derive(Debug, Clone)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
    pub boxes: Vec<GroupBox>,
}

impl Partition {
    pub fn l(&self) -> usize {
        self.groups.len()
    }

    fn single(n: usize) -> Partition {
        Partition {
            groups: vec![(0..n).collect()],
            boxes: vec![vec![]],
        }
    }
}

/// Outcome of a CCC test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CccResult {
    /// The statistic n * T_n.
    pub statistic: f64,
    /// Degrees of freedom L - 1 (0 for the untestable single-group case).
    pub df: usize,
    pub p_value: f64,
    pub group_correlations: Vec<f64>,
    pub group_sizes: Vec<usize>,
}

impl CccResult {
    fn untestable() -> CccResult {
        CccResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            group_correlations: vec![],
            group_sizes: vec![],
        }
    }

    /// Decision of the asymptotic beta-level test.
    pub fn rejects_at(&self, beta: f64) -> bool {
        self.p_value < beta
    }
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 1e-14 || syy <= 1e-14 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Delta-method asymptotic variance of the sample Pearson correlation from
/// central moments up to order four. For bivariate normal data this reduces
/// to (1 - rho^2)^2.
fn moment_variance(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut m20, mut m02, mut m11) = (0.0, 0.0, 0.0);
    let (mut m22, mut m31, mut m13, mut m40, mut m04) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        m20 += dx * dx;
        m02 += dy * dy;
        m11 += dx * dy;
        m22 += dx * dx * dy * dy;
        m31 += dx * dx * dx * dy;
        m13 += dx * dy * dy * dy;
        m40 += dx * dx * dx * dx;
        m04 += dy * dy * dy * dy;
    }
    m20 /= n;
    m02 /= n;
    m11 /= n;
    m22 /= n;
    m31 /= n;
    m13 /= n;
    m40 /= n;
    m04 /= n;
    if m20 <= 1e-14 || m02 <= 1e-14 {
        return None;
    }
    let rho2 = m11 * m11 / (m20 * m02);
    let v = m22 / (m20 * m02)
        + rho2 / 4.0 * (m40 / (m20 * m20) + m04 / (m02 * m02) + 2.0 * m22 / (m20 * m02))
        - m11 / (m20 * m02) * (m31 / m20 + m13 / m02);
    Some(v.max(1e-12))
}

/// The quadratic form n * (A r)' (A diag(sigma) A')^{-1} (A r) with A the
/// first-difference matrix; exposed so the arithmetic can be checked
/// directly against hand-computed values.
pub fn quadratic_form(r_hat: &[f64], sigma_diag: &[f64], n: usize) -> Result<f64> {
    let l = r_hat.len();
    if l != sigma_diag.len() {
        return Err(VineError::DimensionMismatch(
            "correlation and variance vectors differ in length".into(),
        ));
    }
    if l <= 1 {
        return Ok(0.0);
    }
    for (i, &s) in sigma_diag.iter().enumerate() {
        if !(s.is_finite() && s > 0.0) {
            return Err(VineError::Numeric(format!(
                "singular covariance: group {} has variance {s}",
                i + 1
            )));
        }
    }
    // s = A r; M = A diag A' is tridiagonal with M[i][i] = sig_i + sig_{i+1}
    // and off-diagonals -sig_{i+1}.
    let k = l - 1;
    let s: Vec<f64> = (0..k).map(|i| r_hat[i] - r_hat[i + 1]).collect();
    let mut diag: Vec<f64> = (0..k).map(|i| sigma_diag[i] + sigma_diag[i + 1]).collect();
    let off: Vec<f64> = (1..k).map(|i| -sigma_diag[i]).collect();
    let mut rhs = s.clone();
    // Thomas algorithm.
    for i in 1..k {
        if diag[i - 1].abs() < 1e-300 {
            return Err(VineError::Numeric("singular difference covariance".into()));
        }
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut z = vec![0.0; k];
    if diag[k - 1].abs() < 1e-300 {
        return Err(VineError::Numeric("singular difference covariance".into()));
    }
    z[k - 1] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        z[i] = (rhs[i] - off[i] * z[i + 1]) / diag[i];
    }
    let t: f64 = s.iter().zip(&z).map(|(a, b)| a * b).sum();
    Ok(n as f64 * t.max(0.0))
}

/// Per-group pieces of the statistic for a given partition.
fn group_stats(
    pair: (&[f64], &[f64]),
    partition: &Partition,
    cfg: &CccConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = pair.0.len();
    let mut r_hat = Vec::with_capacity(partition.l());
    let mut sigma = Vec::with_capacity(partition.l());
    for (gi, group) in partition.groups.iter().enumerate() {
        if group.len() < 4 {
            return Err(VineError::DataDomain(format!(
                "group {} has fewer than 4 observations",
                gi + 1
            )));
        }
        let x: Vec<f64> = group.iter().map(|&i| pair.0[i]).collect();
        let y: Vec<f64> = group.iter().map(|&i| pair.1[i]).collect();
        let rho = pearson(&x, &y).ok_or_else(|| {
            VineError::Numeric(format!("group {} is degenerate (zero variance)", gi + 1))
        })?;
        let v = match cfg.variance {
            VarianceEstimator::MomentBased => moment_variance(&x, &y).ok_or_else(|| {
                VineError::Numeric(format!("group {} is degenerate (zero variance)", gi + 1))
            })?,
            VarianceEstimator::NormalApprox => {
                let w = (1.0 - rho * rho).max(1e-6);
                w * w
            }
        };
        let pi = group.len() as f64 / n as f64;
        r_hat.push(rho);
        sigma.push(v / pi);
    }
    Ok((r_hat, sigma))
}

/// CCC statistic for a fixed partition: returns (n T_n, df, group
/// correlations, Sigma-hat diagonal).
pub fn ccc_statistic(
    pair: (&[f64], &[f64]),
    partition: &Partition,
    cfg: &CccConfig,
) -> Result<(f64, usize, Vec<f64>, Vec<f64>)> {
    if partition.l() <= 1 {
        return Ok((0.0, 0, vec![], vec![]));
    }
    let (r_hat, sigma) = group_stats(pair, partition, cfg)?;
    let nt = quadratic_form(&r_hat, &sigma, pair.0.len())?;
    Ok((nt, partition.l() - 1, r_hat, sigma))
}

struct SplitCandidate {
    coord: usize,
    threshold: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

/// One candidate split per coordinate, at the node's empirical median.
///
/// Keeping the split point deterministic is what preserves the chi-squared
/// calibration of the final statistic: with a single conditioning variable
/// the whole partition is then fixed in advance (medians of medians, i.e.
/// the quartiles), and only the choice among several conditioning
/// coordinates remains data-driven. A statistic maximized over many
/// candidate thresholds would be far above its nominal level.
fn candidate_splits(
    node: &[usize],
    conditioning: &[Vec<f64>],
    min_leaf: usize,
) -> Vec<SplitCandidate> {
    let mut out = Vec::new();
    for (coord, col) in conditioning.iter().enumerate() {
        let mut vals: Vec<f64> = node.iter().map(|&i| col[i]).collect();
        vals.sort_by(f64::total_cmp);
        let Ok(thr) = crate::numeric::empirical_quantile(&vals, 0.5) else {
            continue;
        };
        let left: Vec<usize> = node.iter().copied().filter(|&i| col[i] <= thr).collect();
        if left.len() < min_leaf || node.len() - left.len() < min_leaf {
            continue;
        }
        let right: Vec<usize> = node.iter().copied().filter(|&i| col[i] > thr).collect();
        out.push(SplitCandidate {
            coord,
            threshold: thr,
            left,
            right,
        });
    }
    out
}

/// Greedy depth-2 partition of the conditioning support: every node tries a
/// median split of each conditioning coordinate and keeps the one
/// maximizing the test statistic of the refined partition, giving quartile
/// boxes along the chosen coordinates. The result has 1 to 4 groups, each
/// of size >= min_leaf.
pub fn build_partition(
    conditioning: &[Vec<f64>],
    pair: (&[f64], &[f64]),
    cfg: &CccConfig,
) -> Partition {
    let n = pair.0.len();
    let min_leaf = cfg.min_leaf_for(n);
    let whole = Partition::single(n);
    if conditioning.is_empty() || n < 2 * min_leaf {
        return whole;
    }

    let eval = |groups: &[Vec<usize>]| -> Option<f64> {
        let p = Partition {
            groups: groups.to_vec(),
            boxes: vec![vec![]; groups.len()],
        };
        ccc_statistic(pair, &p, cfg).ok().map(|(nt, _, _, _)| nt)
    };

    let refine_box = |parent: &GroupBox, cand: &SplitCandidate| -> (GroupBox, GroupBox) {
        let mut left = parent.clone();
        let mut right = parent.clone();
        let mut found = false;
        for c in left.iter_mut() {
            if c.0 == cand.coord {
                c.2 = c.2.min(cand.threshold);
                found = true;
            }
        }
        if !found {
            left.push((cand.coord, f64::NEG_INFINITY, cand.threshold));
        }
        let mut found = false;
        for c in right.iter_mut() {
            if c.0 == cand.coord {
                c.1 = c.1.max(cand.threshold);
                found = true;
            }
        }
        if !found {
            right.push((cand.coord, cand.threshold, f64::INFINITY));
        }
        (left, right)
    };

    // Depth 1: split the root.
    let root: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, SplitCandidate)> = None;
    for cand in candidate_splits(&root, conditioning, min_leaf) {
        if let Some(stat) = eval(&[cand.left.clone(), cand.right.clone()]) {
            if best.as_ref().is_none_or(|(s, _)| stat > *s) {
                best = Some((stat, cand));
            }
        }
    }
    let Some((_, first)) = best else {
        return whole;
    };
    let (box_l, box_r) = refine_box(&vec![], &first);
    let mut partition = Partition {
        groups: vec![first.left, first.right],
        boxes: vec![box_l, box_r],
    };

    // Depth 2: try to split each current leaf in order.
    let mut leaf = 0;
    while leaf < partition.groups.len() && partition.groups.len() < 4 {
        let node = partition.groups[leaf].clone();
        let mut best: Option<(f64, SplitCandidate)> = None;
        for cand in candidate_splits(&node, conditioning, min_leaf) {
            let mut trial: Vec<Vec<usize>> = Vec::with_capacity(partition.groups.len() + 1);
            for (gi, g) in partition.groups.iter().enumerate() {
                if gi == leaf {
                    trial.push(cand.left.clone());
                    trial.push(cand.right.clone());
                } else {
                    trial.push(g.clone());
                }
            }
            if let Some(stat) = eval(&trial) {
                if best.as_ref().is_none_or(|(s, _)| stat > *s) {
                    best = Some((stat, cand));
                }
            }
        }
        if let Some((_, cand)) = best {
            let (bl, br) = refine_box(&partition.boxes[leaf], &cand);
            partition.groups.splice(leaf..=leaf, [cand.left, cand.right]);
            partition.boxes.splice(leaf..=leaf, [bl, br]);
            leaf += 2;
        } else {
            leaf += 1;
        }
    }
    partition
}

/// Full CCC test: partition the conditioning support, evaluate the
/// statistic and the chi-squared p-value.
pub fn ccc_test(
    u_left: &[f64],
    u_right: &[f64],
    conditioning: &[Vec<f64>],
    cfg: &CccConfig,
) -> Result<CccResult> {
    let n = u_left.len();
    if u_right.len() != n {
        return Err(VineError::DimensionMismatch(format!(
            "pair columns {} vs {}",
            n,
            u_right.len()
        )));
    }
    for (c, col) in conditioning.iter().enumerate() {
        if col.len() != n {
            return Err(VineError::DimensionMismatch(format!(
                "conditioning column {c} has {} rows, expected {n}",
                col.len()
            )));
        }
    }
    let partition = build_partition(conditioning, (u_left, u_right), cfg);
    if partition.l() <= 1 {
        return Ok(CccResult::untestable());
    }
    let (nt, df, r_hat, _) = ccc_statistic((u_left, u_right), &partition, cfg)?;
    Ok(CccResult {
        statistic: nt,
        df,
        p_value: chi2_sf(nt, df as f64),
        group_correlations: r_hat,
        group_sizes: partition.groups.iter().map(Vec::len).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hand_computed_quadratic_form() {
        // L=2, R=(0.6, 0.2), Sigma=diag(1,1), n=100:
        // A R = 0.4, A Sigma A' = 2, n T = 100 * 0.16 / 2 = 8.
        let nt = quadratic_form(&[0.6, 0.2], &[1.0, 1.0], 100).unwrap();
        assert!((nt - 8.0).abs() < 1e-12);
        assert!((chi2_sf(nt, 1.0) - 0.004677).abs() < 1e-5);
    }

    #[test]
    fn equal_correlations_give_zero_statistic() {
        let nt = quadratic_form(&[0.37, 0.37], &[0.8, 1.3], 500).unwrap();
        assert_eq!(nt, 0.0);
    }

    #[test]
    fn three_group_quadratic_form_against_dense_solve() {
        // Cross-check the tridiagonal solve against an explicit 2x2 inverse.
        let r = [0.5, 0.1, 0.3];
        let s = [1.2, 0.7, 2.1];
        let nt = quadratic_form(&r, &s, 50).unwrap();
        let s1 = r[0] - r[1];
        let s2 = r[1] - r[2];
        let a = s[0] + s[1];
        let b = -s[1];
        let c = s[1] + s[2];
        let det = a * c - b * b;
        let t = (c * s1 * s1 - 2.0 * b * s1 * s2 + a * s2 * s2) / det;
        assert!((nt - 50.0 * t).abs() < 1e-10);
    }

    #[test]
    fn variance_reduces_to_normal_form_on_gaussian_data() {
        let mut rng = StdRng::seed_from_u64(5);
        let rho = 0.6f64;
        let n = 200_000;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let z1: f64 = sample_normal(&mut rng);
            let z2: f64 = sample_normal(&mut rng);
            x.push(z1);
            y.push(rho * z1 + (1.0 - rho * rho).sqrt() * z2);
        }
        let v = moment_variance(&x, &y).unwrap();
        let expect = (1.0 - rho * rho) * (1.0 - rho * rho);
        assert!((v - expect).abs() < 0.02, "v={v} expect={expect}");
    }

    fn sample_normal(rng: &mut StdRng) -> f64 {
        crate::numeric::norm_quantile(rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12))
    }

    #[test]
    fn constant_conditioning_yields_single_group() {
        let n = 400;
        let cond = vec![vec![0.5; n]];
        let mut rng = StdRng::seed_from_u64(1);
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let p = build_partition(&cond, (&x, &y), &CccConfig::default());
        assert_eq!(p.l(), 1);
        let res = ccc_test(&x, &y, &cond, &CccConfig::default()).unwrap();
        assert_eq!(res.p_value, 1.0);
        assert_eq!(res.df, 0);
    }

    #[test]
    fn single_smooth_coordinate_gives_four_interval_groups() {
        let n = 1000;
        let mut rng = StdRng::seed_from_u64(2);
        let cond: Vec<Vec<f64>> = vec![(0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()];
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let p = build_partition(&cond, (&x, &y), &CccConfig::default());
        assert_eq!(p.l(), 4);
        // Leaves are intervals of the single coordinate in ascending order.
        for (g, window) in p.groups.iter().zip(p.boxes.windows(2)) {
            assert!(g.len() >= 50);
            let hi_prev = window[0].iter().find(|c| c.0 == 0).unwrap().2;
            let lo_next = window[1].iter().find(|c| c.0 == 0).unwrap().1;
            assert!(hi_prev <= lo_next + 1e-12);
        }
    }

    #[test]
    fn planted_shift_on_second_coordinate_is_found() {
        // Correlation flips with coordinate 2; the first split should be on
        // that coordinate in the clear majority of replications.
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = StdRng::seed_from_u64(100 + seed);
            let n = 1000;
            let mut c1 = Vec::with_capacity(n);
            let mut c2 = Vec::with_capacity(n);
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                let rho = if u2 <= 0.5 { -0.6 } else { 0.6 };
                let z1 = sample_normal(&mut rng);
                let z2 = sample_normal(&mut rng);
                c1.push(u1);
                c2.push(u2);
                x.push(z1);
                y.push(rho * z1 + (1.0 - rho * rho).sqrt() * z2);
            }
            let p = build_partition(&[c1, c2], (&x, &y), &CccConfig::default());
            if p.boxes[0].iter().any(|c| c.0 == 1) {
                hits += 1;
            }
        }
        assert!(hits >= 16, "first split found the shifted coordinate {hits}/20");
    }

    #[test]
    fn p_value_monotone_in_statistic() {
        let mut prev = 1.0;
        for nt in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let p = chi2_sf(nt, 3.0);
            assert!(p <= prev + 1e-15);
            prev = p;
        }
    }
}
