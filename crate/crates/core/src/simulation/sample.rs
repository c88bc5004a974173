//! Sampling from a parameterized vine by inverse Rosenblatt transform.

use std::collections::HashMap;

use rand::Rng;

use crate::clamp_unit;
use crate::dependence::CopulaSample;
use crate::error::{Result, VineError};
use crate::families::CondVar;
use crate::model::VineModel;
use crate::structure::to_matrix;

/// Draw n i.i.d. observations from the vine.
///
/// Variables are generated in reverse diagonal order of the structure
/// matrix. Each variable starts from an independent uniform and descends
/// through its column's inverse h-functions, conditioning on cached
/// pseudo-observations of the previously generated variables; afterwards
/// the column's own pseudo-observations are pushed up the trees for use by
/// the remaining variables.
pub fn sample_from_vine<R: Rng + ?Sized>(
    vine: &VineModel,
    n: usize,
    rng: &mut R,
) -> Result<CopulaSample> {
    let d = vine.d();
    if n < 10 {
        return Err(VineError::DataDomain(format!(
            "sample size {n} below the minimum of 10"
        )));
    }
    let sm = to_matrix(&vine.structure)?;
    let uniforms: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| clamp_unit(rng.random())).collect())
        .collect();

    // Flat cell offsets: column j's tree-m cell sits at base[j] + m - 1.
    let mut base = vec![0usize; d];
    for j in 1..d {
        base[j] = base[j - 1] + (d - 1 - (j - 1));
    }

    // (variable, sorted conditioning set) -> pseudo-observation column
    let mut cache: HashMap<(usize, Vec<usize>), Vec<f64>> = HashMap::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); d];

    for j in (0..d).rev() {
        let v = sm.entries[j][j] - 1;
        let k = d - 1 - j; // number of edges in this column
        let mut q = uniforms[j].clone();

        // Partners bottom-up; the conditioning of tree m is the set of
        // partners of trees 1..m-1.
        let partners: Vec<usize> = (1..=k).map(|m| sm.entries[d - m][j] - 1).collect();
        let cond_at = |m: usize| -> Vec<usize> {
            let mut s: Vec<usize> = partners[..m - 1].to_vec();
            s.sort_unstable();
            s
        };

        // Descend: q becomes u_v by inverting the h-functions top-down.
        for m in (1..=k).rev() {
            let (t, e) = sm.cell_map[base[j] + m - 1];
            let cop = &vine.copulas[t][e];
            let edge = &vine.structure.trees()[t][e];
            let z = cache
                .get(&(partners[m - 1], cond_at(m)))
                .ok_or_else(|| VineError::Numeric("missing pseudo-observation".into()))?;
            let v_is_first = edge.conditioned.0 == v;
            for (qi, &zi) in q.iter_mut().zip(z) {
                *qi = if v_is_first {
                    cop.hinv(*qi, zi, CondVar::Second)?
                } else {
                    cop.hinv(*qi, zi, CondVar::First)?
                };
            }
        }
        cache.insert((v, vec![]), q.clone());
        columns[v] = q.clone();

        // Ascend: push the new variable's pseudo-observations up the column
        // and cache the partner side as well.
        let mut cur = q;
        for m in 1..=k {
            let (t, e) = sm.cell_map[base[j] + m - 1];
            let cop = &vine.copulas[t][e];
            let edge = &vine.structure.trees()[t][e];
            let z = cache
                .get(&(partners[m - 1], cond_at(m)))
                .expect("cached during descent")
                .clone();
            let v_is_first = edge.conditioned.0 == v;
            let mut keep_v = Vec::with_capacity(n);
            let mut keep_p = Vec::with_capacity(n);
            for (&ci, &zi) in cur.iter().zip(&z) {
                let (a, b) = if v_is_first { (ci, zi) } else { (zi, ci) };
                let hv = if v_is_first {
                    cop.hfunc(a, b, CondVar::Second)
                } else {
                    cop.hfunc(a, b, CondVar::First)
                };
                let hp = if v_is_first {
                    cop.hfunc(a, b, CondVar::First)
                } else {
                    cop.hfunc(a, b, CondVar::Second)
                };
                keep_v.push(clamp_unit(hv));
                keep_p.push(clamp_unit(hp));
            }
            let mut cond_v = cond_at(m);
            cond_v.push(partners[m - 1]);
            cond_v.sort_unstable();
            let mut cond_p = cond_at(m);
            cond_p.push(v);
            cond_p.sort_unstable();
            cache.insert((partners[m - 1], cond_p), keep_p);
            cur = keep_v.clone();
            cache.insert((v, cond_v), keep_v);
        }
    }

    let labels = (0..d).map(|i| format!("v{}", i + 1)).collect();
    CopulaSample::new(columns, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::kendall_tau;
    use crate::families::{BivariateCopula, Family, Rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn independence_vine_gives_uniform_independent_margins() {
        let vine = VineModel::independence(4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let s = sample_from_vine(&vine, 5000, &mut rng).unwrap();
        for j in 0..4 {
            let mut col = s.column(j).to_vec();
            col.sort_by(f64::total_cmp);
            let n = col.len() as f64;
            let mut ks: f64 = 0.0;
            for (i, &u) in col.iter().enumerate() {
                ks = ks
                    .max(((i + 1) as f64 / n - u).abs())
                    .max((u - i as f64 / n).abs());
            }
            // KS critical value at 1% for n=5000 is about 0.023.
            assert!(ks < 0.023, "column {j}: ks={ks}");
        }
        for a in 0..4 {
            for b in (a + 1)..4 {
                let t = kendall_tau(s.column(a), s.column(b)).unwrap();
                assert!(t.abs() < 0.03, "columns {a},{b}: tau={t}");
            }
        }
    }

    #[test]
    fn gaussian_vine_matches_implied_correlation_matrix() {
        // Path structure 1-2-3 with rho12 = 0.7, rho23 = 0.5 and partial
        // rho13;2 = 0.3: the implied rho13 has a closed form.
        use crate::structure::{EdgeSpec, VineStructure};
        let t1 = vec![
            EdgeSpec { conditioned: (0, 1), conditioning: vec![], node_a: 0, node_b: 1 },
            EdgeSpec { conditioned: (1, 2), conditioning: vec![], node_a: 1, node_b: 2 },
        ];
        let t2 = vec![EdgeSpec {
            conditioned: (0, 2),
            conditioning: vec![1],
            node_a: 0,
            node_b: 1,
        }];
        let structure = VineStructure::from_trees(3, vec![t1, t2]).unwrap();
        let g = |r: f64| BivariateCopula::new(Family::Gaussian, Rotation::Deg0, vec![r]).unwrap();
        let vine = VineModel::new(structure, vec![vec![g(0.7), g(0.5)], vec![g(0.3)]]).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let s = sample_from_vine(&vine, 10000, &mut rng).unwrap();
        // Compare sample correlations of the normal scores.
        let to_z = |col: &[f64]| -> Vec<f64> {
            col.iter().map(|&u| crate::numeric::norm_quantile(u)).collect()
        };
        let z: Vec<Vec<f64>> = (0..3).map(|j| to_z(s.column(j))).collect();
        let corr = |x: &[f64], y: &[f64]| {
            let n = x.len() as f64;
            let mx = x.iter().sum::<f64>() / n;
            let my = y.iter().sum::<f64>() / n;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            for (&a, &b) in x.iter().zip(y) {
                sxx += (a - mx) * (a - mx);
                syy += (b - my) * (b - my);
                sxy += (a - mx) * (b - my);
            }
            sxy / (sxx * syy).sqrt()
        };
        let rho13 = 0.3f64 * ((1.0 - 0.49f64) * (1.0 - 0.25f64)).sqrt() + 0.7 * 0.5;
        assert!((corr(&z[0], &z[1]) - 0.7).abs() < 0.05);
        assert!((corr(&z[1], &z[2]) - 0.5).abs() < 0.05);
        assert!((corr(&z[0], &z[2]) - rho13).abs() < 0.05);
    }

    #[test]
    fn margins_are_uniform_for_random_vines() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let cfg = crate::simulation::VineSpecConfig::default();
        let vine = crate::simulation::sample_vine_spec(5, &mut rng, &cfg).unwrap();
        let s = sample_from_vine(&vine, 4000, &mut rng).unwrap();
        for j in 0..5 {
            let m = s.column(j).iter().sum::<f64>() / 4000.0;
            assert!((m - 0.5).abs() < 0.03, "column {j} mean {m}");
        }
    }
}
