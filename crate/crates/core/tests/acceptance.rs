//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured quantities (run with --nocapture to see
//! them). Tolerances are pinned in the constants below.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use vinegrow_core::ccc::{ccc_test, CccConfig};
use vinegrow_core::dependence::{kendall_tau, kendall_tau_brute};
use vinegrow_core::families::{
    select_family, tau_range, tau_to_param, param_to_tau, BivariateCopula, CondVar, Family,
    Rotation,
};
use vinegrow_core::model::VineModel;
use vinegrow_core::numeric::{integrate_gl64, norm_cdf, norm_quantile};
use vinegrow_core::selection::{aic_from, select, Method, SelectionConfig};
use vinegrow_core::simulation::{
    alpha_sweep, run_study, sample_from_vine, sample_vine_spec, StudyScenario, VineSpecConfig,
};
use vinegrow_core::structure::{
    count_structures, max_spanning_tree, pseudo_obs_update, to_matrix, EdgeSpec, StructureKind,
    VineStructure, WeightedEdge,
};

#[test]
fn criterion_1_structure_counts() {
    let t0 = Instant::now();
    let cases: [(usize, StructureKind, u128); 5] = [
        (3, StructureKind::RVine, 3),
        (5, StructureKind::RVine, 480),
        (10, StructureKind::RVine, 487_049_291_366_400),
        (5, StructureKind::CVine, 60),
        (3, StructureKind::NaturalOrderMatrices, 1),
    ];
    for (d, kind, expect) in cases {
        let got = count_structures(d, kind).unwrap();
        assert_eq!(got.to_string(), expect.to_string(), "d={d} {kind:?}");
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "counting took {elapsed:?}");
    println!("criterion 1 PASS: all five structure counts exact in {elapsed:?}");
}

#[test]
fn criterion_2_aic_arithmetic() {
    let a1 = aic_from(434.9, 6);
    let a2 = aic_from(428.8, 6);
    assert!((a1 - (-857.8)).abs() < 1e-9, "{a1}");
    assert!((a2 - (-845.6)).abs() < 1e-9, "{a2}");
    println!("criterion 2 PASS: AIC(434.9, 6) = {a1}, AIC(428.8, 6) = {a2}");
}

#[test]
fn criterion_3_d3_structural_identity() {
    let t0 = Instant::now();
    let total = 100;
    let matches: usize = (0..total)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(31_000 + seed as u64);
            let vine = sample_vine_spec(3, &mut rng, &VineSpecConfig::default()).unwrap();
            let data = sample_from_vine(&vine, 500, &mut rng).unwrap();
            let dissmann =
                select(&data, &SelectionConfig::with_method(Method::Dissmann)).unwrap();
            let alg1 = select(&data, &SelectionConfig::with_method(Method::Alg1)).unwrap();
            let same = to_matrix(&dissmann.model.structure).unwrap().entries
                == to_matrix(&alg1.model.structure).unwrap().entries;
            same as usize
        })
        .sum();
    let elapsed = t0.elapsed();
    assert_eq!(matches, total, "structures agreed on {matches}/{total}");
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!("criterion 3 PASS: identical structures {matches}/{total} in {elapsed:?}");
}

#[test]
fn criterion_4_win_rate_study() {
    let t0 = Instant::now();

    let mut d5 = StudyScenario::new(5, 1000, 200, vec![Method::Dissmann, Method::Alg2]);
    d5.master_seed = 42;
    let report5 = run_study(&d5).unwrap();
    assert!(report5.failed.is_empty(), "failed reps: {:?}", report5.failed);
    let a5 = report5.summary_for(Method::Alg2).unwrap();
    assert!(
        (55.0..=90.0).contains(&a5.better_or_equal_pct),
        "d=5 better-or-equal {:.1}%",
        a5.better_or_equal_pct
    );

    let mut d10 = StudyScenario::new(10, 400, 100, vec![Method::Dissmann, Method::Alg2]);
    d10.master_seed = 43;
    let report10 = run_study(&d10).unwrap();
    assert!(report10.failed.is_empty(), "failed reps: {:?}", report10.failed);
    let a10 = report10.summary_for(Method::Alg2).unwrap();
    assert!(
        a10.better_or_equal_pct >= 65.0,
        "d=10 better-or-equal {:.1}%",
        a10.better_or_equal_pct
    );
    assert!(
        a10.mean_aic_diff_per_obs > 0.0,
        "d=10 mean AIC difference per observation {:.4}",
        a10.mean_aic_diff_per_obs
    );
    let p = a10.diff_p_one_sided.expect("t-test defined");
    assert!(p < 0.01, "one-sided t-test p = {p:.2e}");

    let elapsed = t0.elapsed();
    assert!(
        elapsed.as_secs_f64() < 45.0 * 60.0,
        "study took {elapsed:?}"
    );
    println!(
        "criterion 4 PASS: d=5 alg2 better-or-equal {:.1}% (band 55-90); \
         d=10 better-or-equal {:.1}% (>= 65), mean diff/obs {:+.3}, t-test p {:.2e}; \
         runtime {elapsed:?}",
        a5.better_or_equal_pct, a10.better_or_equal_pct, a10.mean_aic_diff_per_obs, p
    );
}

/// The unique three-dimensional structure with star root 0, as a reusable
/// simplified Gaussian data generator.
fn gaussian_vine_3d(r1: f64, r2: f64, r3: f64) -> VineModel {
    let g = |r: f64| BivariateCopula::new(Family::Gaussian, Rotation::Deg0, vec![r]).unwrap();
    let t1 = vec![
        EdgeSpec { conditioned: (0, 1), conditioning: vec![], node_a: 0, node_b: 1 },
        EdgeSpec { conditioned: (0, 2), conditioning: vec![], node_a: 0, node_b: 2 },
    ];
    let t2 = vec![EdgeSpec { conditioned: (1, 2), conditioning: vec![0], node_a: 0, node_b: 1 }];
    let s = VineStructure::from_trees(3, vec![t1, t2]).unwrap();
    VineModel::new(s, vec![vec![g(r1), g(r2)], vec![g(r3)]]).unwrap()
}

#[test]
fn criterion_5_ccc_size_calibration() {
    let n = 1000;
    let reps = 500usize;
    let p_values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha12Rng::seed_from_u64(51_000);
            rng.set_stream(rep as u64);
            let r1 = 0.3 + 0.5 * rng.random::<f64>();
            let r2 = 0.3 + 0.5 * rng.random::<f64>();
            let r3 = 0.1 + 0.4 * rng.random::<f64>();
            let vine = gaussian_vine_3d(r1, r2, r3);
            let data = sample_from_vine(&vine, n, &mut rng).unwrap();
            // Mirror the selection pipeline: fit the first-tree copulas,
            // propagate pseudo-observations, test the conditional pair.
            let f1 = select_family(data.column(0), data.column(1), &[Family::Gaussian], false, 0.05)
                .unwrap();
            let f2 = select_family(data.column(0), data.column(2), &[Family::Gaussian], false, 0.05)
                .unwrap();
            let (u1, _) = pseudo_obs_update(&f1.copula, data.column(1), data.column(0)).unwrap();
            let (u2, _) = pseudo_obs_update(&f2.copula, data.column(2), data.column(0)).unwrap();
            let cond = vec![data.column(0).to_vec()];
            ccc_test(&u1, &u2, &cond, &CccConfig::default()).unwrap().p_value
        })
        .collect();

    let rejection = p_values.iter().filter(|&&p| p < 0.05).count() as f64 / reps as f64;
    assert!(
        (0.025..=0.085).contains(&rejection),
        "rejection rate {rejection:.4}"
    );
    let mut sorted = p_values;
    sorted.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &p) in sorted.iter().enumerate() {
        ks = ks
            .max(((i + 1) as f64 / reps as f64 - p).abs())
            .max((p - i as f64 / reps as f64).abs());
    }
    assert!(ks < 0.1, "KS distance to uniform {ks:.4}");
    println!(
        "criterion 5 PASS: rejection rate {rejection:.3} (band 0.025-0.085), KS {ks:.3} (< 0.1)"
    );
}

#[test]
fn criterion_6_ccc_power() {
    let n = 1000;
    let reps = 200usize;
    let rejections: usize = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha12Rng::seed_from_u64(61_000);
            rng.set_stream(rep as u64);
            let mut u1 = Vec::with_capacity(n);
            let mut u2 = Vec::with_capacity(n);
            let mut u3 = Vec::with_capacity(n);
            for _ in 0..n {
                // Conditional correlation of the pair varies linearly in the
                // conditioning variable: rho(u2) = 0.8 (2 u2 - 1).
                let w: f64 = rng.random();
                let rho = 0.8 * (2.0 * w - 1.0);
                let z1 = norm_quantile(rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12));
                let e = norm_quantile(rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12));
                let z3 = rho * z1 + (1.0 - rho * rho).sqrt() * e;
                u2.push(w);
                u1.push(norm_cdf(z1));
                u3.push(norm_cdf(z3));
            }
            let f1 = select_family(&u1, &u2, &[Family::Gaussian], false, 0.05).unwrap();
            let f2 = select_family(&u3, &u2, &[Family::Gaussian], false, 0.05).unwrap();
            let (p1, _) = pseudo_obs_update(&f1.copula, &u1, &u2).unwrap();
            let (p3, _) = pseudo_obs_update(&f2.copula, &u3, &u2).unwrap();
            let res = ccc_test(&p1, &p3, &[u2.clone()], &CccConfig::default()).unwrap();
            (res.p_value < 0.05) as usize
        })
        .sum();
    let power = rejections as f64 / reps as f64;
    assert!(power >= 0.75, "power {power:.3}");
    println!("criterion 6 PASS: power {power:.3} (>= 0.75)");
}

#[test]
fn criterion_7_alpha_sweep_u_shape() {
    let t0 = Instant::now();
    let mut scenario = StudyScenario::new(5, 1000, 100, vec![Method::Alg2]);
    scenario.master_seed = 4242;
    let points = alpha_sweep(&scenario, &[0.0, 0.6, 1.0]).unwrap();
    let at = |a: f64| points.iter().find(|(x, _)| *x == a).unwrap().1;
    let (a0, a06, a1) = (at(0.0), at(0.6), at(1.0));
    assert!(a06 < a0, "mean AIC at 0.6 ({a06:.1}) vs 0.0 ({a0:.1})");
    assert!(a06 < a1, "mean AIC at 0.6 ({a06:.1}) vs 1.0 ({a1:.1})");
    println!(
        "criterion 7 PASS: mean alg2 AIC {a0:.1} (alpha 0) > {a06:.1} (alpha 0.6) < {a1:.1} \
         (alpha 1) in {:?}",
        t0.elapsed()
    );
}

#[test]
fn criterion_8_fast_variant() {
    let mut scenario = StudyScenario::new(5, 1000, 50, vec![Method::Alg2, Method::Alg2Fast]);
    scenario.master_seed = 8484;
    let report = run_study(&scenario).unwrap();
    assert!(report.failed.is_empty());
    let full = report.summary_for(Method::Alg2).unwrap();
    let fast = report.summary_for(Method::Alg2Fast).unwrap();
    let time_ratio = fast.mean_seconds / full.mean_seconds;
    let aic_gap = (fast.mean_aic - full.mean_aic).abs() / full.mean_aic.abs();
    assert!(time_ratio <= 0.60, "time ratio {time_ratio:.3}");
    assert!(aic_gap <= 0.05, "mean AIC gap {aic_gap:.4}");
    println!(
        "criterion 8 PASS: alg2-fast wall-clock ratio {time_ratio:.2} (<= 0.60), \
         mean AIC within {:.2}% (<= 5%)",
        aic_gap * 100.0
    );
}

fn test_copulas() -> Vec<BivariateCopula> {
    let mut out = vec![
        BivariateCopula::independence(),
        BivariateCopula::new(Family::Gaussian, Rotation::Deg0, vec![0.5]).unwrap(),
        BivariateCopula::new(Family::Gaussian, Rotation::Deg0, vec![-0.85]).unwrap(),
        BivariateCopula::new(Family::StudentT, Rotation::Deg0, vec![0.45, 4.0]).unwrap(),
        BivariateCopula::new(Family::StudentT, Rotation::Deg0, vec![-0.3, 8.0]).unwrap(),
        BivariateCopula::new(Family::Frank, Rotation::Deg0, vec![5.0]).unwrap(),
        BivariateCopula::new(Family::Frank, Rotation::Deg0, vec![-18.67]).unwrap(),
    ];
    for rot in [Rotation::Deg0, Rotation::Deg90, Rotation::Deg180, Rotation::Deg270] {
        out.push(BivariateCopula::new(Family::Clayton, rot, vec![2.0]).unwrap());
        out.push(BivariateCopula::new(Family::Gumbel, rot, vec![1.9]).unwrap());
        out.push(BivariateCopula::new(Family::Joe, rot, vec![2.4]).unwrap());
    }
    out
}

#[test]
fn criterion_9_numeric_invariant_suite() {
    // tau <-> parameter roundtrip across the attainable grid.
    for family in Family::PARAMETRIC {
        let (lo, hi) = tau_range(family);
        for k in -9..=9i32 {
            let tau = k as f64 / 10.0;
            if tau <= lo || tau >= hi || tau.abs() < 1e-12 {
                continue;
            }
            let p = tau_to_param(family, tau).unwrap();
            let back = param_to_tau(family, p).unwrap();
            assert!((back - tau).abs() <= 1e-8, "{family:?} tau {tau}: back {back}");
        }
    }

    // h-function against an independent oracle: central finite differences
    // of the closed-form CDF for the Archimedean families, quadrature of
    // the density for Gaussian/Student-t (whose CDF has no closed form).
    let grid = [0.15, 0.4, 0.65, 0.9];
    for cop in test_copulas() {
        let closed_form_cdf = !matches!(cop.family(), Family::Gaussian | Family::StudentT);
        for &u in &grid {
            for &v in &grid {
                let h = cop.hfunc(u, v, CondVar::Second);
                let oracle = if closed_form_cdf {
                    let delta = 1e-5;
                    (cop.cdf(u, v + delta) - cop.cdf(u, v - delta)) / (2.0 * delta)
                } else {
                    integrate_gl64(|s| cop.pdf(s, v), 0.0, u)
                };
                assert!(
                    (h - oracle).abs() <= 1e-4,
                    "{:?} rot {:?} at ({u}, {v}): h {h} vs oracle {oracle}",
                    cop.family(),
                    cop.rotation()
                );
            }
        }
    }

    // hinv is the inverse of hfunc to 1e-8 on 1000 random triples.
    let mut rng = ChaCha12Rng::seed_from_u64(91_000);
    let copulas = test_copulas();
    for _ in 0..1000 {
        let cop = &copulas[rng.random_range(0..copulas.len())];
        let u: f64 = 0.001 + 0.998 * rng.random::<f64>();
        let w: f64 = 0.001 + 0.998 * rng.random::<f64>();
        let cond = if rng.random::<bool>() { CondVar::Second } else { CondVar::First };
        let p = match cond {
            CondVar::Second => cop.hfunc(u, w, cond),
            CondVar::First => cop.hfunc(w, u, cond),
        };
        let back = cop.hinv(p, w, cond).unwrap();
        assert!(
            (back - u).abs() <= 1e-8,
            "{:?} rot {:?} cond {cond:?}: u {u} back {back}",
            cop.family(),
            cop.rotation()
        );
    }

    // Density mass on a 200x200 midpoint grid.
    for cop in test_copulas() {
        let m = 200;
        let mut mass = 0.0;
        for i in 0..m {
            let u = (i as f64 + 0.5) / m as f64;
            for j in 0..m {
                let v = (j as f64 + 0.5) / m as f64;
                mass += cop.pdf(u, v);
            }
        }
        mass /= (m * m) as f64;
        assert!(
            (0.995..=1.005).contains(&mass),
            "{:?} rot {:?}: mass {mass}",
            cop.family(),
            cop.rotation()
        );
    }

    // Kendall tau merge-count equals the quadratic pair count on 50 inputs.
    for trial in 0..50 {
        let mut rng = ChaCha12Rng::seed_from_u64(92_000 + trial);
        let n = 30 + (trial as usize % 5) * 57;
        let with_ties = trial % 2 == 0;
        let gen = |rng: &mut ChaCha12Rng| -> f64 {
            let x: f64 = rng.random();
            if with_ties {
                (x * 12.0).round()
            } else {
                x
            }
        };
        let x: Vec<f64> = (0..n).map(|_| gen(&mut rng)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| 0.3 * xi + 0.7 * gen(&mut rng))
            .collect();
        let fast = kendall_tau(&x, &y).unwrap();
        let brute = kendall_tau_brute(&x, &y).unwrap();
        assert!((fast - brute).abs() < 1e-12, "trial {trial}: {fast} vs {brute}");
    }

    // Maximum spanning tree equals exhaustive enumeration on small graphs.
    for trial in 0..20 {
        let mut rng = ChaCha12Rng::seed_from_u64(93_000 + trial);
        let n = 5 + (trial as usize % 2);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                edges.push(WeightedEdge::new(a, b, rng.random::<f64>()));
            }
        }
        let chosen = max_spanning_tree(n, &edges).unwrap();
        let got: f64 = chosen.iter().map(|&i| edges[i].weight).sum();
        let best = exhaustive_best_tree(n, &edges);
        assert!((got - best).abs() < 1e-12, "trial {trial}: {got} vs {best}");
    }

    println!(
        "criterion 9 PASS: tau roundtrips <= 1e-8, h vs finite-difference/quadrature <= 1e-4, \
         hinv o h <= 1e-8 on 1000 triples, density mass within [0.995, 1.005], \
         kendall fast == brute on 50 inputs, MST == exhaustive on 20 graphs"
    );
}

/// Enumerate every (n-1)-subset of edges and keep the best spanning tree.
fn exhaustive_best_tree(n: usize, edges: &[WeightedEdge]) -> f64 {
    let m = edges.len();
    let k = n - 1;
    let mut subset: Vec<usize> = (0..k).collect();
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut acyclic = true;
        for &ei in &subset {
            let (ra, rb) = (find(&mut parent, edges[ei].a), find(&mut parent, edges[ei].b));
            if ra == rb {
                acyclic = false;
                break;
            }
            parent[ra] = rb;
        }
        if acyclic {
            best = best.max(subset.iter().map(|&i| edges[i].weight).sum());
        }
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + m - k {
                subset[i] += 1;
                for j in (i + 1)..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}
