//! C-vine structure selection (Algorithm 2): each tree is a star whose root
//! maximizes a weighted combination of two ranked node scores, one summing
//! transformed CCC p-values of all pairs conditioned on the candidate root,
//! the other summing absolute Kendall's taus between the candidate and the
//! remaining nodes.

use crate::ccc::ccc_test;
use crate::dependence::{kendall_tau, CopulaSample};
use crate::error::{Result, VineError};
use crate::families::{select_family, Family, FitOutcome};
use crate::model::VineModel;
use crate::numeric::average_ranks;
use crate::selection::{
    aic_from, fit_with_structure, FittedVine, Method, RTransform, SelectionConfig,
};
use crate::structure::{pseudo_obs_update, EdgeSpec, VineStructure};

/// Scores of one candidate root node at a tree level.
#[derive(Debug, Clone)]
pub struct RootScore {
    /// Candidate root (variable index).
    pub node: usize,
    /// p-value score p(v): sum of transformed CCC p-values over all pairs
    /// conditioned on the candidate.
    pub p_score: f64,
    /// tau score t(v): sum of absolute Kendall's taus to the other nodes.
    pub t_score: f64,
    /// Rank g_p of p_score among the candidates (average ranks on ties).
    pub p_rank: f64,
    /// Rank g_tau of t_score among the candidates.
    pub t_rank: f64,
    /// s_alpha(v) = alpha * g_p + (1 - alpha) * g_tau; reduces to g_tau when
    /// fewer than three nodes remain (no testable pair).
    pub score: f64,
}

/// Combine already-computed node scores into ranks and the weighted score.
pub fn combine_scores(
    nodes: &[usize],
    p_scores: &[f64],
    t_scores: &[f64],
    alpha: f64,
    testable: bool,
) -> Vec<RootScore> {
    let p_ranks = average_ranks(p_scores);
    let t_ranks = average_ranks(t_scores);
    nodes
        .iter()
        .zip(p_scores.iter().zip(t_scores))
        .zip(p_ranks.iter().zip(&t_ranks))
        .map(|((&node, (&p, &t)), (&gp, &gt))| RootScore {
            node,
            p_score: p,
            t_score: t,
            p_rank: gp,
            t_rank: gt,
            score: if testable {
                alpha * gp + (1.0 - alpha) * gt
            } else {
                gt
            },
        })
        .collect()
}

struct CandidateFits {
    /// (other node i, fitted copula, conditional pseudo-obs u_{i | priors, v})
    fits: Vec<(usize, FitOutcome, Vec<f64>)>,
}

fn transform_pooled(p_values: &[f64], r: RTransform) -> Vec<f64> {
    match r {
        RTransform::Rank => average_ranks(p_values),
        RTransform::Identity => p_values.to_vec(),
        RTransform::Logarithm => p_values.iter().map(|p| (p + 1e-300).ln()).collect(),
    }
}

fn root_scores_impl(
    data: &CopulaSample,
    pseudo: &[(usize, Vec<f64>)],
    priors: &[usize],
    cfg: &SelectionConfig,
    search_set: &[Family],
) -> Result<(Vec<RootScore>, Vec<CandidateFits>)> {
    let k = pseudo.len();
    if k < 2 {
        return Err(VineError::DataDomain(
            "root scoring needs at least two remaining nodes".into(),
        ));
    }
    let nodes: Vec<usize> = pseudo.iter().map(|(v, _)| *v).collect();

    // Pairwise absolute taus of the current pseudo-observations.
    let mut abs_tau = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let t = kendall_tau(&pseudo[a].1, &pseudo[b].1)?.abs();
            abs_tau[a][b] = t;
            abs_tau[b][a] = t;
        }
    }
    let t_scores: Vec<f64> = (0..k)
        .map(|v| (0..k).filter(|&i| i != v).map(|i| abs_tau[v][i]).sum())
        .collect();

    // Fit c_{iv; priors} for every candidate v and produce the conditional
    // pseudo-observations, then the CCC p-value of every pair (i, j) given
    // (priors, v).
    let mut all_fits = Vec::with_capacity(k);
    let mut pooled: Vec<f64> = Vec::new();
    let mut per_candidate_count = 0usize;
    for v in 0..k {
        let mut fits = Vec::with_capacity(k - 1);
        for i in (0..k).filter(|&i| i != v) {
            let outcome = select_family(
                &pseudo[i].1,
                &pseudo[v].1,
                search_set,
                cfg.indep_test,
                cfg.beta,
            )?;
            let (cond_pseudo, _) =
                pseudo_obs_update(&outcome.copula, &pseudo[i].1, &pseudo[v].1)?;
            fits.push((nodes[i], outcome, cond_pseudo));
        }
        if k >= 3 {
            let mut cond_vars: Vec<usize> = priors.to_vec();
            cond_vars.push(nodes[v]);
            cond_vars.sort_unstable();
            let cond: Vec<Vec<f64>> = cond_vars
                .iter()
                .map(|&j| data.column(j).to_vec())
                .collect();
            for a in 0..fits.len() {
                for b in (a + 1)..fits.len() {
                    let res = ccc_test(&fits[a].2, &fits[b].2, &cond, &cfg.ccc)?;
                    pooled.push(res.p_value);
                }
            }
            per_candidate_count = fits.len() * (fits.len() - 1) / 2;
        }
        all_fits.push(CandidateFits { fits });
    }

    let testable = k >= 3;
    let p_scores: Vec<f64> = if testable {
        let transformed = transform_pooled(&pooled, cfg.r_transform);
        (0..k)
            .map(|v| {
                transformed[v * per_candidate_count..(v + 1) * per_candidate_count]
                    .iter()
                    .sum()
            })
            .collect()
    } else {
        vec![0.0; k]
    };

    Ok((
        combine_scores(&nodes, &p_scores, &t_scores, cfg.alpha, testable),
        all_fits,
    ))
}

/// Per-node root scores for one tree level of Algorithm 2. `pseudo` holds
/// the remaining nodes with their current pseudo-observations (conditioned
/// on the prior roots), `priors` the root variables already chosen.
pub fn alg2_root_scores(
    data: &CopulaSample,
    pseudo: &[(usize, Vec<f64>)],
    priors: &[usize],
    cfg: &SelectionConfig,
) -> Result<Vec<RootScore>> {
    let search_set = search_family_set(cfg);
    Ok(root_scores_impl(data, pseudo, priors, cfg, &search_set)?.0)
}

fn search_family_set(cfg: &SelectionConfig) -> Vec<Family> {
    if cfg.method == Method::Alg2Fast {
        vec![Family::Gaussian]
    } else {
        cfg.family_set.clone()
    }
}

/// Algorithm 2: grow a C-vine by choosing, at each level, the root with the
/// maximal score (ties to the smaller variable index). Under the fast
/// variant the structure search restricts fitting to the Gaussian family
/// and the final structure is then refit with the full family set.
pub fn alg2_select(data: &CopulaSample, cfg: &SelectionConfig) -> Result<FittedVine> {
    let d = data.d();
    let search_set = search_family_set(cfg);

    let mut pseudo: Vec<(usize, Vec<f64>)> =
        (0..d).map(|v| (v, data.column(v).to_vec())).collect();
    let mut priors: Vec<usize> = Vec::new();
    // variable -> node index in the previous tree (variable itself at level 1)
    let mut carrier: Vec<usize> = (0..d).collect();

    let mut trees: Vec<Vec<EdgeSpec>> = Vec::with_capacity(d - 1);
    let mut copulas = Vec::with_capacity(d - 1);
    let mut loglik = 0.0;
    let mut npars = 0usize;

    while pseudo.len() >= 2 {
        let (scores, mut fits) = root_scores_impl(data, &pseudo, &priors, cfg, &search_set)?;
        let mut best = 0usize;
        for (i, s) in scores.iter().enumerate() {
            if s.score > scores[best].score {
                best = i;
            }
        }
        let root = scores[best].node;
        let root_fits = std::mem::take(&mut fits[best].fits);

        let root_pseudo = pseudo
            .iter()
            .find(|(v, _)| *v == root)
            .expect("root in remaining")
            .1
            .clone();
        let mut conditioning = priors.clone();
        conditioning.sort_unstable();

        let mut level_specs = Vec::with_capacity(root_fits.len());
        let mut level_cops = Vec::with_capacity(root_fits.len());
        let mut next_pseudo = Vec::with_capacity(root_fits.len());
        let mut next_carrier = carrier.clone();
        for (idx, (i, outcome, cond_pseudo)) in root_fits.into_iter().enumerate() {
            let edge = EdgeSpec {
                conditioned: (i, root),
                conditioning: conditioning.clone(),
                node_a: carrier[i],
                node_b: carrier[root],
            };
            let u_i = &pseudo.iter().find(|(v, _)| *v == i).expect("node").1;
            let cop = outcome.copula;
            loglik += cop.loglik(u_i, &root_pseudo)?;
            npars += cop.param_count();
            level_specs.push(edge);
            level_cops.push(cop);
            next_pseudo.push((i, cond_pseudo));
            next_carrier[i] = idx;
        }
        trees.push(level_specs);
        copulas.push(level_cops);
        priors.push(root);
        pseudo = next_pseudo;
        carrier = next_carrier;
    }

    let structure = VineStructure::from_trees(d, trees)?;
    if cfg.method == Method::Alg2Fast {
        // Second pass: refit every pair-copula of the found structure with
        // the full family set, re-propagating pseudo-observations.
        return fit_with_structure(&structure, data, cfg);
    }
    let model = VineModel::new(structure, copulas)?;
    Ok(FittedVine {
        loglik,
        npars,
        aic: aic_from(loglik, npars),
        model,
        ccc_diagnostics: None,
    })
}

/// Fit a C-vine with a fixed root ordering (level m connects order[m-1] to
/// all later entries), selecting families per edge.
pub fn fit_cvine_fixed_order(
    data: &CopulaSample,
    order: &[usize],
    cfg: &SelectionConfig,
) -> Result<FittedVine> {
    let d = data.d();
    if order.len() != d {
        return Err(VineError::DimensionMismatch(format!(
            "root order has {} entries for d={d}",
            order.len()
        )));
    }
    let mut pseudo: Vec<(usize, Vec<f64>)> =
        (0..d).map(|v| (v, data.column(v).to_vec())).collect();
    let mut carrier: Vec<usize> = (0..d).collect();
    let mut conditioning: Vec<usize> = Vec::new();
    let mut trees = Vec::with_capacity(d - 1);
    let mut copulas = Vec::with_capacity(d - 1);
    let mut loglik = 0.0;
    let mut npars = 0usize;

    for &root in &order[..d - 1] {
        let root_pos = pseudo
            .iter()
            .position(|(v, _)| *v == root)
            .ok_or_else(|| VineError::DataDomain(format!("root {root} repeated in order")))?;
        let root_pseudo = pseudo[root_pos].1.clone();
        let mut cond_sorted = conditioning.clone();
        cond_sorted.sort_unstable();

        let mut level_specs = Vec::new();
        let mut level_cops = Vec::new();
        let mut next_pseudo = Vec::new();
        let mut next_carrier = carrier.clone();
        for (idx, (i, col)) in pseudo
            .iter()
            .filter(|(v, _)| *v != root)
            .enumerate()
        {
            let outcome = select_family(col, &root_pseudo, &cfg.family_set, cfg.indep_test, cfg.beta)?;
            let cop = outcome.copula;
            loglik += cop.loglik(col, &root_pseudo)?;
            npars += cop.param_count();
            let (cond_pseudo, _) = pseudo_obs_update(&cop, col, &root_pseudo)?;
            level_specs.push(EdgeSpec {
                conditioned: (*i, root),
                conditioning: cond_sorted.clone(),
                node_a: carrier[*i],
                node_b: carrier[root],
            });
            level_cops.push(cop);
            next_pseudo.push((*i, cond_pseudo));
            next_carrier[*i] = idx;
        }
        trees.push(level_specs);
        copulas.push(level_cops);
        conditioning.push(root);
        pseudo = next_pseudo;
        carrier = next_carrier;
    }

    let structure = VineStructure::from_trees(d, trees)?;
    let model = VineModel::new(structure, copulas)?;
    Ok(FittedVine {
        loglik,
        npars,
        aic: aic_from(loglik, npars),
        model,
        ccc_diagnostics: None,
    })
}
