//! Sequential R-vine tree selection: Dissmann's absolute-tau maximum
//! spanning trees, and Algorithm 1 which scores proximity-allowed edges in
//! higher trees by a weighted combination of CCC p-value ranks and
//! absolute-tau ranks.

use crate::ccc::ccc_test;
use crate::dependence::{kendall_tau, CopulaSample};
use crate::error::Result;
use crate::families::select_family;
use crate::model::VineModel;
use crate::numeric::average_ranks;
use crate::selection::{
    aic_from, edge_inputs, FittedVine, PropagatedEdge, SelectionConfig,
};
use crate::structure::{
    allowed_edges, max_spanning_tree, pseudo_obs_update, EdgeSpec, VineStructure, WeightedEdge,
};

/// How the candidate edges of one tree level are weighted for the maximum
/// spanning tree.
enum EdgeWeighting {
    AbsTau,
    /// alpha * rank(p-value) + (1 - alpha) * rank(|tau|)
    CccScore { alpha: f64 },
}

/// Edge scores of Algorithm 1: CCC p-values and absolute taus are each
/// replaced by their ascending rank (the largest p-value receives the top
/// rank) and combined as alpha * f_p + (1 - alpha) * f_tau.
pub fn alg1_edge_scores(p_values: &[f64], abs_taus: &[f64], alpha: f64) -> Vec<f64> {
    let f_p = average_ranks(p_values);
    let f_tau = average_ranks(abs_taus);
    f_p.iter()
        .zip(&f_tau)
        .map(|(p, t)| alpha * p + (1.0 - alpha) * t)
        .collect()
}

/// Dissmann's algorithm: every tree is a maximum spanning tree under
/// absolute empirical Kendall's tau weights on the proximity-allowed edges.
pub fn dissmann_select(data: &CopulaSample, cfg: &SelectionConfig) -> Result<FittedVine> {
    grow_rvine(data, cfg, |_| EdgeWeighting::AbsTau)
}

/// Algorithm 1: tree 1 as in Dissmann; from tree 2 on, each allowed edge is
/// scored by s_alpha(e) = alpha * f_p(e) + (1 - alpha) * f_tau(e), where
/// f_p ranks the CCC p-values ascending (largest p-value gets the top rank)
/// and f_tau ranks the absolute taus ascending.
pub fn alg1_select(data: &CopulaSample, cfg: &SelectionConfig) -> Result<FittedVine> {
    grow_rvine(data, cfg, |tree0| {
        if tree0 == 0 {
            EdgeWeighting::AbsTau
        } else {
            EdgeWeighting::CccScore { alpha: cfg.alpha }
        }
    })
}

fn grow_rvine(
    data: &CopulaSample,
    cfg: &SelectionConfig,
    weighting: impl Fn(usize) -> EdgeWeighting,
) -> Result<FittedVine> {
    let d = data.d();
    let n_trees = d - 1;
    let mut trees: Vec<Vec<EdgeSpec>> = Vec::with_capacity(n_trees);
    let mut copulas = Vec::with_capacity(n_trees);
    let mut loglik = 0.0;
    let mut npars = 0usize;
    let mut prev: Vec<PropagatedEdge> = Vec::new();

    for tree0 in 0..n_trees {
        // Candidate edges allowed by the proximity condition (every pair of
        // variables for the first tree).
        let candidates: Vec<EdgeSpec> = if tree0 == 0 {
            let mut out = Vec::with_capacity(d * (d - 1) / 2);
            for a in 0..d {
                for b in (a + 1)..d {
                    out.push(EdgeSpec {
                        conditioned: (a, b),
                        conditioning: vec![],
                        node_a: a,
                        node_b: b,
                    });
                }
            }
            out
        } else {
            allowed_edges(trees.last().unwrap())
        };

        let taus: Vec<f64> = candidates
            .iter()
            .map(|e| {
                let (u_left, u_right) = edge_inputs(e, tree0, data, &prev);
                kendall_tau(u_left, u_right)
            })
            .collect::<Result<_>>()?;

        let weights: Vec<f64> = match weighting(tree0) {
            EdgeWeighting::AbsTau => taus.iter().map(|t| t.abs()).collect(),
            EdgeWeighting::CccScore { alpha } => {
                let p_values: Vec<f64> = candidates
                    .iter()
                    .map(|e| {
                        let (u_left, u_right) = edge_inputs(e, tree0, data, &prev);
                        let cond: Vec<Vec<f64>> = e
                            .conditioning
                            .iter()
                            .map(|&j| data.column(j).to_vec())
                            .collect();
                        Ok(ccc_test(u_left, u_right, &cond, &cfg.ccc)?.p_value)
                    })
                    .collect::<Result<_>>()?;
                let abs_taus: Vec<f64> = taus.iter().map(|t| t.abs()).collect();
                alg1_edge_scores(&p_values, &abs_taus, alpha)
            }
        };

        let n_nodes = if tree0 == 0 { d } else { prev.len() };
        let weighted: Vec<WeightedEdge> = candidates
            .iter()
            .zip(&weights)
            .map(|(e, &w)| WeightedEdge::new(e.node_a, e.node_b, w))
            .collect();
        let chosen = max_spanning_tree(n_nodes, &weighted)?;

        let mut level_specs = Vec::with_capacity(chosen.len());
        let mut level_cops = Vec::with_capacity(chosen.len());
        let mut level_edges = Vec::with_capacity(chosen.len());
        for &ci in &chosen {
            let edge = candidates[ci].clone();
            let (u_left, u_right) = edge_inputs(&edge, tree0, data, &prev);
            let outcome =
                select_family(u_left, u_right, &cfg.family_set, cfg.indep_test, cfg.beta)?;
            let cop = outcome.copula;
            loglik += cop.loglik(u_left, u_right)?;
            npars += cop.param_count();
            let (pa, pb) = pseudo_obs_update(&cop, u_left, u_right)?;
            level_edges.push(PropagatedEdge {
                spec: edge.clone(),
                pseudo_a: pa,
                pseudo_b: pb,
            });
            level_specs.push(edge);
            level_cops.push(cop);
        }
        trees.push(level_specs);
        copulas.push(level_cops);
        prev = level_edges;
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
