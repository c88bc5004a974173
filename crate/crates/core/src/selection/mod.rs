//! Structure selection: Dissmann's sequential maximum-spanning-tree
//! heuristic and the two CCC-guided algorithms, plus whole-vine likelihood
//! evaluation and fixed-structure fitting.

mod cvine;
mod rvine;

pub use cvine::{alg2_root_scores, alg2_select, combine_scores, fit_cvine_fixed_order, RootScore};
pub use rvine::{alg1_edge_scores, alg1_select, dissmann_select};

use serde::{Deserialize, Serialize};

use crate::ccc::{ccc_test, CccConfig, CccResult};
use crate::dependence::CopulaSample;
use crate::error::{Result, VineError};
use crate::families::{select_family, BivariateCopula, Family};
use crate::model::VineModel;
use crate::structure::{pseudo_obs_update, EdgeSpec, VineStructure};

/// Structure-selection method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dissmann,
    Alg1,
    Alg2,
    Alg2Fast,
}

impl Method {
    pub fn code(&self) -> &'static str {
        match self {
            Method::Dissmann => "dissmann",
            Method::Alg1 => "alg1",
            Method::Alg2 => "alg2",
            Method::Alg2Fast => "alg2-fast",
        }
    }

    pub fn from_code(code: &str) -> Result<Method> {
        Ok(match code {
            "dissmann" => Method::Dissmann,
            "alg1" => Method::Alg1,
            "alg2" => Method::Alg2,
            "alg2-fast" | "alg2_fast" => Method::Alg2Fast,
            other => {
                return Err(VineError::DataDomain(format!(
                    "unknown method {other:?}"
                )))
            }
        })
    }
}

/// Transformation applied to pooled CCC p-values before summing into the
/// node score of Algorithm 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RTransform {
    Rank,
    Identity,
    Logarithm,
}

impl RTransform {
    pub fn from_code(code: &str) -> Result<RTransform> {
        Ok(match code {
            "rank" => RTransform::Rank,
            "identity" => RTransform::Identity,
            "log" | "logarithm" => RTransform::Logarithm,
            other => {
                return Err(VineError::DataDomain(format!(
                    "unknown r-transform {other:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct SelectionConfig {
    pub method: Method,
    /// Weight of the p-value score against the tau score.
    pub alpha: f64,
    pub r_transform: RTransform,
    pub family_set: Vec<Family>,
    pub indep_test: bool,
    /// Level of the pair-copula independence test.
    pub beta: f64,
    pub ccc: CccConfig,
    /// Compute per-edge CCC diagnostics on the fitted vine.
    pub diagnostics: bool,
    /// Echoed into model metadata; the algorithms themselves are
    /// deterministic and draw no random numbers.
    pub seed: Option<u64>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            method: Method::Dissmann,
            alpha: 0.6,
            r_transform: RTransform::Rank,
            family_set: Family::PARAMETRIC.to_vec(),
            indep_test: false,
            beta: 0.05,
            ccc: CccConfig::default(),
            diagnostics: false,
            seed: None,
        }
    }
}

impl SelectionConfig {
    pub fn with_method(method: Method) -> SelectionConfig {
        SelectionConfig {
            method,
            ..SelectionConfig::default()
        }
    }
}

/// A selected and fitted vine copula.
#[derive(Debug, Clone)]
pub struct FittedVine {
    pub model: VineModel,
    pub loglik: f64,
    pub npars: usize,
    pub aic: f64,
    /// CCC results for conditional edges, aligned with
    /// `model.copulas[m]` for trees m >= 2 (index 0 is tree 2).
    pub ccc_diagnostics: Option<Vec<Vec<CccResult>>>,
}

impl FittedVine {
    /// Number of conditional edges whose CCC test rejects at level `beta`.
    pub fn ccc_rejections(&self, beta: f64) -> Option<usize> {
        self.ccc_diagnostics.as_ref().map(|trees| {
            trees
                .iter()
                .flatten()
                .filter(|r| r.rejects_at(beta))
                .count()
        })
    }
}

/// Fit a vine with the requested method.
pub fn select(data: &CopulaSample, cfg: &SelectionConfig) -> Result<FittedVine> {
    let mut fitted = match cfg.method {
        Method::Dissmann => dissmann_select(data, cfg)?,
        Method::Alg1 => alg1_select(data, cfg)?,
        Method::Alg2 | Method::Alg2Fast => alg2_select(data, cfg)?,
    };
    if cfg.diagnostics {
        fitted.ccc_diagnostics = Some(ccc_diagnostics(&fitted.model, data, &cfg.ccc)?);
    }
    Ok(fitted)
}

/// One propagated edge: the fitted copula's pseudo-observations keyed by
/// which conditioned variable is kept.
pub(crate) struct PropagatedEdge {
    pub spec: EdgeSpec,
    /// u_{x | D u {y}} where x = spec.conditioned.0
    pub pseudo_a: Vec<f64>,
    /// u_{y | D u {x}}
    pub pseudo_b: Vec<f64>,
}

impl PropagatedEdge {
    pub fn pseudo_for(&self, var: usize) -> &[f64] {
        if var == self.spec.conditioned.0 {
            &self.pseudo_a
        } else {
            debug_assert_eq!(var, self.spec.conditioned.1);
            &self.pseudo_b
        }
    }
}

/// Inputs of an edge: the pseudo-observations of its conditioned pair given
/// the conditioning set, taken from the parent level.
pub(crate) fn edge_inputs<'a>(
    edge: &EdgeSpec,
    tree0: usize,
    data: &'a CopulaSample,
    prev: &'a [PropagatedEdge],
) -> (&'a [f64], &'a [f64]) {
    if tree0 == 0 {
        (data.column(edge.conditioned.0), data.column(edge.conditioned.1))
    } else {
        (
            prev[edge.node_a].pseudo_for(edge.conditioned.0),
            prev[edge.node_b].pseudo_for(edge.conditioned.1),
        )
    }
}

/// Walk a fixed structure tree by tree; the visitor supplies the copula for
/// each edge (from a stored model, or by fitting). Returns the copulas, the
/// accumulated log-likelihood and the parameter count.
pub(crate) fn propagate<F>(
    structure: &VineStructure,
    data: &CopulaSample,
    mut visit: F,
) -> Result<(Vec<Vec<BivariateCopula>>, f64, usize)>
where
    F: FnMut(usize, usize, &EdgeSpec, &[f64], &[f64]) -> Result<BivariateCopula>,
{
    if structure.d() != data.d() {
        return Err(VineError::DimensionMismatch(format!(
            "structure dimension {} vs data dimension {}",
            structure.d(),
            data.d()
        )));
    }
    let mut copulas: Vec<Vec<BivariateCopula>> = Vec::with_capacity(structure.trees().len());
    let mut loglik = 0.0;
    let mut npars = 0usize;
    let mut prev: Vec<PropagatedEdge> = Vec::new();
    for (tree0, tree) in structure.trees().iter().enumerate() {
        let mut level_cops = Vec::with_capacity(tree.len());
        let mut level_edges = Vec::with_capacity(tree.len());
        for (ei, edge) in tree.iter().enumerate() {
            let (u_left, u_right) = edge_inputs(edge, tree0, data, &prev);
            let cop = visit(tree0, ei, edge, u_left, u_right)?;
            loglik += cop.loglik(u_left, u_right)?;
            npars += cop.param_count();
            let (pa, pb) = pseudo_obs_update(&cop, u_left, u_right)?;
            level_edges.push(PropagatedEdge {
                spec: edge.clone(),
                pseudo_a: pa,
                pseudo_b: pb,
            });
            level_cops.push(cop);
        }
        copulas.push(level_cops);
        prev = level_edges;
    }
    Ok((copulas, loglik, npars))
}

/// Log-likelihood and AIC of a fixed parameterized vine on a sample,
/// propagating pseudo-observations tree by tree.
pub fn vine_loglik_aic(model: &VineModel, data: &CopulaSample) -> Result<(f64, f64)> {
    let (_, loglik, npars) = propagate(&model.structure, data, |t, e, _, _, _| {
        Ok(model.copulas[t][e].clone())
    })?;
    Ok((loglik, aic_from(loglik, npars)))
}

/// Fit all pair-copulas of a fixed structure by per-edge family selection.
pub fn fit_with_structure(
    structure: &VineStructure,
    data: &CopulaSample,
    cfg: &SelectionConfig,
) -> Result<FittedVine> {
    let (copulas, loglik, npars) = propagate(structure, data, |_, _, _, u_left, u_right| {
        Ok(
            select_family(u_left, u_right, &cfg.family_set, cfg.indep_test, cfg.beta)?
                .copula,
        )
    })?;
    let model = VineModel::new(structure.clone(), copulas)?;
    Ok(FittedVine {
        loglik,
        npars,
        aic: aic_from(loglik, npars),
        model,
        ccc_diagnostics: None,
    })
}

/// Re-estimate the parameters of a model on new data with every edge's
/// family and rotation held fixed.
pub fn fit_fixed_families(template: &VineModel, data: &CopulaSample) -> Result<FittedVine> {
    let (copulas, loglik, npars) = propagate(&template.structure, data, |t, e, _, u, v| {
        let cop = &template.copulas[t][e];
        if cop.is_independence() {
            return Ok(cop.clone());
        }
        Ok(crate::families::fit_mle(cop.family(), cop.rotation(), u, v)?.copula)
    })?;
    let model = VineModel::new(template.structure.clone(), copulas)?;
    Ok(FittedVine {
        loglik,
        npars,
        aic: aic_from(loglik, npars),
        model,
        ccc_diagnostics: None,
    })
}

/// CCC test of every conditional edge of a fitted model against the
/// original conditioning columns, re-propagating pseudo-observations
/// without refitting.
pub fn ccc_diagnostics(
    model: &VineModel,
    data: &CopulaSample,
    ccc_cfg: &CccConfig,
) -> Result<Vec<Vec<CccResult>>> {
    let mut diags: Vec<Vec<CccResult>> = model
        .structure
        .trees()
        .iter()
        .skip(1)
        .map(|t| Vec::with_capacity(t.len()))
        .collect();
    propagate(&model.structure, data, |t, e, edge, u_left, u_right| {
        if t >= 1 {
            let cond: Vec<Vec<f64>> = edge
                .conditioning
                .iter()
                .map(|&j| data.column(j).to_vec())
                .collect();
            diags[t - 1].push(ccc_test(u_left, u_right, &cond, ccc_cfg)?);
        }
        Ok(model.copulas[t][e].clone())
    })?;
    Ok(diags)
}

#[inline]
pub fn aic_from(loglik: f64, npars: usize) -> f64 {
    -2.0 * loglik + 2.0 * npars as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aic_matches_table_anchors() {
        // loglik 434.9 with 6 parameters -> -857.8; 428.8 -> -845.6.
        assert!((aic_from(434.9, 6) - (-857.8)).abs() < 1e-9);
        assert!((aic_from(428.8, 6) - (-845.6)).abs() < 1e-9);
    }

    #[test]
    fn independence_vine_has_zero_loglik_and_aic() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(1);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..50).map(|_| rng.random::<f64>().clamp(1e-6, 1.0 - 1e-6)).collect())
            .collect();
        let data = CopulaSample::new(cols, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let model = VineModel::independence(3).unwrap();
        let (ll, aic) = vine_loglik_aic(&model, &data).unwrap();
        assert_eq!(ll, 0.0);
        assert_eq!(aic, 0.0);
        assert_eq!(model.npars(), 0);
    }
}
