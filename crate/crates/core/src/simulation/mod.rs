//! Random vine generation, vine sampling and the Monte-Carlo method
//! comparison study.

mod sample;
mod study;

pub use sample::sample_from_vine;
pub use study::{
    alpha_sweep, run_study, MethodSummary, RepRecord, StudyReport, StudyScenario,
};

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{Result, VineError};
use crate::families::{tau_range, tau_to_param, BivariateCopula, Family, Rotation};
use crate::model::VineModel;
use crate::structure::{EdgeSpec, VineStructure};

/// Uniform draw over the natural-order structure matrices of dimension d.
///
/// The vine is grown variable by variable. Natural order pins each new
/// variable's partner in its highest tree to the previous variable; walking
/// down from there, the conditioning sets are peeled one element at a time,
/// and at each step exactly the two conditioned variables of the current
/// edge are feasible removals. Each of the (d-2)(d-3)/2 binary choices is an
/// independent fair coin, so all 2^((d-2)(d-3)/2) outcomes are equally
/// likely, and the construction satisfies the proximity condition by
/// construction.
pub fn sample_structure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<VineStructure> {
    if d < 2 {
        return Err(VineError::DataDomain("structure needs d >= 2".into()));
    }
    // trees[t] = edges of tree t+1, grown incrementally.
    let mut trees: Vec<Vec<EdgeSpec>> = vec![Vec::new(); d - 1];

    for j in 1..d {
        // Partners of variable j at trees 1..=j: partners[k-1] is the tree-k
        // partner. The top entry (tree j) is pinned to j-1.
        let mut partners = vec![usize::MAX; j];
        // walk_nodes[k-1] = node carrying the partner side at tree k.
        let mut walk_nodes = vec![usize::MAX; j];
        partners[j - 1] = j - 1;

        if j >= 2 {
            // The top edge of the sub-vine on {0..j-1} sits in tree j-1.
            let mut level = j - 1; // 1-based tree level of `cur`
            let mut cur = trees[level - 1].len() - 1;
            walk_nodes[j - 1] = cur;
            let mut removed = j - 1;
            debug_assert!({
                let c = trees[level - 1][cur].conditioned;
                c.0 == removed || c.1 == removed
            });
            for k in (1..j).rev() {
                // Step to the parent of `cur` that does not contain `removed`.
                let edge = &trees[level - 1][cur];
                if level == 1 {
                    // Parents are plain variables.
                    let other = if edge.conditioned.0 == removed {
                        edge.conditioned.1
                    } else {
                        edge.conditioned.0
                    };
                    partners[0] = other;
                    walk_nodes[0] = other;
                    break;
                }
                let (pa, pb) = (edge.node_a, edge.node_b);
                let pa_has = trees[level - 2][pa].complete().contains(&removed);
                cur = if pa_has { pb } else { pa };
                level -= 1;
                let cond = trees[level - 1][cur].conditioned;
                // Binary choice: remove one of the conditioned pair.
                partners[k - 1] = if rng.random::<bool>() { cond.0 } else { cond.1 };
                walk_nodes[k - 1] = cur;
                removed = partners[k - 1];
            }
        } else {
            partners[0] = 0;
            walk_nodes[0] = 0;
        }

        // Emit variable j's edges, tree 1 upward; the conditioning set of the
        // tree-k edge is the set of lower-tree partners.
        let mut conditioning: Vec<usize> = Vec::new();
        for k in 1..=j {
            let own_node = if k == 1 { j } else { trees[k - 2].len() - 1 };
            let mut cond_sorted = conditioning.clone();
            cond_sorted.sort_unstable();
            trees[k - 1].push(EdgeSpec {
                conditioned: (j, partners[k - 1]),
                conditioning: cond_sorted,
                node_a: own_node,
                node_b: walk_nodes[k - 1],
            });
            conditioning.push(partners[k - 1]);
        }
    }

    VineStructure::from_trees(d, trees)
}

/// Scenario knobs for random vine generation.
#[derive(Debug, Clone)]
pub struct VineSpecConfig {
    pub family_set: Vec<Family>,
    /// Suppress the 50% sign flip of the sampled Kendall's tau.
    pub positive_only: bool,
}

impl Default for VineSpecConfig {
    fn default() -> Self {
        VineSpecConfig {
            family_set: Family::PARAMETRIC.to_vec(),
            positive_only: false,
        }
    }
}

/// A fully parameterized random vine: random natural-order structure, a
/// uniform family draw per edge, Beta(2,2) Kendall's tau (sign flipped with
/// probability one half unless positive dependence is requested), Student-t
/// degrees of freedom 3 + Gamma(3, 3), and 90/270-degree rotations for the
/// asymmetric families under negative tau.
pub fn sample_vine_spec<R: Rng + ?Sized>(
    d: usize,
    rng: &mut R,
    cfg: &VineSpecConfig,
) -> Result<VineModel> {
    if cfg.family_set.is_empty() {
        return Err(VineError::DataDomain("empty family scope".into()));
    }
    let structure = sample_structure(d, rng)?;
    let beta22 = Beta::new(2.0, 2.0).expect("valid beta");
    // Gamma(shape 3, rate 3) has scale 1/3.
    let gamma33 = Gamma::new(3.0, 1.0 / 3.0).expect("valid gamma");

    let mut copulas: Vec<Vec<BivariateCopula>> = Vec::with_capacity(d - 1);
    for tree in structure.trees() {
        let mut level = Vec::with_capacity(tree.len());
        for _ in tree {
            let family = cfg.family_set[rng.random_range(0..cfg.family_set.len())];
            let mut tau: f64 = beta22.sample(rng);
            if !cfg.positive_only && rng.random::<bool>() {
                tau = -tau;
            }
            level.push(copula_for_tau(family, tau, rng, &gamma33)?);
        }
        copulas.push(level);
    }
    VineModel::new(structure, copulas)
}

fn copula_for_tau<R: Rng + ?Sized>(
    family: Family,
    tau: f64,
    rng: &mut R,
    df_dist: &Gamma<f64>,
) -> Result<BivariateCopula> {
    if family == Family::Independence {
        return Ok(BivariateCopula::independence());
    }
    let (lo, hi) = tau_range(family);
    let margin = 1e-3;
    let (rotation, base_tau) = if family.is_rotatable() {
        let survival = rng.random::<bool>();
        if tau >= 0.0 {
            (
                if survival { Rotation::Deg180 } else { Rotation::Deg0 },
                tau,
            )
        } else {
            (
                if survival { Rotation::Deg270 } else { Rotation::Deg90 },
                -tau,
            )
        }
    } else {
        (Rotation::Deg0, tau)
    };
    let clamped = base_tau.clamp(lo + margin, hi - margin);
    let main = tau_to_param(family, clamped)?;
    let params = if family == Family::StudentT {
        vec![main, 3.0 + df_dist.sample(rng)]
    } else {
        vec![main]
    };
    let mut cop = BivariateCopula::new(family, rotation, params)?;
    cop.fitted_tau = Some(clamped * rotation.tau_sign());
    Ok(cop)
}
