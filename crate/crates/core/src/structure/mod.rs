//! Regular-vine tree sequences: proximity-condition machinery, maximum
//! spanning trees, structure counting and the triangular-matrix interchange
//! format.
//!
//! A structure on d variables is a sequence of linked trees T_1..T_{d-1}:
//! T_1 spans the variables, the nodes of T_m are the edges of T_{m-1}, and
//! two T_{m-1} edges may only be joined if they share a node (the proximity
//! condition). Variables are indexed 0-based internally; the matrix form
//! uses 1-based labels.

pub mod counting;
pub mod matrix;
pub mod mst;

pub use counting::{count_structures, StructureKind};
pub use matrix::{from_matrix, to_matrix, StructureMatrix};
pub use mst::{max_spanning_tree, WeightedEdge};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VineError};
use crate::families::{BivariateCopula, CondVar};

/// One edge of a vine tree: the conditioned pair given the conditioning set,
/// plus links to the two nodes it joins. For tree 1 the node links are the
/// variable indices themselves; for tree m >= 2 they index edges of the
/// previous tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    /// Conditioned variables (x from the `node_a` side, y from `node_b`).
    pub conditioned: (usize, usize),
    /// Conditioning set, sorted ascending.
    pub conditioning: Vec<usize>,
    pub node_a: usize,
    pub node_b: usize,
}

impl EdgeSpec {
    /// Complete set: conditioned pair plus conditioning set, sorted.
    pub fn complete(&self) -> Vec<usize> {
        let mut s = self.conditioning.clone();
        s.push(self.conditioned.0);
        s.push(self.conditioned.1);
        s.sort_unstable();
        s
    }

    pub fn tree_level(&self) -> usize {
        self.conditioning.len() + 1
    }
}

/// A validated regular-vine tree sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineStructure {
    d: usize,
    trees: Vec<Vec<EdgeSpec>>,
}

impl VineStructure {
    /// Build from explicit per-tree edge lists, checking the tree conditions
    /// and the proximity condition exhaustively.
    pub fn from_trees(d: usize, trees: Vec<Vec<EdgeSpec>>) -> Result<VineStructure> {
        let vs = VineStructure { d, trees };
        vs.validate()?;
        Ok(vs)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn trees(&self) -> &[Vec<EdgeSpec>] {
        &self.trees
    }

    pub fn tree(&self, m: usize) -> &[EdgeSpec] {
        &self.trees[m - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Proximity validator: conditions (i)-(iii) plus consistency of the
    /// conditioned/conditioning bookkeeping.
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d < 2 {
            return Err(VineError::InvalidModel("dimension must be >= 2".into()));
        }
        if self.trees.len() != d - 1 {
            return Err(VineError::InvalidModel(format!(
                "expected {} trees, got {}",
                d - 1,
                self.trees.len()
            )));
        }
        let mut prev_complete: Vec<Vec<usize>> = Vec::new();
        for (mi, tree) in self.trees.iter().enumerate() {
            let m = mi + 1;
            let n_nodes = d - m + 1;
            if tree.len() != d - m {
                return Err(VineError::InvalidModel(format!(
                    "tree {m} has {} edges, expected {}",
                    tree.len(),
                    d - m
                )));
            }
            // Spanning check via union-find over the node space.
            let mut parent: Vec<usize> = (0..n_nodes).collect();
            fn find(p: &mut [usize], i: usize) -> usize {
                let mut i = i;
                while p[i] != i {
                    p[i] = p[p[i]];
                    i = p[i];
                }
                i
            }
            let mut complete_here = Vec::with_capacity(tree.len());
            for e in tree {
                if e.node_a >= n_nodes || e.node_b >= n_nodes || e.node_a == e.node_b {
                    return Err(VineError::InvalidModel(format!(
                        "tree {m}: bad node link ({}, {})",
                        e.node_a, e.node_b
                    )));
                }
                let (ra, rb) = (find(&mut parent, e.node_a), find(&mut parent, e.node_b));
                if ra == rb {
                    return Err(VineError::InvalidModel(format!("tree {m} contains a cycle")));
                }
                parent[ra] = rb;

                if m == 1 {
                    if e.conditioned != (e.node_a, e.node_b) || !e.conditioning.is_empty() {
                        return Err(VineError::InvalidModel(format!(
                            "tree 1 edge ({}, {}) has inconsistent labels",
                            e.node_a, e.node_b
                        )));
                    }
                } else {
                    let sa = &prev_complete[e.node_a];
                    let sb = &prev_complete[e.node_b];
                    // Proximity: the joined previous edges share a node.
                    let pa = &self.trees[mi - 1][e.node_a];
                    let pb = &self.trees[mi - 1][e.node_b];
                    let shared = [pa.node_a, pa.node_b]
                        .iter()
                        .filter(|x| [pb.node_a, pb.node_b].contains(x))
                        .count();
                    if shared != 1 {
                        return Err(VineError::InvalidModel(format!(
                            "tree {m}: proximity violated for nodes {} and {}",
                            e.node_a, e.node_b
                        )));
                    }
                    let (x, y, dset) = conditioned_pair(sa, sb);
                    if (x, y) != e.conditioned || dset != e.conditioning {
                        return Err(VineError::InvalidModel(format!(
                            "tree {m}: edge labels disagree with node complete sets"
                        )));
                    }
                }
                complete_here.push(e.complete());
            }
            prev_complete = complete_here;
        }
        Ok(())
    }

    /// Whether every tree is a star (the C-vine property).
    pub fn is_cvine(&self) -> bool {
        self.trees.iter().all(|tree| {
            if tree.len() <= 2 {
                return true;
            }
            let mut counts = std::collections::HashMap::new();
            for e in tree {
                *counts.entry(e.node_a).or_insert(0usize) += 1;
                *counts.entry(e.node_b).or_insert(0usize) += 1;
            }
            counts.values().any(|&c| c == tree.len())
        })
    }
}

/// Conditioned pair and conditioning set implied by two complete sets that
/// overlap in all but one element each: x is the element only in `sa`, y the
/// one only in `sb`, the intersection is the conditioning set.
pub fn conditioned_pair(sa: &[usize], sb: &[usize]) -> (usize, usize, Vec<usize>) {
    let x = *sa.iter().find(|v| !sb.contains(v)).expect("sa not subset");
    let y = *sb.iter().find(|v| !sa.contains(v)).expect("sb not subset");
    let dset: Vec<usize> = sa.iter().copied().filter(|v| sb.contains(v)).collect();
    (x, y, dset)
}

/// All node pairs of the next tree allowed by the proximity condition:
/// pairs of previous-tree edges sharing exactly one endpoint, annotated with
/// their conditioned pair and conditioning set.
pub fn allowed_edges(prev_tree: &[EdgeSpec]) -> Vec<EdgeSpec> {
    let complete: Vec<Vec<usize>> = prev_tree.iter().map(EdgeSpec::complete).collect();
    let mut out = Vec::new();
    for a in 0..prev_tree.len() {
        for b in (a + 1)..prev_tree.len() {
            let ea = &prev_tree[a];
            let eb = &prev_tree[b];
            let shared = [ea.node_a, ea.node_b]
                .iter()
                .filter(|x| [eb.node_a, eb.node_b].contains(x))
                .count();
            if shared != 1 {
                continue;
            }
            let (x, y, dset) = conditioned_pair(&complete[a], &complete[b]);
            out.push(EdgeSpec {
                conditioned: (x, y),
                conditioning: dset,
                node_a: a,
                node_b: b,
            });
        }
    }
    out
}

/// Pseudo-observation propagation for one fitted edge: returns
/// (h(left | right), h(right | left)) under the fitted copula, clamped to
/// the open unit interval.
pub fn pseudo_obs_update(
    copula: &BivariateCopula,
    u_left: &[f64],
    u_right: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if u_left.len() != u_right.len() {
        return Err(VineError::DimensionMismatch(format!(
            "pseudo-obs inputs {} vs {}",
            u_left.len(),
            u_right.len()
        )));
    }
    let mut left_given_right = Vec::with_capacity(u_left.len());
    let mut right_given_left = Vec::with_capacity(u_left.len());
    for (&l, &r) in u_left.iter().zip(u_right) {
        left_given_right.push(crate::clamp_unit(copula.hfunc(l, r, CondVar::Second)));
        right_given_left.push(crate::clamp_unit(copula.hfunc(l, r, CondVar::First)));
    }
    Ok((left_given_right, right_given_left))
}
