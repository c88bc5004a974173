//! Triangular-matrix interchange form of a vine structure.
//!
//! The matrix M is d x d lower triangular with 1-based variable labels.
//! Column j describes the pair-copulas of the diagonal variable M[j][j]:
//! the entry in row i belongs to tree m = d - i (0-based rows, bottom row is
//! tree 1) and encodes the edge (M[j][j], M[i][j] | M[i+1][j], .., M[d-1][j]).
//!
//! Flat per-edge arrays (families, parameters) follow matrix-cell order:
//! columns left to right, trees ascending within a column.

use crate::error::{Result, VineError};
use crate::structure::{EdgeSpec, VineStructure};

/// Matrix form plus the mapping from flat cell order to (tree, edge) indices
/// of the originating structure.
#[derive(Debug, Clone)]
pub struct StructureMatrix {
    /// d x d, 1-based labels on and below the diagonal, zeros above.
    pub entries: Vec<Vec<usize>>,
    /// Flat cell order (column-major, tree ascending) -> (tree-1, edge index).
    pub cell_map: Vec<(usize, usize)>,
}

/// Serialize a structure to matrix form. The diagonal is chosen by always
/// peeling the larger conditioned variable of the current top edge, which is
/// deterministic and reproduces the d..1 diagonal on natural-order
/// structures.
pub fn to_matrix(vs: &VineStructure) -> Result<StructureMatrix> {
    let d = vs.d();
    let mut entries = vec![vec![0usize; d]; d];
    let mut cell_map = Vec::with_capacity(d * (d - 1) / 2);

    // Live copy: per tree, (conditioned, conditioning, original edge index).
    type LiveEdge = ((usize, usize), Vec<usize>, usize);
    let mut live: Vec<Vec<LiveEdge>> = vs
        .trees()
        .iter()
        .map(|t| {
            t.iter()
                .enumerate()
                .map(|(i, e)| (e.conditioned, e.conditioning.clone(), i))
                .collect()
        })
        .collect();

    #[allow(clippy::needless_range_loop)]
    for col in 0..(d - 1) {
        let top_level = live.len() - 1 - col;
        if live[top_level].len() != 1 {
            return Err(VineError::InvalidModel(format!(
                "peeling column {col}: top tree has {} edges",
                live[top_level].len()
            )));
        }
        let (x, y) = live[top_level][0].0;
        let diag = x.max(y);
        entries[col][col] = diag + 1;
        for m in (1..=top_level + 1).rev() {
            let tree = &mut live[m - 1];
            let mut hits = tree
                .iter()
                .enumerate()
                .filter(|(_, (cond, _, _))| cond.0 == diag || cond.1 == diag);
            let Some((pos, (cond, _, orig))) = hits.next() else {
                return Err(VineError::InvalidModel(format!(
                    "variable {} missing from tree {m} conditioned sets",
                    diag + 1
                )));
            };
            if hits.next().is_some() {
                return Err(VineError::InvalidModel(format!(
                    "variable {} conditioned more than once in tree {m}",
                    diag + 1
                )));
            }
            let partner = if cond.0 == diag { cond.1 } else { cond.0 };
            let orig = *orig;
            tree.remove(pos);
            entries[d - m][col] = partner + 1;
            cell_map.push((m - 1, orig));
        }
        // cell_map is built top tree first; flat order wants tree ascending.
        let start = cell_map.len() - (top_level + 1);
        cell_map[start..].reverse();
        for tree in &live {
            for (_, conditioning, _) in tree {
                if conditioning.contains(&diag) {
                    return Err(VineError::InvalidModel(format!(
                        "variable {} still conditions a remaining edge",
                        diag + 1
                    )));
                }
            }
        }
    }
    // Last column: the single remaining variable label.
    let used: std::collections::HashSet<usize> =
        (0..d - 1).map(|j| entries[j][j]).collect();
    let last = (1..=d).find(|v| !used.contains(v)).ok_or_else(|| {
        VineError::InvalidModel("diagonal is not a permutation".into())
    })?;
    entries[d - 1][d - 1] = last;

    Ok(StructureMatrix { entries, cell_map })
}

/// Parse matrix form back into a validated structure, returning the flat
/// cell order mapping as in [`to_matrix`].
pub fn from_matrix(entries: &[Vec<usize>]) -> Result<(VineStructure, Vec<(usize, usize)>)> {
    let d = entries.len();
    if d < 2 {
        return Err(VineError::InvalidModel("matrix must be at least 2x2".into()));
    }
    for (i, row) in entries.iter().enumerate() {
        if row.len() != d {
            return Err(VineError::InvalidModel(format!(
                "row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if j > i && v != 0 {
                return Err(VineError::InvalidModel(format!(
                    "entry ({i}, {j}) above the diagonal must be 0"
                )));
            }
            if j <= i && !(1..=d).contains(&v) {
                return Err(VineError::InvalidModel(format!(
                    "entry ({i}, {j}) = {v} outside 1..={d}"
                )));
            }
        }
    }

    let mut trees: Vec<Vec<EdgeSpec>> = Vec::with_capacity(d - 1);
    // complete set -> edge index of the previous tree
    let mut prev_lookup: std::collections::HashMap<Vec<usize>, usize> =
        std::collections::HashMap::new();
    for m in 1..d {
        let mut tree = Vec::with_capacity(d - m);
        let mut lookup = std::collections::HashMap::new();
        #[allow(clippy::needless_range_loop)]
        for j in 0..=(d - 1 - m) {
            let i = d - m;
            let diag = entries[j][j] - 1;
            let partner = entries[i][j] - 1;
            let mut conditioning: Vec<usize> =
                ((i + 1)..d).map(|r| entries[r][j] - 1).collect();
            conditioning.sort_unstable();
            let (node_a, node_b) = if m == 1 {
                (diag, partner)
            } else {
                let mut sa = conditioning.clone();
                sa.push(diag);
                sa.sort_unstable();
                let mut sb = conditioning.clone();
                sb.push(partner);
                sb.sort_unstable();
                let na = *prev_lookup.get(&sa).ok_or_else(|| {
                    VineError::InvalidModel(format!(
                        "matrix column {j}, tree {m}: no parent edge for {sa:?}"
                    ))
                })?;
                let nb = *prev_lookup.get(&sb).ok_or_else(|| {
                    VineError::InvalidModel(format!(
                        "matrix column {j}, tree {m}: no parent edge for {sb:?}"
                    ))
                })?;
                (na, nb)
            };
            let edge = EdgeSpec {
                conditioned: (diag, partner),
                conditioning,
                node_a,
                node_b,
            };
            lookup.insert(edge.complete(), tree.len());
            tree.push(edge);
        }
        prev_lookup = lookup;
        trees.push(tree);
    }

    let vs = VineStructure::from_trees(d, trees)?;
    // Column-major, tree ascending: column j holds trees 1..=d-1-j, and the
    // builder above stores tree m's edge from column j at index j.
    let mut cell_map = Vec::with_capacity(d * (d - 1) / 2);
    for j in 0..(d - 1) {
        for m in 1..=(d - 1 - j) {
            cell_map.push((m - 1, j));
        }
    }
    Ok((vs, cell_map))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// D-vine 1-2-3-4 as a tree sequence (0-based labels).
    fn dvine4() -> VineStructure {
        let t1 = vec![
            EdgeSpec { conditioned: (0, 1), conditioning: vec![], node_a: 0, node_b: 1 },
            EdgeSpec { conditioned: (1, 2), conditioning: vec![], node_a: 1, node_b: 2 },
            EdgeSpec { conditioned: (2, 3), conditioning: vec![], node_a: 2, node_b: 3 },
        ];
        let t2 = vec![
            EdgeSpec { conditioned: (0, 2), conditioning: vec![1], node_a: 0, node_b: 1 },
            EdgeSpec { conditioned: (1, 3), conditioning: vec![2], node_a: 1, node_b: 2 },
        ];
        let t3 = vec![EdgeSpec {
            conditioned: (0, 3),
            conditioning: vec![1, 2],
            node_a: 0,
            node_b: 1,
        }];
        VineStructure::from_trees(4, vec![t1, t2, t3]).unwrap()
    }

    #[test]
    fn matrix_roundtrip_preserves_structure() {
        let vs = dvine4();
        let sm = to_matrix(&vs).unwrap();
        let (back, _) = from_matrix(&sm.entries).unwrap();
        let sm2 = to_matrix(&back).unwrap();
        assert_eq!(sm.entries, sm2.entries);
        assert_eq!(back.edge_count(), vs.edge_count());
        // Same edges per tree regardless of order.
        for (ta, tb) in vs.trees().iter().zip(back.trees()) {
            let mut a: Vec<_> = ta
                .iter()
                .map(|e| {
                    let (x, y) = e.conditioned;
                    (x.min(y), x.max(y), e.conditioning.clone())
                })
                .collect();
            let mut b: Vec<_> = tb
                .iter()
                .map(|e| {
                    let (x, y) = e.conditioned;
                    (x.min(y), x.max(y), e.conditioning.clone())
                })
                .collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dvine_matrix_has_descending_diagonal() {
        let sm = to_matrix(&dvine4()).unwrap();
        let diag: Vec<usize> = (0..4).map(|j| sm.entries[j][j]).collect();
        assert_eq!(diag, vec![4, 3, 2, 1]);
    }

    #[test]
    fn cell_map_covers_all_edges_once() {
        let vs = dvine4();
        let sm = to_matrix(&vs).unwrap();
        let mut seen = std::collections::HashSet::new();
        for &(t, e) in &sm.cell_map {
            assert!(seen.insert((t, e)));
            assert!(e < vs.trees()[t].len());
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn rejects_malformed_matrix() {
        let bad = vec![vec![1usize, 9], vec![1, 2]];
        assert!(from_matrix(&bad).is_err());
    }
}
