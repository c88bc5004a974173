//! Maximum spanning tree by Prim's algorithm with deterministic tie-breaking.

use crate::error::{Result, VineError};

/// An undirected weighted edge between node indices.
#[derive(Debug, Clone)]
pub struct WeightedEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl WeightedEdge {
    pub fn new(a: usize, b: usize, weight: f64) -> WeightedEdge {
        WeightedEdge { a, b, weight }
    }

    fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

/// Spanning tree of maximum total weight over `n_nodes` nodes. Returns the
/// indices of the selected edges, sorted by endpoint pair. Weight ties are
/// broken by the lexicographically smallest endpoint pair, making the result
/// deterministic across runs and platforms.
pub fn max_spanning_tree(n_nodes: usize, edges: &[WeightedEdge]) -> Result<Vec<usize>> {
    if n_nodes == 0 {
        return Err(VineError::Disconnected("no nodes".into()));
    }
    if n_nodes == 1 {
        return Ok(vec![]);
    }
    for e in edges {
        if e.a >= n_nodes || e.b >= n_nodes || e.a == e.b {
            return Err(VineError::DimensionMismatch(format!(
                "edge ({}, {}) outside node range {n_nodes}",
                e.a, e.b
            )));
        }
    }

    let mut in_tree = vec![false; n_nodes];
    in_tree[0] = true;
    let mut chosen = Vec::with_capacity(n_nodes - 1);
    for _ in 1..n_nodes {
        let mut best: Option<usize> = None;
        for (i, e) in edges.iter().enumerate() {
            if in_tree[e.a] == in_tree[e.b] {
                continue; // not a crossing edge
            }
            let better = match best {
                None => true,
                Some(j) => {
                    let cur = &edges[j];
                    e.weight > cur.weight
                        || (e.weight == cur.weight && e.key() < cur.key())
                }
            };
            if better {
                best = Some(i);
            }
        }
        let Some(i) = best else {
            return Err(VineError::Disconnected(
                "edge set does not connect all nodes".into(),
            ));
        };
        in_tree[edges[i].a] = true;
        in_tree[edges[i].b] = true;
        chosen.push(i);
    }
    chosen.sort_by_key(|&i| edges[i].key());
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_example() {
        // w12=0.54, w13=0.36, w23=0.44 -> edges (1,2) and (2,3).
        let edges = vec![
            WeightedEdge::new(0, 1, 0.54),
            WeightedEdge::new(0, 2, 0.36),
            WeightedEdge::new(1, 2, 0.44),
        ];
        let tree = max_spanning_tree(3, &edges).unwrap();
        let keys: Vec<(usize, usize)> = tree.iter().map(|&i| edges[i].key()).collect();
        assert_eq!(keys, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn two_nodes_single_edge() {
        let edges = vec![WeightedEdge::new(0, 1, 0.1)];
        assert_eq!(max_spanning_tree(2, &edges).unwrap(), vec![0]);
    }

    #[test]
    fn disconnected_is_an_error() {
        let edges = vec![WeightedEdge::new(0, 1, 1.0)];
        assert!(max_spanning_tree(3, &edges).is_err());
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(20240917);
        for _ in 0..25 {
            let n = 5;
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    edges.push(WeightedEdge::new(a, b, rng.random::<f64>()));
                }
            }
            let chosen = max_spanning_tree(n, &edges).unwrap();
            let got: f64 = chosen.iter().map(|&i| edges[i].weight).sum();
            let best = brute_force_best(n, &edges);
            assert!((got - best).abs() < 1e-12, "got {got}, best {best}");
        }
    }

    /// Enumerate all spanning trees by checking every (n-1)-subset.
    fn brute_force_best(n: usize, edges: &[WeightedEdge]) -> f64 {
        let m = edges.len();
        let mut best = f64::NEG_INFINITY;
        let k = n - 1;
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            // connectivity check
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
                let (ra, rb) = (
                    find(&mut parent, edges[ei].a),
                    find(&mut parent, edges[ei].b),
                );
                if ra == rb {
                    acyclic = false;
                    break;
                }
                parent[ra] = rb;
            }
            if acyclic {
                let w: f64 = subset.iter().map(|&i| edges[i].weight).sum();
                best = best.max(w);
            }
            // next k-subset
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
}
