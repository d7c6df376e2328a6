//! Small labelled pattern graphs `H` with edge colourings.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{invalid, Result};

/// A colour id per edge, aligned with [`PatternGraph::edges`].
pub type Colouring = Vec<usize>;

/// A simple graph on vertices `0..labels.len()`; edges are stored as `(u, v)`
/// with `u < v`, in the order given at construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternGraph {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl PatternGraph {
    pub fn new(labels: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut seen = HashMap::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u == v {
                return Err(invalid(format!("self-loop at vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(invalid(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            let e = (u.min(v), u.max(v));
            if seen.insert(e, i).is_some() {
                return Err(invalid(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            normalized.push(e);
        }
        Ok(Self {
            labels,
            edges: normalized,
        })
    }

    /// `K_n` with edges in lexicographic order, labelled `first..first+n`.
    pub fn complete(n: usize, first: usize) -> Self {
        let labels = (0..n).map(|i| (i + first).to_string()).collect();
        let edges = (0..n).tuple_combinations().collect();
        Self { labels, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let e = (u.min(v), u.max(v));
        self.edges.iter().position(|&f| f == e)
    }

    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.vertex_count();
        let mut adj = vec![vec![false; n]; n];
        for &(u, v) in &self.edges {
            adj[u][v] = true;
            adj[v][u] = true;
        }
        adj
    }

    /// All `t`-cliques as sorted vertex lists, lexicographically ordered.
    pub fn cliques(&self, t: usize) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        (0..self.vertex_count())
            .combinations(t)
            .filter(|c| c.iter().tuple_combinations().all(|(&a, &b)| adj[a][b]))
            .collect()
    }

    /// Edge indices of the clique on `vertices`, which must all be adjacent.
    pub fn clique_edges(&self, vertices: &[usize]) -> Vec<usize> {
        vertices
            .iter()
            .tuple_combinations()
            .map(|(&a, &b)| {
                self.edge_index(a, b)
                    .expect("clique vertices must be adjacent")
            })
            .collect()
    }
}

/// Pairs of same-coloured edges meeting at a vertex: `(vertex, colour, e1, e2)`.
pub fn improper_pairs(h: &PatternGraph, colouring: &[usize]) -> Vec<(usize, usize, usize, usize)> {
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, &(u, v)) in h.edges.iter().enumerate() {
        for x in [u, v] {
            match seen.get(&(x, colouring[i])) {
                Some(&j) => out.push((x, colouring[i], j, i)),
                None => {
                    seen.insert((x, colouring[i]), i);
                }
            }
        }
    }
    out
}

/// First `t`-clique of `h` whose edges carry pairwise distinct colours.
pub fn find_rainbow_clique(h: &PatternGraph, colouring: &[usize], t: usize) -> Option<Vec<usize>> {
    h.cliques(t).into_iter().find(|c| {
        let colours: Vec<usize> = h
            .clique_edges(c)
            .into_iter()
            .map(|e| colouring[e])
            .collect();
        colours.iter().all_unique()
    })
}

/// True when the vertex permutation `perm` preserves the colour partition:
/// edges `e`, `f` share a colour iff `perm(e)`, `perm(f)` do.
pub fn is_colour_automorphism(h: &PatternGraph, colouring: &[usize], perm: &[usize]) -> bool {
    let n = h.vertex_count();
    if perm.len() != n || !perm.iter().all_unique() || perm.iter().any(|&p| p >= n) {
        return false;
    }
    let mut image = Vec::with_capacity(h.edges.len());
    for &(u, v) in &h.edges {
        match h.edge_index(perm[u], perm[v]) {
            Some(e) => image.push(e),
            None => return false,
        }
    }
    (0..h.edges.len()).tuple_combinations().all(|(e, f)| {
        (colouring[e] == colouring[f]) == (colouring[image[e]] == colouring[image[f]])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_counts() {
        let k5 = PatternGraph::complete(5, 1);
        assert_eq!(k5.edges.len(), 10);
        assert_eq!(k5.cliques(3).len(), 10);
        assert_eq!(k5.cliques(5).len(), 1);
        assert_eq!(k5.labels[0], "1");
    }

    #[test]
    fn rejects_malformed_edges() {
        let labels = vec!["a".into(), "b".into()];
        assert!(PatternGraph::new(labels.clone(), vec![(0, 0)]).is_err());
        assert!(PatternGraph::new(labels.clone(), vec![(0, 2)]).is_err());
        assert!(PatternGraph::new(labels, vec![(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn triangle_is_always_rainbow_when_proper() {
        let k3 = PatternGraph::complete(3, 0);
        assert!(improper_pairs(&k3, &[0, 1, 2]).is_empty());
        assert!(find_rainbow_clique(&k3, &[0, 1, 2], 3).is_some());
        assert_eq!(improper_pairs(&k3, &[0, 0, 1]).len(), 1);
    }

    #[test]
    fn identity_is_an_automorphism() {
        let k4 = PatternGraph::complete(4, 0);
        let col = vec![0, 1, 2, 2, 1, 0];
        assert!(is_colour_automorphism(&k4, &col, &[0, 1, 2, 3]));
        assert!(is_colour_automorphism(&k4, &col, &[1, 0, 3, 2]));
        assert!(!is_colour_automorphism(&k4, &col, &[0, 1, 2, 2]));
    }
}
