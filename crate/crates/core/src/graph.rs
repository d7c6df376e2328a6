//! The partite geometric graph shared by every construction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Colour `(κ, l)` of an edge of `F''`: the pattern colour and the index of
/// the matched direction in the palette.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct EdgeColour {
    pub kappa: usize,
    pub l: usize,
}

impl From<[usize; 2]> for EdgeColour {
    fn from([kappa, l]: [usize; 2]) -> Self {
        Self { kappa, l }
    }
}

impl From<EdgeColour> for [usize; 2] {
    fn from(c: EdgeColour) -> Self {
        [c.kappa, c.l]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colour: Option<EdgeColour>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// Position in the part at sampling time; survives pruning.
    pub index: usize,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub label: String,
    pub vertices: Vec<Vertex>,
}

/// Provenance of a graph. Absent fields do not apply to the construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub palette_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
}

/// Vertices are numbered globally part by part, in stored order. Edges are
/// kept sorted with `u < v`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartiteGeometricGraph {
    parts: Vec<Part>,
    offsets: Vec<usize>,
    part_of: Vec<usize>,
    edges: Vec<Edge>,
    pub meta: GraphMeta,
}

impl PartiteGeometricGraph {
    /// Validates and normalizes the edge list: endpoints in range and in
    /// distinct parts, no duplicates, and colours either on every edge or on
    /// none.
    pub fn new(parts: Vec<Part>, mut edges: Vec<Edge>, meta: GraphMeta) -> Result<Self> {
        let mut offsets = Vec::with_capacity(parts.len() + 1);
        let mut part_of = Vec::new();
        offsets.push(0);
        for (p, part) in parts.iter().enumerate() {
            part_of.extend(std::iter::repeat_n(p, part.vertices.len()));
            offsets.push(part_of.len());
        }
        let n = part_of.len();
        for e in edges.iter_mut() {
            if e.u >= n || e.v >= n {
                return Err(invalid(format!(
                    "edge ({}, {}) has an endpoint outside 0..{n}",
                    e.u, e.v
                )));
            }
            if part_of[e.u] == part_of[e.v] {
                return Err(invalid(format!(
                    "edge ({}, {}) lies inside part {}",
                    e.u, e.v, part_of[e.u]
                )));
            }
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v))
        {
            return Err(invalid(format!("duplicate edge ({}, {})", w[0].u, w[0].v)));
        }
        let coloured = edges.iter().filter(|e| e.colour.is_some()).count();
        if coloured != 0 && coloured != edges.len() {
            return Err(invalid(format!(
                "{coloured} of {} edges carry a colour",
                edges.len()
            )));
        }
        Ok(Self {
            parts,
            offsets,
            part_of,
            edges,
            meta,
        })
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.part_of.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.vertices.len()).collect()
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.part_of[v]
    }

    /// Global vertex ids of part `p`.
    pub fn part_range(&self, p: usize) -> std::ops::Range<usize> {
        self.offsets[p]..self.offsets[p + 1]
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        let p = self.part_of[v];
        &self.parts[p].vertices[v - self.offsets[p]]
    }

    pub fn coords(&self, v: usize) -> &[f64] {
        &self.vertex(v).coords
    }

    pub fn is_coloured(&self) -> bool {
        !self.edges.is_empty() && self.edges[0].colour.is_some()
    }

    pub fn edge(&self, u: usize, v: usize) -> Option<&Edge> {
        let key = (u.min(v), u.max(v));
        self.edges
            .binary_search_by_key(&key, |e| (e.u, e.v))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn colour(&self, u: usize, v: usize) -> Option<EdgeColour> {
        self.edge(u, v).and_then(|e| e.colour)
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        adj
    }

    /// Subgraph induced by the vertices with `keep[v]`, preserving each
    /// survivor's sampling index and every part (possibly emptied).
    pub fn induced(&self, keep: &[bool]) -> Self {
        let mut new_id = vec![usize::MAX; self.vertex_count()];
        let mut next = 0;
        let parts = self
            .parts
            .iter()
            .enumerate()
            .map(|(p, part)| Part {
                label: part.label.clone(),
                vertices: self
                    .part_range(p)
                    .filter(|&v| keep[v])
                    .map(|v| {
                        new_id[v] = next;
                        next += 1;
                        self.vertex(v).clone()
                    })
                    .collect(),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.u] && keep[e.v])
            .map(|e| Edge {
                u: new_id[e.u],
                v: new_id[e.v],
                colour: e.colour,
            })
            .collect();
        Self::new(parts, edges, self.meta.clone())
            .expect("induced subgraph of a valid graph is valid")
    }

    /// Same vertices, edges filtered and recoloured by `f`.
    pub fn map_edges<F: FnMut(&Edge) -> Option<Edge>>(&self, f: F) -> Result<Self> {
        let edges = self.edges.iter().filter_map(f).collect();
        Self::new(self.parts.clone(), edges, self.meta.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(label: &str, n: usize) -> Part {
        Part {
            label: label.into(),
            vertices: (0..n)
                .map(|i| Vertex {
                    index: i,
                    coords: vec![i as f64],
                })
                .collect(),
        }
    }

    fn e(u: usize, v: usize) -> Edge {
        Edge { u, v, colour: None }
    }

    #[test]
    fn normalizes_and_sorts() {
        let g = PartiteGeometricGraph::new(
            vec![part("a", 2), part("b", 2)],
            vec![e(3, 0), e(1, 2)],
            GraphMeta::default(),
        )
        .unwrap();
        assert_eq!(g.edges()[0], e(0, 3));
        assert_eq!(g.edges()[1], e(1, 2));
        assert_eq!(g.part_of(2), 1);
        assert!(g.edge(3, 0).is_some());
        assert_eq!(g.adjacency()[0], vec![3]);
    }

    #[test]
    fn rejects_bad_edges() {
        let parts = || vec![part("a", 2), part("b", 1)];
        assert!(PartiteGeometricGraph::new(parts(), vec![e(0, 1)], GraphMeta::default()).is_err());
        assert!(PartiteGeometricGraph::new(parts(), vec![e(0, 5)], GraphMeta::default()).is_err());
        assert!(
            PartiteGeometricGraph::new(parts(), vec![e(0, 2), e(2, 0)], GraphMeta::default())
                .is_err()
        );
        let mixed = vec![
            Edge {
                u: 0,
                v: 2,
                colour: Some(EdgeColour { kappa: 0, l: 0 }),
            },
            e(1, 2),
        ];
        assert!(PartiteGeometricGraph::new(parts(), mixed, GraphMeta::default()).is_err());
    }

    #[test]
    fn induced_keeps_indices() {
        let g = PartiteGeometricGraph::new(
            vec![part("a", 3), part("b", 2)],
            vec![e(0, 3), e(2, 4), e(1, 4)],
            GraphMeta::default(),
        )
        .unwrap();
        let h = g.induced(&[true, false, true, true, true]);
        assert_eq!(h.vertex_count(), 4);
        assert_eq!(h.parts()[0].vertices[1].index, 2);
        assert_eq!(h.edges(), &[e(0, 2), e(1, 3)]);
    }
}
