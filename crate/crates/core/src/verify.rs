//! Exhaustive certificates: cliques, unique extension, proper colouring,
//! rainbow cliques and spanning sets of pattern colourings.

use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, malformed, Error, Result};
use crate::graph::{EdgeColour, PartiteGeometricGraph};
use crate::pattern::PatternGraph;

/// Stored witnesses per report; counts stay exact beyond it.
pub const MAX_WITNESSES: usize = 1000;
/// Largest pattern [`find_min_c_spanning`] searches exhaustively.
pub const MAX_SPANNING_VERTICES: usize = 12;

/// Neighbours above each vertex, sorted.
fn forward_adjacency(g: &PartiteGeometricGraph) -> Vec<Vec<usize>> {
    let mut fwd = vec![Vec::new(); g.vertex_count()];
    for e in g.edges() {
        fwd[e.u].push(e.v);
    }
    for list in fwd.iter_mut() {
        list.sort_unstable();
    }
    fwd
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn count_from(fwd: &[Vec<usize>], cand: &[usize], need: usize) -> Option<u64> {
    if need == 0 {
        return Some(1);
    }
    if need == 1 {
        return Some(cand.len() as u64);
    }
    let mut total: u64 = 0;
    for (i, &v) in cand.iter().enumerate() {
        if cand.len() - i < need {
            break;
        }
        let next = intersect(&cand[i + 1..], &fwd[v]);
        if next.len() + 1 < need {
            continue;
        }
        total = total.checked_add(count_from(fwd, &next, need - 1)?)?;
    }
    Some(total)
}

fn visit_from<F: FnMut(&[usize]) -> ControlFlow<()>>(
    fwd: &[Vec<usize>],
    cand: &[usize],
    clique: &mut Vec<usize>,
    t: usize,
    visit: &mut F,
) -> ControlFlow<()> {
    if clique.len() == t {
        return visit(clique);
    }
    let need = t - clique.len();
    for (i, &v) in cand.iter().enumerate() {
        if cand.len() - i < need {
            break;
        }
        let next = intersect(&cand[i + 1..], &fwd[v]);
        clique.push(v);
        visit_from(fwd, &next, clique, t, visit)?;
        clique.pop();
    }
    ControlFlow::Continue(())
}

fn check_order(t: usize) -> Result<()> {
    if t < 1 {
        return Err(invalid("clique order must be at least 1"));
    }
    Ok(())
}

/// Number of `K_t` in `g`, counted in parallel over the smallest vertex.
pub fn enumerate_cliques(g: &PartiteGeometricGraph, t: usize) -> Result<u64> {
    check_order(t)?;
    let fwd = forward_adjacency(g);
    let counts: Option<Vec<u64>> = (0..g.vertex_count())
        .into_par_iter()
        .map(|v| count_from(&fwd, &fwd[v], t - 1))
        .collect();
    counts
        .ok_or(Error::Overflow)?
        .into_iter()
        .try_fold(0u64, |acc, c| {
            acc.checked_add(c).filter(|&s| s <= i64::MAX as u64)
        })
        .ok_or(Error::Overflow)
}

/// Calls `visit` on every `K_t` (sorted vertex ids) in lexicographic order
/// until it breaks.
pub fn for_each_clique<F: FnMut(&[usize]) -> ControlFlow<()>>(
    g: &PartiteGeometricGraph,
    t: usize,
    mut visit: F,
) -> Result<()> {
    check_order(t)?;
    let fwd = forward_adjacency(g);
    let mut clique = Vec::with_capacity(t);
    for v in 0..g.vertex_count() {
        clique.clear();
        clique.push(v);
        if visit_from(&fwd, &fwd[v], &mut clique, t, &mut visit).is_break() {
            break;
        }
    }
    Ok(())
}

/// Every `K_t` in lexicographic order.
pub fn list_cliques(g: &PartiteGeometricGraph, t: usize) -> Result<Vec<Vec<usize>>> {
    check_order(t)?;
    let fwd = forward_adjacency(g);
    let per_start: Vec<Vec<Vec<usize>>> = (0..g.vertex_count())
        .into_par_iter()
        .map(|v| {
            let mut found = Vec::new();
            let mut clique = vec![v];
            let _ = visit_from(&fwd, &fwd[v], &mut clique, t, &mut |k: &[usize]| {
                found.push(k.to_vec());
                ControlFlow::Continue(())
            });
            found
        })
        .collect();
    Ok(per_start.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionViolation {
    pub kr: Vec<usize>,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub r: usize,
    pub s: usize,
    pub ks_count: u64,
    /// Distinct `K_r` lying in at least one `K_s`.
    pub kr_in_ks_count: u64,
    /// Distinct `K_r` lying in two or more `K_s`.
    pub violation_count: u64,
    /// The first [`MAX_WITNESSES`] violations in enumeration order.
    pub violations: Vec<ExtensionViolation>,
}

impl UniquenessReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Checks that every `K_r` of `g` lies in at most one `K_s`.
pub fn check_unique_extension(
    g: &PartiteGeometricGraph,
    r: usize,
    s: usize,
) -> Result<UniquenessReport> {
    if r < 1 || r >= s {
        return Err(invalid(format!("need 1 <= r < s, got r = {r}, s = {s}")));
    }
    let big = list_cliques(g, s)?;
    let mut owner: HashMap<Vec<usize>, (usize, bool)> = HashMap::new();
    let mut violations = Vec::new();
    let mut violation_count = 0u64;
    for (id, ks) in big.iter().enumerate() {
        for kr in ks.iter().copied().combinations(r) {
            match owner.get_mut(&kr) {
                None => {
                    owner.insert(kr, (id, false));
                }
                Some((first, flagged)) => {
                    if !*flagged {
                        *flagged = true;
                        violation_count += 1;
                        if violations.len() < MAX_WITNESSES {
                            violations.push(ExtensionViolation {
                                kr,
                                first: big[*first].clone(),
                                second: ks.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(UniquenessReport {
        r,
        s,
        ks_count: big.len() as u64,
        kr_in_ks_count: owner.len() as u64,
        violation_count,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColourClash {
    pub vertex: usize,
    pub colour: EdgeColour,
    pub first: (usize, usize),
    pub second: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColouringReport {
    pub proper: bool,
    pub clash_count: u64,
    pub clashes: Vec<ColourClash>,
}

fn require_colours(g: &PartiteGeometricGraph) -> Result<()> {
    if g.edge_count() > 0 && !g.is_coloured() {
        return Err(malformed("edges", "graph edges carry no colours"));
    }
    Ok(())
}

/// Reports every vertex at which two incident edges share a colour.
pub fn is_proper_colouring(g: &PartiteGeometricGraph) -> Result<ColouringReport> {
    require_colours(g)?;
    let mut seen: HashMap<(usize, EdgeColour), (usize, usize)> = HashMap::new();
    let mut clashes = Vec::new();
    let mut clash_count = 0;
    for e in g.edges() {
        let colour = e.colour.expect("checked above");
        for x in [e.u, e.v] {
            if let Some(&first) = seen.get(&(x, colour)) {
                clash_count += 1;
                if clashes.len() < MAX_WITNESSES {
                    clashes.push(ColourClash {
                        vertex: x,
                        colour,
                        first,
                        second: (e.u, e.v),
                    });
                }
            } else {
                seen.insert((x, colour), (e.u, e.v));
            }
        }
    }
    Ok(ColouringReport {
        proper: clash_count == 0,
        clash_count,
        clashes,
    })
}

fn rainbow_from(
    g: &PartiteGeometricGraph,
    fwd: &[Vec<usize>],
    cand: &[usize],
    clique: &mut Vec<usize>,
    used: &mut Vec<EdgeColour>,
    t: usize,
) -> bool {
    if clique.len() == t {
        return true;
    }
    let need = t - clique.len();
    for (i, &v) in cand.iter().enumerate() {
        if cand.len() - i < need {
            break;
        }
        let mark = used.len();
        let mut fresh = true;
        for &u in clique.iter() {
            let colour = g.colour(u, v).expect("clique edges exist and are coloured");
            if used.contains(&colour) {
                fresh = false;
                break;
            }
            used.push(colour);
        }
        if fresh {
            let next = intersect(&cand[i + 1..], &fwd[v]);
            clique.push(v);
            if rainbow_from(g, fwd, &next, clique, used, t) {
                return true;
            }
            clique.pop();
        }
        used.truncate(mark);
    }
    false
}

/// Lexicographically first `K_t` whose edges all carry distinct colours.
pub fn find_rainbow_clique(g: &PartiteGeometricGraph, t: usize) -> Result<Option<Vec<usize>>> {
    if t < 2 {
        return Err(invalid("rainbow cliques need t >= 2"));
    }
    require_colours(g)?;
    let fwd = forward_adjacency(g);
    Ok((0..g.vertex_count()).into_par_iter().find_map_first(|v| {
        let mut clique = vec![v];
        let mut used = Vec::new();
        rainbow_from(g, &fwd, &fwd[v], &mut clique, &mut used, t).then_some(clique)
    }))
}

/// Greedy colour closure: a vertex joins when one of its edges into the set
/// repeats a colour already spanned by the set.
pub fn is_c_spanning(h: &PatternGraph, colouring: &[usize], start: &[usize]) -> bool {
    let n = h.vertex_count();
    let mut inside = vec![false; n];
    for &v in start {
        inside[v] = true;
    }
    let mut spanned: BTreeSet<usize> = BTreeSet::new();
    let absorb = |inside: &[bool], spanned: &mut BTreeSet<usize>| {
        for (&(u, v), &k) in h.edges.iter().zip(colouring) {
            if inside[u] && inside[v] {
                spanned.insert(k);
            }
        }
    };
    absorb(&inside, &mut spanned);
    loop {
        let joiner = h.edges.iter().zip(colouring).find_map(|(&(u, v), k)| {
            if !spanned.contains(k) {
                None
            } else if inside[u] && !inside[v] {
                Some(v)
            } else if inside[v] && !inside[u] {
                Some(u)
            } else {
                None
            }
        });
        match joiner {
            Some(v) => {
                inside[v] = true;
                absorb(&inside, &mut spanned);
            }
            None => return inside.iter().all(|&x| x),
        }
    }
}

/// Smallest spanning set, lexicographically first among those of its size,
/// optionally containing both endpoints of `required_edge`.
pub fn find_min_c_spanning(
    h: &PatternGraph,
    colouring: &[usize],
    required_edge: Option<(usize, usize)>,
) -> Result<Vec<usize>> {
    let n = h.vertex_count();
    if n > MAX_SPANNING_VERTICES {
        return Err(Error::Resource(format!(
            "exhaustive spanning-set search is limited to {MAX_SPANNING_VERTICES} vertices, pattern has {n}"
        )));
    }
    if let Some((u, v)) = required_edge {
        if h.edge_index(u, v).is_none() {
            return Err(invalid(format!("({u}, {v}) is not an edge of the pattern")));
        }
    }
    for size in 0..=n {
        let found = (0..n).combinations(size).find(|set| {
            required_edge.is_none_or(|(u, v)| set.contains(&u) && set.contains(&v))
                && is_c_spanning(h, colouring, set)
        });
        if let Some(set) = found {
            return Ok(set);
        }
    }
    unreachable!("the whole vertex set spans")
}

fn count_copies_from(
    g: &PartiteGeometricGraph,
    adj: &[Vec<usize>],
    earlier: &[Vec<usize>],
    image: &mut Vec<usize>,
) -> Option<u64> {
    let i = image.len();
    if i == earlier.len() {
        return Some(1);
    }
    let mut total: u64 = 0;
    for x in g.part_range(i) {
        if earlier[i]
            .iter()
            .all(|&j| adj[image[j]].binary_search(&x).is_ok())
        {
            image.push(x);
            total = total.checked_add(count_copies_from(g, adj, earlier, image)?)?;
            image.pop();
        }
    }
    Some(total)
}

/// Number of copies of `h` that place pattern vertex `v` in part `v` of `g`.
pub fn count_pattern_copies(g: &PartiteGeometricGraph, h: &PatternGraph) -> Result<u64> {
    let n = h.vertex_count();
    if g.part_count() != n {
        return Err(invalid(format!(
            "graph has {} parts, pattern has {n} vertices",
            g.part_count()
        )));
    }
    if n == 0 {
        return Ok(1);
    }
    let adj = g.adjacency();
    let mut earlier = vec![Vec::new(); n];
    for &(u, v) in &h.edges {
        earlier[u.max(v)].push(u.min(v));
    }
    let counts: Option<Vec<u64>> = g
        .part_range(0)
        .into_par_iter()
        .map(|x| count_copies_from(g, &adj, &earlier, &mut vec![x]))
        .collect();
    counts
        .ok_or(Error::Overflow)?
        .into_iter()
        .try_fold(0u64, |acc, c| {
            acc.checked_add(c).filter(|&s| s <= i64::MAX as u64)
        })
        .ok_or(Error::Overflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphMeta, Part, Vertex};

    pub(crate) fn graph(sizes: &[usize], edges: &[(usize, usize)]) -> PartiteGeometricGraph {
        let parts = sizes
            .iter()
            .enumerate()
            .map(|(p, &n)| Part {
                label: p.to_string(),
                vertices: (0..n)
                    .map(|index| Vertex {
                        index,
                        coords: vec![],
                    })
                    .collect(),
            })
            .collect();
        let edges = edges
            .iter()
            .map(|&(u, v)| Edge { u, v, colour: None })
            .collect();
        PartiteGeometricGraph::new(parts, edges, GraphMeta::default()).unwrap()
    }

    fn complete_multipartite(sizes: &[usize]) -> PartiteGeometricGraph {
        let mut owner = Vec::new();
        for (p, &n) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat_n(p, n));
        }
        let edges: Vec<_> = (0..owner.len())
            .tuple_combinations()
            .filter(|&(u, v)| owner[u] != owner[v])
            .collect();
        graph(sizes, &edges)
    }

    fn coloured(g: &PartiteGeometricGraph, colours: &[(usize, usize)]) -> PartiteGeometricGraph {
        let mut it = colours.iter();
        g.map_edges(|e| {
            let &(kappa, l) = it.next().unwrap();
            Some(Edge {
                colour: Some(EdgeColour { kappa, l }),
                ..*e
            })
        })
        .unwrap()
    }

    #[test]
    fn tripartite_counts() {
        let g = complete_multipartite(&[2, 2, 2]);
        assert_eq!(enumerate_cliques(&g, 3).unwrap(), 8);
        assert_eq!(enumerate_cliques(&g, 1).unwrap(), 6);
        assert_eq!(enumerate_cliques(&g, 2).unwrap(), 12);
        assert_eq!(enumerate_cliques(&g, 4).unwrap(), 0);
        assert!(enumerate_cliques(&g, 0).is_err());
        let listed = list_cliques(&g, 3).unwrap();
        assert_eq!(listed.len(), 8);
        assert!(listed.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_graph_has_no_edges() {
        let g = graph(&[3, 3], &[]);
        assert_eq!(enumerate_cliques(&g, 2).unwrap(), 0);
    }

    #[test]
    fn tripartite_violations() {
        let g = complete_multipartite(&[2, 2, 2]);
        let report = check_unique_extension(&g, 2, 3).unwrap();
        assert_eq!(report.ks_count, 8);
        assert_eq!(report.kr_in_ks_count, 12);
        assert_eq!(report.violation_count, 12);
        assert_eq!(report.violations.len(), 12);
        let w = &report.violations[0];
        assert_ne!(w.first, w.second);
        assert!(w
            .kr
            .iter()
            .all(|v| w.first.contains(v) && w.second.contains(v)));
        assert!(check_unique_extension(&g, 3, 3).is_err());
    }

    #[test]
    fn no_ks_is_vacuous() {
        let g = complete_multipartite(&[3, 3]);
        let report = check_unique_extension(&g, 2, 3).unwrap();
        assert!(report.passed());
        assert_eq!(report.ks_count, 0);
    }

    #[test]
    fn star_clash() {
        let g = graph(&[1, 1, 1], &[(0, 1), (0, 2)]);
        let g = coloured(&g, &[(0, 0), (0, 0)]);
        let report = is_proper_colouring(&g).unwrap();
        assert!(!report.proper);
        assert_eq!(report.clash_count, 1);
        assert_eq!(report.clashes[0].vertex, 0);
    }

    #[test]
    fn empty_colouring_is_proper() {
        let g = graph(&[2, 2], &[]);
        assert!(is_proper_colouring(&g).unwrap().proper);
        assert_eq!(find_rainbow_clique(&g, 2).unwrap(), None);
    }

    #[test]
    fn uncoloured_edges_are_malformed() {
        let g = graph(&[1, 1], &[(0, 1)]);
        assert!(matches!(
            is_proper_colouring(&g),
            Err(Error::MalformedInput { .. })
        ));
        assert!(matches!(
            find_rainbow_clique(&g, 2),
            Err(Error::MalformedInput { .. })
        ));
    }

    #[test]
    fn triangle_is_rainbow_under_proper_colouring() {
        let g = graph(&[1, 1, 1], &[(0, 1), (0, 2), (1, 2)]);
        let g = coloured(&g, &[(0, 0), (1, 0), (2, 0)]);
        assert_eq!(find_rainbow_clique(&g, 3).unwrap(), Some(vec![0, 1, 2]));
        assert_eq!(find_rainbow_clique(&g, 2).unwrap(), Some(vec![0, 1]));
    }

    #[test]
    fn repeated_colour_blocks_k4() {
        let g = complete_multipartite(&[1, 1, 1, 1]);
        // edges in order 01 02 03 12 13 23; 01 and 23 share a colour
        let g = coloured(&g, &[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (0, 0)]);
        assert_eq!(find_rainbow_clique(&g, 4).unwrap(), None);
        assert!(find_rainbow_clique(&g, 3).unwrap().is_some());
    }

    fn k4_shared() -> (PatternGraph, Vec<usize>) {
        let h = PatternGraph::complete(4, 1);
        // 12 34 share colour 0
        let colouring = h
            .edges
            .iter()
            .enumerate()
            .map(|(i, &e)| if e == (0, 1) || e == (2, 3) { 0 } else { i + 1 })
            .collect();
        (h, colouring)
    }

    #[test]
    fn spanning_examples() {
        let (h, col) = k4_shared();
        assert!(is_c_spanning(&h, &col, &[0, 1, 2, 3]));
        assert!(is_c_spanning(&h, &col, &[0, 1, 2]));
        assert!(!is_c_spanning(&h, &col, &[0, 1]));
        assert_eq!(find_min_c_spanning(&h, &col, None).unwrap(), vec![0, 1, 2]);
        assert_eq!(
            find_min_c_spanning(&h, &col, Some((2, 3))).unwrap(),
            vec![0, 2, 3]
        );
    }

    #[test]
    fn spanning_search_is_bounded() {
        let h = PatternGraph::complete(13, 0);
        let col: Vec<usize> = (0..h.edges.len()).collect();
        assert!(matches!(
            find_min_c_spanning(&h, &col, None),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn copies_of_path_in_three_parts() {
        // pattern 0-1-2 path, parts of sizes 2,2,2
        let h = PatternGraph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        let g = complete_multipartite(&[2, 2, 2]);
        assert_eq!(count_pattern_copies(&g, &h).unwrap(), 8);
        let g = graph(&[2, 1, 2], &[(0, 2), (1, 2), (2, 3), (2, 4)]);
        assert_eq!(count_pattern_copies(&g, &h).unwrap(), 4);
    }
}
