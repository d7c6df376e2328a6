//! Properly coloured graphs without rainbow cliques: `F`, `F'`, `F''`, and
//! the product power that multiplies clique counts.
//!
//! Given a rainbow spec, `F` puts a part of random unit vectors (or a single
//! zero vector) on every pattern vertex and joins pattern-adjacent parts by
//! the inner-product threshold rule. `F'` thins each part so that nearby
//! points cannot both survive. `F''` then keeps an edge `xy` of pattern
//! colour `κ` only when `λ_v x + λ_w y` lands within `c1` of one of the
//! rotated palette directions `R_κ q_l`, and colours it `(κ, l)`.

use std::collections::HashMap;

use itertools::Itertools;
use rayon::prelude::*;

use crate::construct::{close_pairs, sample_part, threshold_edges};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    distance, pack_directions, sample_rotation, DirectionPacking, PointIndex, Rotation,
    DEFAULT_PROBE_COUNT,
};
use crate::graph::{Edge, EdgeColour, GraphMeta, Part, PartiteGeometricGraph, Vertex};
use crate::pattern::{is_colour_automorphism, PatternGraph};
use crate::reference::{validate_rainbow_spec, RainbowSpec};
use crate::seed;
use crate::verify::list_cliques;

/// Largest product power [`product_power`] will materialize.
pub const PRODUCT_VERTEX_LIMIT: usize = 2_000_000;
pub const PRODUCT_EDGE_LIMIT: usize = 20_000_000;

/// Validates the spec and rescales it to unit points and targets.
pub fn prepare_spec(spec: &RainbowSpec) -> Result<RainbowSpec> {
    let report = validate_rainbow_spec(spec);
    if !report.valid {
        return Err(Error::InvalidSpec(format!(
            "{} fails validation: {:?}",
            spec.id, report.violations
        )));
    }
    Ok(spec.normalized())
}

/// `c1 = sqrt(12 M0² c)` with `M0` the largest `|λ|` of the normalized spec.
pub fn palette_radius(spec: &RainbowSpec, c: f64) -> f64 {
    let (_, m0) = spec.lambda_range();
    (12.0 * m0 * m0 * c).sqrt()
}

/// Same-part separation `(2/λ) c1` enforced by [`prune_f`].
pub fn prune_f_radius(spec: &RainbowSpec, c1: f64) -> f64 {
    let (lambda, _) = spec.lambda_range();
    2.0 / lambda * c1
}

/// `F_{N,d,c}` for a spec; the spec is validated and normalized first.
pub fn build_f(
    spec: &RainbowSpec,
    n: usize,
    d: usize,
    c: f64,
    root_seed: u64,
) -> Result<PartiteGeometricGraph> {
    let spec = prepare_spec(spec)?;
    let span = validate_rainbow_spec(&spec).m0;
    if d < span {
        return Err(invalid(format!(
            "d = {d} is below the span dimension {span}"
        )));
    }
    if n < 1 {
        return Err(invalid("N must be at least 1"));
    }
    if !(c >= 0.0) {
        return Err(invalid(format!("threshold c = {c} must be non-negative")));
    }
    let parts: Vec<Part> = (0..spec.h.vertex_count())
        .into_par_iter()
        .map(|v| {
            let label = spec.h.labels[v].clone();
            if spec.v0.contains(&v) {
                Part {
                    label,
                    vertices: vec![Vertex {
                        index: 0,
                        coords: vec![0.0; d + 1],
                    }],
                }
            } else {
                sample_part(root_seed, v, n, d, label)
            }
        })
        .collect();
    let inner = |u: usize, v: usize| -> f64 {
        spec.points[u]
            .iter()
            .zip(&spec.points[v])
            .map(|(a, b)| a * b)
            .sum()
    };
    let targets: Vec<(usize, usize, f64)> = spec
        .h
        .edges
        .iter()
        .map(|&(u, v)| (u, v, inner(u, v)))
        .collect();
    let edges = threshold_edges(&parts, &targets, c);
    let meta = GraphMeta {
        kind: "F".into(),
        config: Some(spec.id.clone()),
        r: Some(spec.r),
        n: Some(n),
        d: Some(d),
        c: Some(c),
        seed: Some(root_seed),
        ..GraphMeta::default()
    };
    PartiteGeometricGraph::new(parts, edges, meta)
}

/// `F'`: deletes every vertex with another vertex of its part at distance
/// `<= (2/λ) c1`.
pub fn prune_f(
    f: &PartiteGeometricGraph,
    spec: &RainbowSpec,
    c1: f64,
) -> Result<PartiteGeometricGraph> {
    let spec = prepare_spec(spec)?;
    let radius = prune_f_radius(&spec, c1);
    let doomed = close_pairs(f, radius, true);
    let keep: Vec<bool> = doomed.iter().map(|d| !d).collect();
    let mut out = f.induced(&keep);
    out.meta.kind = "F'".into();
    out.meta.prune_radius = Some(radius);
    out.meta.c1 = Some(c1);
    Ok(out)
}

/// One Haar rotation per pattern colour and a shared direction packing.
#[derive(Clone, Debug)]
pub struct ColourPalette {
    pub c1: f64,
    pub rotations: Vec<Rotation>,
    pub packing: DirectionPacking,
    index: PointIndex,
}

impl ColourPalette {
    /// Rotations come from `[ROTATIONS, κ]` streams and the packing from the
    /// `[PACKING]` stream. For `c1 >= 2/3` no packing exists and the palette
    /// is empty.
    pub fn build(
        colours: usize,
        d: usize,
        c1: f64,
        root_seed: u64,
        probe_count: usize,
    ) -> Result<Self> {
        let rotations = (0..colours)
            .map(|k| {
                sample_rotation(
                    d,
                    &mut seed::stream(root_seed, &[seed::ROTATIONS, k as u64]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let packing = if 3.0 * c1 < 2.0 {
            pack_directions(
                d,
                c1,
                &mut seed::stream(root_seed, &[seed::PACKING]),
                probe_count,
            )?
        } else {
            DirectionPacking {
                dimension: d,
                separation: 3.0 * c1,
                points: Vec::new(),
            }
        };
        let mut index = PointIndex::new(c1, d + 1);
        for (l, q) in packing.points.iter().enumerate() {
            index.insert(l, q.coords().to_vec());
        }
        Ok(Self {
            c1,
            rotations,
            packing,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.packing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packing.is_empty()
    }

    /// Indices `l` with `‖target - R_κ q_l‖ < c1`.
    pub fn matches(&self, kappa: usize, target: &[f64]) -> Vec<usize> {
        let back = self.rotations[kappa]
            .matrix()
            .tr_mul(&nalgebra::DVector::from_column_slice(target));
        let mut found = Vec::new();
        self.index.for_each_near(back.as_slice(), |l, q| {
            if distance(back.as_slice(), q) < self.c1 {
                found.push(l);
            }
        });
        found.sort_unstable();
        found
    }
}

/// Colours each edge of `F'` by its palette match and deletes unmatched
/// edges. Two matches for one edge is an internal invariant violation.
pub fn colour_and_trim(
    fprime: &PartiteGeometricGraph,
    spec: &RainbowSpec,
    palette: &ColourPalette,
) -> Result<PartiteGeometricGraph> {
    let spec = prepare_spec(spec)?;
    if palette.rotations.len() != spec.colour_count() {
        return Err(invalid(format!(
            "palette has {} rotations for {} colours",
            palette.rotations.len(),
            spec.colour_count()
        )));
    }
    let coefficients = spec.edge_coefficients()?;
    let pattern_edge: HashMap<(usize, usize), usize> = spec
        .h
        .edges
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, i))
        .collect();
    let coloured: Vec<Option<Edge>> = fprime
        .edges()
        .par_iter()
        .map(|e| {
            let (pu, pv) = (fprime.part_of(e.u), fprime.part_of(e.v));
            let idx = *pattern_edge.get(&(pu.min(pv), pu.max(pv))).ok_or_else(|| {
                Error::InternalInvariant(format!(
                    "edge between parts {pu}, {pv} is not a pattern edge"
                ))
            })?;
            let (kappa, lu, lv) = coefficients[idx];
            let (lu, lv) = if pu < pv { (lu, lv) } else { (lv, lu) };
            let target: Vec<f64> = fprime
                .coords(e.u)
                .iter()
                .zip(fprime.coords(e.v))
                .map(|(x, y)| lu * x + lv * y)
                .collect();
            match palette.matches(kappa, &target).as_slice() {
                [] => Ok(None),
                [l] => Ok(Some(Edge {
                    colour: Some(EdgeColour { kappa, l: *l }),
                    ..*e
                })),
                many => Err(Error::InternalInvariant(format!(
                    "edge ({}, {}) matches palette points {many:?}",
                    e.u, e.v
                ))),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = PartiteGeometricGraph::new(
        fprime.parts().to_vec(),
        coloured.into_iter().flatten().collect(),
        fprime.meta.clone(),
    )?;
    out.meta.kind = "F''".into();
    out.meta.c1 = Some(palette.c1);
    out.meta.palette_size = Some(palette.len());
    Ok(out)
}

/// `F''_{N,d,c}`: [`build_f`], [`prune_f`] and [`colour_and_trim`] with a
/// palette drawn from `root_seed`.
pub fn build_f_double_prime(
    spec: &RainbowSpec,
    n: usize,
    d: usize,
    c: f64,
    root_seed: u64,
) -> Result<PartiteGeometricGraph> {
    build_f_double_prime_with(spec, n, d, c, root_seed, DEFAULT_PROBE_COUNT)
}

pub fn build_f_double_prime_with(
    spec: &RainbowSpec,
    n: usize,
    d: usize,
    c: f64,
    root_seed: u64,
    probe_count: usize,
) -> Result<PartiteGeometricGraph> {
    let normal = prepare_spec(spec)?;
    let c1 = palette_radius(&normal, c);
    let f = build_f(spec, n, d, c, root_seed)?;
    let fprime = prune_f(&f, spec, c1)?;
    let palette = ColourPalette::build(normal.colour_count(), d, c1, root_seed, probe_count)?;
    colour_and_trim(&fprime, spec, &palette)
}

/// The subgraph formed by the edges lying in some `K_t`, on the vertices
/// those cliques touch.
pub fn clique_core(g: &PartiteGeometricGraph, t: usize) -> Result<PartiteGeometricGraph> {
    let cliques = list_cliques(g, t)?;
    let mut keep = vec![false; g.vertex_count()];
    let mut wanted = std::collections::HashSet::new();
    for k in &cliques {
        for &v in k {
            keep[v] = true;
        }
        for (&u, &v) in k.iter().tuple_combinations() {
            wanted.insert((u, v));
        }
    }
    let trimmed = g.map_edges(|e| wanted.contains(&(e.u, e.v)).then_some(*e))?;
    Ok(trimmed.induced(&keep))
}

/// The pentagon colour automorphisms `π_0..π_5` with `π_i(i) = 0`.
///
/// `π_0` is the identity; for `i >= 1`, `π_i` rotates the pentagon so that
/// `i` lands on `1` and then applies the reflection `(01)(34)`.
pub fn pentagon_automorphisms() -> Vec<Vec<usize>> {
    let swap = |a: usize| match a {
        0 => 1,
        1 => 0,
        3 => 4,
        4 => 3,
        a => a,
    };
    let rotate = |a: usize, k: usize| if a == 0 { 0 } else { (a - 1 + k) % 5 + 1 };
    let mut perms = vec![(0..6).collect::<Vec<_>>()];
    for i in 1..=5 {
        let k = (5 + 1 - i) % 5;
        perms.push((0..6).map(|a| swap(rotate(a, k))).collect());
    }
    perms
}

/// Product power of a coloured `t`-partite graph.
///
/// For permutations `π_1..π_k` of the parts, part `a` of the product is
/// `Π_i V_{π_i(a)}`; two tuples are adjacent when every coordinate pair is
/// an edge, and the edge is coloured by the tuple of coordinate colours.
/// Each distinct colour tuple gets its own `l`, with `κ` taken from the first
/// coordinate.
pub fn product_power(
    g: &PartiteGeometricGraph,
    pattern: &PatternGraph,
    colouring: &[usize],
    perms: &[Vec<usize>],
) -> Result<PartiteGeometricGraph> {
    let t = g.part_count();
    if pattern.vertex_count() != t {
        return Err(invalid(format!(
            "pattern has {} vertices, graph {t} parts",
            pattern.vertex_count()
        )));
    }
    if perms.is_empty() {
        return Err(invalid("product_power needs at least one permutation"));
    }
    for p in perms {
        if !is_colour_automorphism(pattern, colouring, p) {
            return Err(invalid(format!(
                "{p:?} is not a colour automorphism of the pattern"
            )));
        }
    }
    if g.edge_count() > 0 && !g.is_coloured() {
        return Err(invalid("product_power needs a coloured graph"));
    }
    let sizes = g.part_sizes();
    let part_size = |a: usize| {
        perms
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(sizes[p[a]]))
    };
    let total = (0..t).try_fold(0usize, |acc, a| {
        part_size(a).and_then(|s| acc.checked_add(s))
    });
    if !total.is_some_and(|n| n <= PRODUCT_VERTEX_LIMIT) {
        return Err(Error::Resource(format!(
            "product power would exceed {PRODUCT_VERTEX_LIMIT} vertices"
        )));
    }

    // Edges between parts x and y of g, by local indices.
    let mut local: HashMap<(usize, usize), Vec<(usize, usize, EdgeColour)>> = HashMap::new();
    for e in g.edges() {
        let (pu, pv) = (g.part_of(e.u), g.part_of(e.v));
        let (iu, iv) = (e.u - g.part_range(pu).start, e.v - g.part_range(pv).start);
        let colour = e.colour.unwrap_or(EdgeColour { kappa: 0, l: 0 });
        local.entry((pu, pv)).or_default().push((iu, iv, colour));
        local.entry((pv, pu)).or_default().push((iv, iu, colour));
    }
    let empty = Vec::new();
    let mut edge_total = 0usize;
    for (a, b) in (0..t).tuple_combinations() {
        let count = perms.iter().try_fold(1usize, |acc, p| {
            acc.checked_mul(local.get(&(p[a], p[b])).map_or(0, Vec::len))
        });
        edge_total = count
            .and_then(|c| edge_total.checked_add(c))
            .filter(|&n| n <= PRODUCT_EDGE_LIMIT)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "product power would exceed {PRODUCT_EDGE_LIMIT} edges"
                ))
            })?;
    }

    let mut offsets = vec![0usize];
    let parts: Vec<Part> = (0..t)
        .map(|a| {
            let ranges: Vec<_> = perms.iter().map(|p| 0..sizes[p[a]]).collect();
            let vertices: Vec<Vertex> = ranges
                .into_iter()
                .multi_cartesian_product()
                .enumerate()
                .map(|(index, tuple)| Vertex {
                    index,
                    coords: tuple
                        .iter()
                        .zip(perms)
                        .flat_map(|(&i, p)| g.parts()[p[a]].vertices[i].coords.iter().copied())
                        .collect(),
                })
                .collect();
            offsets.push(offsets.last().unwrap() + vertices.len());
            Part {
                label: g.parts()[a].label.clone(),
                vertices,
            }
        })
        .collect();
    // Mixed-radix index of a tuple, first coordinate most significant.
    let flat = |a: usize, tuple: &[usize]| -> usize {
        tuple
            .iter()
            .zip(perms)
            .fold(0, |acc, (&i, p)| acc * sizes[p[a]] + i)
    };

    let mut palette: HashMap<Vec<EdgeColour>, usize> = HashMap::new();
    let mut edges = Vec::with_capacity(edge_total);
    for (a, b) in (0..t).tuple_combinations() {
        let lists: Vec<&Vec<(usize, usize, EdgeColour)>> = perms
            .iter()
            .map(|p| local.get(&(p[a], p[b])).unwrap_or(&empty))
            .collect();
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        for combo in lists.iter().map(|l| l.iter()).multi_cartesian_product() {
            let left: Vec<usize> = combo.iter().map(|x| x.0).collect();
            let right: Vec<usize> = combo.iter().map(|x| x.1).collect();
            let colours: Vec<EdgeColour> = combo.iter().map(|x| x.2).collect();
            let kappa = colours[0].kappa;
            let next = palette.len();
            let l = *palette.entry(colours).or_insert(next);
            edges.push(Edge {
                u: offsets[a] + flat(a, &left),
                v: offsets[b] + flat(b, &right),
                colour: g.is_coloured().then_some(EdgeColour { kappa, l }),
            });
        }
    }
    let meta = GraphMeta {
        kind: "product".into(),
        ..g.meta.clone()
    };
    PartiteGeometricGraph::new(parts, edges, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{kings_spec, kr_rainbow_spec, pentagon_spec};
    use crate::verify::{
        count_pattern_copies, enumerate_cliques, find_rainbow_clique, is_proper_colouring,
    };

    #[test]
    fn zero_part_is_a_singleton() {
        let f = build_f(&pentagon_spec(), 20, 3, 0.2, 1).unwrap();
        assert_eq!(f.parts()[0].vertices.len(), 1);
        assert!(f.coords(0).iter().all(|&x| x == 0.0));
        assert_eq!(f.parts()[1].vertices.len(), 20);
    }

    #[test]
    fn huge_threshold_joins_pattern_edges() {
        let spec = kings_spec(3, 2).unwrap();
        let n = 4;
        let f = build_f(&spec, n, 4, 2.01, 2).unwrap();
        assert_eq!(f.edge_count(), spec.h.edges.len() * n * n);
        let f = build_f(&pentagon_spec(), n, 2, 2.01, 2).unwrap();
        assert_eq!(f.edge_count(), 5 * n + 10 * n * n);
    }

    #[test]
    fn kr_four_edges_between_distinct_parts() {
        let f = build_f(&kr_rainbow_spec(4).unwrap(), 50, 3, 0.1, 3).unwrap();
        assert!(f.edges().iter().all(|e| f.part_of(e.u) != f.part_of(e.v)));
        assert!(f.edge_count() > 0);
    }

    #[test]
    fn f_rejects_low_dimension() {
        assert!(build_f(&kr_rainbow_spec(5).unwrap(), 5, 3, 0.1, 0).is_err());
    }

    #[test]
    fn prune_f_separates_parts() {
        let spec = kr_rainbow_spec(4).unwrap();
        let f = build_f(&spec, 120, 3, 0.05, 4).unwrap();
        let c1 = 0.1;
        let fp = prune_f(&f, &spec, c1).unwrap();
        let radius = prune_f_radius(&spec.normalized(), c1);
        for p in 0..fp.part_count() {
            for u in fp.part_range(p) {
                for v in fp.part_range(p) {
                    if u != v {
                        assert!(distance(fp.coords(u), fp.coords(v)) > radius);
                    }
                }
            }
        }
        let none = prune_f(&f, &spec, 0.0).unwrap();
        assert_eq!(none.vertex_count(), f.vertex_count());
    }

    #[test]
    fn empty_palette_deletes_everything() {
        let spec = kr_rainbow_spec(4).unwrap();
        let g = build_f_double_prime(&spec, 10, 3, 0.5, 5).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.meta.palette_size, Some(0));
    }

    #[test]
    fn small_f_double_prime_is_certified() {
        let spec = kr_rainbow_spec(4).unwrap();
        let g = build_f_double_prime(&spec, 40, 3, 0.01, 6).unwrap();
        assert!(is_proper_colouring(&g).unwrap().proper);
        assert_eq!(find_rainbow_clique(&g, 4).unwrap(), None);
        let normal = spec.normalized();
        for e in g.edges() {
            let (pu, pv) = (g.part_of(e.u), g.part_of(e.v));
            let idx = normal.h.edge_index(pu, pv).unwrap();
            assert_eq!(e.colour.unwrap().kappa, normal.colouring[idx]);
        }
    }

    #[test]
    fn pentagon_perms() {
        let spec = pentagon_spec();
        let perms = pentagon_automorphisms();
        assert_eq!(perms.len(), 6);
        assert_eq!(perms[0], vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(perms[1], vec![1, 0, 2, 4, 3, 5]);
        for (i, p) in perms.iter().enumerate() {
            assert_eq!(p[i], 0);
            assert!(is_colour_automorphism(&spec.h, &spec.colouring, p));
        }
    }

    /// A 6-partite graph made of `copies` coloured pentagon `K_6`s sharing
    /// the centre vertex, part `a` holding one vertex per copy.
    fn pentagon_copies(copies: usize) -> PartiteGeometricGraph {
        let spec = pentagon_spec();
        let parts: Vec<Part> = (0..6)
            .map(|a| Part {
                label: a.to_string(),
                vertices: (0..if a == 0 { 1 } else { copies })
                    .map(|index| Vertex {
                        index,
                        coords: vec![a as f64, index as f64],
                    })
                    .collect(),
            })
            .collect();
        let id = |a: usize, copy: usize| {
            if a == 0 {
                0
            } else {
                1 + (a - 1) * copies + copy
            }
        };
        let mut edges = Vec::new();
        for copy in 0..copies {
            for (i, &(u, v)) in spec.h.edges.iter().enumerate() {
                let (x, y) = (id(u, copy), id(v, copy));
                edges.push(Edge {
                    u: x,
                    v: y,
                    colour: Some(EdgeColour {
                        kappa: spec.colouring[i],
                        l: copy,
                    }),
                });
            }
        }
        PartiteGeometricGraph::new(parts, edges, GraphMeta::default()).unwrap()
    }

    fn naive_k6(g: &PartiteGeometricGraph) -> u64 {
        let adj = g.adjacency();
        let ranges: Vec<_> = (0..6).map(|p| g.part_range(p)).collect();
        ranges
            .into_iter()
            .multi_cartesian_product()
            .filter(|t| {
                t.iter()
                    .tuple_combinations()
                    .all(|(&u, &v)| adj[u].contains(&v))
            })
            .count() as u64
    }

    #[test]
    fn product_multiplies_counts() {
        let spec = pentagon_spec();
        let perms = pentagon_automorphisms();
        for copies in 1..=3 {
            let g = pentagon_copies(copies);
            let base = naive_k6(&g);
            assert_eq!(base, copies as u64);
            let p = product_power(&g, &spec.h, &spec.colouring, &perms).unwrap();
            for a in 0..6 {
                let expected: usize = perms.iter().map(|pi| g.part_sizes()[pi[a]]).product();
                assert_eq!(p.part_sizes()[a], expected);
            }
            assert_eq!(enumerate_cliques(&p, 6).unwrap(), base.pow(6));
            assert_eq!(count_pattern_copies(&p, &spec.h).unwrap(), base.pow(6));
            assert!(is_proper_colouring(&p).unwrap().proper);
            assert_eq!(find_rainbow_clique(&p, 4).unwrap(), None);
        }
    }

    #[test]
    fn product_rejects_non_automorphism() {
        let spec = pentagon_spec();
        let g = pentagon_copies(1);
        let bad = vec![vec![1, 0, 2, 3, 4, 5]];
        assert!(matches!(
            product_power(&g, &spec.h, &spec.colouring, &bad),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn clique_core_keeps_cliques() {
        let g = pentagon_copies(2);
        let core = clique_core(&g, 6).unwrap();
        assert_eq!(core.edge_count(), g.edge_count());
        assert_eq!(enumerate_cliques(&core, 6).unwrap(), 2);
    }
}
