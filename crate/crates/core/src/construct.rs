//! Generalized Ruzsa–Szemerédi graphs `G`, `G'` and the Behrend grid baseline.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, dot, sample_unit_vector};
use crate::graph::{Edge, GraphMeta, Part, PartiteGeometricGraph, Vertex};
use crate::reference::ReferenceConfiguration;
use crate::seed;

/// Parts at least this large use the sorted sweep in [`prune`].
const BRUTE_FORCE_PRUNE_LIMIT: usize = 512;

/// `n` uniform points on `S^d` for part `part`, from their own stream.
pub(crate) fn sample_part(root: u64, part: usize, n: usize, d: usize, label: String) -> Part {
    let mut rng = seed::stream(root, &[seed::VERTICES, part as u64]);
    Part {
        label,
        vertices: (0..n)
            .map(|index| Vertex {
                index,
                coords: sample_unit_vector(d, &mut rng).into_coords(),
            })
            .collect(),
    }
}

/// All edges `xy` between parts `a < b` listed in `targets` with
/// `|⟨x, y⟩ - target| < c`.
pub(crate) fn threshold_edges(
    parts: &[Part],
    targets: &[(usize, usize, f64)],
    c: f64,
) -> Vec<Edge> {
    let mut offsets = vec![0];
    for p in parts {
        offsets.push(offsets.last().unwrap() + p.vertices.len());
    }
    targets
        .iter()
        .flat_map(|&(a, b, target)| {
            let (pa, pb) = (&parts[a].vertices, &parts[b].vertices);
            let (oa, ob) = (offsets[a], offsets[b]);
            pa.par_iter()
                .enumerate()
                .flat_map_iter(|(i, x)| {
                    pb.iter().enumerate().filter_map(move |(j, y)| {
                        ((dot(&x.coords, &y.coords) - target).abs() < c).then_some(Edge {
                            u: oa + i,
                            v: ob + j,
                            colour: None,
                        })
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `G_{N,d,c}`: `s` parts of `n` uniform points on `S^d`, with `x ∈ V_a` and
/// `y ∈ V_b` adjacent when `|⟨x, y⟩ - ⟨p_a, p_b⟩| < c`.
pub fn build_g(
    config: &ReferenceConfiguration,
    n: usize,
    d: usize,
    c: f64,
    root_seed: u64,
) -> Result<PartiteGeometricGraph> {
    if n < 1 {
        return Err(invalid("N must be at least 1"));
    }
    if d < config.r {
        return Err(invalid(format!(
            "d = {d} must be at least r = {}",
            config.r
        )));
    }
    if !(c >= 0.0) {
        return Err(invalid(format!("threshold c = {c} must be non-negative")));
    }
    let parts: Vec<Part> = (0..config.s)
        .into_par_iter()
        .map(|a| sample_part(root_seed, a, n, d, format!("{}", a + 1)))
        .collect();
    let targets: Vec<(usize, usize, f64)> = (0..config.s)
        .flat_map(|a| (a + 1..config.s).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, config.gram[a][b]))
        .collect();
    let edges = threshold_edges(&parts, &targets, c);
    let meta = GraphMeta {
        kind: "G".into(),
        config: Some(config.id.clone()),
        r: Some(config.r),
        s: Some(config.s),
        n: Some(n),
        d: Some(d),
        c: Some(c),
        seed: Some(root_seed),
        ..GraphMeta::default()
    };
    PartiteGeometricGraph::new(parts, edges, meta)
}

/// Marks every vertex with a same-part vertex at distance `< radius`
/// (`<= radius` when `inclusive`).
pub(crate) fn close_pairs(g: &PartiteGeometricGraph, radius: f64, inclusive: bool) -> Vec<bool> {
    let close = |x: &[f64], y: &[f64]| {
        let dist = distance(x, y);
        if inclusive {
            dist <= radius
        } else {
            dist < radius
        }
    };
    let mut doomed = vec![false; g.vertex_count()];
    for p in 0..g.part_count() {
        let ids: Vec<usize> = g.part_range(p).collect();
        let flags: Vec<bool> = if ids.len() < BRUTE_FORCE_PRUNE_LIMIT {
            ids.par_iter()
                .map(|&u| {
                    ids.iter()
                        .any(|&v| v != u && close(g.coords(u), g.coords(v)))
                })
                .collect()
        } else {
            // Sweep along the first coordinate: points closer than the radius
            // differ by less than the radius there too.
            let mut order = ids.clone();
            order.sort_by(|&u, &v| g.coords(u)[0].total_cmp(&g.coords(v)[0]));
            let window = radius * (1.0 + 1e-9) + 1e-12;
            let mut byrank = vec![false; order.len()];
            for i in 0..order.len() {
                let xi = g.coords(order[i]);
                for j in i + 1..order.len() {
                    let xj = g.coords(order[j]);
                    if xj[0] - xi[0] > window {
                        break;
                    }
                    if close(xi, xj) {
                        byrank[i] = true;
                        byrank[j] = true;
                    }
                }
            }
            let mut flags = vec![false; ids.len()];
            for (rank, &v) in order.iter().enumerate() {
                flags[v - ids[0]] = byrank[rank];
            }
            flags
        };
        for (&v, f) in ids.iter().zip(flags) {
            doomed[v] = f;
        }
    }
    doomed
}

/// Deletes every vertex that has another vertex of its part strictly within
/// `radius`; both members of a close pair go.
pub fn prune(g: &PartiteGeometricGraph, radius: f64) -> PartiteGeometricGraph {
    let doomed = close_pairs(g, radius, false);
    let keep: Vec<bool> = doomed.iter().map(|d| !d).collect();
    let mut out = g.induced(&keep);
    out.meta.prune_radius = Some(radius);
    out
}

/// `G'_{N,d,c}`: [`build_g`] followed by [`prune`] at radius `M √c`.
pub fn build_g_prime(
    config: &ReferenceConfiguration,
    n: usize,
    d: usize,
    c: f64,
    root_seed: u64,
) -> Result<PartiteGeometricGraph> {
    let g = build_g(config, n, d, c, root_seed)?;
    let mut out = prune(&g, config.prune_radius(c));
    out.meta.kind = "G'".into();
    Ok(out)
}

/// Largest lattice instance [`behrend_graph`] accepts, measured in `k^dgrid`.
pub const BEHREND_GRID_LIMIT: usize = 1_000_000;
/// Largest total vertex count across the three parts.
pub const BEHREND_VERTEX_LIMIT: usize = 20_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BehrendGraph {
    pub graph: PartiteGeometricGraph,
    /// The shell `‖x‖² = m`.
    pub m: u64,
    /// Points of `{1..k}^dgrid` on the shell, lexicographic.
    pub set: Vec<Vec<u64>>,
}

fn grid_points(side: u64, dim: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (1..=side).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn grid_index(point: &[u64], side: u64) -> usize {
    point
        .iter()
        .fold(0usize, |acc, &x| acc * side as usize + (x - 1) as usize)
}

fn square_norm(p: &[u64]) -> u64 {
    p.iter().map(|x| x * x).sum()
}

/// Non-negative integer vectors of squared norm `m` with entries `<= bound`.
fn shell_steps(m: u64, dim: usize, bound: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(dim);
    fn rec(rest: u64, dim: usize, bound: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == dim {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let mut x = 0;
        while x <= bound && x * x <= rest {
            cur.push(x);
            rec(rest - x * x, dim, bound, cur, out);
            cur.pop();
            x += 1;
        }
    }
    rec(m, dim, bound, &mut cur, &mut out);
    out
}

/// Tripartite lattice graph on `X = [k]^d`, `Y = [2k]^d`, `Z = [3k]^d` over
/// the most populated shell `A = [k]^d ∩ {‖x‖² = m}` (smallest `m` on ties).
///
/// `xy` is an edge when `‖y - x‖² = m` and `y ≥ x` coordinatewise, `yz` when
/// `‖z - y‖² = m` and `z ≥ y`, and `xz` when `‖z - x‖² = 4m`, `z ≥ x` and
/// `z - x` has even coordinates.
pub fn behrend_graph(k: usize, dgrid: usize) -> Result<BehrendGraph> {
    if k < 2 || dgrid < 1 {
        return Err(invalid(format!(
            "behrend_graph needs k >= 2 and dgrid >= 1, got {k}, {dgrid}"
        )));
    }
    let side = k as u64;
    let sizes: Vec<Option<usize>> = (1..=3).map(|t| (t * k).checked_pow(dgrid as u32)).collect();
    let within = |n: Option<usize>, limit: usize| n.is_some_and(|n| n <= limit);
    let total = sizes
        .iter()
        .try_fold(0usize, |acc, s| s.and_then(|s| acc.checked_add(s)));
    if !within(sizes[0], BEHREND_GRID_LIMIT) || !within(total, BEHREND_VERTEX_LIMIT) {
        return Err(Error::Resource(format!(
            "Behrend grid k = {k}, dgrid = {dgrid} exceeds the size budget"
        )));
    }

    let xs = grid_points(side, dgrid);
    let max_m = dgrid as u64 * side * side;
    let mut shells = vec![0usize; max_m as usize + 1];
    for p in &xs {
        shells[square_norm(p) as usize] += 1;
    }
    let (m, _) =
        shells.iter().enumerate().fold(
            (0, 0),
            |best, (m, &count)| if count > best.1 { (m, count) } else { best },
        );
    let m = m as u64;
    let set: Vec<Vec<u64>> = xs.iter().filter(|p| square_norm(p) == m).cloned().collect();

    let ys = grid_points(2 * side, dgrid);
    let zs = grid_points(3 * side, dgrid);
    let (ox, oy, oz) = (0, xs.len(), xs.len() + ys.len());
    let steps = shell_steps(m, dgrid, 3 * side);
    let shift = |p: &[u64], step: &[u64], times: u64, limit: u64| -> Option<Vec<u64>> {
        let q: Vec<u64> = p.iter().zip(step).map(|(x, a)| x + times * a).collect();
        q.iter().all(|&x| x <= limit).then_some(q)
    };
    let mut edges = Vec::new();
    for step in steps.iter().filter(|s| s.iter().any(|&x| x > 0)) {
        for x in &xs {
            if let Some(y) = shift(x, step, 1, 2 * side) {
                edges.push(Edge {
                    u: ox + grid_index(x, side),
                    v: oy + grid_index(&y, 2 * side),
                    colour: None,
                });
            }
            if let Some(z) = shift(x, step, 2, 3 * side) {
                edges.push(Edge {
                    u: ox + grid_index(x, side),
                    v: oz + grid_index(&z, 3 * side),
                    colour: None,
                });
            }
        }
        for y in &ys {
            if let Some(z) = shift(y, step, 1, 3 * side) {
                edges.push(Edge {
                    u: oy + grid_index(y, 2 * side),
                    v: oz + grid_index(&z, 3 * side),
                    colour: None,
                });
            }
        }
    }
    let part = |label: &str, pts: Vec<Vec<u64>>| Part {
        label: label.into(),
        vertices: pts
            .into_iter()
            .enumerate()
            .map(|(index, p)| Vertex {
                index,
                coords: p.into_iter().map(|x| x as f64).collect(),
            })
            .collect(),
    };
    let parts = vec![part("X", xs), part("Y", ys), part("Z", zs)];
    let meta = GraphMeta {
        kind: "behrend".into(),
        n: Some(k),
        d: Some(dgrid),
        ..GraphMeta::default()
    };
    let graph = PartiteGeometricGraph::new(parts, edges, meta)?;
    Ok(BehrendGraph { graph, m, set })
}
