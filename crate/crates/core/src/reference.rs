//! Reference configurations on `S^{r-1}` and rainbow specifications.
//!
//! A [`ReferenceConfiguration`] fixes the target Gram matrix of the
//! Ruzsa–Szemerédi-type graphs, together with the coefficient tables that
//! express every reference point in every basis of `r` reference points. A
//! [`RainbowSpec`] fixes a pattern graph `H`, a proper colouring of it, a
//! drawing `v -> p_v` and, for every colour, a target `z_κ` that is a linear
//! combination of the endpoints of each edge of that colour.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, norm, sample_unit_vector};
use crate::pattern::{self, Colouring, PatternGraph};
use crate::seed;

pub const DEFAULT_SIGMA_MIN: f64 = 1e-3;
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;
/// Bound on `‖Σ λ p_b - p_a‖` for stored coefficient rows.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Relative singular-value cutoff used for span dimensions.
const RANK_TOLERANCE: f64 = 1e-9;

/// Coefficients of `p_target` in the basis `{p_b : b ∈ subset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub subset: Vec<usize>,
    pub target: usize,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfiguration {
    pub id: String,
    pub r: usize,
    pub s: usize,
    pub points: Vec<Vec<f64>>,
    pub gram: Vec<Vec<f64>>,
    /// Sorted by `(subset, target)`.
    pub lambda: Vec<LambdaRow>,
    pub m0: f64,
    pub m: f64,
}

fn smallest_singular_value(points: &[Vec<f64>], subset: &[usize], r: usize) -> f64 {
    let a = DMatrix::from_fn(r, subset.len(), |i, j| points[subset[j]][i]);
    a.singular_values().min()
}

impl ReferenceConfiguration {
    /// Builds the configuration for explicit unit points in `R^r`. Every
    /// `r`-subset must have smallest singular value `>= sigma_min`.
    pub fn from_points(
        id: impl Into<String>,
        r: usize,
        points: Vec<Vec<f64>>,
        sigma_min: f64,
    ) -> Result<Self> {
        let s = points.len();
        if r < 1 || r > s {
            return Err(invalid(format!("need 1 <= r <= s, got r = {r}, s = {s}")));
        }
        for (a, p) in points.iter().enumerate() {
            if p.len() != r {
                return Err(invalid(format!(
                    "point {a} has {} coordinates, expected {r}",
                    p.len()
                )));
            }
            if (norm(p) - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("point {a} is not a unit vector")));
            }
        }
        let gram: Vec<Vec<f64>> = (0..s)
            .map(|a| (0..s).map(|b| dot(&points[a], &points[b])).collect())
            .collect();
        let mut lambda = Vec::new();
        for subset in (0..s).combinations(r) {
            let sigma = smallest_singular_value(&points, &subset, r);
            if sigma < sigma_min {
                return Err(invalid(format!(
                    "subset {subset:?} has smallest singular value {sigma:e} < {sigma_min:e}"
                )));
            }
            let basis = DMatrix::from_fn(r, r, |i, j| points[subset[j]][i]);
            let lu = basis.lu();
            for target in 0..s {
                let coefficients = match subset.iter().position(|&b| b == target) {
                    Some(k) => (0..r).map(|j| if j == k { 1.0 } else { 0.0 }).collect(),
                    None => {
                        let rhs = DVector::from_column_slice(&points[target]);
                        let x = lu.solve(&rhs).ok_or_else(|| {
                            Error::InternalInvariant(format!("singular basis {subset:?}"))
                        })?;
                        x.iter().copied().collect()
                    }
                };
                lambda.push(LambdaRow {
                    subset: subset.clone(),
                    target,
                    coefficients,
                });
            }
        }
        let m0 = lambda
            .iter()
            .flat_map(|row| row.coefficients.iter())
            .map(|&x| x.abs().max(x * x))
            .fold(0.0, f64::max);
        let m = 2.0 * (r as f64 + 1.0) * m0.sqrt();
        Ok(Self {
            id: id.into(),
            r,
            s,
            points,
            gram,
            lambda,
            m0,
            m,
        })
    }

    pub fn coefficients(&self, subset: &[usize], target: usize) -> Option<&[f64]> {
        self.lambda
            .binary_search_by(|row| (row.subset.as_slice(), row.target).cmp(&(subset, target)))
            .ok()
            .map(|i| self.lambda[i].coefficients.as_slice())
    }

    /// `‖Σ_b λ_{B,a,b} p_b - p_a‖` for a stored row.
    pub fn residual(&self, row: &LambdaRow) -> f64 {
        let mut v = self.points[row.target]
            .iter()
            .map(|x| -x)
            .collect::<Vec<_>>();
        for (&b, &l) in row.subset.iter().zip(&row.coefficients) {
            for (vi, pi) in v.iter_mut().zip(&self.points[b]) {
                *vi += l * pi;
            }
        }
        norm(&v)
    }

    /// Prune radius `M √c` that makes the unique-extension argument work.
    pub fn prune_radius(&self, c: f64) -> f64 {
        self.m * c.sqrt()
    }
}

/// Samples `s` uniform points on `S^{r-1}` until every `r`-subset is
/// well-conditioned.
pub fn sample_general_position_config<R: Rng + ?Sized>(
    r: usize,
    s: usize,
    rng: &mut R,
    sigma_min: f64,
    max_attempts: usize,
) -> Result<ReferenceConfiguration> {
    if r < 1 || r > s {
        return Err(invalid(format!("need 1 <= r <= s, got r = {r}, s = {s}")));
    }
    if !(sigma_min > 0.0) {
        return Err(invalid("sigma_min must be positive"));
    }
    for _ in 0..max_attempts {
        let points: Vec<Vec<f64>> = (0..s)
            .map(|_| sample_unit_vector(r - 1, rng).into_coords())
            .collect();
        let ok = (0..s)
            .combinations(r)
            .all(|subset| smallest_singular_value(&points, &subset, r) >= sigma_min);
        if ok {
            return ReferenceConfiguration::from_points(
                format!("random:{r},{s}"),
                r,
                points,
                sigma_min,
            );
        }
    }
    Err(Error::DegenerateConfiguration {
        attempts: max_attempts,
    })
}

/// The `r + 1` vertices of the regular simplex inscribed in `S^{r-1}`.
///
/// The first `r` points are the rows of the Cholesky factor of the simplex
/// Gram matrix `(1 + 1/r) I - (1/r) J`; the last is minus their sum.
pub fn simplex_config(r: usize) -> Result<ReferenceConfiguration> {
    if r < 1 {
        return Err(invalid("simplex_config needs r >= 1"));
    }
    let off = -1.0 / r as f64;
    let g = DMatrix::from_fn(r, r, |i, j| if i == j { 1.0 } else { off });
    let l = g
        .cholesky()
        .ok_or_else(|| {
            Error::InternalInvariant("simplex Gram matrix not positive definite".into())
        })?
        .l();
    let mut points: Vec<Vec<f64>> = (0..r)
        .map(|i| (0..r).map(|j| l[(i, j)]).collect())
        .collect();
    let last: Vec<f64> = (0..r)
        .map(|j| -points.iter().map(|p| p[j]).sum::<f64>())
        .collect();
    points.push(last);
    ReferenceConfiguration::from_points(format!("simplex:{r}"), r, points, DEFAULT_SIGMA_MIN)
}

/// Parses `simplex:R` or `random:R,S`. Random configurations are drawn from
/// the `[CONFIG]` stream of `root_seed`.
pub fn config_from_id(id: &str, root_seed: u64) -> Result<ReferenceConfiguration> {
    let bad = || {
        invalid(format!(
            "unknown configuration '{id}' (expected simplex:R or random:R,S)"
        ))
    };
    if let Some(rest) = id.strip_prefix("simplex:") {
        return simplex_config(rest.trim().parse().map_err(|_| bad())?);
    }
    if let Some(rest) = id.strip_prefix("random:") {
        let (r, s) = rest.split_once(',').ok_or_else(bad)?;
        let mut rng = seed::stream(root_seed, &[seed::CONFIG]);
        return sample_general_position_config(
            r.trim().parse().map_err(|_| bad())?,
            s.trim().parse().map_err(|_| bad())?,
            &mut rng,
            DEFAULT_SIGMA_MIN,
            DEFAULT_MAX_ATTEMPTS,
        );
    }
    Err(bad())
}

/// The configuration used when none is named: the simplex for `s = r + 1`,
/// otherwise a random one seeded by `root_seed`.
pub fn default_config(r: usize, s: usize, root_seed: u64) -> Result<ReferenceConfiguration> {
    if s == r + 1 {
        simplex_config(r)
    } else {
        config_from_id(&format!("random:{r},{s}"), root_seed)
    }
}

/// `λ_{κ,v}` for the unique edge of colour `colour` at `vertex`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    pub colour: usize,
    pub vertex: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RainbowSpec {
    pub id: String,
    pub h: PatternGraph,
    pub colouring: Colouring,
    pub m: usize,
    pub points: Vec<Vec<f64>>,
    /// Indexed by colour id.
    pub zvecs: Vec<Vec<f64>>,
    /// Sorted by `(colour, vertex)`.
    pub lambdas: Vec<LambdaEntry>,
    /// Order of the forbidden rainbow clique.
    pub r: usize,
    pub v0: Vec<usize>,
}

impl RainbowSpec {
    pub fn lambda(&self, colour: usize, vertex: usize) -> Option<f64> {
        self.lambdas
            .binary_search_by(|e| (e.colour, e.vertex).cmp(&(colour, vertex)))
            .ok()
            .map(|i| self.lambdas[i].value)
    }

    pub fn set_lambda(&mut self, colour: usize, vertex: usize, value: f64) {
        match self
            .lambdas
            .binary_search_by(|e| (e.colour, e.vertex).cmp(&(colour, vertex)))
        {
            Ok(i) => self.lambdas[i].value = value,
            Err(i) => self.lambdas.insert(
                i,
                LambdaEntry {
                    colour,
                    vertex,
                    value,
                },
            ),
        }
    }

    pub fn colour_count(&self) -> usize {
        self.zvecs.len()
    }

    /// Smallest and largest `|λ|` over all entries.
    pub fn lambda_range(&self) -> (f64, f64) {
        self.lambdas
            .iter()
            .fold((f64::INFINITY, 0.0), |(lo, hi), e| {
                (lo.min(e.value.abs()), hi.max(e.value.abs()))
            })
    }

    /// Rescales every non-zero `p_v` and every `z_κ` to unit length, adjusting
    /// the coefficients so that `z_κ = λ_v p_v + λ_w p_w` still holds.
    pub fn normalized(&self) -> RainbowSpec {
        let pnorms: Vec<f64> = self.points.iter().map(|p| norm(p)).collect();
        let znorms: Vec<f64> = self.zvecs.iter().map(|z| norm(z)).collect();
        let scale = |v: &[f64], n: f64| -> Vec<f64> {
            if n > 0.0 {
                v.iter().map(|x| x / n).collect()
            } else {
                v.to_vec()
            }
        };
        let points = self
            .points
            .iter()
            .zip(&pnorms)
            .map(|(p, &n)| scale(p, n))
            .collect();
        let zvecs = self
            .zvecs
            .iter()
            .zip(&znorms)
            .map(|(z, &n)| scale(z, n))
            .collect();
        let lambdas = self
            .lambdas
            .iter()
            .map(|e| {
                let pn = if pnorms[e.vertex] > 0.0 {
                    pnorms[e.vertex]
                } else {
                    1.0
                };
                let zn = if znorms[e.colour] > 0.0 {
                    znorms[e.colour]
                } else {
                    1.0
                };
                LambdaEntry {
                    value: e.value * pn / zn,
                    ..e.clone()
                }
            })
            .collect();
        RainbowSpec {
            points,
            zvecs,
            lambdas,
            ..self.clone()
        }
    }

    /// Colour ids and coefficient pairs `(λ_u, λ_v)` aligned with `h.edges`.
    pub fn edge_coefficients(&self) -> Result<Vec<(usize, f64, f64)>> {
        self.h
            .edges
            .iter()
            .zip(&self.colouring)
            .map(
                |(&(u, v), &k)| match (self.lambda(k, u), self.lambda(k, v)) {
                    (Some(a), Some(b)) => Ok((k, a, b)),
                    _ => Err(Error::InvalidSpec(format!(
                        "missing coefficient on edge ({u}, {v})"
                    ))),
                },
            )
            .collect()
    }
}

/// A violated rainbow-spec hypothesis, with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecViolation {
    Shape {
        message: String,
    },
    ImproperColouring {
        vertex: usize,
        colour: usize,
        edges: (usize, usize),
    },
    RainbowClique {
        vertices: Vec<usize>,
    },
    MissingLambda {
        colour: usize,
        vertex: usize,
    },
    ZeroLambda {
        colour: usize,
        vertex: usize,
    },
    ZeroTarget {
        colour: usize,
    },
    Residual {
        edge: (usize, usize),
        colour: usize,
        residual: f64,
    },
    ZeroSetMismatch {
        vertex: usize,
        listed: bool,
        zero: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spec: String,
    pub valid: bool,
    /// Dimension of `span{p_v}`.
    pub m0: usize,
    pub violations: Vec<SpecViolation>,
}

fn span_dimension(vectors: &[Vec<f64>], m: usize) -> usize {
    if vectors.is_empty() || m == 0 {
        return 0;
    }
    let a = DMatrix::from_fn(vectors.len(), m, |i, j| vectors[i][j]);
    let sv = a.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter()
        .filter(|&&x| x > RANK_TOLERANCE * top.max(1.0))
        .count()
}

/// Checks every hypothesis a rainbow spec must satisfy. Violations are data.
pub fn validate_rainbow_spec(spec: &RainbowSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let n = spec.h.vertex_count();
    let mut shape = |message: String| violations.push(SpecViolation::Shape { message });
    if spec.colouring.len() != spec.h.edges.len() {
        shape(format!(
            "{} colours for {} edges",
            spec.colouring.len(),
            spec.h.edges.len()
        ));
    }
    if spec.points.len() != n {
        shape(format!("{} points for {n} vertices", spec.points.len()));
    }
    if let Some(v) = spec.points.iter().position(|p| p.len() != spec.m) {
        shape(format!("point {v} is not in R^{}", spec.m));
    }
    if let Some(k) = spec.zvecs.iter().position(|z| z.len() != spec.m) {
        shape(format!("z vector {k} is not in R^{}", spec.m));
    }
    if let Some(&k) = spec.colouring.iter().find(|&&k| k >= spec.zvecs.len()) {
        shape(format!("colour {k} has no z vector"));
    }
    if spec.r < 2 {
        shape(format!("forbidden clique order {} < 2", spec.r));
    }
    if !violations.is_empty() {
        return ValidationReport {
            spec: spec.id.clone(),
            valid: false,
            m0: 0,
            violations,
        };
    }

    for (vertex, colour, e1, e2) in pattern::improper_pairs(&spec.h, &spec.colouring) {
        violations.push(SpecViolation::ImproperColouring {
            vertex,
            colour,
            edges: (e1, e2),
        });
    }
    if let Some(vertices) = pattern::find_rainbow_clique(&spec.h, &spec.colouring, spec.r) {
        violations.push(SpecViolation::RainbowClique { vertices });
    }
    for (k, z) in spec.zvecs.iter().enumerate() {
        if norm(z) == 0.0 {
            violations.push(SpecViolation::ZeroTarget { colour: k });
        }
    }
    for (&(u, v), &k) in spec.h.edges.iter().zip(&spec.colouring) {
        let mut coeffs = [0.0; 2];
        let mut complete = true;
        for (slot, x) in [u, v].into_iter().enumerate() {
            match spec.lambda(k, x) {
                None => {
                    violations.push(SpecViolation::MissingLambda {
                        colour: k,
                        vertex: x,
                    });
                    complete = false;
                }
                Some(l) if l == 0.0 => {
                    violations.push(SpecViolation::ZeroLambda {
                        colour: k,
                        vertex: x,
                    });
                    coeffs[slot] = l;
                }
                Some(l) => coeffs[slot] = l,
            }
        }
        if complete {
            let residual: Vec<f64> = (0..spec.m)
                .map(|i| {
                    coeffs[0] * spec.points[u][i] + coeffs[1] * spec.points[v][i] - spec.zvecs[k][i]
                })
                .collect();
            let r = norm(&residual);
            if !(r <= RESIDUAL_TOLERANCE) {
                violations.push(SpecViolation::Residual {
                    edge: (u, v),
                    colour: k,
                    residual: r,
                });
            }
        }
    }
    for (vertex, p) in spec.points.iter().enumerate() {
        let zero = p.iter().all(|&x| x == 0.0);
        let listed = spec.v0.contains(&vertex);
        if zero != listed {
            violations.push(SpecViolation::ZeroSetMismatch {
                vertex,
                listed,
                zero,
            });
        }
    }
    ValidationReport {
        spec: spec.id.clone(),
        valid: violations.is_empty(),
        m0: span_dimension(&spec.points, spec.m),
        violations,
    }
}

fn basis(m: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[i] = 1.0;
    e
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `K_r` coloured with `12` and `34` sharing colour 0, drawn with
/// `p_2..p_r` the standard basis of `R^{r-1}` and `p_1 = p_2 + p_3 + p_4`.
pub fn kr_rainbow_spec(r: usize) -> Result<RainbowSpec> {
    if r < 4 {
        return Err(invalid(format!("kr_rainbow_spec needs r >= 4, got {r}")));
    }
    let m = r - 1;
    let h = PatternGraph::complete(r, 1);
    let mut points: Vec<Vec<f64>> = (1..r).map(|i| basis(m, i - 1)).collect();
    points.insert(0, add(&add(&points[0], &points[1]), &points[2]));

    let mut colouring = Vec::with_capacity(h.edges.len());
    let mut zvecs = vec![add(&points[2], &points[3])];
    let mut spec_lambdas = Vec::new();
    for &(u, v) in &h.edges {
        match (u, v) {
            (0, 1) => {
                colouring.push(0);
                spec_lambdas.push((0, 0, 1.0));
                spec_lambdas.push((0, 1, -1.0));
            }
            (2, 3) => {
                colouring.push(0);
                spec_lambdas.push((0, 2, 1.0));
                spec_lambdas.push((0, 3, 1.0));
            }
            _ => {
                let k = zvecs.len();
                colouring.push(k);
                zvecs.push(add(&points[u], &points[v]));
                spec_lambdas.push((k, u, 1.0));
                spec_lambdas.push((k, v, 1.0));
            }
        }
    }
    let mut spec = RainbowSpec {
        id: format!("kr:{r}"),
        h,
        colouring,
        m,
        points,
        zvecs,
        lambdas: Vec::new(),
        r,
        v0: Vec::new(),
    };
    for (k, v, l) in spec_lambdas {
        spec.set_lambda(k, v, l);
    }
    Ok(spec)
}

/// `K_6` drawn as the regular pentagon plus its centre. Colour `a - 1` holds
/// the centre edge `0a` and the two chords perpendicular to `p_a`.
pub fn pentagon_spec() -> RainbowSpec {
    let h = PatternGraph::complete(6, 0);
    let mut points = vec![vec![0.0, 0.0]];
    for a in 1..=5 {
        let t = 2.0 * PI * a as f64 / 5.0;
        points.push(vec![t.cos(), t.sin()]);
    }
    let zvecs: Vec<Vec<f64>> = (1..=5).map(|a| points[a].clone()).collect();
    let mut colouring = Vec::with_capacity(15);
    let mut spec_lambdas = Vec::new();
    for &(u, v) in &h.edges {
        if u == 0 {
            let k = v - 1;
            colouring.push(k);
            spec_lambdas.push((k, 0, 1.0));
            spec_lambdas.push((k, v, 1.0));
        } else {
            // The chord p_u p_v is perpendicular to p_a where 2a ≡ u + v (mod 5).
            let a = (1..=5)
                .find(|a| (2 * a) % 5 == (u + v) % 5)
                .expect("2 is invertible mod 5");
            let k = a - 1;
            colouring.push(k);
            let sum = add(&points[u], &points[v]);
            let l = dot(&sum, &zvecs[k]) / dot(&sum, &sum);
            spec_lambdas.push((k, u, l));
            spec_lambdas.push((k, v, l));
        }
    }
    let mut spec = RainbowSpec {
        id: "pentagon".into(),
        h,
        colouring,
        m: 2,
        points,
        zvecs,
        lambdas: Vec::new(),
        r: 4,
        v0: vec![0],
    };
    for (k, v, l) in spec_lambdas {
        spec.set_lambda(k, v, l);
    }
    spec
}

/// Index of king's-graph vertex `(a, b)` (1-based coordinates).
pub fn kings_vertex(l: usize, a: usize, b: usize) -> usize {
    (a - 1) * l + (b - 1)
}

/// The `k × l` king's graph with horizontal edges `(a,b)(a+1,b)` coloured
/// `a - 1` and every other edge in its own colour (lexicographic order).
pub fn kings_spec(k: usize, l: usize) -> Result<RainbowSpec> {
    if k < 2 || l < 2 {
        return Err(invalid(format!("kings_spec needs k, l >= 2, got {k}, {l}")));
    }
    let m = k + l;
    let coords: Vec<(usize, usize)> = (1..=k).flat_map(|a| (1..=l).map(move |b| (a, b))).collect();
    let labels = coords.iter().map(|(a, b)| format!("({a},{b})")).collect();
    let edges: Vec<(usize, usize)> = (0..coords.len())
        .tuple_combinations()
        .filter(|&(u, v)| {
            let (a, b) = coords[u];
            let (a2, b2) = coords[v];
            a.abs_diff(a2) <= 1 && b.abs_diff(b2) <= 1
        })
        .collect();
    let h = PatternGraph::new(labels, edges)?;
    let points: Vec<Vec<f64>> = coords
        .iter()
        .map(|&(a, b)| {
            let mut p = vec![0.0; m];
            p[a - 1] = 1.0;
            p[k + b - 1] = if a % 2 == 0 { 1.0 } else { -1.0 };
            p
        })
        .collect();
    let mut zvecs: Vec<Vec<f64>> = (1..k)
        .map(|a| {
            let mut z = vec![0.0; m];
            z[a - 1] = 1.0;
            z[a] = 1.0;
            z
        })
        .collect();
    let mut colouring = Vec::with_capacity(h.edges.len());
    for &(u, v) in &h.edges {
        let (a, b) = coords[u];
        let (a2, b2) = coords[v];
        if b == b2 && a2 == a + 1 {
            colouring.push(a - 1);
        } else {
            colouring.push(zvecs.len());
            zvecs.push(add(&points[u], &points[v]));
        }
    }
    let mut spec = RainbowSpec {
        id: format!("kings:{k},{l}"),
        h,
        colouring,
        m,
        points,
        zvecs,
        lambdas: Vec::new(),
        r: 4,
        v0: Vec::new(),
    };
    for i in 0..spec.h.edges.len() {
        let (u, v) = spec.h.edges[i];
        let c = spec.colouring[i];
        spec.set_lambda(c, u, 1.0);
        spec.set_lambda(c, v, 1.0);
    }
    Ok(spec)
}

/// Parses `kr:R`, `pentagon` or `kings:K,L`.
pub fn spec_from_id(id: &str) -> Result<RainbowSpec> {
    let bad = || {
        invalid(format!(
            "unknown spec '{id}' (expected kr:R, pentagon or kings:K,L)"
        ))
    };
    if id == "pentagon" {
        return Ok(pentagon_spec());
    }
    if let Some(rest) = id.strip_prefix("kr:") {
        return kr_rainbow_spec(rest.trim().parse().map_err(|_| bad())?);
    }
    if let Some(rest) = id.strip_prefix("kings:") {
        let (k, l) = rest.split_once(',').ok_or_else(bad)?;
        return kings_spec(
            k.trim().parse().map_err(|_| bad())?,
            l.trim().parse().map_err(|_| bad())?,
        );
    }
    Err(bad())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use approx::assert_abs_diff_eq;

    #[test]
    fn general_position_sample_two_three() {
        let mut rng = seed::stream(1, &[seed::CONFIG]);
        let cfg =
            sample_general_position_config(2, 3, &mut rng, DEFAULT_SIGMA_MIN, DEFAULT_MAX_ATTEMPTS)
                .unwrap();
        for subset in (0..3).combinations(2) {
            assert!(smallest_singular_value(&cfg.points, &subset, 2) >= DEFAULT_SIGMA_MIN);
        }
        assert_eq!(cfg.coefficients(&[0, 1], 0).unwrap(), &[1.0, 0.0]);
        assert_eq!(cfg.coefficients(&[0, 1], 1).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn general_position_residuals_three_five() {
        let mut rng = seed::stream(2, &[seed::CONFIG]);
        let cfg =
            sample_general_position_config(3, 5, &mut rng, DEFAULT_SIGMA_MIN, DEFAULT_MAX_ATTEMPTS)
                .unwrap();
        assert_eq!(cfg.lambda.len(), 10 * 5);
        for row in &cfg.lambda {
            assert!(cfg.residual(row) <= RESIDUAL_TOLERANCE);
        }
    }

    #[test]
    fn residuals_over_random_configs() {
        let mut rng = seed::stream(3, &[seed::CONFIG]);
        for t in 0..50 {
            let r = 1 + t % 4;
            let s = r + t % (8 - r);
            let cfg = sample_general_position_config(
                r,
                s,
                &mut rng,
                DEFAULT_SIGMA_MIN,
                DEFAULT_MAX_ATTEMPTS,
            )
            .unwrap();
            assert!(s <= 7);
            for row in &cfg.lambda {
                assert!(cfg.residual(row) <= RESIDUAL_TOLERANCE, "r={r} s={s}");
            }
            for a in 0..s {
                for b in 0..s {
                    assert_abs_diff_eq!(
                        cfg.gram[a][b],
                        dot(&cfg.points[a], &cfg.points[b]),
                        epsilon = 1e-12
                    );
                }
            }
            let m0 = cfg
                .lambda
                .iter()
                .flat_map(|r| &r.coefficients)
                .map(|x| x.abs().max(x * x))
                .fold(0.0, f64::max);
            assert_eq!(cfg.m0, m0);
            assert_abs_diff_eq!(cfg.m, 2.0 * (r as f64 + 1.0) * m0.sqrt());
        }
    }

    #[test]
    fn degenerate_budget_is_reported() {
        let mut rng = seed::stream(4, &[seed::CONFIG]);
        let err = sample_general_position_config(2, 3, &mut rng, 2.0, 5).unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateConfiguration { attempts: 5 }
        ));
    }

    #[test]
    fn rejects_r_above_s() {
        let mut rng = seed::stream(4, &[]);
        assert!(sample_general_position_config(3, 2, &mut rng, 1e-3, 10).is_err());
    }

    #[test]
    fn simplex_gram_off_diagonal() {
        for r in 1..=8 {
            let cfg = simplex_config(r).unwrap();
            assert_eq!(cfg.s, r + 1);
            for a in 0..=r {
                for b in 0..=r {
                    let expected = if a == b { 1.0 } else { -1.0 / r as f64 };
                    assert_abs_diff_eq!(cfg.gram[a][b], expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn simplex_triangle_and_tetrahedron() {
        let tri = simplex_config(2).unwrap();
        let l = tri.coefficients(&[0, 1], 2).unwrap();
        assert_abs_diff_eq!(l[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tri.m0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tri.m, 6.0, epsilon = 1e-12);

        let tet = simplex_config(3).unwrap();
        assert_abs_diff_eq!(tet.gram[0][1], -1.0 / 3.0, epsilon = 1e-12);
        let l = tet.coefficients(&[0, 1, 2], 3).unwrap();
        for x in l {
            assert_abs_diff_eq!(*x, -1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(tet.m, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn kr_spec_four() {
        let spec = kr_rainbow_spec(4).unwrap();
        let report = validate_rainbow_spec(&spec);
        assert!(report.valid, "{:?}", report.violations);
        assert_eq!(report.m0, 3);
        let z: Vec<f64> = spec.points[0]
            .iter()
            .zip(&spec.points[1])
            .map(|(a, b)| a - b)
            .collect();
        assert_eq!(spec.zvecs[0], z);
        assert!(spec.lambdas.iter().all(|e| e.value.abs() == 1.0));
        assert!(spec.v0.is_empty());
        assert!(kr_rainbow_spec(3).is_err());
    }

    #[test]
    fn kr_spec_five_blocks_the_only_k5() {
        let spec = kr_rainbow_spec(5).unwrap();
        assert!(pattern::improper_pairs(&spec.h, &spec.colouring).is_empty());
        assert_eq!(
            pattern::find_rainbow_clique(&spec.h, &spec.colouring, 5),
            None
        );
        assert_eq!(
            spec.colouring[spec.h.edge_index(0, 1).unwrap()],
            spec.colouring[spec.h.edge_index(2, 3).unwrap()]
        );
        let report = validate_rainbow_spec(&spec);
        assert!(report.valid);
        assert_eq!(report.m0, 4);
    }

    #[test]
    fn pentagon_classes() {
        let spec = pentagon_spec();
        let mut sizes = [0usize; 5];
        for &k in &spec.colouring {
            sizes[k] += 1;
        }
        assert_eq!(sizes, [3; 5]);
        assert_eq!(spec.colouring.len(), 15);
        assert!(pattern::improper_pairs(&spec.h, &spec.colouring).is_empty());
        // exhaustive over the 15 four-subsets
        assert_eq!(spec.h.cliques(4).len(), 15);
        assert_eq!(
            pattern::find_rainbow_clique(&spec.h, &spec.colouring, 4),
            None
        );
        let report = validate_rainbow_spec(&spec);
        assert!(report.valid, "{:?}", report.violations);
        assert_eq!(report.m0, 2);
        // z for the colour of 0a is p_a
        for a in 1..=5 {
            let k = spec.colouring[spec.h.edge_index(0, a).unwrap()];
            assert_eq!(spec.zvecs[k], spec.points[a]);
        }
    }

    #[test]
    fn kings_two_by_two() {
        let spec = kings_spec(2, 2).unwrap();
        assert_eq!(spec.h.edges.len(), 6);
        let report = validate_rainbow_spec(&spec);
        assert!(report.valid, "{:?}", report.violations);
        assert_eq!(report.m0, 3);
        assert_eq!(
            pattern::find_rainbow_clique(&spec.h, &spec.colouring, 4),
            None
        );
    }

    #[test]
    fn kings_three_by_two_horizontal_sums() {
        let (k, l) = (3, 2);
        let spec = kings_spec(k, l).unwrap();
        for a in 1..k {
            for b in 1..=l {
                let u = kings_vertex(l, a, b);
                let v = kings_vertex(l, a + 1, b);
                let sum = add(&spec.points[u], &spec.points[v]);
                assert_eq!(sum, spec.zvecs[a - 1]);
                assert_eq!(spec.colouring[spec.h.edge_index(u, v).unwrap()], a - 1);
            }
        }
    }

    #[test]
    fn kings_span_dimension() {
        for k in 2..=4 {
            for l in 2..=4 {
                let report = validate_rainbow_spec(&kings_spec(k, l).unwrap());
                assert!(report.valid, "k={k} l={l}: {:?}", report.violations);
                assert_eq!(report.m0, k + l - 1);
            }
        }
    }

    #[test]
    fn zero_lambda_is_reported_with_witness() {
        let mut spec = kr_rainbow_spec(4).unwrap();
        let (u, _) = spec.h.edges[1];
        let k = spec.colouring[1];
        spec.set_lambda(k, u, 0.0);
        let report = validate_rainbow_spec(&spec);
        assert!(!report.valid);
        assert!(report.violations.contains(&SpecViolation::ZeroLambda {
            colour: k,
            vertex: u
        }));
    }

    #[test]
    fn improper_and_zero_set_violations() {
        let mut spec = kings_spec(2, 2).unwrap();
        spec.colouring = vec![0; spec.h.edges.len()];
        spec.v0 = vec![1];
        let report = validate_rainbow_spec(&spec);
        assert!(!report.valid);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SpecViolation::ImproperColouring { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SpecViolation::ZeroSetMismatch { vertex: 1, .. })));
    }

    #[test]
    fn normalization_preserves_relations() {
        for spec in [
            kr_rainbow_spec(4).unwrap(),
            kr_rainbow_spec(6).unwrap(),
            pentagon_spec(),
            kings_spec(3, 3).unwrap(),
        ] {
            let n = spec.normalized();
            let report = validate_rainbow_spec(&n);
            assert!(report.valid, "{}: {:?}", spec.id, report.violations);
            for p in &n.points {
                let l = norm(p);
                assert!(l == 0.0 || (l - 1.0).abs() < 1e-12);
            }
            for z in &n.zvecs {
                assert_abs_diff_eq!(norm(z), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spec_ids_parse() {
        assert_eq!(spec_from_id("kr:5").unwrap().id, "kr:5");
        assert_eq!(spec_from_id("kings:3,2").unwrap().id, "kings:3,2");
        assert_eq!(spec_from_id("pentagon").unwrap().h.vertex_count(), 6);
        assert!(spec_from_id("hexagon").is_err());
        assert!(spec_from_id("kr:x").is_err());
    }

    #[test]
    fn config_ids_parse() {
        assert_eq!(config_from_id("simplex:3", 0).unwrap().s, 4);
        let a = config_from_id("random:2,4", 9).unwrap();
        assert_eq!((a.r, a.s), (2, 4));
        assert_eq!(a, config_from_id("random:2,4", 9).unwrap());
        assert_ne!(a.points, config_from_id("random:2,4", 10).unwrap().points);
        assert_eq!(default_config(2, 3, 5).unwrap().id, "simplex:2");
        assert_eq!(default_config(2, 4, 5).unwrap(), a_with_seed(5));
        assert!(config_from_id("cube:3", 0).is_err());
    }

    fn a_with_seed(seed: u64) -> ReferenceConfiguration {
        config_from_id("random:2,4", seed).unwrap()
    }
}
