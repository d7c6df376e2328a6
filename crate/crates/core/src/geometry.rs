//! Sphere and rotation sampling, exact spherical measures, greedy direction
//! packings.
//!
//! Points of `S^d` live in `R^{d+1}`. Measures are normalized so that the whole
//! sphere has measure 1. Cap and band measures are computed by adaptive
//! Simpson quadrature of the latitude density `sin^{d-1}(theta)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Tolerance on `|‖v‖ - 1|` accepted by [`UnitVector::new`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Default number of consecutive rejected candidates that ends a greedy packing.
pub const DEFAULT_PROBE_COUNT: usize = 10_000;

/// Absolute tolerance of a single adaptive Simpson panel.
const QUADRATURE_TOLERANCE: f64 = 1e-12;

/// A point of `S^d`, stored as its `d + 1` ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `coords`, which must already have unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("a unit vector needs at least one coordinate"));
        }
        let norm = norm(&coords);
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(invalid(format!("vector has norm {norm}, expected 1")));
        }
        Ok(Self(coords))
    }

    /// Scales `coords` to unit length. Returns `None` for the zero vector.
    pub fn normalize(mut coords: Vec<f64>) -> Option<Self> {
        let n = norm(&coords);
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        coords.iter_mut().for_each(|x| *x /= n);
        Some(Self(coords))
    }

    /// Sphere dimension `d` (one less than the number of coordinates).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn distance(&self, other: &UnitVector) -> f64 {
        distance(&self.0, &other.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Draws a uniform point of `S^d` by normalizing `d + 1` independent Gaussians.
pub fn sample_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitVector {
    loop {
        let coords: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(v) = UnitVector::normalize(coords) {
            return v;
        }
    }
}

/// An element of `SO(d + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
}

impl Rotation {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Sphere dimension the rotation acts on.
    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.matrix.nrows();
        assert_eq!(
            v.len(),
            n,
            "rotation of S^{} applied to a {}-vector",
            n - 1,
            v.len()
        );
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn apply_unit(&self, v: &UnitVector) -> UnitVector {
        UnitVector(self.apply(v.coords()))
    }
}

/// Draws a Haar-distributed rotation of `S^d`, `d >= 1`.
///
/// QR of a Gaussian matrix with the signs of `R`'s diagonal moved into `Q`
/// gives a Haar element of `O(d+1)`; negating the last column when the
/// determinant is `-1` maps it to a Haar element of `SO(d+1)`.
pub fn sample_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Rotation> {
    if d < 1 {
        return Err(invalid("rotations need d >= 1"));
    }
    let n = d + 1;
    loop {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)] == 0.0) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        if q.determinant() < 0.0 {
            q.column_mut(n - 1).neg_mut();
        }
        return Ok(Rotation { matrix: q });
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Four initial panels so that symmetric integrands cannot fool the first
    // error estimate.
    let panels = 4;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            adaptive(&f, lo, hi, flo, fmid, fhi, whole, tol / panels as f64, 48)
        })
        .sum()
}

fn latitude_integral(d: usize, phi: f64) -> f64 {
    let power = (d - 1) as i32;
    integrate(|t: f64| t.sin().powi(power), 0.0, phi, QUADRATURE_TOLERANCE)
}

/// Measure of the cap `{w : angle(v, w) < phi}` on `S^d`, `d >= 1`.
pub fn cap_measure(d: usize, phi: f64) -> Result<f64> {
    if d < 1 {
        return Err(invalid("cap_measure needs d >= 1"));
    }
    if !(0.0..=PI).contains(&phi) {
        return Err(invalid(format!("cap angle {phi} outside [0, pi]")));
    }
    if phi == 0.0 {
        return Ok(0.0);
    }
    if phi == PI {
        return Ok(1.0);
    }
    let value = latitude_integral(d, phi) / latitude_integral(d, PI);
    Ok(value.clamp(0.0, 1.0))
}

/// Angle subtended by a chord of length `rho`.
pub fn chord_angle(rho: f64) -> f64 {
    if rho >= 2.0 {
        PI
    } else {
        2.0 * (rho / 2.0).asin()
    }
}

/// Measure of the open chord ball `{w : ‖v - w‖ < rho}` on `S^d`.
pub fn chord_ball_measure(d: usize, rho: f64) -> Result<f64> {
    if rho < 0.0 {
        return Err(invalid(format!("negative radius {rho}")));
    }
    if rho > 2.0 {
        return Ok(1.0);
    }
    cap_measure(d, chord_angle(rho))
}

/// Measure of the band `{w : |<v, w> - xi| < delta}` on `S^d`.
pub fn band_measure(d: usize, xi: f64, delta: f64) -> Result<f64> {
    if !(xi.abs() < 1.0) {
        return Err(invalid(format!("band centre {xi} must satisfy |xi| < 1")));
    }
    if !(delta >= 0.0) {
        return Err(invalid(format!("band half-width {delta} must be >= 0")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let lo = (xi - delta).max(-1.0);
    let hi = (xi + delta).min(1.0);
    // <v, w> = cos(angle), so the band is the difference of two caps.
    let outer = cap_measure(d, lo.acos())?;
    let inner = cap_measure(d, hi.acos())?;
    Ok((outer - inner).clamp(0.0, 1.0))
}

/// Unit vectors pairwise separated by at least `separation`, also from each
/// other's antipodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionPacking {
    pub dimension: usize,
    pub separation: f64,
    pub points: Vec<UnitVector>,
}

impl DirectionPacking {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when `q` is within `separation` of some `±q_j`, i.e. when the
    /// greedy rule would reject it.
    pub fn covers(&self, q: &[f64]) -> bool {
        self.points
            .iter()
            .any(|p| !far_from(q, p.coords(), self.separation))
    }

    /// First pair `(i, j)` that violates the separation, if any.
    pub fn separation_violation(&self) -> Option<(usize, usize)> {
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                if !far_from(
                    self.points[i].coords(),
                    self.points[j].coords(),
                    self.separation,
                ) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// First of `probes` fresh uniform points that is not covered, if any.
    pub fn find_uncovered<R: Rng + ?Sized>(
        &self,
        probes: usize,
        rng: &mut R,
    ) -> Option<UnitVector> {
        (0..probes)
            .map(|_| sample_unit_vector(self.dimension, rng))
            .find(|q| !self.covers(q.coords()))
    }
}

fn far_from(q: &[f64], p: &[f64], separation: f64) -> bool {
    let minus = distance(q, p);
    let plus = q
        .iter()
        .zip(p)
        .map(|(x, y)| (x + y) * (x + y))
        .sum::<f64>()
        .sqrt();
    minus >= separation && plus >= separation
}

/// Uniform grid over the first few coordinates holding `±q_j`, so that
/// points within `cell` of a query are found by scanning adjacent cells.
#[derive(Clone, Debug, Default)]
pub struct PointIndex {
    cell: f64,
    axes: usize,
    buckets: HashMap<Vec<i64>, Vec<(usize, Vec<f64>)>>,
}

impl PointIndex {
    /// Buckets of side `cell` over the first `min(3, dim)` coordinates.
    pub fn new(cell: f64, dim: usize) -> Self {
        Self {
            cell,
            axes: dim.min(3),
            buckets: HashMap::new(),
        }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x[..self.axes]
            .iter()
            .map(|v| (v / self.cell).floor() as i64)
            .collect()
    }

    pub fn insert(&mut self, id: usize, x: Vec<f64>) {
        self.buckets.entry(self.key(&x)).or_default().push((id, x));
    }

    /// Calls `f(id, point)` for every stored point whose bucket touches the
    /// one of `q`; this includes every point within `cell` of `q`.
    pub fn for_each_near(&self, q: &[f64], mut f: impl FnMut(usize, &[f64])) {
        let base = self.key(q);
        let mut offset = vec![-1i64; self.axes];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(items) = self.buckets.get(&key) {
                for (id, x) in items {
                    f(*id, x);
                }
            }
            // Odometer over {-1, 0, 1}^axes.
            let mut i = 0;
            while i < self.axes && offset[i] == 1 {
                offset[i] = -1;
                i += 1;
            }
            if i == self.axes {
                break;
            }
            offset[i] += 1;
        }
    }
}

/// Greedy maximal packing of directions on `S^d` with separation `3 * c1`.
///
/// Uniform candidates are accepted when they are at distance `>= 3 c1` from
/// every accepted `±q_j`; the loop ends after `probe_count` consecutive
/// rejections.
pub fn pack_directions<R: Rng + ?Sized>(
    d: usize,
    c1: f64,
    rng: &mut R,
    probe_count: usize,
) -> Result<DirectionPacking> {
    if d < 1 {
        return Err(invalid("direction packings need d >= 1"));
    }
    if !(c1 > 0.0 && 3.0 * c1 < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "c1 = {c1} outside (0, 2/3)"
        )));
    }
    let separation = 3.0 * c1;
    let mut packing = DirectionPacking {
        dimension: d,
        separation,
        points: Vec::new(),
    };
    let mut index = PointIndex::new(separation, d + 1);
    let mut rejected = 0;
    while rejected < probe_count {
        let q = sample_unit_vector(d, rng);
        let mut covered = false;
        index.for_each_near(q.coords(), |_, p| {
            covered |= distance(q.coords(), p) < separation
        });
        if covered {
            rejected += 1;
        } else {
            let id = packing.points.len();
            index.insert(id, q.coords().to_vec());
            index.insert(id, q.coords().iter().map(|x| -x).collect());
            packing.points.push(q);
            rejected = 0;
        }
    }
    Ok(packing)
}
