//! Monte-Carlo probability estimates, parameter selection and count sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{build_g_prime, close_pairs, sample_part};
use crate::error::{invalid, Error, Result};
use crate::geometry::{chord_ball_measure, dot, sample_unit_vector};
use crate::graph::{GraphMeta, PartiteGeometricGraph};
use crate::rainbow::{build_f_double_prime, palette_radius, prepare_spec, prune_f_radius};
use crate::reference::{validate_rainbow_spec, RainbowSpec, ReferenceConfiguration};
use crate::seed;
use crate::verify::{
    check_unique_extension, count_pattern_copies, enumerate_cliques, find_rainbow_clique,
    is_proper_colouring,
};

/// Trials per independently seeded chunk.
const CHUNK: u64 = 4096;
/// Tolerance factor `δ` for the conditioning tuple.
pub const CONDITIONING_DELTA: f64 = 0.1;
/// Draws allowed per conditioned point before giving up.
pub const DEFAULT_DRAW_BUDGET: u64 = 10_000_000;
/// Largest `c1` the rainbow parameter choice will use.
pub const MAX_PALETTE_RADIUS: f64 = 0.6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
    pub successes: u64,
    pub config: String,
    pub d: usize,
    pub c: f64,
    /// `δ` of the conditioning tuple, for conditional estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl ProbabilityEstimate {
    fn new(
        successes: u64,
        trials: u64,
        config: &ReferenceConfiguration,
        d: usize,
        c: f64,
        delta: Option<f64>,
    ) -> Self {
        let p_hat = successes as f64 / trials as f64;
        Self {
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            trials,
            successes,
            config: config.id.clone(),
            d,
            c,
            delta,
        }
    }
}

fn gram_ok(points: &[Vec<f64>], gram: &[Vec<f64>], new: usize, tol: f64) -> bool {
    (0..new).all(|a| (dot(&points[a], &points[new]) - gram[a][new]).abs() < tol)
}

/// Runs `trials` Bernoulli trials in fixed chunks, each chunk on its own
/// `[TRIALS, k]` stream, so the result does not depend on the thread count.
fn run_trials<F>(trials: u64, root_seed: u64, trial: F) -> Result<u64>
where
    F: Fn(&mut seed::Rng) -> Result<bool> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::stream(root_seed, &[seed::TRIALS, k]);
            let len = CHUNK.min(trials - k * CHUNK);
            let mut hits = 0u64;
            for _ in 0..len {
                hits += trial(&mut rng)? as u64;
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn check_estimate_args(config: &ReferenceConfiguration, d: usize, trials: u64) -> Result<()> {
    if d < config.r {
        return Err(invalid(format!(
            "d = {d} must be at least r = {}",
            config.r
        )));
    }
    if trials < 1 {
        return Err(invalid("trials must be at least 1"));
    }
    Ok(())
}

/// Probability that `s` independent uniform points of `S^d` have every
/// pairwise inner product within `c` of the reference Gram matrix.
pub fn estimate_gram_probability(
    config: &ReferenceConfiguration,
    d: usize,
    c: f64,
    trials: u64,
    root_seed: u64,
) -> Result<ProbabilityEstimate> {
    check_estimate_args(config, d, trials)?;
    let s = config.s;
    let hits = run_trials(trials, root_seed, |rng| {
        let mut points = Vec::with_capacity(s);
        for a in 0..s {
            points.push(sample_unit_vector(d, rng).into_coords());
            if !gram_ok(&points, &config.gram, a, c) {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    Ok(ProbabilityEstimate::new(hits, trials, config, d, c, None))
}

/// Probability that point `r + 1` lands within `c` of the reference inner
/// products with points `1..r`, given that those `r` points already match
/// the reference Gram matrix within `δ c`.
///
/// Each trial draws a fresh conditioning tuple by sequential rejection: point
/// `j` is redrawn until it fits the earlier ones, up to `draw_budget` times.
pub fn estimate_conditional_extension(
    config: &ReferenceConfiguration,
    d: usize,
    c: f64,
    trials: u64,
    root_seed: u64,
) -> Result<ProbabilityEstimate> {
    estimate_conditional_extension_with(config, d, c, trials, root_seed, DEFAULT_DRAW_BUDGET)
}

pub fn estimate_conditional_extension_with(
    config: &ReferenceConfiguration,
    d: usize,
    c: f64,
    trials: u64,
    root_seed: u64,
    draw_budget: u64,
) -> Result<ProbabilityEstimate> {
    check_estimate_args(config, d, trials)?;
    let r = config.r;
    if config.s < r + 1 {
        return Err(invalid("conditional extension needs s >= r + 1"));
    }
    let tight = CONDITIONING_DELTA * c;
    let hits = run_trials(trials, root_seed, |rng| {
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(r + 1);
        for j in 0..r {
            let mut draws = 0;
            loop {
                if draws == draw_budget {
                    return Err(Error::ConditioningFailure {
                        budget: draw_budget,
                    });
                }
                draws += 1;
                points.push(sample_unit_vector(d, rng).into_coords());
                if gram_ok(&points, &config.gram, j, tight) {
                    break;
                }
                points.pop();
            }
        }
        points.push(sample_unit_vector(d, rng).into_coords());
        Ok(gram_ok(&points, &config.gram, r, c))
    })?;
    Ok(ProbabilityEstimate::new(
        hits,
        trials,
        config,
        d,
        c,
        Some(CONDITIONING_DELTA),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Calibrates the deletion probability from the exact cap measure.
    Paper,
    /// Searches `c` against measured survivor and clique counts.
    Sweep,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "sweep" => Ok(Self::Sweep),
            _ => Err(invalid(format!(
                "unknown strategy '{s}' (expected paper or sweep)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterChoice {
    pub d: usize,
    pub c: f64,
    pub strategy: Strategy,
    /// The `Ĉ` that reproduces `c = (2 s N Ĉ^d)^{-2/d}`, for the paper strategy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<f64>,
}

/// `max(floor, ⌊√ln N⌋)`.
pub fn default_dimension(n: usize, floor: usize) -> usize {
    let base = ((n as f64).ln().max(0.0).sqrt()).floor() as usize;
    base.max(floor)
}

/// Largest `c` in `(0, c_max]` with `n · μ(X_{radius(c)}) <= 1/2`, where
/// `radius` is increasing and `radius(c_max) = 2`.
fn calibrate(n: usize, d: usize, c_max: f64, radius: impl Fn(f64) -> f64) -> Result<f64> {
    let target = 0.5 / n as f64;
    let mut lo = (c_max * 1e-30).ln();
    let mut hi = c_max.ln();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chord_ball_measure(d, radius(mid.exp()))? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}

/// The paper-strategy `c` for `G'` at a given `d`: the largest `c` with
/// `N · μ(X_{M √c}) <= 1/2`.
pub fn g_prime_threshold(n: usize, d: usize, config: &ReferenceConfiguration) -> Result<f64> {
    if n < 1 {
        return Err(invalid("parameter choice needs N >= 1"));
    }
    let c_max = 4.0 / (config.m * config.m);
    calibrate(n, d, c_max, |c| config.prune_radius(c))
}

/// Vertices of `G'` that survive pruning, without building any edges.
fn survivors(
    config: &ReferenceConfiguration,
    n: usize,
    d: usize,
    c: f64,
    root_seed: u64,
) -> Result<usize> {
    let parts = (0..config.s)
        .map(|a| sample_part(root_seed, a, n, d, String::new()))
        .collect();
    let g = PartiteGeometricGraph::new(parts, Vec::new(), GraphMeta::default())?;
    Ok(close_pairs(&g, config.prune_radius(c), false)
        .iter()
        .filter(|&&x| !x)
        .count())
}

/// Number of grid points scanned by the sweep strategy.
const SWEEP_GRID: usize = 8;

/// Chooses `(d, c)` for `G'_{N,d,c}`.
///
/// `d = max(r, ⌊√ln N⌋)`. The paper strategy picks the `c` at which the
/// expected number of same-part points within `M √c` of a vertex is `1/2`.
/// The sweep strategy finds the largest `c_max` keeping at least `sN/2`
/// survivors for `root_seed`, then scans a geometric grid on
/// `[c_max/8, c_max]` for the most `K_s` (largest `c` on ties).
pub fn choose_parameters(
    n: usize,
    config: &ReferenceConfiguration,
    strategy: Strategy,
    root_seed: u64,
) -> Result<ParameterChoice> {
    if n < 2 {
        return Err(invalid("parameter choice needs N >= 2"));
    }
    let d = default_dimension(n, config.r);
    let c_max = 4.0 / (config.m * config.m);
    match strategy {
        Strategy::Paper => {
            let c = g_prime_threshold(n, d, config)?;
            let two_sn = 2.0 * (config.s * n) as f64;
            let c_hat = (c.powf(-(d as f64) / 2.0) / two_sn).powf(1.0 / d as f64);
            Ok(ParameterChoice {
                d,
                c,
                strategy,
                c_hat: Some(c_hat),
            })
        }
        Strategy::Sweep => {
            let needed = (config.s * n).div_ceil(2);
            let (mut lo, mut hi) = ((c_max * 1e-12).ln(), c_max.ln());
            if survivors(config, n, d, c_max, root_seed)? >= needed {
                lo = hi;
            } else {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if survivors(config, n, d, mid.exp(), root_seed)? >= needed {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            let top = lo.exp();
            let mut best = (0u64, top);
            for k in 0..SWEEP_GRID {
                let c = top * (8f64).powf(-(k as f64) / (SWEEP_GRID - 1) as f64);
                let g = build_g_prime(config, n, d, c, root_seed)?;
                let count = enumerate_cliques(&g, config.s)?;
                if count > best.0 {
                    best = (count, c);
                }
            }
            Ok(ParameterChoice {
                d,
                c: best.1,
                strategy,
                c_hat: None,
            })
        }
    }
}

/// Chooses `(d, c)` for `F''_{N,d,c}`: `d = max(m0, ⌊√ln N⌋)` and `c` such
/// that `N · μ(X_{(2/λ) c1}) = 1/2`, with `c1` capped at
/// [`MAX_PALETTE_RADIUS`].
pub fn choose_rainbow_parameters(n: usize, spec: &RainbowSpec) -> Result<ParameterChoice> {
    if n < 2 {
        return Err(invalid("parameter choice needs N >= 2"));
    }
    let spec = prepare_spec(spec)?;
    let d = default_dimension(n, validate_rainbow_spec(&spec).m0);
    let c = rainbow_threshold(n, d, &spec)?;
    Ok(ParameterChoice {
        d,
        c,
        strategy: Strategy::Paper,
        c_hat: None,
    })
}

/// The calibrated `c` of [`choose_rainbow_parameters`] at a given `d`.
pub fn rainbow_threshold(n: usize, d: usize, spec: &RainbowSpec) -> Result<f64> {
    let spec = prepare_spec(spec)?;
    let radius = |c: f64| prune_f_radius(&spec, palette_radius(&spec, c)).min(2.0);
    // c at which the prune radius reaches the sphere's diameter
    let full = palette_radius(&spec, 1.0);
    let c_full = (2.0 / prune_f_radius(&spec, full)).powi(2);
    let c = calibrate(n, d, c_full, radius)?;
    let c_cap = (MAX_PALETTE_RADIUS / full).powi(2);
    Ok(c.min(c_cap))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub c: f64,
    pub seed: u64,
    pub vertices: usize,
    pub cliques: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of ln(mean count) against ln(total vertices);
    /// absent when fewer than two sizes were run or a mean count is zero.
    pub slope: Option<f64>,
    pub truncated: bool,
}

/// What a sweep builds at each cell.
#[derive(Clone, Copy, Debug)]
pub enum SweepTarget<'a> {
    /// `G'` for the configuration; counts `K_s`, violations from the
    /// unique-extension check.
    Config(&'a ReferenceConfiguration, Strategy),
    /// `F''` for the spec; counts pattern copies, violations are colour
    /// clashes plus one if a rainbow `K_r` exists.
    Spec(&'a RainbowSpec),
}

/// Sweep work is measured in vertex pairs, `Σ (total vertices)²`.
pub const DEFAULT_SWEEP_BUDGET: u64 = 10_000_000_000;

fn sweep_cell(target: SweepTarget<'_>, n: usize, cell_seed: u64) -> Result<SweepRow> {
    match target {
        SweepTarget::Config(config, strategy) => {
            let choice = choose_parameters(n, config, strategy, cell_seed)?;
            let g = build_g_prime(config, n, choice.d, choice.c, cell_seed)?;
            let report = check_unique_extension(&g, config.r, config.s)?;
            Ok(SweepRow {
                n,
                d: choice.d,
                c: choice.c,
                seed: cell_seed,
                vertices: g.vertex_count(),
                cliques: report.ks_count,
                violations: report.violation_count,
            })
        }
        SweepTarget::Spec(spec) => {
            let choice = choose_rainbow_parameters(n, spec)?;
            let g = build_f_double_prime(spec, n, choice.d, choice.c, cell_seed)?;
            let clashes = is_proper_colouring(&g)?.clash_count;
            let rainbow = find_rainbow_clique(&g, spec.r)?.is_some() as u64;
            Ok(SweepRow {
                n,
                d: choice.d,
                c: choice.c,
                seed: cell_seed,
                vertices: g.vertex_count(),
                cliques: count_pattern_copies(&g, &spec.h)?,
                violations: clashes + rainbow,
            })
        }
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Builds, certifies and counts every `(N, seed)` cell in order, stopping
/// early (and marking the result truncated) once `budget` is spent.
pub fn sweep_counts(
    target: SweepTarget<'_>,
    ns: &[usize],
    seeds: &[u64],
    budget: u64,
) -> Result<SweepResult> {
    let parts = match target {
        SweepTarget::Config(config, _) => config.s,
        SweepTarget::Spec(spec) => spec.h.vertex_count(),
    };
    let mut rows = Vec::new();
    let mut spent = 0u64;
    let mut truncated = false;
    'cells: for &n in ns {
        for &cell_seed in seeds {
            let size = (parts * n) as u64;
            spent = spent.saturating_add(size.saturating_mul(size));
            if spent > budget {
                truncated = true;
                break 'cells;
            }
            rows.push(sweep_cell(target, n, cell_seed)?);
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zero = false;
    for &n in ns {
        let counts: Vec<u64> = rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| r.cliques)
            .collect();
        if counts.is_empty() {
            continue;
        }
        let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
        zero |= mean == 0.0;
        xs.push(((parts * n) as f64).ln());
        ys.push(mean.ln());
    }
    let slope = if zero { None } else { fit_slope(&xs, &ys) };
    Ok(SweepResult {
        rows,
        slope,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::band_measure;
    use crate::reference::{kr_rainbow_spec, simplex_config};

    #[test]
    fn wide_threshold_always_hits() {
        let cfg = simplex_config(2).unwrap();
        let e = estimate_gram_probability(&cfg, 2, 2.01, 1000, 1).unwrap();
        assert_eq!(e.p_hat, 1.0);
        assert_eq!(e.stderr, 0.0);
        let e = estimate_conditional_extension(&cfg, 2, 2.01, 1000, 1).unwrap();
        assert_eq!(e.p_hat, 1.0);
    }

    #[test]
    fn two_points_match_band() {
        let points = vec![vec![1.0, 0.0], vec![-0.5, 3f64.sqrt() / 2.0]];
        let cfg = ReferenceConfiguration::from_points("pair", 2, points, 1e-3).unwrap();
        let c = 0.2;
        let e = estimate_gram_probability(&cfg, 2, c, 100_000, 3).unwrap();
        let p = band_measure(2, -0.5, c).unwrap();
        assert!((e.p_hat - p).abs() < 4.0 * e.stderr, "{} vs {p}", e.p_hat);
    }

    #[test]
    fn base_case_is_a_cap() {
        // r = 1, both reference points equal to +1 on S^0.
        let cfg =
            ReferenceConfiguration::from_points("s0", 1, vec![vec![1.0], vec![1.0]], 1e-3).unwrap();
        let c = 0.3;
        let e = estimate_conditional_extension(&cfg, 1, c, 200_000, 4).unwrap();
        let p = chord_ball_measure(1, (2.0 * c).sqrt()).unwrap();
        assert!((e.p_hat - p).abs() < 4.0 * e.stderr, "{} vs {p}", e.p_hat);
    }

    #[test]
    fn stderr_halves_with_four_times_trials() {
        let cfg = simplex_config(2).unwrap();
        let a = estimate_gram_probability(&cfg, 2, 0.3, 50_000, 5).unwrap();
        let b = estimate_gram_probability(&cfg, 2, 0.3, 200_000, 6).unwrap();
        let ratio = b.stderr / a.stderr;
        assert!((ratio - 0.5).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn conditioning_budget_is_enforced() {
        let cfg = simplex_config(2).unwrap();
        let err = estimate_conditional_extension_with(&cfg, 2, 1e-9, 10, 1, 100).unwrap_err();
        assert!(matches!(err, Error::ConditioningFailure { budget: 100 }));
    }

    #[test]
    fn estimates_ignore_thread_count() {
        let cfg = simplex_config(2).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_conditional_extension(&cfg, 2, 0.2, 20_000, 9).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn dimension_formula() {
        assert_eq!(default_dimension(100, 2), 2);
        assert_eq!(default_dimension(1_000_000, 2), 3);
        assert_eq!(default_dimension(1_000_000, 5), 5);
    }

    #[test]
    fn paper_strategy_hits_half_deletion() {
        let cfg = simplex_config(2).unwrap();
        let n = 100;
        let choice = choose_parameters(n, &cfg, Strategy::Paper, 0).unwrap();
        assert_eq!(choice.d, 2);
        let mu = chord_ball_measure(choice.d, cfg.prune_radius(choice.c)).unwrap();
        assert!((n as f64 * mu - 0.5).abs() < 1e-6);
        let c_hat = choice.c_hat.unwrap();
        let rebuilt =
            (2.0 * 3.0 * n as f64 * c_hat.powi(choice.d as i32)).powf(-2.0 / choice.d as f64);
        assert!((rebuilt / choice.c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_strategy_keeps_half() {
        let cfg = simplex_config(2).unwrap();
        let n = 100;
        let seed = 4;
        let choice = choose_parameters(n, &cfg, Strategy::Sweep, seed).unwrap();
        let g = build_g_prime(&cfg, n, choice.d, choice.c, seed).unwrap();
        assert!(2 * g.vertex_count() >= 3 * n);
    }

    #[test]
    fn rainbow_threshold_respects_cap() {
        let spec = kr_rainbow_spec(4).unwrap();
        let choice = choose_rainbow_parameters(100, &spec).unwrap();
        assert_eq!(choice.d, 3);
        let c1 = palette_radius(&spec.normalized(), choice.c);
        assert!(c1 <= MAX_PALETTE_RADIUS + 1e-12);
    }

    #[test]
    fn slope_fit() {
        let xs = [0.0, 1.0, 2.0];
        assert!((fit_slope(&xs, &[1.0, 3.0, 5.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn sweep_is_deterministic_and_certified() {
        let cfg = simplex_config(2).unwrap();
        let target = SweepTarget::Config(&cfg, Strategy::Paper);
        let a = sweep_counts(target, &[30, 60], &[1, 2], DEFAULT_SWEEP_BUDGET).unwrap();
        let b = sweep_counts(target, &[30, 60], &[1, 2], DEFAULT_SWEEP_BUDGET).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4);
        assert!(a.rows.iter().all(|r| r.violations == 0));
        assert!(!a.truncated);
    }

    #[test]
    fn sweep_budget_truncates() {
        let cfg = simplex_config(2).unwrap();
        let target = SweepTarget::Config(&cfg, Strategy::Paper);
        let res = sweep_counts(target, &[30, 60], &[1, 2], 2 * 90 * 90).unwrap();
        assert!(res.truncated);
        assert_eq!(res.rows.len(), 2);
    }
}
