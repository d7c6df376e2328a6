use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sphgraph::construct::{behrend_graph, build_g_prime};
use sphgraph::estimate::{
    choose_parameters, choose_rainbow_parameters, estimate_conditional_extension,
    estimate_gram_probability, g_prime_threshold, rainbow_threshold, sweep_counts,
    ProbabilityEstimate, SweepTarget,
};
use sphgraph::geometry::pack_directions;
use sphgraph::graph::PartiteGeometricGraph;
use sphgraph::io::{self, RunManifest, Timestamps};
use sphgraph::rainbow::{build_f_double_prime, clique_core, pentagon_automorphisms, product_power};
use sphgraph::reference::{config_from_id, default_config, spec_from_id, validate_rainbow_spec};
use sphgraph::seed;
use sphgraph::verify::{
    check_unique_extension, count_pattern_copies, enumerate_cliques, find_rainbow_clique,
    is_proper_colouring, list_cliques, ColouringReport, UniquenessReport,
};

use crate::{Cli, Command, GraphFormat, Output};

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

struct Run {
    manifest: RunManifest,
    started: u64,
    timestamps: bool,
}

impl Run {
    fn new(command: &str, root_seed: u64, timestamps: bool) -> Self {
        Self {
            manifest: RunManifest::new(command, root_seed),
            started: unix_now(),
            timestamps,
        }
    }

    fn set(&mut self, key: &str, value: impl Into<io::Scalar>) {
        self.manifest.set(key, value);
    }

    fn finished(&self) -> RunManifest {
        let mut m = self.manifest.clone();
        if self.timestamps {
            m.timestamps = Some(Timestamps {
                started: self.started,
                finished: unix_now(),
            });
        }
        m
    }

    fn write_graph(
        &self,
        g: &PartiteGeometricGraph,
        path: &Path,
        format: GraphFormat,
    ) -> CliResult<()> {
        let manifest = self.finished();
        let text = match format {
            GraphFormat::Json => io::graph_to_json(g, &manifest)?,
            GraphFormat::Flat => io::graph_to_flat(g, &manifest)?,
        };
        fs::write(path, text)?;
        Ok(())
    }

    fn emit<T: Serialize>(&self, body: &T, path: Option<&Path>) -> CliResult<()> {
        let text = io::document_to_json(&self.finished(), body)?;
        if let Some(path) = path {
            fs::write(path, &text)?;
        }
        print!("{text}");
        Ok(())
    }

    fn emit_graph_and_report<T: Serialize>(
        &self,
        g: &PartiteGeometricGraph,
        output: &Output,
        report: &T,
    ) -> CliResult<()> {
        if let Some(path) = &output.out {
            self.write_graph(g, path, output.format)?;
        }
        self.emit(report, output.report.as_deref())
    }
}

#[derive(Serialize)]
struct ConstructReport {
    config: String,
    r: usize,
    s: usize,
    n: usize,
    d: usize,
    c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_hat: Option<f64>,
    vertices: usize,
    edges: usize,
    uniqueness: UniquenessReport,
    violations: u64,
    passed: bool,
}

#[derive(Serialize)]
struct ProductReport {
    core_vertices: usize,
    core_edges: usize,
    factor_cliques: u64,
    expected_cliques: Option<u64>,
    product_vertices: usize,
    product_edges: usize,
    product_cliques: u64,
    counts_match: bool,
    colouring: ColouringReport,
    rainbow_clique: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct RainbowReport {
    spec: String,
    n: usize,
    d: usize,
    c: f64,
    c1: Option<f64>,
    palette_size: Option<usize>,
    vertices: usize,
    edges: usize,
    pattern_copies: u64,
    colouring: ColouringReport,
    rainbow_clique: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    product: Option<ProductReport>,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    file: String,
    vertices: usize,
    edges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    uniqueness: Option<UniquenessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    colouring: Option<ColouringReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rainbow_clique: Option<Option<Vec<usize>>>,
    passed: bool,
}

#[derive(Serialize)]
struct EstimateReport {
    estimate: ProbabilityEstimate,
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    slope: Option<f64>,
    truncated: bool,
    violations: u64,
}

#[derive(Serialize)]
struct BehrendReport {
    k: usize,
    dgrid: usize,
    m: u64,
    set_size: usize,
    set: Vec<Vec<u64>>,
    size_lower_bound: f64,
    vertices: usize,
    edges: usize,
    triangles: u64,
    max_triangles_per_edge: u64,
    passed: bool,
}

#[derive(Serialize)]
struct PackReport {
    d: usize,
    c1: f64,
    separation: f64,
    size: usize,
    separation_violation: Option<(usize, usize)>,
    uncovered_probe_found: bool,
    passed: bool,
}

fn usage(msg: impl Into<String>) -> Box<dyn std::error::Error> {
    msg.into().into()
}

/// Runs one command. `Ok(true)` when every certificate passed.
pub fn run(cli: Cli) -> CliResult<bool> {
    let root_seed = cli.seed.0.unwrap_or_else(rand::random);
    let timestamps = !cli.no_timestamps;
    match cli.command {
        Command::Construct {
            r,
            s,
            n,
            d,
            c,
            config,
            strategy,
            output,
        } => {
            if r < 1 || r >= s {
                return Err(usage(format!("need 1 <= r < s, got r = {r}, s = {s}")));
            }
            let mut run = Run::new("construct", root_seed, timestamps);
            let config = match config {
                Some(id) => config_from_id(&id, root_seed)?,
                None => default_config(r, s, root_seed)?,
            };
            if (config.r, config.s) != (r, s) {
                return Err(usage(format!(
                    "configuration {} does not have r = {r}, s = {s}",
                    config.id
                )));
            }
            let (d, c, c_hat) = match (d, c) {
                (Some(d), Some(c)) => (d, c, None),
                (Some(d), None) => (d, g_prime_threshold(n, d, &config)?, None),
                _ => {
                    let choice = choose_parameters(n, &config, strategy, root_seed)?;
                    (d.unwrap_or(choice.d), c.unwrap_or(choice.c), choice.c_hat)
                }
            };
            run.set("config", config.id.as_str());
            run.set("r", r);
            run.set("s", s);
            run.set("n", n);
            run.set("d", d);
            run.set("c", c);
            run.set("strategy", format!("{strategy:?}").to_lowercase());
            let g = build_g_prime(&config, n, d, c, root_seed)?;
            let uniqueness = check_unique_extension(&g, r, s)?;
            let passed = uniqueness.passed();
            let report = ConstructReport {
                config: config.id.clone(),
                r,
                s,
                n,
                d,
                c,
                c_hat,
                vertices: g.vertex_count(),
                edges: g.edge_count(),
                violations: uniqueness.violation_count,
                uniqueness,
                passed,
            };
            run.emit_graph_and_report(&g, &output, &report)?;
            Ok(passed)
        }

        Command::Rainbow {
            spec,
            n,
            d,
            c,
            product,
            output,
        } => {
            let pattern = spec_from_id(&spec)?;
            if product && pattern.id != "pentagon" {
                return Err(usage("--product applies to the pentagon spec only"));
            }
            let mut run = Run::new("rainbow", root_seed, timestamps);
            let (d, c) = match (d, c) {
                (Some(d), Some(c)) => (d, c),
                (Some(d), None) => (d, rainbow_threshold(n, d, &pattern)?),
                (None, c) => {
                    let choice = choose_rainbow_parameters(n, &pattern)?;
                    (choice.d, c.unwrap_or(choice.c))
                }
            };
            run.set("spec", spec.as_str());
            run.set("n", n);
            run.set("d", d);
            run.set("c", c);
            run.set("product", product);
            let g = build_f_double_prime(&pattern, n, d, c, root_seed)?;
            let colouring = is_proper_colouring(&g)?;
            let rainbow_clique = find_rainbow_clique(&g, pattern.r)?;
            let mut passed = colouring.proper && rainbow_clique.is_none();
            let product = if product {
                let t = pattern.h.vertex_count();
                let core = clique_core(&g, t)?;
                let factor_cliques = enumerate_cliques(&core, t)?;
                let perms = pentagon_automorphisms();
                let power = product_power(&core, &pattern.h, &pattern.colouring, &perms)?;
                let product_cliques = enumerate_cliques(&power, t)?;
                let expected = factor_cliques.checked_pow(perms.len() as u32);
                let colouring = is_proper_colouring(&power)?;
                let rainbow_clique = find_rainbow_clique(&power, pattern.r)?;
                let counts_match = expected == Some(product_cliques);
                passed &= counts_match && colouring.proper && rainbow_clique.is_none();
                Some(ProductReport {
                    core_vertices: core.vertex_count(),
                    core_edges: core.edge_count(),
                    factor_cliques,
                    expected_cliques: expected,
                    product_vertices: power.vertex_count(),
                    product_edges: power.edge_count(),
                    product_cliques,
                    counts_match,
                    colouring,
                    rainbow_clique,
                })
            } else {
                None
            };
            let report = RainbowReport {
                spec: pattern.id.clone(),
                n,
                d,
                c,
                c1: g.meta.c1,
                palette_size: g.meta.palette_size,
                vertices: g.vertex_count(),
                edges: g.edge_count(),
                pattern_copies: count_pattern_copies(&g, &pattern.h)?,
                colouring,
                rainbow_clique,
                product,
                passed,
            };
            run.emit_graph_and_report(&g, &output, &report)?;
            Ok(passed)
        }

        Command::Verify {
            file,
            r,
            s,
            rainbow,
            report,
        } => {
            if r.is_none() && rainbow.is_none() {
                return Err(usage("verify needs --r/--s or --rainbow"));
            }
            let mut run = Run::new("verify", root_seed, timestamps);
            run.set("file", file.display().to_string());
            let text = fs::read_to_string(&file)?;
            let (_, g) = io::read_graph(&text)?;
            let mut passed = true;
            let uniqueness = match (r, s) {
                (Some(r), Some(s)) => {
                    run.set("r", r);
                    run.set("s", s);
                    let u = check_unique_extension(&g, r, s)?;
                    passed &= u.passed();
                    Some(u)
                }
                _ => None,
            };
            let (colouring, rainbow_clique) = match rainbow {
                Some(t) => {
                    run.set("rainbow", t);
                    let colouring = is_proper_colouring(&g)?;
                    let clique = find_rainbow_clique(&g, t)?;
                    passed &= colouring.proper && clique.is_none();
                    (Some(colouring), Some(clique))
                }
                None => (None, None),
            };
            let body = VerifyReport {
                file: file.display().to_string(),
                vertices: g.vertex_count(),
                edges: g.edge_count(),
                uniqueness,
                colouring,
                rainbow_clique,
                passed,
            };
            run.emit(&body, report.as_deref())?;
            Ok(passed)
        }

        Command::Estimate {
            spec,
            d,
            c,
            trials,
            conditional,
            out,
        } => {
            let mut run = Run::new("estimate", root_seed, timestamps);
            let config = config_from_id(&spec, root_seed)?;
            run.set("spec", spec.as_str());
            run.set("d", d);
            run.set("c", c);
            run.set("trials", trials);
            run.set("conditional", conditional);
            let estimate = if conditional {
                estimate_conditional_extension(&config, d, c, trials, root_seed)?
            } else {
                estimate_gram_probability(&config, d, c, trials, root_seed)?
            };
            run.emit(&EstimateReport { estimate }, out.as_deref())?;
            Ok(true)
        }

        Command::Sweep {
            r,
            s,
            config,
            spec,
            ns,
            seeds,
            strategy,
            budget,
            out,
        } => {
            let mut run = Run::new("sweep", root_seed, timestamps);
            let seed_list: Vec<u64> = (0..seeds).map(|i| root_seed.wrapping_add(i)).collect();
            run.set(
                "ns",
                ns.iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            run.set("seeds", seeds);
            run.set("budget", budget);
            let result = match (spec, r, s) {
                (Some(id), None, None) => {
                    let pattern = spec_from_id(&id)?;
                    if !validate_rainbow_spec(&pattern).valid {
                        return Err(usage(format!("spec {id} is invalid")));
                    }
                    run.set("spec", id.as_str());
                    sweep_counts(SweepTarget::Spec(&pattern), &ns, &seed_list, budget)?
                }
                (None, Some(r), Some(s)) => {
                    if r < 1 || r >= s {
                        return Err(usage(format!("need 1 <= r < s, got r = {r}, s = {s}")));
                    }
                    let config = match config {
                        Some(id) => config_from_id(&id, root_seed)?,
                        None => default_config(r, s, root_seed)?,
                    };
                    run.set("config", config.id.as_str());
                    run.set("r", r);
                    run.set("s", s);
                    run.set("strategy", format!("{strategy:?}").to_lowercase());
                    sweep_counts(
                        SweepTarget::Config(&config, strategy),
                        &ns,
                        &seed_list,
                        budget,
                    )?
                }
                _ => return Err(usage("sweep needs either --spec or both --r and --s")),
            };
            let violations: u64 = result.rows.iter().map(|row| row.violations).sum();
            let csv = io::sweep_to_csv(&result.rows, &run.finished())?;
            match out {
                Some(path) => {
                    fs::write(path, csv)?;
                    let summary = SweepSummary {
                        rows: result.rows.len(),
                        slope: result.slope,
                        truncated: result.truncated,
                        violations,
                    };
                    run.emit(&summary, None)?;
                }
                None => print!("{csv}"),
            }
            Ok(violations == 0)
        }

        Command::Behrend { k, dgrid, output } => {
            let mut run = Run::new("behrend", root_seed, timestamps);
            run.set("k", k);
            run.set("dgrid", dgrid);
            let b = behrend_graph(k, dgrid)?;
            let g = &b.graph;
            let mut per_edge = std::collections::HashMap::new();
            let triangles = list_cliques(g, 3)?;
            for t in &triangles {
                for (u, v) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
                    *per_edge.entry((u, v)).or_insert(0u64) += 1;
                }
            }
            let max_triangles_per_edge = per_edge.values().copied().max().unwrap_or(0);
            let kd = (k as f64).powi(dgrid as i32);
            let report = BehrendReport {
                k,
                dgrid,
                m: b.m,
                set_size: b.set.len(),
                size_lower_bound: kd / (dgrid * k * k) as f64,
                set: b.set.clone(),
                vertices: g.vertex_count(),
                edges: g.edge_count(),
                triangles: triangles.len() as u64,
                max_triangles_per_edge,
                passed: max_triangles_per_edge <= 1,
            };
            let passed = report.passed;
            run.emit_graph_and_report(g, &output, &report)?;
            Ok(passed)
        }

        Command::Pack {
            d,
            c1,
            probes,
            output,
        } => {
            let mut run = Run::new("pack", root_seed, timestamps);
            run.set("d", d);
            run.set("c1", c1);
            run.set("probes", probes);
            let mut rng = seed::stream(root_seed, &[seed::PACKING]);
            let packing = pack_directions(d, c1, &mut rng, probes)?;
            let mut probe_rng = seed::stream(root_seed, &[seed::PROBES]);
            let separation_violation = packing.separation_violation();
            let report = PackReport {
                d,
                c1,
                separation: packing.separation,
                size: packing.len(),
                uncovered_probe_found: packing.find_uncovered(probes, &mut probe_rng).is_some(),
                passed: separation_violation.is_none(),
                separation_violation,
            };
            let passed = report.passed;
            run.emit_graph_and_report(&io::packing_to_graph(&packing), &output, &report)?;
            Ok(passed)
        }
    }
}
