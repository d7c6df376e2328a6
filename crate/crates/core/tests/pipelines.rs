//! End-to-end runs of the constructions through their certificates.

use sphgraph::construct::{build_g, prune};
use sphgraph::estimate::{choose_parameters, choose_rainbow_parameters, Strategy};
use sphgraph::io;
use sphgraph::rainbow::build_f_double_prime;
use sphgraph::reference::{default_config, spec_from_id, RainbowSpec, ReferenceConfiguration};
use sphgraph::verify::{check_unique_extension, find_rainbow_clique, is_proper_colouring};

fn configs() -> Vec<ReferenceConfiguration> {
    [(2, 3), (3, 4), (2, 4)]
        .into_iter()
        .map(|(r, s)| default_config(r, s, 0).unwrap())
        .collect()
}

/// Unpruned graphs do contain `K_r` with several extensions; pruning the
/// same sample removes every one of them.
#[test]
fn pruning_removes_multiple_extensions() {
    for config in configs() {
        let (r, s) = (config.r, config.s);
        let mut seen_violation = false;
        for seed in 0..20 {
            let g = build_g(&config, 40, r, 0.1, seed).unwrap();
            let before = check_unique_extension(&g, r, s).unwrap();
            seen_violation |= !before.passed();
            let pruned = prune(&g, config.prune_radius(0.1));
            let after = check_unique_extension(&pruned, r, s).unwrap();
            assert!(
                after.passed(),
                "{} seed {seed}: {:?}",
                config.id,
                after.violations
            );
        }
        assert!(seen_violation, "{}: G never had a violation", config.id);
    }
}

#[test]
fn tuned_g_prime_passes_with_both_strategies() {
    for config in configs() {
        for strategy in [Strategy::Paper, Strategy::Sweep] {
            for seed in 0..3 {
                let choice = choose_parameters(60, &config, strategy, seed).unwrap();
                let g = sphgraph::construct::build_g_prime(&config, 60, choice.d, choice.c, seed)
                    .unwrap();
                assert!(check_unique_extension(&g, config.r, config.s)
                    .unwrap()
                    .passed());
                assert_eq!(g.meta.c, Some(choice.c));
            }
        }
    }
}

fn certify(spec: &RainbowSpec, n: usize, d: usize, c: f64, seed: u64) {
    let g = build_f_double_prime(spec, n, d, c, seed).unwrap();
    let colouring = is_proper_colouring(&g).unwrap();
    assert!(
        colouring.proper,
        "{} seed {seed}: {:?}",
        spec.id, colouring.clashes
    );
    assert_eq!(find_rainbow_clique(&g, spec.r).unwrap(), None);
}

#[test]
fn rainbow_pipelines_certify() {
    for id in ["kr:4", "pentagon", "kings:2,2"] {
        let spec = spec_from_id(id).unwrap();
        let choice = choose_rainbow_parameters(60, &spec).unwrap();
        for seed in 0..3 {
            certify(&spec, 60, choice.d, choice.c, seed);
        }
    }
}

/// Far above the calibrated threshold the prune empties most of `F'`, but
/// the survivors still have to pass.
#[test]
fn rainbow_certificates_hold_at_large_c() {
    let spec = spec_from_id("pentagon").unwrap();
    for c in [1e-3, 1e-2, 5e-2] {
        for seed in 0..3 {
            certify(&spec, 30, 2, c, seed);
        }
    }
}

#[test]
fn exported_graphs_reload_identically() {
    let config = default_config(2, 3, 0).unwrap();
    let g = sphgraph::construct::build_g_prime(&config, 50, 2, 0.01, 3).unwrap();
    let manifest = io::RunManifest::new("construct", 3).with("n", 50usize);
    let (_, back) = io::read_graph(&io::graph_to_json(&g, &manifest).unwrap()).unwrap();
    assert_eq!(back, g);

    let spec = spec_from_id("kings:2,2").unwrap();
    let f = build_f_double_prime(&spec, 60, 3, 1e-3, 9).unwrap();
    let (_, back) = io::read_graph(&io::graph_to_flat(&f, &manifest).unwrap()).unwrap();
    assert_eq!(back, f);
}

#[test]
fn specs_and_configs_round_trip_as_json() {
    for id in ["kr:5", "pentagon", "kings:3,2"] {
        let spec = spec_from_id(id).unwrap();
        let back: RainbowSpec = io::from_json(&io::to_json(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
    for config in configs() {
        let back: ReferenceConfiguration = io::from_json(&io::to_json(&config).unwrap()).unwrap();
        assert_eq!(back, config);
    }
}
