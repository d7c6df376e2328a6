//! `sphgraph`: build, certify and measure spherical graph constructions.
//!
//! Exit status is 0 when every certificate passes, 1 when a certificate
//! reports a violation, and 2 for usage errors or malformed input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphgraph::estimate::Strategy;

/// Root seed: a 64-bit integer, or `random` to draw one from system entropy.
#[derive(Clone, Copy, Debug)]
pub struct SeedArg(pub Option<u64>);

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            Ok(SeedArg(None))
        } else {
            s.parse()
                .map(|v| SeedArg(Some(v)))
                .map_err(|_| format!("expected a u64 or 'random', got '{s}'"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Json,
    Flat,
}

#[derive(Debug, Parser)]
#[command(name = "sphgraph", version, about)]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes outputs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Root seed for every random stream.
    #[arg(long, global = true, default_value = "0")]
    pub seed: SeedArg,

    /// Leave wall-clock timestamps out of the manifest.
    #[arg(long, global = true)]
    pub no_timestamps: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the graph here.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Encoding of the graph file.
    #[arg(long, value_enum, default_value = "json")]
    pub format: GraphFormat,

    /// Also write the report here (it always goes to stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build G' for a reference configuration and check unique extension.
    Construct {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        /// `simplex:R` or `random:R,S`; defaults to the simplex when
        /// s = r + 1 and a seeded random configuration otherwise.
        #[arg(long)]
        config: Option<String>,
        #[arg(long, default_value = "paper")]
        strategy: Strategy,
        #[command(flatten)]
        output: Output,
    },
    /// Build the coloured graph F'' for a rainbow spec and certify it.
    Rainbow {
        /// `kr:R`, `pentagon` or `kings:K,L`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        /// Amplify with the pentagon product power (pentagon only).
        #[arg(long)]
        product: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Run certificates on a graph file (JSON or flat text).
    Verify {
        file: PathBuf,
        #[arg(long, requires = "s")]
        r: Option<usize>,
        #[arg(long, requires = "r")]
        s: Option<usize>,
        /// Check proper colouring and absence of a rainbow K_R.
        #[arg(long)]
        rainbow: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Monte-Carlo estimate of the Gram-window probability.
    Estimate {
        /// `simplex:R` or `random:R,S`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Estimate the conditional extension probability instead.
        #[arg(long)]
        conditional: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count cliques or pattern copies over sizes and seeds, as CSV.
    Sweep {
        #[arg(long, requires = "s", conflicts_with = "spec")]
        r: Option<usize>,
        #[arg(long, requires = "r")]
        s: Option<usize>,
        #[arg(long)]
        config: Option<String>,
        /// Sweep F'' for a rainbow spec instead of G'.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        /// Number of seeds; cell seeds are root, root + 1, ...
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value = "paper")]
        strategy: Strategy,
        /// Work budget in vertex pairs.
        #[arg(long, default_value_t = sphgraph::estimate::DEFAULT_SWEEP_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the Behrend grid graph and count its triangles.
    Behrend {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        dgrid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Greedy antipodal direction packing with separation 3 c1.
    Pack {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        c1: f64,
        #[arg(long, default_value_t = sphgraph::geometry::DEFAULT_PROBE_COUNT)]
        probes: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
