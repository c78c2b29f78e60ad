use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fraclap::harness::{dispatch, SUMMARY_FILE};
use fraclap::manifest::{parse_manifest, Subcommand};
use fraclap::Error;

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Probes and solvers for the fractional Dirichlet Laplacian.
///
/// Exit status: 0 when every assertion passes, 1 on a failed assertion or a
/// numerical failure, 2 on a configuration error.
#[derive(Debug, Parser)]
#[command(name = "fraclap", version)]
struct Cli {
    /// One of: verify-cordoba, verify-lower-bound, probe-heat-bounds,
    /// probe-grad-bounds, halfspace-suite, probe-v0, commutator-suite,
    /// run-linear, run-sqg, frac-oracle.
    subcommand: String,

    /// TOML run manifest.
    #[arg(long)]
    manifest: PathBuf,

    /// Output directory (overrides the manifest's `output_dir`).
    #[arg(long, env = "FRACLAP_OUT")]
    out: Option<PathBuf>,

    /// Seed for random fields (overrides the manifest's `seed`).
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for parallel loops.
    #[arg(long, env = "FRACLAP_THREADS")]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, Error> {
    let subcommand: Subcommand = cli.subcommand.parse()?;
    let mut manifest = parse_manifest(&cli.manifest)?;
    if manifest.subcommand != subcommand {
        return Err(Error::Manifest(format!(
            "manifest is for `{}` but `{subcommand}` was requested",
            manifest.subcommand
        )));
    }
    if let Some(seed) = cli.seed {
        manifest.seed = seed;
    }
    let out = cli.out.or_else(|| manifest.output_dir.clone()).unwrap_or_else(|| PathBuf::from("fraclap-out"));
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Manifest(format!("thread pool: {e}")))?;
    }
    let outcome = dispatch(&manifest, &out)?;
    for r in outcome.records.iter().filter(|r| !r.passed) {
        eprintln!("FAILED [{}] {}: {}", r.anchor, r.check, r.measured);
    }
    let passed = outcome.records.iter().filter(|r| r.passed).count();
    println!(
        "{subcommand}: {passed}/{} checks passed; results in {}",
        outcome.records.len(),
        out.join(SUMMARY_FILE).display()
    );
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_FAILED })
        }
    }
}
