use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sectorheat::manifest::{cache_build, exit_code_for, run, RunManifest, RunOptions, EXIT_CONFIG};
use sectorheat::semigroup::PsiCache;

/// Batch experiments for the semilinear heat equation on sectors.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Cache directory; overrides SECTORHEAT_CACHE_DIR.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a manifest.
    Run { manifest: PathBuf },
    /// Build or verify the cache artifact for a manifest's sector.
    CacheBuild { manifest: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let cache_dir = cli.cache_dir.unwrap_or_else(PsiCache::default_dir);
    let manifest_path = match &cli.command {
        Command::Run { manifest } | Command::CacheBuild { manifest } => manifest,
    };
    let manifest = match RunManifest::load(manifest_path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    let outcome = match cli.command {
        Command::Run { .. } => run(&manifest, &RunOptions { cache_dir }).map(|summary| {
            println!("{summary}");
            summary.exit_code()
        }),
        Command::CacheBuild { .. } => cache_build(&manifest, &cache_dir).map(|report| {
            println!("cache: {}", report.path.display());
            println!("C_inf = {:.10}, maximiser radius {:.8}", report.c_inf, report.r_star);
            if let Some(t) = report.t_star {
                println!("a-priori blow-up bound t* = {t:.10}");
            }
            println!("table entries {}, sha256 {}", report.table_len, report.sha256);
            0
        }),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
