//! Runs an experiment from an inline TOML manifest, as the CLI does.

use sectorheat::manifest::{run, RunManifest, RunOptions};

const MANIFEST: &str = r#"
experiment = "sweep"
lambdas = [0.5, 1.0, 2.0]
output_dir = "target/sectorheat-example"

[grid]
half_width = 12.0
n = 256
"#;

fn main() -> sectorheat::Result<()> {
    let manifest = RunManifest::from_toml_str(MANIFEST)?;
    let summary = run(&manifest, &RunOptions::default())?;
    print!("{summary}");
    std::process::exit(summary.exit_code().into());
}
