use sectorheat::manifest::{run, Experiment, RunManifest, RunOptions};

fn options(dir: &std::path::Path) -> RunOptions {
    RunOptions { cache_dir: dir.join("cache") }
}

#[test]
fn sweep_manifest_produces_flat_scaled_lifespans() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::with_defaults(Experiment::Sweep);
    m.grid.half_width = 12.0;
    m.grid.n = 256;
    m.output_dir = dir.path().join("out");
    let summary = run(&m, &options(dir.path())).unwrap();
    assert_eq!(summary.exit_code(), 0, "{summary}");
    assert!(summary.gates.iter().all(|g| g.passed));
    assert!(!summary.artifacts.is_empty());
    for a in &summary.artifacts {
        assert!(std::path::Path::new(a).exists() || m.output_dir.join(a).exists(), "missing {a:?}");
    }
}

#[test]
fn manifest_round_trips_through_toml() {
    let m = RunManifest::with_defaults(Experiment::Dilation);
    let back = RunManifest::from_toml_str(&m.to_toml_string().unwrap()).unwrap();
    assert_eq!(back.to_toml_string().unwrap(), m.to_toml_string().unwrap());
}
