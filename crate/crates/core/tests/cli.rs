use std::path::Path;
use std::process::Command;

fn sectorheat(cache: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sectorheat"))
        .arg("--cache-dir")
        .arg(cache)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn malformed_manifest_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "experiment = \"semigroup_checks\"\n[grid]\nn = \"many\"\n").unwrap();
    let out = sectorheat(&dir.path().join("cache"), &["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {err}");
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, "experiment = \"semigroup_checks\"\nlamdbas = [1.0]\n").unwrap();
    let out = sectorheat(&dir.path().join("cache"), &["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn semigroup_checks_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let path = dir.path().join("checks.toml");
    std::fs::write(
        &path,
        format!(
            "experiment = \"semigroup_checks\"\noutput_dir = {:?}\n[grid]\nhalf_width = 8.0\nn = 96\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = sectorheat(&dir.path().join("cache"), &["run", path.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert!(stdout.contains("PASS"));
    assert!(out_dir.join("gates.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "semigroup_checks");
}

#[test]
fn cache_build_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let path = dir.path().join("cache.toml");
    std::fs::write(&path, "experiment = \"semigroup_checks\"\n").unwrap();

    let first = sectorheat(&cache, &["cache-build", path.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let bytes = std::fs::read(&files[0]).unwrap();

    std::fs::remove_file(&files[0]).unwrap();
    let second = sectorheat(&cache, &["cache-build", path.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(std::fs::read(&files[0]).unwrap(), bytes);
    assert_eq!(first.stdout, second.stdout);
}
