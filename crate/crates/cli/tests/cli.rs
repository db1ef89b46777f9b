use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DIMER: &str = r#"
name = "dimer"
initial_state = "site-1"
bipartitions = ["sites:1"]

[integrator]
t_end = 0.3
record_every = 20

[network]
units = "cm-1"
site_energies = [0.0, 50.0]
couplings = [[0.0, 30.0], [30.0, 0.0]]

[noise]
dissipation = [0.0, 0.0]
dephasing = [0.5, 0.5]
sink_rate = 2.0
sink_source_site = 2
"#;

fn fmo_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmo-sim"))
        .args(args)
        .env("FMO_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

#[test]
fn list_prints_catalog() {
    let o = fmo_sim(&["list"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    for name in fmo_core::scenarios::CATALOG_NAMES {
        assert!(out.contains(name), "{name} missing");
    }
    assert_eq!(out.lines().count(), 8);
}

#[test]
fn validate_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dimer.toml");
    fs::write(&cfg, DIMER).unwrap();
    let o = fmo_sim(&["validate", cfg.to_str().unwrap(), "--strict"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("dimer: ok"));

    fs::write(
        &cfg,
        DIMER.replace("t_end = 0.3", "t_end = 0.3\nt_ned = 1.0"),
    )
    .unwrap();
    let o = fmo_sim(&["validate", cfg.to_str().unwrap(), "--strict"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("integrator.t_ned"), "{}", text(&o));
    let o = fmo_sim(&["validate", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
}

fn run_dimer(cfg: &Path, out: &Path) {
    let o = fmo_sim(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--strict",
    ]);
    assert!(o.status.success(), "{}", text(&o));
}

#[test]
fn run_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dimer.toml");
    fs::write(&cfg, DIMER).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_dimer(&cfg, &a);
    run_dimer(&cfg, &b);
    for f in ["populations.csv", "negativity.csv", "validity.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }
    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("scenario = dimer"));
    assert!(manifest.contains("config_digest = sha256:"));
    let (header, rows) = fmo_core::io::read_table(&a.join("populations.csv")).unwrap();
    assert_eq!(header[0], "time_ps");
    assert_eq!(rows.len(), 16);
}

#[test]
fn run_overrides_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dimer.toml");
    fs::write(&cfg, DIMER).unwrap();
    let out = dir.path().join("short");
    let o = fmo_sim(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--t-end",
        "0.1",
        "--dt",
        "0.0005",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let (_, rows) = fmo_core::io::read_table(&out.join("populations.csv")).unwrap();
    assert!((rows.last().unwrap()[0] - 0.1).abs() < 1e-12);

    // the dimer has no bath to scale
    let o = fmo_sim(&["run", cfg.to_str().unwrap(), "--f", "2"]);
    assert!(!o.status.success());
    let o = fmo_sim(&["run", "no-such-scenario"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("neither a catalog scenario"));
}
