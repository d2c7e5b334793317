use std::fs;
use std::path::Path;
use std::process::Command;

use helmscat_lab::config::ExperimentConfig;
use helmscat_lab::manifest::Manifest;
use helmscat_lab::{calibrate_floor, emit_plots, presets, richardson_floor, run_experiment, LabError};
use jsonschema::JSONSchema;
use serde_json::{json, Value};

fn docs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn schema(name: &str) -> JSONSchema {
    let v: Value = serde_json::from_str(&fs::read_to_string(docs().join(name)).unwrap()).unwrap();
    JSONSchema::compile(&v).unwrap()
}

fn small_sweep(dir: &Path) -> ExperimentConfig {
    let mut c = presets::corner_scatter();
    c.levels = vec![0.1, 0.05];
    c.k_range.max = 2.5;
    c.k_range.step = 0.5;
    c.output_dir = Some(dir.display().to_string());
    c
}

fn is_validation<T: std::fmt::Debug>(r: Result<T, LabError>) -> bool {
    matches!(r, Err(LabError::Validation(_)))
}

#[test]
fn rejects_bad_configs() {
    let mut c = small_sweep(Path::new("/tmp/never"));
    c.k_range.max = 0.5;
    assert!(is_validation(c.validate()));

    let mut c = small_sweep(Path::new("/tmp/never"));
    c.levels = vec![0.05];
    assert!(is_validation(c.validate()));

    let mut c = small_sweep(Path::new("/tmp/never"));
    c.levels = vec![0.05, 0.1];
    assert!(is_validation(c.validate()));

    // two levels are enough to run but not to calibrate
    let c = small_sweep(Path::new("/tmp/never"));
    assert!(c.validate().is_ok());
    assert!(is_validation(calibrate_floor(&c)));

    // a disk sweep with Herglotz waves across a transmission eigenvalue
    let mut c = presets::radial_disk();
    c.kind = helmscat_lab::ExperimentKind::Sweep;
    c.incident = Some(helmscat_lab::config::IncidentFamily::Herglotz { orders: vec![0] });
    c.levels = vec![0.04, 0.02, 0.01];
    c.radial = None;
    assert!(c.validate().is_ok());
    assert!(is_validation(c.check_calibratable()));
    c.k_range.max = 3.0;
    assert!(c.check_calibratable().is_ok());

    let text = r#"{"kind": "sweep", "shape": {"type": "disk", "center": [0,0], "radius": 1},
                   "k_range": {"min": 1, "max": 2, "step": 1}, "levels": [0.1, 0.05], "colour": 3}"#;
    assert!(is_validation(ExperimentConfig::from_json(text)));

    let mut c = presets::bump_source();
    c.shape = helmscat::geometry::Shape::unit_square();
    assert!(is_validation(c.validate()));
}

#[test]
fn example_configs_match_the_schema() {
    let s = schema("config.schema.json");
    for entry in fs::read_dir(docs().join("examples")).unwrap() {
        let p = entry.unwrap().path();
        let v: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert!(s.is_valid(&v), "{}", p.display());
        ExperimentConfig::from_json(&v.to_string()).unwrap().validate().unwrap();
    }
    for name in presets::NAMES {
        let v = serde_json::to_value(presets::by_name(name).unwrap()).unwrap();
        assert!(s.is_valid(&v), "{name}");
    }
    assert!(!s.is_valid(&json!({"kind": "sweep"})));
}

#[test]
fn reruns_are_byte_identical_and_manifests_complete() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment(&small_sweep(a.path())).unwrap();
    let rb = run_experiment(&small_sweep(b.path())).unwrap();
    assert_eq!(ra.exit_code(), 0);
    assert_eq!(
        fs::read(a.path().join("sweep.csv")).unwrap(),
        fs::read(b.path().join("sweep.csv")).unwrap()
    );
    assert_eq!(ra.manifest.files, rb.manifest.files);
    assert_eq!(ra.manifest.config_hash, rb.manifest.config_hash);

    let m = Manifest::load(a.path()).unwrap();
    assert!(m.verify(a.path()).unwrap().is_empty());
    let names: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["sweep.csv"]);
    assert!(!a.path().join("progress.jsonl").exists());
    let v: Value = serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert!(schema("manifest.schema.json").is_valid(&v));

    let csv = fs::read_to_string(a.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("# helmlab corner_scatter seed=0 config="));
    let ks: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(ks.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(ks.len(), 4 * 4 * 2);
}

#[test]
fn truncated_runs_resume_without_recomputing() {
    let fresh = tempfile::tempdir().unwrap();
    let resumed = tempfile::tempdir().unwrap();
    let full = run_experiment(&small_sweep(fresh.path())).unwrap();

    let mut c = small_sweep(resumed.path());
    c.budget.max_solves = Some(10);
    let cut = run_experiment(&c).unwrap();
    assert!(cut.manifest.truncated);
    assert_eq!(cut.exit_code(), 3);
    assert!(cut.manifest.truncation_reason.as_deref().unwrap().contains("budget"));
    assert!(resumed.path().join("progress.jsonl").exists());
    assert_eq!(cut.manifest.run.rows_computed, 2);

    c.budget.max_solves = None;
    let rest = run_experiment(&c).unwrap();
    assert!(!rest.manifest.truncated);
    assert_eq!(rest.manifest.run.rows_reused, 2);
    assert_eq!(rest.manifest.run.rows_computed, full.manifest.run.rows_computed - 2);
    assert_eq!(
        fs::read(fresh.path().join("sweep.csv")).unwrap(),
        fs::read(resumed.path().join("sweep.csv")).unwrap()
    );
    assert_eq!(rest.manifest.config_hash, full.manifest.config_hash);
}

#[test]
fn cell_budget_truncates_at_a_level() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small_sweep(d.path());
    c.budget.max_cells = 400;
    let out = run_experiment(&c).unwrap();
    assert!(out.manifest.truncated);
    let s = out.sweep.unwrap();
    assert!(s.levels[0].min_rho.is_some());
    assert!(s.levels[1].min_rho.is_none());
}

#[test]
fn plots_cover_every_wave_and_join_the_manifest() {
    let d = tempfile::tempdir().unwrap();
    assert!(matches!(emit_plots(d.path()), Err(LabError::MissingManifest(_))));
    run_experiment(&small_sweep(d.path())).unwrap();
    let files = emit_plots(d.path()).unwrap();
    // a data file and a script per plane wave
    assert_eq!(files.len(), 8);
    let m = Manifest::load(d.path()).unwrap();
    assert_eq!(m.files.len(), 9);
    assert!(m.verify(d.path()).unwrap().is_empty());
    let dat = fs::read_to_string(d.path().join("plots/rho_vs_k_wave0.dat")).unwrap();
    assert_eq!(dat.matches("# level").count(), 2);
}

#[test]
fn radial_plots_mark_the_spectrum_roots() {
    let d = tempfile::tempdir().unwrap();
    let mut c = presets::radial_disk();
    c.levels = vec![0.1, 0.05];
    c.k_range.max = 4.0;
    c.output_dir = Some(d.path().display().to_string());
    run_experiment(&c).unwrap();
    emit_plots(d.path()).unwrap();
    let spectrum = fs::read_to_string(d.path().join("spectrum.csv")).unwrap();
    let roots: Vec<&str> = spectrum.lines().skip(2).collect();
    assert_eq!(roots.len(), 2);
    for o in 0..2 {
        let marks = fs::read_to_string(d.path().join(format!("plots/roots_order{o}.dat"))).unwrap();
        let want: Vec<String> = roots
            .iter()
            .filter(|r| r.starts_with(&format!("{o},")))
            .map(|r| format!("{} 0", r.split(',').nth(1).unwrap()))
            .collect();
        assert_eq!(marks.lines().collect::<Vec<_>>(), want);
    }
}

#[test]
fn richardson_recovers_a_linear_limit() {
    let levels = [0.04, 0.02, 0.01];
    let minima: Vec<f64> = levels.iter().map(|h| 0.5 + 2.0 * h).collect();
    let c = richardson_floor(&levels, &minima).unwrap();
    assert_eq!(c.status, "ok");
    assert!((c.order.unwrap() - 1.0).abs() < 1e-9);
    assert!((c.extrapolated - 0.5).abs() < 1e-12);
    assert!((c.rho_min - 0.25).abs() < 1e-12);

    let c = richardson_floor(&levels, &[0.5, 0.6, 0.55]).unwrap();
    assert_eq!(c.status, "calibration_failed");
    assert_eq!(c.extrapolated, 0.55);
    assert!(c.warning.is_some());
    assert!(richardson_floor(&levels[1..], &minima[1..]).is_err());
}

#[test]
fn stationary_densities_respect_their_bounds() {
    let c = presets::stationary_phase();
    let p = c.stationary.clone().unwrap();
    let dens = helmscat_lab::experiment::random_densities(&c);
    assert_eq!(dens.len(), p.densities);
    for (d, _) in &dens {
        assert!(d.c1_norm() <= p.c1_bound);
        for i in 0..720 {
            let th = i as f64 * std::f64::consts::PI / 360.0;
            assert!(d.eval(th).norm() >= p.min_modulus);
        }
    }
    assert_eq!(dens, helmscat_lab::experiment::random_densities(&c));
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_helmlab");
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "sweep"}"#).unwrap();
    let st = Command::new(bin)
        .args(["sweep", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));

    let st = Command::new(bin)
        .args([
            "sweep",
            "--preset",
            "corner_scatter",
            "--levels",
            "0.1,0.05",
            "--max-solves",
            "4",
            "--out",
        ])
        .arg(d.path().join("cut"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(3));

    let st = Command::new(bin)
        .args(["plots", "--dir"])
        .arg(d.path().join("nothing"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(1));

    let st = Command::new(bin)
        .args(["radial", "--preset", "corner_scatter", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));

    let out = Command::new(bin).args(["preset", "radial_disk"]).output().unwrap();
    let c = ExperimentConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(c, presets::radial_disk());
}
