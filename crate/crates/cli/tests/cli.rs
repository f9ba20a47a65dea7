use std::path::Path;
use std::process::{Command, Output};

fn polariton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polariton")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 7] = [
    "--params",
    "sweep.power_start_dBm=-60",
    "sweep.power_stop_dBm=-20",
    "sweep.power_step_dB=20",
    "sweep.probe_start_GHz=7.15",
    "sweep.probe_stop_GHz=7.18",
    "sweep.probe_step_GHz=0.001",
];

fn sweep(out: &Path, workers: &str, extra: &[&str]) -> Output {
    let mut args = vec!["sweep", "--out", out.to_str().unwrap(), "--workers", workers];
    args.extend_from_slice(extra);
    args.extend_from_slice(&SMALL);
    polariton(&args)
}

#[test]
fn eigen_reports_dressed_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let o = polariton(&["eigen", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("omega'_ge0 = 7.6160 GHz"), "{text}");
    assert!(text.contains("omega'_rg  = 7.1750 GHz"), "{text}");
    assert!(text.contains(" 1p ") && text.contains(" 5p "));
    let json: String = std::fs::read_to_string(dir.path().join("eigen.json")).unwrap();
    assert!(json.contains("\"transitions\""));
}

#[test]
fn crossing_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = polariton(&["crossing", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Omega_d/2pi = 35.63 MHz (-24.0 dBm)"), "{text}");
    assert!(text.contains("chi/2pi >= 5.20 MHz"), "{text}");
    assert!(dir.path().join("crossing.json").exists());
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[device]\nomega_r_GHz = 7.18\nkapa_per_us = 3.0\n").unwrap();
    let o = polariton(&["crossing", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kapa_per_us") && err.contains("line 3"), "{err}");

    let o = polariton(&["crossing", "--params", "device.alpha_MHz"]);
    assert_eq!(o.status.code(), Some(2));
    let o = polariton(&["crossing", "--params", "device.alpha_MHz=250"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"));
    let o = polariton(&["crossing", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[device]\nomega_01_GHz = 6.18\n\n[output]\ndir = \"ignored\"\n").unwrap();
    let out = dir.path().join("out");
    let o = polariton(&[
        "eigen",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--params",
        "device.g0_MHz=46.57",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("omega'_ge0 = 6.17"), "{}", stdout(&o));
    assert!(out.join("eigen.json").exists());
}

#[test]
fn sweep_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = sweep(&a, "1", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = sweep(&b, "3", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["grid.csv", "overlay.csv", "analytic_overlay.csv", "grid_meta.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let meta: String = std::fs::read_to_string(a.join("grid_meta.json")).unwrap();
    assert!(meta.contains("\"engine\": \"both\""));
    let hash = meta.split("\"params_hash\": \"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(hash.len(), 64);
    let grid = std::fs::read_to_string(a.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 3 * 31);
}

#[test]
fn engine_flag_selects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweep(dir.path(), "1", &["--engine", "eigen"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!dir.path().join("grid.csv").exists());
    assert!(dir.path().join("overlay.csv").exists());
    assert!(std::fs::read_to_string(dir.path().join("grid_meta.json")).unwrap().contains("\"engine\": \"eigen\""));
}

#[test]
fn detuning_sweep_and_dispersive_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let o = polariton(&[
        "sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--engine",
        "eigen",
        "--params",
        "sweep.mode=detuning",
        "sweep.detuning_start_MHz=-10",
        "sweep.detuning_stop_MHz=10",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!dir.path().join("analytic_overlay.csv").exists());
    let meta = std::fs::read_to_string(dir.path().join("grid_meta.json")).unwrap();
    assert!(meta.contains("\"coupler_detuning\""));

    let o = polariton(&["compare-dispersive", "--out", dir.path().to_str().unwrap(), "--engine", "eigen", SMALL[0], SMALL[1], SMALL[2], SMALL[3]]);
    assert!(o.status.success(), "{}", stderr(&o));
    for sub in ["device", "dispersive"] {
        assert!(dir.path().join(sub).join("overlay.csv").exists());
    }
    let twin = std::fs::read_to_string(dir.path().join("dispersive").join("grid_meta.json")).unwrap();
    assert!(twin.contains("\"omega_01_GHz\": 6.18"), "{twin}");
}

#[test]
fn solver_breakdown_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweep(
        dir.path(),
        "1",
        // Practically lossless: the steady state is no longer unique.
        &["--engine", "meq", "--params", "device.kappa_per_us=1e-300", "device.gamma1_per_us=1e-300", "device.gamma_phi_per_us=1e-300"],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(dir.path().join("grid_meta.json").exists());
}

#[test]
fn validate_passes() {
    let o = polariton(&["validate"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("8 of 8 checks passed"));
}
