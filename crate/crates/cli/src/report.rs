//! Subcommand bodies: run the library, print a summary, write artifacts.

use std::path::Path;

use polariton_core::analytic::{self, find_crossing, resolvability_threshold};
use polariton_core::eigenmode::{steady_populations, track_path, transition_table, DressedBasis, DressedFrequencies, Polariton};
use polariton_core::hilbert::HilbertSpec;
use polariton_core::model::{ghz, to_ghz, to_mhz, DriveTone};
use polariton_core::spectroscopy::io::{analytic_csv, atomic_write, grid_csv, json_bytes, overlay_csv, params_hash};
use polariton_core::spectroscopy::{run_sweep, Axis, Engine, SweepOutput};
use polariton_core::validation;
use serde::Serialize;

use crate::config::{DeviceSection, RunConfig, SolverSection, SweepMode, SweepSection};
use crate::{run_error, AppError};

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), AppError> {
    std::fs::create_dir_all(dir).map_err(|source| AppError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    atomic_write(&path, bytes).map_err(|source| AppError::Io { path, source })
}

/// Everything that determines the numbers in the artifacts.
#[derive(Serialize)]
struct Resolved<'a> {
    device: &'a DeviceSection,
    sweep: &'a SweepSection,
    solver: &'a SolverSection,
}

impl<'a> Resolved<'a> {
    fn of(cfg: &'a RunConfig) -> Self {
        Resolved { device: &cfg.device, sweep: &cfg.sweep, solver: &cfg.solver }
    }
}

#[derive(Serialize)]
struct AxisMeta {
    name: &'static str,
    unit: &'static str,
    start: f64,
    stop: f64,
    step: f64,
    len: usize,
}

fn axis_meta(name: &'static str, unit: &'static str, a: Axis) -> AxisMeta {
    AxisMeta { name, unit, start: a.start, stop: a.stop, step: a.step, len: a.len().unwrap_or(0) }
}

#[derive(Serialize)]
struct ReferenceMeta {
    #[serde(rename = "omega_ge0_GHz")]
    ge0: f64,
    #[serde(rename = "omega_ge1_GHz")]
    ge1: f64,
    #[serde(rename = "omega_rg_GHz")]
    rg: f64,
    #[serde(rename = "omega_re_GHz")]
    re: f64,
    #[serde(rename = "chi_MHz")]
    chi: f64,
}

impl From<DressedFrequencies> for ReferenceMeta {
    fn from(f: DressedFrequencies) -> Self {
        ReferenceMeta { ge0: to_ghz(f.ge0), ge1: to_ghz(f.ge1), rg: to_ghz(f.rg), re: to_ghz(f.re), chi: to_mhz(f.chi()) }
    }
}

#[derive(Serialize)]
struct GridMeta<'a> {
    engine: Engine,
    mode: SweepMode,
    drive_axis: AxisMeta,
    probe_axis: AxisMeta,
    params_hash: String,
    config: Resolved<'a>,
    reference: ReferenceMeta,
    cells: usize,
    failed_cells: usize,
    fallback_cells: usize,
    /// Sweep values where polariton tracking saw a weak overlap.
    ambiguous_tracking: Vec<f64>,
    files: Vec<&'static str>,
}

/// Write one sweep's artifacts; returns the failure message if the grid has
/// too many unconverged cells.
fn write_sweep(dir: &Path, cfg: &RunConfig, out: &SweepOutput) -> Result<Option<String>, AppError> {
    let p = cfg.device();
    let spec = cfg.sweep_spec(1);
    let mut files = Vec::new();
    if let Some(grid) = &out.grid {
        write(dir, "grid.csv", &grid_csv(grid).map_err(run_error)?)?;
        files.push("grid.csv");
    }
    if let Some(overlay) = &out.overlay {
        write(dir, "overlay.csv", &overlay_csv(&out.drive_values, overlay).map_err(run_error)?)?;
        files.push("overlay.csv");
    }
    if cfg.sweep.mode == SweepMode::Power && cfg.sweep.coupler_ghz.is_none() {
        let rows = analytic::overlay(&p, out.reference.chi(), out.reference.resonator_mid(), &out.drive_values);
        write(dir, "analytic_overlay.csv", &analytic_csv(&rows).map_err(run_error)?)?;
        files.push("analytic_overlay.csv");
    }
    let drive_axis = match cfg.sweep.mode {
        SweepMode::Power => axis_meta(
            "coupler_power",
            "dBm",
            Axis { start: cfg.sweep.power_start_dbm, stop: cfg.sweep.power_stop_dbm, step: cfg.sweep.power_step_db },
        ),
        SweepMode::Detuning => axis_meta(
            "coupler_detuning",
            "MHz",
            Axis { start: cfg.sweep.detuning_start_mhz, stop: cfg.sweep.detuning_stop_mhz, step: cfg.sweep.detuning_step_mhz },
        ),
    };
    let (cells, failed, fallbacks) = match &out.grid {
        Some(g) => (g.converged.len(), g.failures(), g.fallbacks),
        None => (0, 0, 0),
    };
    let ambiguous = match &out.overlay {
        Some(o) => o.path.ambiguous.iter().map(|&k| out.drive_values[k]).collect(),
        None => Vec::new(),
    };
    files.push("grid_meta.json");
    let meta = GridMeta {
        engine: cfg.sweep.engine,
        mode: cfg.sweep.mode,
        drive_axis,
        probe_axis: axis_meta("probe_frequency", "GHz", spec.probe_ghz),
        params_hash: params_hash(&Resolved::of(cfg)),
        config: Resolved::of(cfg),
        reference: out.reference.into(),
        cells,
        failed_cells: failed,
        fallback_cells: fallbacks,
        ambiguous_tracking: ambiguous,
        files,
    };
    write(dir, "grid_meta.json", &json_bytes(&meta))?;
    Ok(out.grid.as_ref().and_then(|g| g.check().err()).map(|e| e.to_string()))
}

fn summarize(label: &str, out: &SweepOutput) {
    let f = out.reference;
    println!(
        "{label}: {} sweep points, omega'_ge0 = {:.4} GHz, chi/2pi = {:.3} MHz",
        out.drive_values.len(),
        to_ghz(f.ge0),
        to_mhz(f.chi())
    );
    if let Some(g) = &out.grid {
        println!("  master equation: {} cells, {} failed, {} via continued fraction", g.converged.len(), g.failures(), g.fallbacks);
    }
    if let Some(o) = &out.overlay {
        let lines: usize = o.transitions.iter().map(Vec::len).sum();
        println!("  eigenmode overlay: {lines} transitions, {} ambiguous tracking points", o.path.ambiguous.len());
    }
}

pub fn sweep(cfg: &RunConfig, workers: usize) -> Result<(), AppError> {
    let out = run_sweep(&cfg.sweep_spec(workers), &cfg.device()).map_err(run_error)?;
    summarize("device", &out);
    let failure = write_sweep(&cfg.output.dir, cfg, &out)?;
    println!("wrote {}", cfg.output.dir.display());
    failure.map_or(Ok(()), |m| Err(AppError::Failed(m)))
}

pub fn compare_dispersive(cfg: &RunConfig, workers: usize) -> Result<(), AppError> {
    let mut twin = cfg.clone();
    twin.device.omega_01_ghz = cfg.device.omega_r_ghz - 1.0;
    let mut failures = Vec::new();
    for (label, c) in [("device", cfg), ("dispersive", &twin)] {
        let out = run_sweep(&c.sweep_spec(workers), &c.device()).map_err(run_error)?;
        summarize(label, &out);
        if let Some(m) = write_sweep(&cfg.output.dir.join(label), c, &out)? {
            failures.push(format!("{label}: {m}"));
        }
    }
    println!("wrote {}", cfg.output.dir.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(AppError::Failed(failures.join("; ")))
    }
}

#[derive(Serialize)]
struct LevelRow {
    j: usize,
    n: usize,
    #[serde(rename = "energy_GHz")]
    energy: f64,
    purity: f64,
}

#[derive(Serialize)]
struct PolaritonRow {
    label: String,
    branch: usize,
    #[serde(rename = "energy_MHz")]
    energy: f64,
    population: f64,
}

#[derive(Serialize)]
struct TransitionRow {
    from: String,
    to: String,
    #[serde(rename = "freq_GHz")]
    freq: f64,
    matelem: f64,
    intensity: f64,
}

#[derive(Serialize)]
struct EigenReport {
    levels: Vec<LevelRow>,
    reference: ReferenceMeta,
    #[serde(rename = "coupler_GHz")]
    coupler: f64,
    #[serde(rename = "coupler_dBm")]
    dbm: f64,
    #[serde(rename = "rabi_MHz")]
    rabi: f64,
    polaritons: Vec<PolaritonRow>,
    transitions: Vec<TransitionRow>,
}

pub fn eigen(cfg: &RunConfig, dbm: f64) -> Result<(), AppError> {
    let p = cfg.device();
    let hs: HilbertSpec = cfg.hilbert();
    let dressed = DressedBasis::new(&p, &hs).map_err(run_error)?;
    let f = dressed.frequencies();
    let mut levels: Vec<LevelRow> = (0..hs.dim())
        .map(|k| {
            let (j, n) = dressed.parent[k];
            LevelRow { j, n, energy: to_ghz(dressed.solution.energies[k]), purity: dressed.purity(j, n) }
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    // Follow the polaritons up from a weak-drive anchor.
    let omega_d = cfg.sweep.coupler_ghz.map(ghz).unwrap_or(f.ge0);
    let start = dbm.min(-80.0);
    let steps = (dbm - start).ceil() as usize;
    let mut tones: Vec<DriveTone> = (0..steps).map(|k| DriveTone::new(omega_d, p.rabi(start + k as f64))).collect();
    tones.push(DriveTone::new(omega_d, p.rabi(dbm)));
    let path = track_path(&p, &hs, &tones, cfg.sweep.tracking_substeps).map_err(run_error)?;
    let sol = path.solutions.last().expect("non-empty path");
    let drive = path.drives.last().expect("non-empty path");
    let pops = steady_populations(sol, &p, drive, &hs).map_err(run_error)?;
    let window = (ghz(cfg.sweep.probe_start_ghz), ghz(cfg.sweep.probe_stop_ghz));
    let table = transition_table(sol, &pops, omega_d, window, cfg.sweep.matelem_threshold, &hs).map_err(run_error)?;

    let polaritons = Polariton::ALL
        .iter()
        .map(|&pol| {
            let b = path.labels.branch_of(pol);
            let k = sol.index_of(b);
            PolaritonRow { label: pol.to_string(), branch: b, energy: to_mhz(sol.energies[k]), population: pops[k] }
        })
        .collect();
    let transitions = table
        .iter()
        .map(|t| TransitionRow {
            from: path.labels.label(t.from_branch),
            to: path.labels.label(t.to_branch),
            freq: to_ghz(t.freq),
            matelem: t.matelem,
            intensity: t.intensity,
        })
        .collect();
    let report = EigenReport {
        levels,
        reference: f.into(),
        coupler: to_ghz(omega_d),
        dbm,
        rabi: to_mhz(drive.rabi),
        polaritons,
        transitions,
    };

    println!("dressed levels (lab frame)");
    println!("  {:>2} {:>2} {:>14} {:>8}", "j", "n", "E/2pi [GHz]", "purity");
    for l in &report.levels {
        println!("  {:>2} {:>2} {:>14.6} {:>8.4}", l.j, l.n, l.energy, l.purity);
    }
    let r = &report.reference;
    println!("omega'_ge0 = {:.4} GHz  omega'_ge1 = {:.4} GHz", r.ge0, r.ge1);
    println!("omega'_rg  = {:.4} GHz  omega'_re  = {:.4} GHz  chi/2pi = {:.3} MHz", r.rg, r.re, r.chi);
    println!();
    println!("polaritons at {dbm} dBm (Omega_d/2pi = {:.3} MHz, coupler {:.4} GHz)", report.rabi, report.coupler);
    for row in &report.polaritons {
        println!("  {:>3} {:>12.4} MHz  population {:.4}", row.label, row.energy, row.population);
    }
    println!("transitions in the probe window");
    println!("  {:>4} {:>4} {:>12} {:>10} {:>11}", "from", "to", "f [GHz]", "|<a>|", "intensity");
    for t in &report.transitions {
        println!("  {:>4} {:>4} {:>12.6} {:>10.4} {:>11.3e}", t.from, t.to, t.freq, t.matelem, t.intensity);
    }
    write(&cfg.output.dir, "eigen.json", &json_bytes(&report))
}

#[derive(Serialize)]
struct CrossingReport {
    #[serde(rename = "chi_MHz")]
    chi: f64,
    #[serde(rename = "alpha_MHz")]
    alpha: f64,
    #[serde(rename = "rabi_MHz")]
    rabi: f64,
    #[serde(rename = "rabi_estimate_MHz")]
    rabi_estimate: f64,
    #[serde(rename = "power_dBm")]
    power: f64,
    #[serde(rename = "kappa_MHz")]
    kappa: f64,
    #[serde(rename = "chi_min_MHz")]
    chi_min: f64,
    resolvable: bool,
}

pub fn crossing(cfg: &RunConfig) -> Result<(), AppError> {
    let p = cfg.device();
    let chi = DressedBasis::new(&p, &cfg.hilbert()).map_err(run_error)?.frequencies().chi();
    let c = find_crossing(p.alpha, chi).map_err(run_error)?;
    let chi_min = resolvability_threshold(p.kappa, p.alpha);
    let report = CrossingReport {
        chi: to_mhz(chi),
        alpha: to_mhz(p.alpha),
        rabi: to_mhz(c.rabi),
        rabi_estimate: to_mhz(c.rabi_estimate),
        power: p.power(c.rabi),
        kappa: to_mhz(p.kappa),
        chi_min: to_mhz(chi_min),
        resolvable: chi.abs() >= chi_min,
    };
    println!("chi/2pi = {:.3} MHz, alpha/2pi = {:.1} MHz", report.chi, report.alpha);
    println!(
        "lines 13 and 24 cross at Omega_d/2pi = {:.2} MHz ({:.1} dBm); sqrt(chi |alpha| / 2)/2pi = {:.2} MHz",
        report.rabi, report.power, report.rabi_estimate
    );
    println!(
        "resolvable splitting needs chi/2pi >= {:.2} MHz at kappa/2pi = {:.3} MHz: {}",
        report.chi_min,
        report.kappa,
        if report.resolvable { "yes" } else { "no" }
    );
    write(&cfg.output.dir, "crossing.json", &json_bytes(&report))
}

pub fn validate(cfg: &RunConfig) -> Result<(), AppError> {
    let checks = validation::run(&cfg.device(), &cfg.hilbert());
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(AppError::Failed(format!("{failed} validation checks failed")))
    }
}
