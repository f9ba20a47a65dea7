//! Two-tone spectroscopy maps: photon number against probe frequency and
//! coupler power (or coupler detuning), from either route, plus the line
//! overlays from the eigenmode picture.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigenmode::{
    steady_populations, track_path, transition_table, DressedBasis, DressedFrequencies, EigenError, EigenPath,
    Transition,
};
use crate::hamiltonian::build_coupler_frame;
use crate::hilbert::HilbertSpec;
use crate::linalg::{dagger, init_blas};
use crate::model::{ghz, mhz, DeviceParams, DriveTone};
use crate::steadystate::relaxation::{RelaxationOptions, Route};
use crate::steadystate::{commutator, static_liouvillian, HarmonicRelaxation};

pub mod io;
pub mod lines;

#[derive(Debug, Error)]
pub enum SpectroError {
    #[error("spectrum is flat (max - min = {0:e}); nothing to normalise")]
    FlatGrid(f64),
    #[error("axis is empty or malformed: start {start}, stop {stop}, step {step}")]
    BadAxis { start: f64, stop: f64, step: f64 },
    #[error("{failed} of {total} grid cells failed to converge")]
    TooManyFailures { failed: usize, total: usize },
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Evenly spaced, inclusive axis. Values are `start + k * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, SpectroError> {
        let a = Axis { start, stop, step };
        a.len()?;
        Ok(a)
    }

    pub fn single(value: f64) -> Self {
        Axis { start: value, stop: value, step: 1.0 }
    }

    pub fn len(&self) -> Result<usize, SpectroError> {
        let bad = SpectroError::BadAxis { start: self.start, stop: self.stop, step: self.step };
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(bad);
        }
        Ok(((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.len().unwrap_or(0);
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Eigen,
    Meq,
    Both,
}

impl Engine {
    pub fn eigen(self) -> bool {
        matches!(self, Engine::Eigen | Engine::Both)
    }

    pub fn meq(self) -> bool {
        matches!(self, Engine::Meq | Engine::Both)
    }
}

/// What the coupler does along the sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveSweep {
    /// Coupler power in dBm; the coupler sits at `omega_d` or, if `None`, on
    /// the device's dressed qubit line ω'ge0.
    Power { omega_d: Option<f64>, dbm: Axis },
    /// Fixed power; coupler at `ω'ge,mid + Δ` with Δ/2π in MHz on the axis.
    Detuning { dbm: f64, detuning_mhz: Axis },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub drive: DriveSweep,
    pub probe_ghz: Axis,
    /// Probe Rabi amplitude, rad/µs.
    pub probe_rabi: f64,
    pub engine: Engine,
    pub hilbert: HilbertSpec,
    pub solver: RelaxationOptions,
    pub workers: usize,
    /// Extra diagonalisations between sweep points used only for tracking.
    pub tracking_substeps: usize,
    pub matelem_threshold: f64,
}

impl SweepSpec {
    /// Coupler power -80..0 dBm at ω'ge0, probe 7.14-7.20 GHz.
    pub fn power_sweep() -> Self {
        SweepSpec {
            drive: DriveSweep::Power { omega_d: None, dbm: Axis { start: -80.0, stop: 0.0, step: 1.0 } },
            probe_ghz: Axis { start: 7.14, stop: 7.20, step: 1e-4 },
            probe_rabi: mhz(0.05),
            engine: Engine::Both,
            hilbert: HilbertSpec::default(),
            solver: RelaxationOptions::default(),
            workers: 1,
            tracking_substeps: 8,
            matelem_threshold: 1e-3,
        }
    }

    /// Coupler detuning cut at fixed power (Mollow-triplet geometry).
    pub fn detuning_sweep(dbm: f64, detuning_mhz: Axis) -> Self {
        SweepSpec { drive: DriveSweep::Detuning { dbm, detuning_mhz }, ..Self::power_sweep() }
    }

    /// Coupler tones along the sweep axis, with the axis values.
    pub fn drives(&self, p: &DeviceParams, reference: &DressedFrequencies) -> Result<(Vec<f64>, Vec<DriveTone>), SpectroError> {
        match self.drive {
            DriveSweep::Power { omega_d, dbm } => {
                dbm.len()?;
                let w = omega_d.unwrap_or(reference.ge0);
                let vals = dbm.values();
                let tones = vals.iter().map(|&x| DriveTone::new(w, p.rabi(x))).collect();
                Ok((vals, tones))
            }
            DriveSweep::Detuning { dbm, detuning_mhz } => {
                detuning_mhz.len()?;
                let vals = detuning_mhz.values();
                let rabi = p.rabi(dbm);
                let tones = vals.iter().map(|&x| DriveTone::new(reference.ge_mid() + mhz(x), rabi)).collect();
                Ok((vals, tones))
            }
        }
    }
}

/// Photon-number map on the (drive, probe) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub drive_values: Vec<f64>,
    /// Probe frequencies, rad/µs.
    pub probe: Vec<f64>,
    /// Raw `⟨a†a⟩`; NaN where the solver failed.
    pub photons: Array2<f64>,
    /// Photons rescaled to [0, 1] over the whole grid.
    pub n_tilde: Array2<f64>,
    pub converged: Array2<bool>,
    /// Cells that needed the continued-fraction fallback.
    pub fallbacks: usize,
}

impl SpectrumGrid {
    pub fn failures(&self) -> usize {
        self.converged.iter().filter(|c| !**c).count()
    }

    /// More than 5% failed cells invalidates the run.
    pub fn check(&self) -> Result<(), SpectroError> {
        let failed = self.failures();
        let total = self.converged.len();
        if failed as f64 > 0.05 * total as f64 {
            return Err(SpectroError::TooManyFailures { failed, total });
        }
        Ok(())
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        self.n_tilde.row(k).to_vec()
    }
}

/// Eigenmode overlay: tracked polaritons and all visible transitions per point.
#[derive(Debug, Clone)]
pub struct EigenOverlay {
    pub path: EigenPath,
    pub transitions: Vec<Vec<Transition>>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub drive_values: Vec<f64>,
    pub drives: Vec<DriveTone>,
    pub reference: DressedFrequencies,
    pub grid: Option<SpectrumGrid>,
    pub overlay: Option<EigenOverlay>,
}

/// `(x - min)/(max - min)` over all finite entries; NaN stays NaN.
pub fn normalize(raw: &Array2<f64>) -> Result<Array2<f64>, SpectroError> {
    let finite = raw.iter().filter(|x| x.is_finite());
    let min = finite.clone().cloned().fold(f64::INFINITY, f64::min);
    let max = finite.cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span >= 1e-15) {
        return Err(SpectroError::FlatGrid(if span.is_finite() { span } else { 0.0 }));
    }
    Ok(raw.mapv(|x| (x - min) / span))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, SpectroError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SpectroError::Pool(e.to_string()))
}

struct Row {
    photons: Vec<f64>,
    converged: Vec<bool>,
    fallbacks: usize,
}

fn solve_row(p: &DeviceParams, spec: &SweepSpec, drive: &DriveTone, probe: &[f64]) -> Row {
    let hs = &spec.hilbert;
    let failed = || Row { photons: vec![f64::NAN; probe.len()], converged: vec![false; probe.len()], fallbacks: 0 };
    let h = build_coupler_frame(p, drive, hs).matrix;
    let l0 = static_liouvillian(&h, p, hs);
    let a = hs.a().mapv(|z| z * spec.probe_rabi);
    let l_plus = commutator(&a);
    let l_minus = commutator(&dagger(&a));
    let Ok(solver) = HarmonicRelaxation::new(&l0, &l_plus, &l_minus, hs) else {
        return failed();
    };
    let mut row = Row { photons: Vec::with_capacity(probe.len()), converged: Vec::with_capacity(probe.len()), fallbacks: 0 };
    for &wp in probe {
        match solver.solve(wp - drive.omega, &spec.solver) {
            Ok((ss, route)) => {
                row.photons.push(ss.n_photons);
                row.converged.push(true);
                if route == Route::ContinuedFraction {
                    row.fallbacks += 1;
                }
            }
            Err(_) => {
                row.photons.push(f64::NAN);
                row.converged.push(false);
            }
        }
    }
    row
}

/// Master-equation map over explicit coupler tones. Rows are independent and
/// are farmed out to `spec.workers` threads; each row is solved sequentially,
/// so the result does not depend on the worker count.
pub fn master_equation_grid(
    p: &DeviceParams,
    spec: &SweepSpec,
    drive_values: &[f64],
    drives: &[DriveTone],
) -> Result<SpectrumGrid, SpectroError> {
    init_blas();
    let probe: Vec<f64> = spec.probe_ghz.values().into_iter().map(ghz).collect();
    let rows: Vec<Row> = pool(spec.workers)?.install(|| drives.par_iter().map(|d| solve_row(p, spec, d, &probe)).collect());
    let (nd, np) = (drives.len(), probe.len());
    let mut photons = Array2::zeros((nd, np));
    let mut converged = Array2::from_elem((nd, np), false);
    let mut fallbacks = 0;
    for (k, row) in rows.into_iter().enumerate() {
        for j in 0..np {
            photons[[k, j]] = row.photons[j];
            converged[[k, j]] = row.converged[j];
        }
        fallbacks += row.fallbacks;
    }
    // With no solved cell there is nothing to normalise; `check` reports it.
    let n_tilde = if photons.iter().any(|x| x.is_finite()) {
        normalize(&photons)?
    } else {
        Array2::from_elem((nd, np), f64::NAN)
    };
    Ok(SpectrumGrid { drive_values: drive_values.to_vec(), probe, photons, n_tilde, converged, fallbacks })
}

/// Eigenmode overlay over explicit coupler tones. `lead_in` tones are
/// prepended to the tracking path (to reach the sweep from a weak-drive
/// anchor) but not reported.
pub fn eigen_overlay(
    p: &DeviceParams,
    spec: &SweepSpec,
    lead_in: &[DriveTone],
    drives: &[DriveTone],
) -> Result<EigenOverlay, SpectroError> {
    init_blas();
    let hs = &spec.hilbert;
    let mut path_tones = lead_in.to_vec();
    path_tones.extend_from_slice(drives);
    let full = track_path(p, hs, &path_tones, spec.tracking_substeps)?;
    let skip = lead_in.len();
    let path = EigenPath {
        drives: full.drives[skip..].to_vec(),
        solutions: full.solutions[skip..].to_vec(),
        labels: full.labels,
        ambiguous: full.ambiguous.iter().filter(|&&k| k >= skip).map(|k| k - skip).collect(),
    };
    let window = (ghz(spec.probe_ghz.start), ghz(spec.probe_ghz.stop));
    let transitions = pool(spec.workers)?.install(|| {
        path.solutions
            .par_iter()
            .zip(path.drives.par_iter())
            .map(|(sol, d)| -> Result<Vec<Transition>, SpectroError> {
                let pops = steady_populations(sol, p, d, hs)?;
                Ok(transition_table(sol, &pops, d.omega, window, spec.matelem_threshold, hs)?)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(EigenOverlay { path, transitions })
}

/// Weak-drive ramp that leads from a labelled anchor to the first tone.
fn lead_in(p: &DeviceParams, spec: &SweepSpec, first: &DriveTone) -> Vec<DriveTone> {
    match spec.drive {
        DriveSweep::Power { .. } => Vec::new(),
        DriveSweep::Detuning { dbm, .. } => {
            let start = dbm.min(-40.0) - 40.0;
            let n = (dbm - start).round() as usize;
            (0..n).map(|k| DriveTone::new(first.omega, p.rabi(start + k as f64))).collect()
        }
    }
}

pub fn run_sweep(spec: &SweepSpec, p: &DeviceParams) -> Result<SweepOutput, SpectroError> {
    spec.probe_ghz.len()?;
    let reference = DressedBasis::new(p, &spec.hilbert)?.frequencies();
    let (drive_values, drives) = spec.drives(p, &reference)?;
    let grid = if spec.engine.meq() { Some(master_equation_grid(p, spec, &drive_values, &drives)?) } else { None };
    let overlay = if spec.engine.eigen() {
        Some(eigen_overlay(p, spec, &lead_in(p, spec, &drives[0]), &drives)?)
    } else {
        None
    };
    Ok(SweepOutput { drive_values, drives, reference, grid, overlay })
}

/// The same sweep on the device and on its dispersive twin (qubit 1 GHz
/// below the resonator); each is driven on its own dressed qubit line.
pub fn dispersive_compare(spec: &SweepSpec, p: &DeviceParams) -> Result<(SweepOutput, SweepOutput), SpectroError> {
    let mut twin = *p;
    twin.omega_01 = p.omega_r - ghz(1.0);
    Ok((run_sweep(spec, p)?, run_sweep(spec, &twin)?))
}
