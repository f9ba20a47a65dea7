//! Hamiltonian builders for the lab frame, the coupler (drive) frame and the
//! two-tone problem, plus the multilevel dispersive model used as a foil.

use ndarray::Array2;

use crate::hilbert::HilbertSpec;
use crate::linalg::{dagger, CMatrix, C64};
use crate::model::{derive_params, DeviceParams, DriveTone, ModelError, ProbeTone};

/// Which rotating frame a Hamiltonian is written in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Lab,
    /// Both transmon and resonator rotate at the coupler frequency.
    Drive { omega_d: f64 },
    /// Resonator rotates at the probe, transmon at the coupler.
    DriveProbe { omega_d: f64, omega_p: f64 },
}

#[derive(Debug, Clone)]
pub struct FrameHamiltonian {
    pub matrix: CMatrix,
    pub frame: Frame,
}

/// `H(t) = H0 + e^{iΔt} H+ + e^{-iΔt} H-` with `H- = H+†`.
#[derive(Debug, Clone)]
pub struct PeriodicHamiltonian {
    pub h0: CMatrix,
    pub h_plus: CMatrix,
    pub h_minus: CMatrix,
    pub delta: f64,
    pub frame: Frame,
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `Σ_j (ω_j - j ω_frame)|j⟩⟨j|` on the transmon plus `δ_r a†a`, diagonal in the bare basis.
fn diagonal(p: &DeviceParams, spec: &HilbertSpec, transmon_frame: f64, resonator_detuning: f64) -> CMatrix {
    let d = spec.dim();
    let mut h = Array2::zeros((d, d));
    for j in 0..spec.n_transmon() {
        let wj = p.level(j) - j as f64 * transmon_frame;
        for n in 0..spec.n_resonator() {
            let k = spec.index(j, n);
            h[[k, k]] = real(wj + n as f64 * resonator_detuning);
        }
    }
    h
}

fn exchange(p: &DeviceParams, spec: &HilbertSpec) -> CMatrix {
    let a = spec.a();
    let b = spec.b();
    (dagger(&a).dot(&b) + a.dot(&dagger(&b))).mapv(|z| z * p.g0)
}

fn transmon_drive(spec: &HilbertSpec, rabi: f64) -> CMatrix {
    let b = spec.b();
    (&b + &dagger(&b)).mapv(|z| z * rabi)
}

fn resonator_drive(spec: &HilbertSpec, rabi: f64) -> CMatrix {
    let a = spec.a();
    (&a + &dagger(&a)).mapv(|z| z * rabi)
}

/// Undriven Jaynes-Cummings Hamiltonian with a Duffing transmon.
pub fn build_lab_jc(p: &DeviceParams, spec: &HilbertSpec) -> FrameHamiltonian {
    let matrix = diagonal(p, spec, 0.0, p.omega_r) + exchange(p, spec);
    FrameHamiltonian { matrix, frame: Frame::Lab }
}

/// Coupler-driven system in the frame rotating at the coupler frequency.
/// Time independent, so its eigenvectors are the Floquet (polariton) states.
pub fn build_coupler_frame(p: &DeviceParams, drive: &DriveTone, spec: &HilbertSpec) -> FrameHamiltonian {
    let matrix = diagonal(p, spec, drive.omega, p.omega_r - drive.omega)
        + exchange(p, spec)
        + transmon_drive(spec, drive.rabi);
    FrameHamiltonian { matrix, frame: Frame::Drive { omega_d: drive.omega } }
}

/// Two-tone problem with the resonator in the probe frame and the transmon in
/// the coupler frame. The exchange term carries the residual time dependence,
/// `g a†b e^{iΔt} + h.c.` with `Δ = ω_p - ω_d`.
pub fn build_two_tone(p: &DeviceParams, drive: &DriveTone, probe: &ProbeTone, spec: &HilbertSpec) -> PeriodicHamiltonian {
    let h0 = diagonal(p, spec, drive.omega, p.omega_r - probe.omega)
        + transmon_drive(spec, drive.rabi)
        + resonator_drive(spec, probe.rabi);
    let a = spec.a();
    let b = spec.b();
    let h_plus = dagger(&a).dot(&b).mapv(|z| z * p.g0);
    let h_minus = dagger(&h_plus);
    PeriodicHamiltonian {
        h0,
        h_plus,
        h_minus,
        delta: probe.omega - drive.omega,
        frame: Frame::DriveProbe { omega_d: drive.omega, omega_p: probe.omega },
    }
}

/// Same physics with everything in the coupler frame; now the weak probe is
/// the periodic part, `Ω_p a e^{iΔt} + h.c.`.
pub fn build_two_tone_drive_frame(
    p: &DeviceParams,
    drive: &DriveTone,
    probe: &ProbeTone,
    spec: &HilbertSpec,
) -> PeriodicHamiltonian {
    let h0 = build_coupler_frame(p, drive, spec).matrix;
    let h_plus = spec.a().mapv(|z| z * probe.rabi);
    let h_minus = dagger(&h_plus);
    PeriodicHamiltonian {
        h0,
        h_plus,
        h_minus,
        delta: probe.omega - drive.omega,
        frame: Frame::Drive { omega_d: drive.omega },
    }
}

/// Multilevel dispersive model in the coupler frame: each dressed transmon
/// level `n` pulls the resonator by `χ_{n-1,n} - χ_{n,n+1}`, the levels
/// themselves are Lamb shifted by `χ_{n-1,n}`, and the coupler drives the
/// dressed transmon ladder directly. The drive leaking onto the dressed
/// resonator is dropped.
pub fn build_multilevel_dispersive(
    p: &DeviceParams,
    drive: &DriveTone,
    spec: &HilbertSpec,
) -> Result<FrameHamiltonian, ModelError> {
    let derived = derive_params(p, spec.n_transmon())?;
    let d = spec.dim();
    let mut h = Array2::zeros((d, d));
    for j in 0..spec.n_transmon() {
        let ji = j as isize;
        let lamb = derived.chi_pair(ji - 1);
        let level = p.level(j) + lamb - j as f64 * drive.omega;
        let pull = lamb - derived.chi_pair(ji);
        for n in 0..spec.n_resonator() {
            let k = spec.index(j, n);
            h[[k, k]] = real(level + n as f64 * (p.omega_r - drive.omega + pull));
        }
    }
    let matrix = h + transmon_drive(spec, drive.rabi);
    Ok(FrameHamiltonian { matrix, frame: Frame::Drive { omega_d: drive.omega } })
}
