//! Device parameters, unit conversions and the perturbative quantities derived
//! from them.
//!
//! Everything inside the crate is an angular frequency in rad/µs (or a rate in
//! 1/µs). The helpers below convert from the GHz/MHz values people quote.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// rad/µs for a frequency given in GHz.
pub fn ghz(f: f64) -> f64 {
    f * TAU * 1e3
}

/// rad/µs for a frequency given in MHz.
pub fn mhz(f: f64) -> f64 {
    f * TAU
}

pub fn to_ghz(w: f64) -> f64 {
    w / (TAU * 1e3)
}

pub fn to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Drive amplitude (rad/µs) produced by a room-temperature power in dBm,
/// using the calibration `Ω/2π [GHz] = C · 10^(P/20)`.
pub fn rabi_from_power(dbm: f64, calib_c: f64) -> f64 {
    ghz(calib_c * 10f64.powf(dbm / 20.0))
}

pub fn power_from_rabi(rabi: f64, calib_c: f64) -> f64 {
    20.0 * (to_ghz(rabi) / calib_c).log10()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter {name} = {value} is invalid: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("transition {level}->{} is degenerate with the resonator (detuning {delta} rad/us)", level + 1)]
    DegenerateDetuning { level: usize, delta: f64 },
}

/// Transmon, resonator and bath parameters. Frequencies in rad/µs, rates in 1/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub omega_r: f64,
    pub omega_01: f64,
    pub g0: f64,
    /// Anharmonicity; negative for a transmon.
    pub alpha: f64,
    pub kappa: f64,
    pub gamma_1: f64,
    pub gamma_phi: f64,
    /// Line calibration constant `C` in GHz at 0 dBm.
    pub calib_c: f64,
}

impl DeviceParams {
    /// The measured device: the qubit sits 431 MHz above the resonator, so
    /// the 1-2 transition is only ~140 MHz away and the dispersive picture
    /// is already marginal.
    pub fn reference() -> Self {
        DeviceParams {
            omega_r: ghz(7.180),
            omega_01: ghz(7.611),
            g0: mhz(46.57),
            alpha: mhz(-291.4),
            kappa: 3.09,
            gamma_1: 1.11,
            gamma_phi: 1.32,
            calib_c: 0.562,
        }
    }

    /// Same device with the qubit moved 1 GHz below the resonator, deep in
    /// the dispersive regime.
    pub fn dispersive_reference() -> Self {
        let mut p = Self::reference();
        p.omega_01 = p.omega_r - ghz(1.0);
        p
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("omega_r", self.omega_r),
            ("omega_01", self.omega_01),
            ("g0", self.g0),
            ("kappa", self.kappa),
            ("gamma_1", self.gamma_1),
            ("gamma_phi", self.gamma_phi),
            ("calib_c", self.calib_c),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, value, reason: "must be finite and > 0" });
            }
        }
        if !(self.alpha.is_finite() && self.alpha < 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must be finite and < 0",
            });
        }
        Ok(())
    }

    pub fn rabi(&self, dbm: f64) -> f64 {
        rabi_from_power(dbm, self.calib_c)
    }

    pub fn power(&self, rabi: f64) -> f64 {
        power_from_rabi(rabi, self.calib_c)
    }

    /// Energy of transmon level `j` (Duffing ladder).
    pub fn level(&self, j: usize) -> f64 {
        let jf = j as f64;
        jf * self.omega_01 + 0.5 * jf * (jf - 1.0) * self.alpha
    }

    /// Coupling of the `j -> j+1` transmon transition to the resonator.
    pub fn coupling(&self, j: usize) -> f64 {
        self.g0 * ((j + 1) as f64).sqrt()
    }

    /// Detuning of the `j -> j+1` transition from the bare resonator.
    pub fn detuning(&self, j: usize) -> f64 {
        self.omega_01 + j as f64 * self.alpha - self.omega_r
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Second-order (dispersive) quantities for a transmon truncated to
/// `n_levels` levels. `chi_pairs[j]` is `χ_{j,j+1} = g_j²/Δ_j`; the topmost
/// level has no partner inside the truncation and contributes nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    pub couplings: Vec<f64>,
    pub detunings: Vec<f64>,
    pub chi_pairs: Vec<f64>,
    /// `χ = χ01 - χ12/2`
    pub chi: f64,
    /// `ω_r - χ12/2`
    pub omega_r_shifted: f64,
    /// `ω01 + χ01`
    pub omega_01_shifted: f64,
}

impl DerivedParams {
    /// `χ_{j,j+1}`, zero outside the truncation (and for `j < 0`).
    pub fn chi_pair(&self, j: isize) -> f64 {
        if j < 0 {
            return 0.0;
        }
        self.chi_pairs.get(j as usize).copied().unwrap_or(0.0)
    }
}

pub fn derive_params(p: &DeviceParams, n_levels: usize) -> Result<DerivedParams, ModelError> {
    if n_levels < 2 {
        return Err(ModelError::InvalidParameter {
            name: "n_levels",
            value: n_levels as f64,
            reason: "need at least two transmon levels",
        });
    }
    let n_pairs = n_levels - 1;
    let mut couplings = Vec::with_capacity(n_pairs);
    let mut detunings = Vec::with_capacity(n_pairs);
    let mut chi_pairs = Vec::with_capacity(n_pairs);
    for j in 0..n_pairs {
        let g = p.coupling(j);
        let delta = p.detuning(j);
        if delta.abs() < 1e-9 {
            return Err(ModelError::DegenerateDetuning { level: j, delta });
        }
        couplings.push(g);
        detunings.push(delta);
        chi_pairs.push(g * g / delta);
    }
    let chi01 = chi_pairs[0];
    let chi12 = chi_pairs.get(1).copied().unwrap_or(0.0);
    Ok(DerivedParams {
        couplings,
        detunings,
        chi_pairs,
        chi: chi01 - 0.5 * chi12,
        omega_r_shifted: p.omega_r - 0.5 * chi12,
        omega_01_shifted: p.omega_01 + chi01,
    })
}

/// Coherent tone: angular frequency and Rabi amplitude, both rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub omega: f64,
    pub rabi: f64,
}

impl Tone {
    pub fn new(omega: f64, rabi: f64) -> Self {
        Tone { omega, rabi }
    }

    pub fn from_power(omega: f64, dbm: f64, calib_c: f64) -> Self {
        Tone { omega, rabi: rabi_from_power(dbm, calib_c) }
    }
}

/// Strong coupler tone on the transmon.
pub type DriveTone = Tone;
/// Weak spectroscopy tone on the resonator.
pub type ProbeTone = Tone;
