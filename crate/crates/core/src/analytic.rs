//! Closed-form polariton lines of the two-level dispersive model, their
//! leading correction from the transmon's second excited state, the drive at
//! which the 1→3 and 2→4 lines cross, and the linewidth needed to see it.

use serde::Serialize;
use thiserror::Error;

use crate::hilbert::HilbertSpec;
use crate::linalg::{CVector, C64, ONE};
use crate::model::DeviceParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("no crossing of the 1-3 and 2-4 lines below |α|/2")]
    NoCrossing,
}

/// Which closed form to use for the four polariton lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersiveVariant {
    /// Exact diagonalisation of the two 2×2 blocks.
    Exact,
    /// Weak-drive limit `Ω << χ`: lines at `ω̃ ∓ χ ± Ω`.
    WeakDrive,
}

/// Lab-frame polariton lines (rad/µs) and the mixing angles of both blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaritonLines {
    pub w13: f64,
    pub w14: f64,
    pub w23: f64,
    pub w24: f64,
    pub theta0: f64,
    pub theta1: f64,
}

/// Energies of a driven two-level block `[[0, Ω], [Ω, ε]]`.
fn block(eps: f64, rabi: f64) -> (f64, f64, f64) {
    let root = (0.25 * eps * eps + rabi * rabi).sqrt();
    (0.5 * eps - root, 0.5 * eps + root, (2.0 * rabi).atan2(eps))
}

/// Lines of the dispersive model `ω'_r a†a + ω'01 σz/2 + χ σz a†a` under a
/// coupler drive detuned by `coupler_detuning = ω_d - ω'ge0` from the dressed
/// qubit. `chi > 0` means the qubit line moves down by `2χ` per photon and the
/// resonator sits at `ω̃ ± χ` for the qubit in g/e. 1p/2p are the lower/upper
/// states of the {ḡ0, ē0} block, 3p/4p those of the {ē1, ḡ1} block.
pub fn dispersive_transitions(
    chi: f64,
    omega_r_tilde: f64,
    coupler_detuning: f64,
    rabi: f64,
    variant: DispersiveVariant,
) -> PolaritonLines {
    let eps0 = -coupler_detuning;
    let eps1 = eps0 - 2.0 * chi;
    match variant {
        DispersiveVariant::Exact => {
            let (e1, e2, theta0) = block(eps0, rabi);
            let (lo, hi, theta1) = block(eps1, rabi);
            // Sector one sits one resonator quantum (qubit in g) above sector zero.
            let base = omega_r_tilde + chi;
            let (e3, e4) = (base + lo, base + hi);
            PolaritonLines { w13: e3 - e1, w14: e4 - e1, w23: e3 - e2, w24: e4 - e2, theta0, theta1 }
        }
        DispersiveVariant::WeakDrive => PolaritonLines {
            w13: omega_r_tilde - chi + rabi,
            w14: omega_r_tilde + chi + rabi,
            w23: omega_r_tilde - chi - rabi,
            w24: omega_r_tilde + chi - rabi,
            theta0: (2.0 * rabi).atan2(eps0),
            theta1: (2.0 * rabi).atan2(eps1),
        },
    }
}

/// Second-order shifts of the two states of block `r` caused by the
/// `|1_r⟩ ↔ |2_r⟩` coupling `√2 Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockLevels {
    /// `tan θ = 2Ω / δ1`, with θ in (0, π).
    pub theta: f64,
    pub minus0: f64,
    pub plus0: f64,
    pub shift_minus: f64,
    pub shift_plus: f64,
}

/// `δ1`: detuning of `|1_r⟩` from `|0_r⟩`; `δ2`: detuning of `|2_r⟩`.
pub fn block_levels(delta1: f64, delta2: f64, rabi: f64) -> BlockLevels {
    let (minus0, plus0, theta) = block(delta1, rabi);
    let s = (0.5 * theta).sin();
    let c = (0.5 * theta).cos();
    BlockLevels {
        theta,
        minus0,
        plus0,
        shift_minus: 2.0 * rabi * rabi * s * s / (minus0 - delta2),
        shift_plus: 2.0 * rabi * rabi * c * c / (plus0 - delta2),
    }
}

/// Resonant-drive lines including the leading correction from the
/// transmon's |f⟩ level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbedLines {
    /// `ω̃ - (√(χ²+Ω²) - Ω) + Ω² cos θ1/α`
    pub w13: f64,
    /// `ω̃ + (√(χ²+Ω²) - Ω) - Ω² cos θ1/α`
    pub w24: f64,
    pub theta1: f64,
    /// Same lines from the block shifts with their full denominators.
    pub w13_blocks: f64,
    pub w24_blocks: f64,
    pub blocks: [BlockLevels; 2],
}

pub fn perturbed_transitions(alpha: f64, chi: f64, rabi: f64, omega_r_tilde: f64) -> PerturbedLines {
    let root = (chi * chi + rabi * rabi).sqrt();
    let theta1 = rabi.atan2(-chi);
    let corr = rabi * rabi * theta1.cos() / alpha;
    let b0 = block_levels(0.0, alpha, rabi);
    let b1 = block_levels(-2.0 * chi, alpha, rabi);
    let offset = omega_r_tilde + chi;
    let w13_blocks = offset + (b1.minus0 + b1.shift_minus) - (b0.minus0 + b0.shift_minus);
    let w24_blocks = offset + (b1.plus0 + b1.shift_plus) - (b0.plus0 + b0.shift_plus);
    PerturbedLines {
        w13: omega_r_tilde - (root - rabi) + corr,
        w24: omega_r_tilde + (root - rabi) - corr,
        theta1,
        w13_blocks,
        w24_blocks,
        blocks: [b0, b1],
    }
}

/// Drive at which the perturbed 1→3 and 2→4 lines meet: the root of
/// `sin θ1 + Ω sin 2θ1/(2α) = 1`, and its large-|α| estimate `√(χ|α|/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub rabi: f64,
    pub rabi_estimate: f64,
}

pub fn crossing_condition(alpha: f64, chi: f64, rabi: f64) -> f64 {
    let theta1 = rabi.atan2(-chi);
    theta1.sin() + rabi * (2.0 * theta1).sin() / (2.0 * alpha) - 1.0
}

pub fn find_crossing(alpha: f64, chi: f64) -> Result<Crossing, AnalyticError> {
    let upper = 0.5 * alpha.abs();
    let f = |x: f64| crossing_condition(alpha, chi, x);
    let steps = 4000;
    let mut lo = upper * 1e-9;
    let mut flo = f(lo);
    let mut bracket = None;
    for k in 1..=steps {
        let x = upper * k as f64 / steps as f64;
        let fx = f(x);
        if flo < 0.0 && fx >= 0.0 {
            bracket = Some((lo, x));
            break;
        }
        lo = x;
        flo = fx;
    }
    let (mut a, mut b) = bracket.ok_or(AnalyticError::NoCrossing)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    Ok(Crossing { rabi: 0.5 * (a + b), rabi_estimate: (0.5 * chi * alpha.abs()).sqrt() })
}

/// Smallest linewidth-limited drive at which the split lines can be told
/// apart: `(κ √(2|α|))^(2/3)`.
pub fn resolvability_threshold(kappa: f64, alpha: f64) -> f64 {
    (kappa * (2.0 * alpha.abs()).sqrt()).powf(2.0 / 3.0)
}

/// First-order dressed pair `|ḡ,n⟩ = |g,n⟩ - (g√n/Δ0)|e,n-1⟩`,
/// `|ē,n-1⟩ = |e,n-1⟩ + (g√n/Δ0)|g,n⟩`, normalised. For `n = 0` only `|ḡ,0⟩`
/// exists. The flag is false once the admixture exceeds 0.3.
#[derive(Debug, Clone)]
pub struct DressedPair {
    pub ground: CVector,
    pub excited: Option<CVector>,
    pub admixture: f64,
    pub valid: bool,
}

pub fn dispersive_dressed_states(p: &DeviceParams, n: usize, spec: &HilbertSpec) -> DressedPair {
    let delta0 = p.detuning(0);
    let x = p.g0 * (n as f64).sqrt() / delta0;
    let norm = 1.0 / (1.0 + x * x).sqrt();
    let mut ground = spec.basis_state(0, n).mapv(|z| z * norm);
    let excited = if n > 0 {
        ground[spec.index(1, n - 1)] = C64::new(-x * norm, 0.0);
        let mut e = spec.basis_state(1, n - 1).mapv(|z| z * norm);
        e[spec.index(0, n)] = ONE * (x * norm);
        Some(e)
    } else {
        None
    };
    DressedPair { ground, excited, admixture: x.abs(), valid: x.abs() <= 0.3 }
}

/// Analytic overlay along a power sweep: one row per drive amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlayRow {
    pub rabi: f64,
    pub power_dbm: f64,
    pub lines: PolaritonLines,
}

pub fn overlay(p: &DeviceParams, chi: f64, omega_r_tilde: f64, powers_dbm: &[f64]) -> Vec<OverlayRow> {
    powers_dbm
        .iter()
        .map(|&dbm| {
            let rabi = p.rabi(dbm);
            OverlayRow {
                rabi,
                power_dbm: dbm,
                lines: dispersive_transitions(chi, omega_r_tilde, 0.0, rabi, DispersiveVariant::Exact),
            }
        })
        .collect()
}
