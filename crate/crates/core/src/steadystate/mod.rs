//! Lindblad superoperators and steady-state solvers.
//!
//! Density matrices are vectorised by stacking columns, so
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use ndarray::linalg::kron;
use ndarray::Array2;
use thiserror::Error;

use crate::hamiltonian::PeriodicHamiltonian;
use crate::hilbert::HilbertSpec;
use crate::linalg::{dagger, identity, trace, CMatrix, Lu, LinalgError, C64, IM};
use crate::model::DeviceParams;

pub mod integrate;
pub mod mcf;
pub mod relaxation;

pub use integrate::{time_integrate, IntegrationOptions};
pub use mcf::{solve_mcf, McfOptions};
pub use relaxation::HarmonicRelaxation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("steady state is not unique (reciprocal condition {rcond:e})")]
    DegenerateSteadyState { rcond: f64 },
    #[error("ladder matrix at harmonic {harmonic} is singular")]
    SingularLadderMatrix { harmonic: i64 },
    #[error("no convergence: change {achieved:e} with {harmonics} harmonics")]
    NoConvergence { achieved: f64, harmonics: usize },
    #[error("trace drifted by {drift:e} during integration; reduce the step")]
    StepTooLarge { drift: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `L(t) = L0 + e^{iΔt} L+ + e^{-iΔt} L-`
#[derive(Debug, Clone)]
pub struct LiouvillianTriple {
    pub l0: CMatrix,
    pub l_plus: CMatrix,
    pub l_minus: CMatrix,
    pub delta: f64,
    pub spec: HilbertSpec,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Zeroth Fourier component (time average) of the periodic steady state.
    pub rho0: CMatrix,
    /// `Tr(a†a ρ0)`
    pub n_photons: f64,
    pub converged: bool,
    pub harmonics_used: usize,
    pub achieved_tol: f64,
    /// `(n, ρ_n)` pairs when requested.
    pub harmonics: Vec<(i64, CMatrix)>,
}

impl SteadyState {
    pub fn new(rho0: CMatrix, spec: &HilbertSpec) -> Self {
        let n_photons = photon_number(&rho0, spec);
        SteadyState { rho0, n_photons, converged: true, harmonics_used: 0, achieved_tol: 0.0, harmonics: Vec::new() }
    }
}

pub fn photon_number(rho: &CMatrix, spec: &HilbertSpec) -> f64 {
    spec.photon_numbers().iter().enumerate().map(|(k, n)| n * rho[[k, k]].re).sum()
}

/// Left multiplication `ρ ↦ Aρ`.
pub fn spre(a: &CMatrix) -> CMatrix {
    kron(&identity(a.nrows()), a)
}

/// Right multiplication `ρ ↦ ρB`.
pub fn spost(b: &CMatrix) -> CMatrix {
    kron(&b.t().to_owned(), &identity(b.nrows()))
}

/// `ρ ↦ -i[H, ρ]`
pub fn commutator(h: &CMatrix) -> CMatrix {
    (spre(h) - spost(h)).mapv(|z| -IM * z)
}

/// `D[c]ρ = cρc† - ½{c†c, ρ}`
pub fn dissipator(c: &CMatrix) -> CMatrix {
    let cdc = dagger(c).dot(c);
    kron(&c.mapv(|z| z.conj()), c) - (spre(&cdc) + spost(&cdc)).mapv(|z| 0.5 * z)
}

/// `κ D[a] + Γ1 D[b] + Γφ D[b†b]`
pub fn dissipators(p: &DeviceParams, spec: &HilbertSpec) -> CMatrix {
    let a = spec.a();
    let b = spec.b();
    let nb = spec.transmon_number();
    dissipator(&a).mapv(|z| z * p.kappa)
        + dissipator(&b).mapv(|z| z * p.gamma_1)
        + dissipator(&nb).mapv(|z| z * p.gamma_phi)
}

/// Full Lindbladian of a time-independent Hamiltonian.
pub fn static_liouvillian(h: &CMatrix, p: &DeviceParams, spec: &HilbertSpec) -> CMatrix {
    commutator(h) + dissipators(p, spec)
}

pub fn build_liouvillian(ph: &PeriodicHamiltonian, p: &DeviceParams, spec: &HilbertSpec) -> LiouvillianTriple {
    LiouvillianTriple {
        l0: static_liouvillian(&ph.h0, p, spec),
        l_plus: commutator(&ph.h_plus),
        l_minus: commutator(&ph.h_minus),
        delta: ph.delta,
        spec: *spec,
    }
}

pub fn vectorize(rho: &CMatrix) -> Vec<C64> {
    rho.t().iter().copied().collect()
}

pub fn unvectorize(v: &[C64], d: usize) -> CMatrix {
    Array2::from_shape_fn((d, d), |(i, j)| v[j * d + i])
}

/// Indices of `vec(ρ)` holding the diagonal, i.e. the trace functional.
pub fn trace_indices(d: usize) -> impl Iterator<Item = usize> {
    (0..d).map(move |k| k * (d + 1))
}

/// Unit-trace null vector of a superoperator, rejecting a degenerate nullspace.
///
/// The ground-population equation is redundant (the populations' rows sum to
/// zero), so it is replaced by `Tr ρ = 1`. The bordered matrix is singular
/// exactly when the nullspace is more than one-dimensional. Unlike a singular
/// vector this keeps tiny populations accurate to working precision.
pub(crate) fn null_state(l: &CMatrix, d: usize) -> Result<CMatrix, SolveError> {
    let n = l.nrows();
    let mut a = l.clone();
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    for k in trace_indices(d) {
        a[[0, k]] = C64::new(1.0, 0.0);
    }
    let lu = match Lu::factor(&a) {
        Ok(lu) => lu,
        Err(LinalgError::Singular(_)) => return Err(SolveError::DegenerateSteadyState { rcond: 0.0 }),
        Err(e) => return Err(e.into()),
    };
    let rcond = lu.rcond();
    if rcond < 1e-13 {
        return Err(SolveError::DegenerateSteadyState { rcond });
    }
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[0] = C64::new(1.0, 0.0);
    let x = lu.solve_vec(&b);
    let rho = unvectorize(&x, d);
    let tr = trace(&rho);
    Ok(rho.mapv(|z| z / tr))
}

/// Unique steady state of a time-independent Lindbladian.
pub fn solve_static(l: &CMatrix, spec: &HilbertSpec) -> Result<SteadyState, SolveError> {
    let rho = null_state(l, spec.dim())?;
    Ok(SteadyState::new(rho, spec))
}
