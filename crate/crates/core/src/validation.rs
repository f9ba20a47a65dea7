//! Quick self-consistency checks run by `polariton validate`: independent
//! solver routes must agree, limiting cases must reproduce closed forms.

use serde::Serialize;

use crate::analytic::{dispersive_transitions, find_crossing, perturbed_transitions, DispersiveVariant};
use crate::eigenmode::{diagonalize, DressedBasis};
use crate::hamiltonian::{build_coupler_frame, build_two_tone, build_two_tone_drive_frame};
use crate::hilbert::HilbertSpec;
use crate::linalg::{dagger, eigh, hermiticity_error, trace, CMatrix, ONE};
use crate::model::{ghz, mhz, DeviceParams, DriveTone, ProbeTone};
use crate::steadystate::relaxation::RelaxationOptions;
use crate::steadystate::{
    build_liouvillian, solve_mcf, time_integrate, HarmonicRelaxation, IntegrationOptions, McfOptions,
};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Hermitian, unit trace, positive semidefinite (to `tol`).
pub fn is_density_matrix(rho: &CMatrix, tol: f64) -> bool {
    let herm = hermiticity_error(rho) < tol;
    let unit = (trace(rho) - ONE).norm() < tol;
    let sym = (rho + &dagger(rho)).mapv(|z| z * 0.5);
    let psd = eigh(&sym).map(|(w, _)| w[0] > -tol).unwrap_or(false);
    herm && unit && psd
}

fn error_check(name: &'static str, e: impl std::fmt::Display) -> Check {
    check(name, false, format!("error: {e}"))
}

pub fn run(p: &DeviceParams, spec: &HilbertSpec) -> Vec<Check> {
    let mut out = Vec::new();

    let dressed = match DressedBasis::new(p, spec) {
        Ok(d) => d,
        Err(e) => return vec![error_check("dressed basis", e)],
    };
    let f = dressed.frequencies();
    let drive = DriveTone::from_power(f.ge0, -30.0, p.calib_c);
    let probe = ProbeTone::new(f.resonator_mid(), mhz(0.05));
    let mcf = McfOptions { tol: 1e-12, ..Default::default() };

    let paper = build_liouvillian(&build_two_tone(p, &drive, &probe, spec), p, spec);
    let coupler = build_liouvillian(&build_two_tone_drive_frame(p, &drive, &probe, spec), p, spec);
    match (solve_mcf(&paper, &mcf), solve_mcf(&coupler, &mcf)) {
        (Ok(a), Ok(b)) => {
            let r = rel(a.n_photons, b.n_photons);
            out.push(check("frames agree", r < 1e-8, format!("relative difference {r:.2e}")));
            out.push(check(
                "steady state is a density matrix",
                is_density_matrix(&a.rho0, 1e-9),
                format!("trace error {:.2e}", (trace(&a.rho0) - ONE).norm()),
            ));
            match HarmonicRelaxation::new(&coupler.l0, &coupler.l_plus, &coupler.l_minus, spec)
                .and_then(|s| s.solve(coupler.delta, &RelaxationOptions { tol: 1e-12, ..Default::default() }))
            {
                Ok((c, _)) => {
                    let r = rel(c.n_photons, b.n_photons);
                    out.push(check("relaxation matches continued fraction", r < 1e-8, format!("relative difference {r:.2e}")));
                }
                Err(e) => out.push(error_check("relaxation matches continued fraction", e)),
            }
            match time_integrate(&paper, None, 60.0, &IntegrationOptions::default()) {
                Ok(t) => {
                    let r = rel(a.n_photons, t.n_photons);
                    out.push(check("continued fraction matches time integration", r < 1e-6, format!("relative difference {r:.2e}")));
                }
                Err(e) => out.push(error_check("continued fraction matches time integration", e)),
            }
        }
        (Err(e), _) | (_, Err(e)) => out.push(error_check("frames agree", e)),
    }

    let mut bare = *p;
    bare.g0 = 0.0;
    let cavity = HilbertSpec::new(2, 10).expect("valid truncation");
    let mut worst: f64 = 0.0;
    let mut failed = None;
    for k in 0..5 {
        let wp = p.omega_r + mhz(-10.0 + 5.0 * k as f64);
        let pr = ProbeTone::new(wp, mhz(0.05));
        let l = build_liouvillian(&build_two_tone_drive_frame(&bare, &DriveTone::new(ghz(7.0), 0.0), &pr, &cavity), &bare, &cavity);
        match solve_mcf(&l, &mcf) {
            Ok(ss) => {
                let d = p.omega_r - wp;
                let want = pr.rabi * pr.rabi / (d * d + 0.25 * p.kappa * p.kappa);
                worst = worst.max(rel(ss.n_photons, want));
            }
            Err(e) => failed = Some(e),
        }
    }
    out.push(match failed {
        Some(e) => error_check("empty cavity is Lorentzian", e),
        None => check("empty cavity is Lorentzian", worst < 1e-8, format!("worst relative error {worst:.2e}")),
    });

    let chi = f.chi();
    let mid = f.resonator_mid();
    let mut worst: f64 = 0.0;
    for r in [1.0, 10.0, 30.0, 100.0] {
        let rabi = mhz(r);
        let pert = perturbed_transitions(-1e30, chi, rabi, mid);
        let exact = dispersive_transitions(chi, mid, 0.0, rabi, DispersiveVariant::Exact);
        worst = worst.max((pert.w13 - exact.w13).abs()).max((pert.w24 - exact.w24).abs());
    }
    out.push(check("perturbative lines reduce to dispersive lines", worst < 1e-10 * mid, format!("worst difference {worst:.2e} rad/us")));

    match find_crossing(p.alpha, chi) {
        Ok(c) => {
            let r = rel(c.rabi, c.rabi_estimate);
            out.push(check("crossing root near its estimate", r < 0.25, format!("root {:.3} MHz, estimate {:.3} MHz", c.rabi / mhz(1.0), c.rabi_estimate / mhz(1.0))));
        }
        Err(e) => out.push(error_check("crossing root near its estimate", e)),
    }

    match diagonalize(&build_coupler_frame(p, &drive, spec).matrix) {
        Ok(sol) => {
            let a = sol.matrix_elements(&spec.a());
            let n = sol.matrix_elements(&spec.photon_number());
            let worst = (0..sol.dim())
                .map(|j| ((0..sol.dim()).map(|i| a[[i, j]].norm_sqr()).sum::<f64>() - n[[j, j]].re).abs())
                .fold(0.0, f64::max);
            out.push(check("matrix-element sum rule", worst < 1e-10, format!("worst deviation {worst:.2e}")));
        }
        Err(e) => out.push(error_check("matrix-element sum rule", e)),
    }
    out
}
