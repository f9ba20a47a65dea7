//! Fast periodic steady state for a weak periodic perturbation of a static
//! Lindbladian, used for the spectroscopy sweeps.
//!
//! In the coupler frame the probe is the only time-dependent term and it is
//! tiny, so the harmonic recurrence is strongly diagonally dominant. Block
//! Gauss-Seidel over the harmonics converges in a few sweeps. Every block
//! solve `(L0 - inΔ)⁻¹` reuses one Schur factorisation of `L0`, which is
//! computed once per drive setting and shared by all probe frequencies.

use crate::linalg::{max_abs_diff, CMatrix, Csr, Lu, Schur, C64, ZERO};

use super::{
    mcf::{solve_mcf, McfOptions},
    solve_static, trace_indices, unvectorize, vectorize, LiouvillianTriple, SolveError, SteadyState,
};
use crate::hilbert::HilbertSpec;

/// Scale of the rank-one border that pins the trace in the `n = 0` block.
const BORDER: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationOptions {
    pub tol: f64,
    pub n_start: usize,
    pub n_max: usize,
    pub max_sweeps: usize,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        RelaxationOptions { tol: 1e-8, n_start: 2, n_max: 64, max_sweeps: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicRelaxation {
    spec: HilbertSpec,
    l0: CMatrix,
    l_plus_dense: CMatrix,
    l_minus_dense: CMatrix,
    l_plus: Csr,
    l_minus: Csr,
    schur: Schur,
    bordered: Lu,
    rho_static: Vec<C64>,
}

/// How a point was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Relaxation,
    ContinuedFraction,
}

impl HarmonicRelaxation {
    pub fn new(l0: &CMatrix, l_plus: &CMatrix, l_minus: &CMatrix, spec: &HilbertSpec) -> Result<Self, SolveError> {
        let d = spec.dim();
        let rho_static = vectorize(&solve_static(l0, spec)?.rho0);
        let schur = Schur::new(l0)?;
        let mut k = l0.clone();
        for i in 0..d * d {
            if rho_static[i] == ZERO {
                continue;
            }
            for j in trace_indices(d) {
                k[[i, j]] += BORDER * rho_static[i];
            }
        }
        let bordered = Lu::factor(&k)?;
        Ok(HarmonicRelaxation {
            spec: *spec,
            l0: l0.clone(),
            l_plus_dense: l_plus.clone(),
            l_minus_dense: l_minus.clone(),
            l_plus: Csr::from_dense(l_plus),
            l_minus: Csr::from_dense(l_minus),
            schur,
            bordered,
            rho_static,
        })
    }

    /// Steady state of the unperturbed generator.
    pub fn static_state(&self) -> CMatrix {
        unvectorize(&self.rho_static, self.spec.dim())
    }

    pub fn triple(&self, delta: f64) -> LiouvillianTriple {
        LiouvillianTriple {
            l0: self.l0.clone(),
            l_plus: self.l_plus_dense.clone(),
            l_minus: self.l_minus_dense.clone(),
            delta,
            spec: self.spec,
        }
    }

    /// Gauss-Seidel over harmonics; errors if it stalls.
    pub fn relax(&self, delta: f64, opts: &RelaxationOptions) -> Result<SteadyState, SolveError> {
        let d2 = self.rho_static.len();
        if delta == 0.0 {
            return Err(SolveError::NoConvergence { achieved: f64::INFINITY, harmonics: 0 });
        }
        let mut x0 = self.rho_static.clone();
        let mut pos: Vec<Vec<C64>> = vec![vec![ZERO; d2]; opts.n_start.max(1)];
        let mut neg: Vec<Vec<C64>> = vec![vec![ZERO; d2]; opts.n_start.max(1)];
        let mut rhs = vec![ZERO; d2];
        let mut work = vec![ZERO; d2];
        let mut out = vec![ZERO; d2];
        let mut change = f64::INFINITY;
        for _ in 0..opts.max_sweeps {
            let n = pos.len();
            for side in [1.0_f64, -1.0] {
                for k in 0..n {
                    let (this, inner_side, outer_side) = if side > 0.0 {
                        (&mut pos, &self.l_plus, &self.l_minus)
                    } else {
                        (&mut neg, &self.l_minus, &self.l_plus)
                    };
                    rhs.iter_mut().for_each(|z| *z = ZERO);
                    let inner = if k == 0 { &x0 } else { &this[k - 1] };
                    inner_side.mul_add(C64::new(-1.0, 0.0), inner, &mut rhs);
                    if k + 1 < n {
                        outer_side.mul_add(C64::new(-1.0, 0.0), &this[k + 1], &mut rhs);
                    }
                    let shift = C64::new(0.0, side * (k + 1) as f64 * delta);
                    if !self.schur.solve_shifted(shift, &rhs, &mut out, &mut work) {
                        return Err(SolveError::SingularLadderMatrix { harmonic: (side as i64) * (k as i64 + 1) });
                    }
                    this[k].copy_from_slice(&out);
                }
            }
            rhs.iter_mut().for_each(|z| *z = ZERO);
            self.l_plus.mul_add(C64::new(-1.0, 0.0), &neg[0], &mut rhs);
            self.l_minus.mul_add(C64::new(-1.0, 0.0), &pos[0], &mut rhs);
            for (r, s) in rhs.iter_mut().zip(&self.rho_static) {
                *r += BORDER * s;
            }
            let x_new = self.bordered.solve_vec(&rhs);
            change = x_new.iter().zip(&x0).fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
            x0 = x_new;
            if !change.is_finite() {
                break;
            }
            let edge = max_entry(&pos[n - 1]).max(max_entry(&neg[n - 1]));
            if edge > 0.1 * opts.tol && n < opts.n_max {
                pos.push(vec![ZERO; d2]);
                neg.push(vec![ZERO; d2]);
                continue;
            }
            if change < opts.tol && edge <= opts.tol {
                let mut ss = SteadyState::new(unvectorize(&x0, self.spec.dim()), &self.spec);
                ss.harmonics_used = n;
                ss.achieved_tol = change;
                return Ok(ss);
            }
        }
        Err(SolveError::NoConvergence { achieved: change, harmonics: pos.len() })
    }

    /// Relaxation first, continued fraction as the fallback.
    pub fn solve(&self, delta: f64, opts: &RelaxationOptions) -> Result<(SteadyState, Route), SolveError> {
        match self.relax(delta, opts) {
            Ok(ss) => Ok((ss, Route::Relaxation)),
            Err(_) => {
                let mcf = McfOptions { tol: opts.tol, n_max: opts.n_max.max(8), ..Default::default() };
                solve_mcf(&self.triple(delta), &mcf).map(|ss| (ss, Route::ContinuedFraction))
            }
        }
    }
}

fn max_entry(v: &[C64]) -> f64 {
    v.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Largest entrywise change between two solutions; exposed for tests.
pub fn state_distance(a: &SteadyState, b: &SteadyState) -> f64 {
    max_abs_diff(&a.rho0, &b.rho0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_two_tone_drive_frame;
    use crate::model::{ghz, mhz, DeviceParams, DriveTone, ProbeTone};
    use crate::steadystate::build_liouvillian;

    #[test]
    fn matches_continued_fraction_on_probe_sweep() {
        let p = DeviceParams::reference();
        let spec = HilbertSpec::default();
        let drive = DriveTone::from_power(ghz(7.616), -35.0, p.calib_c);
        let probe = ProbeTone::new(ghz(7.17), mhz(0.05));
        let l = build_liouvillian(&build_two_tone_drive_frame(&p, &drive, &probe, &spec), &p, &spec);
        let fast = HarmonicRelaxation::new(&l.l0, &l.l_plus, &l.l_minus, &spec).unwrap();
        let opts = RelaxationOptions { tol: 1e-13, ..Default::default() };
        for f in [7.150, 7.1581, 7.175, 7.19] {
            let delta = ghz(f) - drive.omega;
            let (a, route) = fast.solve(delta, &opts).unwrap();
            assert_eq!(route, Route::Relaxation);
            let b = solve_mcf(&fast.triple(delta), &McfOptions { tol: 1e-13, ..Default::default() }).unwrap();
            assert!((a.n_photons - b.n_photons).abs() < 1e-9 * b.n_photons, "{f}: {} vs {}", a.n_photons, b.n_photons);
            assert!(state_distance(&a, &b) < 1e-11);
        }
    }
}
