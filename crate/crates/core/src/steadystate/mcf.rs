//! Matrix continued fraction for the periodic steady state.
//!
//! Writing `ρ(t) = Σ_n ρ_n e^{inΔt}` turns the master equation into the
//! three-term recurrence `(L0 - inΔ) ρ_n + L+ ρ_{n-1} + L- ρ_{n+1} = 0`. The
//! ansatz `ρ_n = S_n ρ_{n-1}` (n > 0) and `ρ_n = T_n ρ_{n+1}` (n < 0) closes it
//! from both ends; `ρ0` is then the unit-trace null vector of
//! `L0 + L+ T_{-1} + L- S_1`.

use crate::linalg::{identity, max_abs_diff, CMatrix, LinalgError, Lu, C64};

use super::{null_state, solve_static, LiouvillianTriple, SolveError, SteadyState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McfOptions {
    /// Starting truncation; doubled until two successive `ρ0` agree.
    pub n_start: usize,
    pub n_max: usize,
    pub tol: f64,
    pub keep_harmonics: bool,
}

impl Default for McfOptions {
    fn default() -> Self {
        McfOptions { n_start: 8, n_max: 128, tol: 1e-8, keep_harmonics: false }
    }
}

struct Ladder {
    rho0: CMatrix,
    upper: Vec<CMatrix>,
    lower: Vec<CMatrix>,
}

fn ladder_step(
    l0: &CMatrix,
    shift: C64,
    coupling_back: &CMatrix,
    previous: Option<&CMatrix>,
    source: &CMatrix,
    harmonic: i64,
) -> Result<CMatrix, SolveError> {
    let n = l0.nrows();
    let mut m = l0 - &identity(n).mapv(|z| z * shift);
    if let Some(prev) = previous {
        m = m + coupling_back.dot(prev);
    }
    let lu = Lu::factor(&m).map_err(|e| match e {
        LinalgError::Singular(_) => SolveError::SingularLadderMatrix { harmonic },
        other => other.into(),
    })?;
    if lu.pivot_ratio() < 1e-15 {
        return Err(SolveError::SingularLadderMatrix { harmonic });
    }
    Ok(lu.solve(source).mapv(|z| -z))
}

fn ladder(l: &LiouvillianTriple, n: usize, keep: bool) -> Result<Ladder, SolveError> {
    let d = l.spec.dim();
    let mut s_next: Option<CMatrix> = None;
    let mut upper = Vec::new();
    for k in (1..=n).rev() {
        let shift = C64::new(0.0, k as f64 * l.delta);
        let s = ladder_step(&l.l0, shift, &l.l_minus, s_next.as_ref(), &l.l_plus, k as i64)?;
        if keep {
            upper.push(s.clone());
        }
        s_next = Some(s);
    }
    let mut t_next: Option<CMatrix> = None;
    let mut lower = Vec::new();
    for k in (1..=n).rev() {
        let shift = C64::new(0.0, -(k as f64) * l.delta);
        let t = ladder_step(&l.l0, shift, &l.l_plus, t_next.as_ref(), &l.l_minus, -(k as i64))?;
        if keep {
            lower.push(t.clone());
        }
        t_next = Some(t);
    }
    let s1 = s_next.expect("n >= 1");
    let t1 = t_next.expect("n >= 1");
    let closure = &l.l0 + &l.l_plus.dot(&t1) + l.l_minus.dot(&s1);
    let rho0 = null_state(&closure, d)?;
    upper.reverse();
    lower.reverse();
    Ok(Ladder { rho0, upper, lower })
}

fn harmonics(rho0: &CMatrix, ladder: &Ladder) -> Vec<(i64, CMatrix)> {
    let d = rho0.nrows();
    let to_vec = |m: &CMatrix| ndarray::Array1::from(super::vectorize(m));
    let mut out = vec![(0, rho0.clone())];
    let mut cur = to_vec(rho0);
    for (k, s) in ladder.upper.iter().enumerate() {
        cur = s.dot(&cur);
        out.push((k as i64 + 1, super::unvectorize(cur.as_slice().unwrap(), d)));
    }
    let mut cur = to_vec(rho0);
    for (k, t) in ladder.lower.iter().enumerate() {
        cur = t.dot(&cur);
        out.push((-(k as i64) - 1, super::unvectorize(cur.as_slice().unwrap(), d)));
    }
    out.sort_by_key(|(n, _)| *n);
    out
}

/// Periodic steady state by matrix continued fraction, doubling the number of
/// harmonics until `max|ρ0(N) - ρ0(2N)| < tol`. A zero detuning means the
/// generator is static and its null vector is returned directly; so do
/// vanishing sidebands.
pub fn solve_mcf(l: &LiouvillianTriple, opts: &McfOptions) -> Result<SteadyState, SolveError> {
    let static_sidebands = l.l_plus.iter().chain(l.l_minus.iter()).all(|z| *z == C64::new(0.0, 0.0));
    if static_sidebands {
        let mut ss = solve_static(&l.l0, &l.spec)?;
        if opts.keep_harmonics {
            ss.harmonics = vec![(0, ss.rho0.clone())];
        }
        return Ok(ss);
    }
    if l.delta == 0.0 {
        let total = &l.l0 + &l.l_plus + &l.l_minus;
        return solve_static(&total, &l.spec);
    }
    let mut n = opts.n_start.max(1);
    let mut prev = ladder(l, n, false)?;
    loop {
        let next_n = 2 * n;
        let next = ladder(l, next_n, opts.keep_harmonics)?;
        let diff = max_abs_diff(&prev.rho0, &next.rho0);
        if diff < opts.tol {
            let mut ss = SteadyState::new(next.rho0.clone(), &l.spec);
            ss.harmonics_used = next_n;
            ss.achieved_tol = diff;
            if opts.keep_harmonics {
                ss.harmonics = harmonics(&next.rho0, &next);
            }
            return Ok(ss);
        }
        if next_n >= opts.n_max {
            return Err(SolveError::NoConvergence { achieved: diff, harmonics: next_n });
        }
        n = next_n;
        prev = next;
    }
}

/// `ρ0` for one fixed truncation, without the convergence loop.
pub fn solve_mcf_fixed(l: &LiouvillianTriple, n: usize) -> Result<SteadyState, SolveError> {
    let lad = ladder(l, n.max(1), false)?;
    let mut ss = SteadyState::new(lad.rho0, &l.spec);
    ss.harmonics_used = n;
    ss.converged = false;
    Ok(ss)
}
