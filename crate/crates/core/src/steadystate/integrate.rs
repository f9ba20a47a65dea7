//! Direct time integration of the periodically driven master equation, kept
//! independent of the continued-fraction machinery so it can serve as a check.
//!
//! The one-period propagator `Φ` is integrated column by column with an
//! adaptive Dormand-Prince 5(4) scheme. Whole periods are then applied by
//! repeated squaring of `Φ`, and the last period is integrated explicitly
//! while accumulating `∫ρ dt` to form the time average.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2, ShapeBuilder};

use crate::linalg::{trace, CMatrix, Csr, C64, ONE, ZERO};

use super::{unvectorize, vectorize, LiouvillianTriple, SolveError, SteadyState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step allowed, µs.
    pub max_step: f64,
    /// Trace drift that aborts the run.
    pub trace_tol: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { rtol: 1e-11, atol: 1e-13, max_step: 1e-3, trace_tol: 1e-6 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) for `y' = f(t, y)` on `[t0, t1]`.
fn dopri<F>(f: F, t0: f64, t1: f64, mut y: Vec<C64>, opts: &IntegrationOptions) -> Vec<C64>
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
    let mut stage = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];
    let mut t = t0;
    let mut h = opts.max_step.min(t1 - t0);
    f(t, &y, &mut k[0]);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        acc += kj[i] * (h * A[s][j]);
                    }
                }
                stage[i] = acc;
            }
            f(t + C[s] * h, &stage, &mut k[s]);
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut e = ZERO;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * E[j];
                }
            }
            let e = (e * h).norm();
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            let last = k.pop().expect("seven stages");
            k.insert(0, last);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.max_step);
    }
    y
}

struct Generator {
    l0: Csr,
    l_plus: Csr,
    l_minus: Csr,
    delta: f64,
    d2: usize,
}

impl Generator {
    /// `out = L(t) x` for every length-`d2` block of `x`.
    fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let phase = C64::from_polar(1.0, self.delta * t);
        let conj = phase.conj();
        for (xb, ob) in x.chunks(self.d2).zip(out.chunks_mut(self.d2)) {
            ob.iter_mut().for_each(|z| *z = ZERO);
            self.l0.mul_add(ONE, xb, ob);
            self.l_plus.mul_add(phase, xb, ob);
            self.l_minus.mul_add(conj, xb, ob);
        }
    }
}

fn mat_from_columns(cols: &[C64], n: usize) -> CMatrix {
    let mut m: CMatrix = Array2::zeros((n, n).f());
    m.as_slice_memory_order_mut().expect("fresh array").copy_from_slice(cols);
    m
}

fn matrix_power(m: &CMatrix, mut k: u64) -> CMatrix {
    let n = m.nrows();
    let mut result = crate::linalg::identity(n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = result.dot(&base);
        }
        k >>= 1;
        if k > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// Integrate from `ρ(0) = ρ_init` (ground state if `None`) to `t_final` and
/// return the average of `ρ` over the last drive period. With `Δ = 0` the
/// generator is static and the state at `t_final` is returned.
pub fn time_integrate(
    l: &LiouvillianTriple,
    rho_init: Option<&CMatrix>,
    t_final: f64,
    opts: &IntegrationOptions,
) -> Result<SteadyState, SolveError> {
    let d = l.spec.dim();
    let d2 = d * d;
    let gen = Generator {
        l0: Csr::from_dense(&l.l0),
        l_plus: Csr::from_dense(&l.l_plus),
        l_minus: Csr::from_dense(&l.l_minus),
        delta: l.delta,
        d2,
    };
    let rho_start = match rho_init {
        Some(r) => vectorize(r),
        None => {
            let mut v = vec![ZERO; d2];
            v[0] = ONE;
            v
        }
    };
    let check = |rho: &CMatrix| -> Result<(), SolveError> {
        let drift = (trace(rho) - ONE).norm();
        if drift > opts.trace_tol || !drift.is_finite() {
            Err(SolveError::StepTooLarge { drift })
        } else {
            Ok(())
        }
    };

    if l.delta == 0.0 {
        let y = dopri(|t, x, out| gen.apply(t, x, out), 0.0, t_final, rho_start, opts);
        let rho = unvectorize(&y, d);
        check(&rho)?;
        return Ok(SteadyState::new(rho, &l.spec));
    }

    let period = TAU / l.delta.abs();
    let periods = (t_final / period).round().max(1.0) as u64;

    let mut eye = vec![ZERO; d2 * d2];
    for i in 0..d2 {
        eye[i * d2 + i] = ONE;
    }
    let cols = dopri(|t, x, out| gen.apply(t, x, out), 0.0, period, eye, opts);
    let phi = mat_from_columns(&cols, d2);
    let skip = matrix_power(&phi, periods - 1);
    let start = skip.dot(&Array1::from(rho_start));

    let mut aug = start.to_vec();
    aug.extend(std::iter::repeat(ZERO).take(d2));
    let y = dopri(
        |t, x, out| {
            let (rho, acc) = out.split_at_mut(d2);
            gen.apply(t, &x[..d2], rho);
            acc.copy_from_slice(&x[..d2]);
        },
        0.0,
        period,
        aug,
        opts,
    );
    let last = unvectorize(&y[..d2], d);
    check(&last)?;
    let mean: Vec<C64> = y[d2..].iter().map(|z| z / period).collect();
    let rho0 = unvectorize(&mean, d);
    check(&rho0)?;
    let mut ss = SteadyState::new(rho0, &l.spec);
    ss.converged = true;
    Ok(ss)
}
