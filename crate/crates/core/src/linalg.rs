//! Thin safe wrappers over the handful of LAPACK and CBLAS routines the
//! solvers need, plus a compressed-row sparse matrix for superoperators.
//!
//! Dense matrices are `ndarray` arrays of `Complex64`. Every routine copies its
//! input into column-major storage before handing it to the Fortran side, so
//! callers never need to care about memory order.

use std::sync::Once;

use cblas_sys::{cblas_zgemv, CBLAS_LAYOUT::CblasColMajor, CBLAS_TRANSPOSE};
use ndarray::{Array1, Array2, ShapeBuilder};
use num_complex::Complex64;
use thiserror::Error;

extern crate openblas_src;

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const IM: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is exactly singular (zero pivot at row {0})")]
    Singular(usize),
    #[error("{routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

extern "C" {
    fn openblas_set_num_threads(n: i32);
}

static BLAS_INIT: Once = Once::new();

/// Pin OpenBLAS to one thread. Parallelism lives at the sweep level, and a
/// single-threaded BLAS keeps every result independent of the worker count.
pub fn init_blas() {
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Column-major copy of `m`.
pub fn fortran(m: &CMatrix) -> CMatrix {
    let mut f = Array2::zeros(m.raw_dim().f());
    f.assign(m);
    f
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |M - M^†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut err = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    err
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().sum()
}

/// Hermitian eigendecomposition (ascending eigenvalues, eigenvectors in columns).
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    init_blas();
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "eigh needs a square matrix");
    let mut a = fortran(h);
    let mut w = vec![0.0; n];
    let ni = n as i32;
    let mut info = 0;
    let (mut lwork, mut lrwork, mut liwork) = (-1_i32, -1_i32, -1_i32);
    let mut wq = [ZERO];
    let mut rq = [0.0_f64];
    let mut iq = [0_i32];
    unsafe {
        lapack_sys::zheevd_(
            c"V".as_ptr(),
            c"U".as_ptr(),
            &ni,
            a.as_mut_ptr().cast(),
            &ni,
            w.as_mut_ptr(),
            wq.as_mut_ptr().cast(),
            &lwork,
            rq.as_mut_ptr(),
            &lrwork,
            iq.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd", info });
    }
    lwork = wq[0].re as i32;
    lrwork = rq[0] as i32;
    liwork = iq[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0_i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            c"V".as_ptr(),
            c"U".as_ptr(),
            &ni,
            a.as_mut_ptr().cast(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr().cast(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd", info });
    }
    Ok((w, a))
}

/// LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    ipiv: Vec<i32>,
    norm1: f64,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Self, LinalgError> {
        init_blas();
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let norm1 = a.columns().into_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let mut lu = fortran(a);
        let mut ipiv = vec![0_i32; n];
        let ni = n as i32;
        let mut info = 0;
        unsafe {
            lapack_sys::zgetrf_(&ni, &ni, lu.as_mut_ptr().cast(), &ni, ipiv.as_mut_ptr(), &mut info);
        }
        if info > 0 {
            return Err(LinalgError::Singular(info as usize - 1));
        }
        if info < 0 {
            return Err(LinalgError::Lapack { routine: "zgetrf", info });
        }
        Ok(Lu { lu, ipiv, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Smallest over largest pivot magnitude; a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        let d = self.lu.diag();
        let max = d.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let min = d.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
        if max == 0.0 {
            0.0
        } else {
            min / max
        }
    }

    /// LAPACK estimate of the reciprocal 1-norm condition number.
    pub fn rcond(&self) -> f64 {
        let n = self.dim();
        let ni = n as i32;
        let mut rcond = 0.0;
        let mut work = vec![ZERO; 2 * n];
        let mut rwork = vec![0.0; 2 * n];
        let mut info = 0;
        unsafe {
            lapack_sys::zgecon_(
                c"1".as_ptr(),
                &ni,
                self.lu.as_ptr().cast(),
                &ni,
                &self.norm1,
                &mut rcond,
                work.as_mut_ptr().cast(),
                rwork.as_mut_ptr(),
                &mut info,
            );
        }
        if info != 0 {
            return 0.0;
        }
        rcond
    }

    /// Solve `A X = B` for every column of `b`.
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let mut x = fortran(b);
        self.solve_raw(x.as_mut_ptr(), b.ncols());
        x
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_raw(x.as_mut_ptr(), 1);
        x
    }

    fn solve_raw(&self, x: *mut C64, nrhs: usize) {
        let n = self.dim() as i32;
        let nrhs = nrhs as i32;
        let mut info = 0;
        unsafe {
            lapack_sys::zgetrs_(
                c"N".as_ptr(),
                &n,
                &nrhs,
                self.lu.as_ptr().cast(),
                &n,
                self.ipiv.as_ptr(),
                x.cast(),
                &n,
                &mut info,
            );
        }
        debug_assert_eq!(info, 0);
    }
}

/// Complex Schur form `A = Q T Q^†`, kept for repeated shifted solves.
#[derive(Debug, Clone)]
pub struct Schur {
    q: CMatrix,
    t: CMatrix,
    n: usize,
}

impl Schur {
    pub fn new(a: &CMatrix) -> Result<Self, LinalgError> {
        init_blas();
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Schur needs a square matrix");
        let mut t = fortran(a);
        let mut q: CMatrix = Array2::zeros((n, n).f());
        let mut w = vec![ZERO; n];
        let mut rwork = vec![0.0; n];
        let mut bwork = vec![0_i32; n];
        let ni = n as i32;
        let mut sdim = 0;
        let mut info = 0;
        let mut lwork = -1_i32;
        let mut wq = [ZERO];
        unsafe {
            lapack_sys::zgees_(
                c"V".as_ptr(),
                c"N".as_ptr(),
                None,
                &ni,
                t.as_mut_ptr().cast(),
                &ni,
                &mut sdim,
                w.as_mut_ptr().cast(),
                q.as_mut_ptr().cast(),
                &ni,
                wq.as_mut_ptr().cast(),
                &lwork,
                rwork.as_mut_ptr(),
                bwork.as_mut_ptr(),
                &mut info,
            );
        }
        lwork = (wq[0].re as i32).max(1);
        let mut work = vec![ZERO; lwork as usize];
        unsafe {
            lapack_sys::zgees_(
                c"V".as_ptr(),
                c"N".as_ptr(),
                None,
                &ni,
                t.as_mut_ptr().cast(),
                &ni,
                &mut sdim,
                w.as_mut_ptr().cast(),
                q.as_mut_ptr().cast(),
                &ni,
                work.as_mut_ptr().cast(),
                &lwork,
                rwork.as_mut_ptr(),
                bwork.as_mut_ptr(),
                &mut info,
            );
        }
        if info != 0 {
            return Err(LinalgError::Lapack { routine: "zgees", info });
        }
        Ok(Schur { q, t, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diag().to_vec()
    }

    /// Solve `(A - shift) x = b`. `work` must hold `dim()` entries.
    /// Returns false when the shifted triangular factor has an exact zero pivot.
    pub fn solve_shifted(&self, shift: C64, b: &[C64], x: &mut [C64], work: &mut [C64]) -> bool {
        let n = self.n;
        debug_assert!(b.len() == n && x.len() == n && work.len() == n);
        let q = self.q.as_slice_memory_order().expect("column-major Q");
        let t = self.t.as_slice_memory_order().expect("column-major T");
        gemv(CBLAS_TRANSPOSE::CblasConjTrans, n, q, b, work);
        for j in (0..n).rev() {
            let col = &t[j * n..j * n + n];
            let d = col[j] - shift;
            if d == ZERO {
                return false;
            }
            let xj = work[j] / d;
            work[j] = xj;
            for (wi, tij) in work[..j].iter_mut().zip(&col[..j]) {
                *wi -= tij * xj;
            }
        }
        gemv(CBLAS_TRANSPOSE::CblasNoTrans, n, q, work, x);
        true
    }
}

fn gemv(trans: CBLAS_TRANSPOSE, n: usize, a: &[C64], x: &[C64], y: &mut [C64]) {
    let ni = n as i32;
    let one = ONE;
    let zero = ZERO;
    unsafe {
        cblas_zgemv(
            CblasColMajor,
            trans,
            ni,
            ni,
            (&one as *const C64).cast(),
            a.as_ptr().cast(),
            ni,
            x.as_ptr().cast(),
            1,
            (&zero as *const C64).cast(),
            y.as_mut_ptr().cast(),
            1,
        );
    }
}

/// Compressed-row sparse matrix. Superoperators built from a handful of
/// few-banded operators are mostly zeros, so applying them this way is what
/// makes time integration and the harmonic sweeps cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &CMatrix) -> Self {
        let (n_rows, n_cols) = m.dim();
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in m.rows() {
            for (j, &z) in row.iter().enumerate() {
                if z != ZERO {
                    indices.push(j);
                    data.push(z);
                }
            }
            indptr.push(indices.len());
        }
        Csr { n_rows, n_cols, indptr, indices, data }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// `y += scale * A x`
    pub fn mul_add(&self, scale: C64, x: &[C64], y: &mut [C64]) {
        debug_assert!(x.len() == self.n_cols && y.len() == self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *yi += scale * acc;
        }
    }

    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.n_rows];
        self.mul_add(ONE, x, &mut y);
        y
    }
}
