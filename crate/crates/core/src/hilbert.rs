//! Truncated transmon ⊗ resonator product space.
//!
//! Basis index is `j * n_resonator + n` for transmon level `j` and photon
//! number `n`, i.e. the transmon is the slow (outer) factor of every Kronecker
//! product.

use ndarray::{linalg::kron, Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dagger, identity, CMatrix, CVector, C64, ONE, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("truncation must keep at least two levels per subsystem (got {n_transmon} x {n_resonator})")]
    TooSmall { n_transmon: usize, n_resonator: usize },
    #[error("operator is {got}x{got} but the {subsystem:?} factor has dimension {expected}")]
    DimensionMismatch { subsystem: Subsystem, expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Transmon,
    Resonator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpec {
    n_transmon: usize,
    n_resonator: usize,
}

impl Default for HilbertSpec {
    fn default() -> Self {
        HilbertSpec { n_transmon: 4, n_resonator: 4 }
    }
}

impl HilbertSpec {
    pub fn new(n_transmon: usize, n_resonator: usize) -> Result<Self, HilbertError> {
        if n_transmon < 2 || n_resonator < 2 {
            return Err(HilbertError::TooSmall { n_transmon, n_resonator });
        }
        Ok(HilbertSpec { n_transmon, n_resonator })
    }

    pub fn n_transmon(&self) -> usize {
        self.n_transmon
    }

    pub fn n_resonator(&self) -> usize {
        self.n_resonator
    }

    pub fn dim(&self) -> usize {
        self.n_transmon * self.n_resonator
    }

    pub fn index(&self, j: usize, n: usize) -> usize {
        debug_assert!(j < self.n_transmon && n < self.n_resonator);
        j * self.n_resonator + n
    }

    /// Inverse of [`index`](Self::index).
    pub fn levels(&self, k: usize) -> (usize, usize) {
        (k / self.n_resonator, k % self.n_resonator)
    }

    pub fn embed(&self, op: &CMatrix, subsystem: Subsystem) -> Result<CMatrix, HilbertError> {
        let expected = match subsystem {
            Subsystem::Transmon => self.n_transmon,
            Subsystem::Resonator => self.n_resonator,
        };
        if op.nrows() != expected || op.ncols() != expected {
            return Err(HilbertError::DimensionMismatch { subsystem, expected, got: op.nrows() });
        }
        Ok(match subsystem {
            Subsystem::Transmon => kron(op, &identity(self.n_resonator)),
            Subsystem::Resonator => kron(&identity(self.n_transmon), op),
        })
    }

    /// Resonator annihilation operator `a` on the full space.
    pub fn a(&self) -> CMatrix {
        kron(&identity(self.n_transmon), &annihilation(self.n_resonator))
    }

    /// Transmon lowering operator `b` on the full space.
    pub fn b(&self) -> CMatrix {
        kron(&annihilation(self.n_transmon), &identity(self.n_resonator))
    }

    pub fn photon_number(&self) -> CMatrix {
        kron(&identity(self.n_transmon), &number(self.n_resonator))
    }

    pub fn transmon_number(&self) -> CMatrix {
        kron(&number(self.n_transmon), &identity(self.n_resonator))
    }

    /// Diagonal of `a†a`, handy because it is diagonal in the bare basis.
    pub fn photon_numbers(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.levels(k).1 as f64).collect()
    }

    pub fn basis_state(&self, j: usize, n: usize) -> CVector {
        let mut v = Array1::zeros(self.dim());
        v[self.index(j, n)] = ONE;
        v
    }

    pub fn identity(&self) -> CMatrix {
        identity(self.dim())
    }
}

pub fn annihilation(n: usize) -> CMatrix {
    let mut a = Array2::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation(n: usize) -> CMatrix {
    dagger(&annihilation(n))
}

pub fn number(n: usize) -> CMatrix {
    let mut m = Array2::zeros((n, n));
    for k in 0..n {
        m[[k, k]] = C64::new(k as f64, 0.0);
    }
    m
}

/// `|v⟩⟨v|`
pub fn projector(v: &CVector) -> CMatrix {
    let n = v.len();
    Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj())
}

/// `⟨u|v⟩`
pub fn inner(u: &CVector, v: &CVector) -> C64 {
    u.iter().zip(v.iter()).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn rejects_tiny_truncations() {
        assert!(HilbertSpec::new(1, 4).is_err());
        assert!(HilbertSpec::new(4, 1).is_err());
        assert_eq!(HilbertSpec::new(4, 4).unwrap().dim(), 16);
    }

    #[test]
    fn index_is_transmon_major() {
        let s = HilbertSpec::new(3, 5).unwrap();
        assert_eq!(s.index(0, 0), 0);
        assert_eq!(s.index(0, 4), 4);
        assert_eq!(s.index(1, 0), 5);
        assert_eq!(s.index(2, 3), 13);
        for k in 0..s.dim() {
            let (j, n) = s.levels(k);
            assert_eq!(s.index(j, n), k);
        }
    }

    #[test]
    fn commutator_is_identity_below_cutoff() {
        let n = 6;
        let a = annihilation(n);
        let c = a.dot(&creation(n)) - creation(n).dot(&a);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let want = if i == j { ONE } else { ZERO };
                assert!((c[[i, j]] - want).norm() < 1e-14);
            }
        }
        assert!((c[[n - 1, n - 1]].re - (1.0 - n as f64)).abs() < 1e-12);
    }

    #[test]
    fn embedded_operators_act_on_their_factor() {
        let s = HilbertSpec::new(3, 4).unwrap();
        let a = s.a();
        let v = s.basis_state(2, 3);
        let av = a.dot(&v);
        let want = s.basis_state(2, 2).mapv(|z| z * 3f64.sqrt());
        assert!(av.iter().zip(want.iter()).all(|(x, y)| (x - y).norm() < 1e-14));
        let bv = s.b().dot(&v);
        let want = s.basis_state(1, 3).mapv(|z| z * 2f64.sqrt());
        assert!(bv.iter().zip(want.iter()).all(|(x, y)| (x - y).norm() < 1e-14));
        assert!(max_abs_diff(&s.embed(&number(4), Subsystem::Resonator).unwrap(), &s.photon_number()) < 1e-15);
        assert!(s.embed(&number(4), Subsystem::Transmon).is_err());
    }
}
