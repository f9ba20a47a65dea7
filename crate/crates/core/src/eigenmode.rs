//! Polariton picture: eigenstates of the coupler-frame Hamiltonian, their
//! continuation along a drive sweep, and the probe transitions between them.

use std::fmt;

use ndarray::Array2;
use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::{build_coupler_frame, build_lab_jc};
use crate::hilbert::HilbertSpec;
use crate::linalg::{dagger, eigh, hermiticity_error, max_abs, CMatrix, CVector, LinalgError};
use crate::model::{DeviceParams, DriveTone};
use crate::steadystate::{solve_static, static_liouvillian, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("Hamiltonian is not Hermitian (max |H - H†| = {0:e})")]
    NonHermitianInput(f64),
    #[error("polariton {label} is ambiguous at the anchor (weight {weight:.3})")]
    AnchorAmbiguous { label: Polariton, weight: f64 },
    #[error("populations sum to {0}, expected 1")]
    UnnormalizedPopulations(f64),
    #[error("empty drive path")]
    EmptyPath,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Eigenpairs sorted by energy. `branches[k]` is the branch id carried by
/// eigenvector `k` after tracking.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    pub states: CMatrix,
    pub branches: Vec<usize>,
}

impl EigenSolution {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, k: usize) -> CVector {
        self.states.column(k).to_owned()
    }

    /// Eigenvector index currently carrying `branch`.
    pub fn index_of(&self, branch: usize) -> usize {
        self.branches.iter().position(|&b| b == branch).expect("branch present")
    }

    /// `⟨α|a|β⟩` for every pair.
    pub fn matrix_elements(&self, op: &CMatrix) -> CMatrix {
        dagger(&self.states).dot(op).dot(&self.states)
    }
}

/// Make the largest-magnitude component of every eigenvector real and positive.
fn fix_phases(v: &mut CMatrix) {
    for mut col in v.columns_mut() {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (i, z) in col.iter().enumerate() {
            let n = z.norm();
            if n > best_norm + 1e-12 {
                best = i;
                best_norm = n;
            }
        }
        let ph = col[best].conj() / col[best].norm();
        col.mapv_inplace(|z| z * ph);
    }
}

pub fn diagonalize(h: &CMatrix) -> Result<EigenSolution, EigenError> {
    let err = hermiticity_error(h);
    if err > 1e-12 * max_abs(h).max(1.0) {
        return Err(EigenError::NonHermitianInput(err));
    }
    let (energies, mut states) = eigh(h)?;
    fix_phases(&mut states);
    let branches = (0..energies.len()).collect();
    Ok(EigenSolution { energies, states, branches })
}

/// Optimal assignment maximising total weight; `result[row] = col`.
/// Square input, Kuhn-Munkres with potentials.
pub fn max_weight_assignment(w: &Array2<f64>) -> Vec<usize> {
    let n = w.nrows();
    assert_eq!(n, w.ncols());
    let top = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cost = |i: usize, j: usize| top - w[[i - 1, j - 1]];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[p[j] - 1] = j - 1;
    }
    result
}

/// Overlap weights `|⟨prev_i|cur_j⟩|²`.
pub fn overlap_weights(prev: &EigenSolution, cur: &EigenSolution) -> Array2<f64> {
    dagger(&prev.states).dot(&cur.states).mapv(|z| z.norm_sqr())
}

/// Outcome of one continuation step.
#[derive(Debug, Clone)]
pub struct TrackStep {
    pub solution: EigenSolution,
    /// Smallest overlap among the matched pairs.
    pub min_overlap: f64,
}

impl TrackStep {
    /// A matched overlap below one half means the continuation could have
    /// picked a different branch; reported, not fatal.
    pub fn ambiguous(&self) -> bool {
        self.min_overlap < 0.5
    }
}

/// Carry branch ids from `prev` to `cur` by the globally optimal overlap
/// assignment. `cur` should be energy-sorted, which resolves exact ties.
pub fn track_branches(prev: &EigenSolution, cur: EigenSolution) -> TrackStep {
    let w = overlap_weights(prev, &cur);
    let assign = max_weight_assignment(&w);
    let mut branches = vec![0; cur.dim()];
    let mut min_overlap = f64::INFINITY;
    for (i, &j) in assign.iter().enumerate() {
        branches[j] = prev.branches[i];
        min_overlap = min_overlap.min(w[[i, j]]);
    }
    TrackStep { solution: EigenSolution { branches, ..cur }, min_overlap }
}

/// The polariton states named after their weak-drive parentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Polariton {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl Polariton {
    pub const ALL: [Polariton; 5] = [Polariton::P1, Polariton::P2, Polariton::P3, Polariton::P4, Polariton::P5];

    pub fn number(self) -> usize {
        self as usize + 1
    }
}

impl fmt::Display for Polariton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}p", self.number())
    }
}

/// Branch ids of the five named polaritons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolaritonMap {
    pub branch: [usize; 5],
}

impl PolaritonMap {
    pub fn branch_of(&self, p: Polariton) -> usize {
        self.branch[p as usize]
    }

    pub fn label(&self, branch: usize) -> String {
        match self.branch.iter().position(|&b| b == branch) {
            Some(k) => Polariton::ALL[k].to_string(),
            None => format!("b{branch}"),
        }
    }
}

/// Undriven eigenstates identified with the bare states they grow out of.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub spec: HilbertSpec,
    pub solution: EigenSolution,
    /// `parent[k] = (j, n)` for eigenvector `k`.
    pub parent: Vec<(usize, usize)>,
}

impl DressedBasis {
    pub fn new(p: &DeviceParams, spec: &HilbertSpec) -> Result<Self, EigenError> {
        let solution = diagonalize(&build_lab_jc(p, spec).matrix)?;
        let weights = solution.states.mapv(|z| z.norm_sqr());
        let assign = max_weight_assignment(&weights);
        let mut parent = vec![(0, 0); spec.dim()];
        for (bare, &k) in assign.iter().enumerate() {
            parent[k] = spec.levels(bare);
        }
        Ok(DressedBasis { spec: *spec, solution, parent })
    }

    pub fn index(&self, j: usize, n: usize) -> usize {
        self.parent.iter().position(|&x| x == (j, n)).expect("level inside truncation")
    }

    pub fn state(&self, j: usize, n: usize) -> CVector {
        self.solution.state(self.index(j, n))
    }

    pub fn energy(&self, j: usize, n: usize) -> f64 {
        self.solution.energies[self.index(j, n)]
    }

    /// Weight of the bare state `(j, n)` in the dressed state it labels.
    pub fn purity(&self, j: usize, n: usize) -> f64 {
        let k = self.index(j, n);
        self.solution.states[[self.spec.index(j, n), k]].norm_sqr()
    }

    pub fn frequencies(&self) -> DressedFrequencies {
        let ge0 = self.energy(1, 0) - self.energy(0, 0);
        let ge1 = self.energy(1, 1) - self.energy(0, 1);
        let rg = self.energy(0, 1) - self.energy(0, 0);
        let re = self.energy(1, 1) - self.energy(1, 0);
        DressedFrequencies { ge0, ge1, rg, re }
    }
}

/// Dressed transition frequencies of the undriven system (rad/µs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DressedFrequencies {
    /// Qubit with the resonator empty.
    pub ge0: f64,
    /// Qubit with one photon.
    pub ge1: f64,
    /// Resonator with the qubit in g.
    pub rg: f64,
    /// Resonator with the qubit in e.
    pub re: f64,
}

impl DressedFrequencies {
    /// Measured dispersive shift `(ω'ge0 - ω'ge1)/2`.
    pub fn chi(&self) -> f64 {
        0.5 * (self.ge0 - self.ge1)
    }

    pub fn ge_mid(&self) -> f64 {
        0.5 * (self.ge0 + self.ge1)
    }

    pub fn resonator_mid(&self) -> f64 {
        0.5 * (self.rg + self.re)
    }
}

fn span_weights(sol: &EigenSolution, basis: &[CVector]) -> Vec<f64> {
    (0..sol.dim())
        .map(|k| {
            let v = sol.states.column(k);
            basis
                .iter()
                .map(|b| b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum::<num_complex::Complex64>().norm_sqr())
                .sum()
        })
        .collect()
}

fn top_two(weights: &[f64], exclude: &[usize]) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..weights.len()).filter(|k| !exclude.contains(k)).collect();
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    (idx[0], idx[1])
}

/// Name the polaritons at a weak-drive anchor: 1p/2p are the two states
/// living in span{ḡ0, ē0}, 3p/4p the two in span{ē1, ḡ1} (lower energy first),
/// and 5p the state with most weight on the dressed |f,0⟩.
pub fn polariton_labels(anchor: &EigenSolution, dressed: &DressedBasis) -> Result<PolaritonMap, EigenError> {
    let mut branch = [0; 5];
    let mut taken = Vec::new();
    let pairs = [
        ([(0, 0), (1, 0)], [Polariton::P1, Polariton::P2]),
        ([(1, 1), (0, 1)], [Polariton::P3, Polariton::P4]),
    ];
    for (levels, names) in pairs {
        let basis: Vec<CVector> = levels.iter().map(|&(j, n)| dressed.state(j, n)).collect();
        let w = span_weights(anchor, &basis);
        let (a, b) = top_two(&w, &taken);
        let (lo, hi) = if anchor.energies[a] <= anchor.energies[b] { (a, b) } else { (b, a) };
        for (k, name) in [(lo, names[0]), (hi, names[1])] {
            if w[k] < 0.5 {
                return Err(EigenError::AnchorAmbiguous { label: name, weight: w[k] });
            }
            branch[name as usize] = anchor.branches[k];
            taken.push(k);
        }
    }
    let w = span_weights(anchor, &[dressed.state(2, 0)]);
    let (k, _) = top_two(&w, &taken);
    if w[k] < 0.5 {
        return Err(EigenError::AnchorAmbiguous { label: Polariton::P5, weight: w[k] });
    }
    branch[Polariton::P5 as usize] = anchor.branches[k];
    Ok(PolaritonMap { branch })
}

/// Diagonal of `ρ` in the eigenbasis.
pub fn populations(sol: &EigenSolution, rho: &CMatrix) -> Vec<f64> {
    let m = dagger(&sol.states).dot(rho).dot(&sol.states);
    m.diag().iter().map(|z| z.re).collect()
}

/// Populations of the coupler-driven system without the probe.
pub fn steady_populations(
    sol: &EigenSolution,
    p: &DeviceParams,
    drive: &DriveTone,
    spec: &HilbertSpec,
) -> Result<Vec<f64>, EigenError> {
    let h = build_coupler_frame(p, drive, spec).matrix;
    let ss = solve_static(&static_liouvillian(&h, p, spec), spec)?;
    Ok(populations(sol, &ss.rho0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub from_branch: usize,
    pub to_branch: usize,
    /// Lab-frame probe frequency, rad/µs.
    pub freq: f64,
    /// `|⟨from|a|to⟩|`
    pub matelem: f64,
    pub intensity: f64,
}

/// Probe transitions `α → β` at lab frequency `ω_d + E_β - E_α` inside
/// `window`, keeping matrix elements at least `threshold` times the largest
/// one in the window. Intensity is `(P_α + P_β)|⟨α|a|β⟩|²`.
pub fn transition_table(
    sol: &EigenSolution,
    populations: &[f64],
    omega_d: f64,
    window: (f64, f64),
    threshold: f64,
    spec: &HilbertSpec,
) -> Result<Vec<Transition>, EigenError> {
    let total: f64 = populations.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(EigenError::UnnormalizedPopulations(total));
    }
    let a = sol.matrix_elements(&spec.a());
    let mut rows = Vec::new();
    for i in 0..sol.dim() {
        for j in 0..sol.dim() {
            if i == j {
                continue;
            }
            let freq = omega_d + sol.energies[j] - sol.energies[i];
            if freq < window.0 || freq > window.1 {
                continue;
            }
            let m = a[[i, j]].norm();
            rows.push(Transition {
                from: i,
                to: j,
                from_branch: sol.branches[i],
                to_branch: sol.branches[j],
                freq,
                matelem: m,
                intensity: (populations[i] + populations[j]) * m * m,
            });
        }
    }
    let biggest = rows.iter().map(|t| t.matelem).fold(0.0, f64::max);
    rows.retain(|t| t.matelem >= threshold * biggest && t.matelem > 0.0);
    rows.sort_by(|x, y| x.freq.total_cmp(&y.freq));
    Ok(rows)
}

/// Tracked eigen-solutions along a drive path. Tracking runs on a path
/// refined by `substeps` between consecutive points; only the requested
/// points are kept.
#[derive(Debug, Clone)]
pub struct EigenPath {
    pub drives: Vec<DriveTone>,
    pub solutions: Vec<EigenSolution>,
    pub labels: PolaritonMap,
    /// Indices (into `drives`) where some step was ambiguous.
    pub ambiguous: Vec<usize>,
}

impl EigenPath {
    /// Lab-frame frequency of the `from → to` polariton transition at point `k`.
    pub fn line(&self, k: usize, from: Polariton, to: Polariton) -> f64 {
        let sol = &self.solutions[k];
        let i = sol.index_of(self.labels.branch_of(from));
        let j = sol.index_of(self.labels.branch_of(to));
        self.drives[k].omega + sol.energies[j] - sol.energies[i]
    }

    pub fn line_series(&self, from: Polariton, to: Polariton) -> Vec<f64> {
        (0..self.drives.len()).map(|k| self.line(k, from, to)).collect()
    }
}

pub fn track_path(
    p: &DeviceParams,
    spec: &HilbertSpec,
    path: &[DriveTone],
    substeps: usize,
) -> Result<EigenPath, EigenError> {
    let first = path.first().ok_or(EigenError::EmptyPath)?;
    let dressed = DressedBasis::new(p, spec)?;
    let mut current = diagonalize(&build_coupler_frame(p, first, spec).matrix)?;
    let labels = polariton_labels(&current, &dressed)?;
    let mut solutions = vec![current.clone()];
    let mut ambiguous = Vec::new();
    let sub = substeps.max(1);
    for (k, pair) in path.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let mut flagged = false;
        for s in 1..=sub {
            let f = s as f64 / sub as f64;
            let tone = DriveTone::new(a.omega + f * (b.omega - a.omega), a.rabi + f * (b.rabi - a.rabi));
            let next = diagonalize(&build_coupler_frame(p, &tone, spec).matrix)?;
            let step = track_branches(&current, next);
            flagged |= step.ambiguous();
            current = step.solution;
        }
        if flagged {
            ambiguous.push(k + 1);
        }
        solutions.push(current.clone());
    }
    Ok(EigenPath { drives: path.to_vec(), solutions, labels, ambiguous })
}
