//! Markov systems written as Lindblad systems with diagonal density matrices.
//!
//! Superoperators act on N×N matrices flattened by column stacking: entry
//! `(row, col)` sits at index `col * N + row`. With that convention
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, which is how every superoperator below is
//! assembled.
//!
//! State labels of the emitter model (indices are zero-based):
//!
//! | index | level                                  |
//! |-------|----------------------------------------|
//! | 0     | charged dot, no photon (dark)          |
//! | 1     | charged dot, photon in detector        |
//! | 2     | uncharged dot, no photon (emitting)    |
//! | 3     | uncharged dot, photon in detector      |
//!
//! The uncharged dot is the emitting ("bright") one. Some overview figures in
//! the literature label the charged state bright instead; this crate always
//! means "emitting" by bright.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::EmitterParams;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_REL_TOL: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-9;

/// Index of entry `(row, col)` in the column-stacked vector of an N×N matrix.
#[inline]
pub fn vec_index(n: usize, row: usize, col: usize) -> usize {
    col * n + row
}

pub fn vectorize(m: &CMatrix) -> CVector {
    // nalgebra stores column-major, which is exactly column stacking
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// `|to⟩⟨from|` on an `n`-level system.
pub fn ket_bra(n: usize, to: usize, from: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(to, from)] = ONE;
    m
}

pub fn diagonal_matrix(values: &[f64]) -> CMatrix {
    let n = values.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = Complex64::new(v, 0.0);
    }
    m
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Density matrix of an N-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    markov_diagonal: bool,
}

impl DensityMatrix {
    /// Validates hermiticity and unit trace.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), found: entries.ncols() });
        }
        let scale = max_abs(&entries).max(1.0);
        let herm_err = max_abs(&(&entries - entries.adjoint()));
        if herm_err > HERMITIAN_TOL * scale {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm_err:.3e})")));
        }
        let tr = entries.trace();
        if (tr - ONE).norm() > HERMITIAN_TOL * scale {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}, expected 1")));
        }
        let n = entries.nrows();
        let markov_diagonal = (0..n).all(|r| (0..n).all(|c| r == c || entries[(r, c)] == ZERO));
        Ok(DensityMatrix { entries, markov_diagonal })
    }

    /// Diagonal density matrix of a Markov state distribution.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidDensityMatrix("probabilities must be nonnegative".into()));
        }
        DensityMatrix::new(diagonal_matrix(p))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_markov_diagonal(&self) -> bool {
        self.markov_diagonal
    }

    /// Real parts of the diagonal.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn vectorized(&self) -> CVector {
        vectorize(&self.entries)
    }
}

/// Incoherent jump `operator` occurring at `rate` (kHz).
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTerm {
    operator: CMatrix,
    rate: f64,
}

impl JumpTerm {
    pub fn new(operator: CMatrix, rate: f64) -> Result<Self> {
        if operator.nrows() != operator.ncols() {
            return Err(Error::DimensionMismatch { expected: operator.nrows(), found: operator.ncols() });
        }
        if !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("jump rate must be finite, got {rate}")));
        }
        if rate < 0.0 {
            return Err(Error::NegativeRate { name: "jump".into(), rate });
        }
        if operator.iter().all(|z| *z == ZERO) {
            return Err(Error::InvalidParameter("jump operator is zero".into()));
        }
        Ok(JumpTerm { operator, rate })
    }

    pub fn operator(&self) -> &CMatrix {
        &self.operator
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Linear map on N×N matrices, stored as an N²×N² matrix on column-stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        let d2 = dim * dim;
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::DimensionMismatch { expected: d2, found: matrix.nrows() });
        }
        Ok(Superoperator { dim, matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Superoperator { dim, matrix: CMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Superoperator { dim, matrix: CMatrix::identity(dim * dim, dim * dim) }
    }

    /// Hilbert-space dimension N (the matrix is N²×N²).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.nrows() });
        }
        Ok(unvectorize(&(&self.matrix * vectorize(x)), self.dim))
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    pub fn scaled(&self, c: f64) -> Self {
        Superoperator { dim: self.dim, matrix: &self.matrix * Complex64::new(c, 0.0) }
    }

    /// Largest |Tr[ℒx]| over the matrix-unit basis `x = |r⟩⟨c|`.
    pub fn trace_annihilation_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for col in 0..n * n {
            let mut tr = ZERO;
            for i in 0..n {
                tr += self.matrix[(vec_index(n, i, i), col)];
            }
            worst = worst.max(tr.norm());
        }
        worst
    }

    /// True when populations and coherences never mix, i.e. the map is block
    /// diagonal with respect to diagonal and off-diagonal matrix entries.
    pub fn preserves_populations(&self) -> bool {
        let n = self.dim;
        let is_diag = |k: usize| k % (n + 1) == 0;
        for c in 0..n * n {
            for r in 0..n * n {
                if is_diag(r) != is_diag(c) && self.matrix[(r, c)] != ZERO {
                    return false;
                }
            }
        }
        true
    }

    /// Classical generator `Q[to, from]` induced on diagonal matrices.
    pub fn classical_generator(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |to, from| self.matrix[(vec_index(n, to, to), vec_index(n, from, from))].re)
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions differ");
        Superoperator { dim: self.dim, matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions differ");
        Superoperator { dim: self.dim, matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions differ");
        Superoperator { dim: self.dim, matrix: &self.matrix * &rhs.matrix }
    }
}

/// Lindblad dissipator `𝒟[d]ρ = dρd† − (d†dρ + ρd†d)/2`.
pub fn dissipator(d: &CMatrix) -> Result<Superoperator> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.ncols() });
    }
    let id = CMatrix::identity(n, n);
    let dd = d.adjoint() * d;
    let half = Complex64::new(0.5, 0.0);
    let m = d.conjugate().kronecker(d) - id.kronecker(&dd) * half - dd.transpose().kronecker(&id) * half;
    Ok(Superoperator { dim: n, matrix: m })
}

/// Jump terms, measured operator `A` and measurement strength `β²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSystem {
    dim: usize,
    jumps: Vec<JumpTerm>,
    measurement: CMatrix,
    beta_sq: f64,
}

impl LindbladSystem {
    pub fn new(dim: usize, jumps: Vec<JumpTerm>, measurement: CMatrix, beta_sq: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        for j in &jumps {
            if j.operator.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: j.operator.nrows() });
            }
        }
        if measurement.nrows() != dim || measurement.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: measurement.nrows() });
        }
        if !(beta_sq >= 0.0) || !beta_sq.is_finite() {
            return Err(Error::InvalidParameter(format!("beta_sq must be finite and nonnegative, got {beta_sq}")));
        }
        Ok(LindbladSystem { dim, jumps, measurement, beta_sq })
    }

    /// Two-level telegraph process observed with levels 0 (dark) and 1 (bright).
    ///
    /// State 0 is dark, state 1 bright; `gamma_out` switches dark→bright and
    /// `gamma_in` bright→dark.
    pub fn telegraph(gamma_in: f64, gamma_out: f64, beta_sq: f64) -> Result<Self> {
        let jumps = vec![JumpTerm::new(ket_bra(2, 0, 1), gamma_in)?, JumpTerm::new(ket_bra(2, 1, 0), gamma_out)?];
        LindbladSystem::new(2, jumps, diagonal_matrix(&[0.0, 1.0]), beta_sq)
    }

    /// Markov chain with `rates[to][from]` (diagonal ignored) and diagonal measurement levels.
    pub fn markov_chain(rates: &[Vec<f64>], levels: &[f64], beta_sq: f64) -> Result<Self> {
        let n = levels.len();
        let mut jumps = Vec::new();
        for (to, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for (from, &r) in row.iter().enumerate() {
                if to != from && r != 0.0 {
                    jumps.push(JumpTerm::new(ket_bra(n, to, from), r)?);
                }
            }
        }
        LindbladSystem::new(n, jumps, diagonal_matrix(levels), beta_sq)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jumps(&self) -> &[JumpTerm] {
        &self.jumps
    }

    pub fn measurement(&self) -> &CMatrix {
        &self.measurement
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta_sq
    }

    /// `ℒ = Σ γ 𝒟[d]`.
    pub fn liouvillian(&self) -> Superoperator {
        let mut l = Superoperator::zeros(self.dim);
        for j in &self.jumps {
            if j.rate == 0.0 {
                continue;
            }
            // dimensions were checked on construction
            let d = dissipator(&j.operator).expect("square jump operator");
            l = &l + &d.scaled(j.rate);
        }
        l
    }

    /// `ℒ' = ℒ + β²𝒟[A]`, the generator that enters the polyspectra.
    pub fn measured_liouvillian(&self) -> Superoperator {
        let da = dissipator(&self.measurement).expect("square measurement operator");
        &self.liouvillian() + &da.scaled(self.beta_sq)
    }

    /// Measurement operator is diagonal and every jump moves one basis state to another.
    pub fn is_markov(&self) -> bool {
        let n = self.dim;
        let diag_a = (0..n).all(|r| (0..n).all(|c| r == c || self.measurement[(r, c)] == ZERO));
        let single = self.jumps.iter().all(|j| j.operator.iter().filter(|z| **z != ZERO).count() == 1);
        diag_a && single
    }
}

/// Annihilation operator of the electron, `a = |3⟩⟨1| + |4⟩⟨2|`.
pub fn electron_annihilator() -> CMatrix {
    ket_bra(4, 2, 0) + ket_bra(4, 3, 1)
}

/// Annihilation operator of the detector photon, `b = |3⟩⟨4| + |1⟩⟨2|`.
pub fn photon_annihilator() -> CMatrix {
    ket_bra(4, 2, 3) + ket_bra(4, 0, 1)
}

/// Four-level emitter-plus-detector model observed through `A = |2⟩⟨2| + |4⟩⟨4|`.
pub fn build_emitter_liouvillian(params: &EmitterParams) -> Result<LindbladSystem> {
    params.validate()?;
    let a = electron_annihilator();
    let b = photon_annihilator();
    let id = CMatrix::identity(4, 4);
    let emit = (&id - a.adjoint() * &a) * b.adjoint();
    let jumps = vec![
        JumpTerm::new(a.adjoint(), params.gamma_in)?,
        JumpTerm::new(a, params.gamma_out)?,
        JumpTerm::new(emit, params.gamma_ph)?,
        JumpTerm::new(b, params.gamma_det)?,
    ];
    LindbladSystem::new(4, jumps, diagonal_matrix(&[0.0, 1.0, 0.0, 1.0]), params.beta_sq)
}

fn count_zero_modes(eigs: &[Complex64]) -> usize {
    let scale = eigs.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if scale == 0.0 {
        return eigs.len();
    }
    eigs.iter().filter(|z| z.norm() < ZERO_EIGENVALUE_REL_TOL * scale).count()
}

/// Stationary state, `ℒρ₀ = 0` with unit trace.
///
/// Liouvillians that never mix populations and coherences are solved on the
/// classical generator; the result then has exactly zero coherences.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let n = l.dim();
    if l.preserves_populations() {
        let q = l.classical_generator();
        let eigs: Vec<Complex64> = q.clone().schur().complex_eigenvalues().iter().copied().collect();
        let zeros = count_zero_modes(&eigs);
        if zeros != 1 {
            return Err(Error::DegenerateSteadyState { zero_modes: zeros });
        }
        // columns of Q sum to zero, so any row is redundant; replace it with normalization
        let mut sys = q;
        let mut rhs = DVector::<f64>::zeros(n);
        for c in 0..n {
            sys[(0, c)] = 1.0;
        }
        rhs[0] = 1.0;
        let p = sys.lu().solve(&rhs).ok_or(Error::DegenerateSteadyState { zero_modes: 2 })?;
        let p = clip_probabilities(p.as_slice())?;
        return DensityMatrix::from_probabilities(&p);
    }

    let m = l.matrix();
    let eigs: Vec<Complex64> = m.clone().schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default();
    let zeros = count_zero_modes(&eigs);
    if zeros != 1 {
        return Err(Error::DegenerateSteadyState { zero_modes: zeros });
    }
    let mut sys = m.clone();
    let mut rhs = CVector::zeros(n * n);
    for c in 0..n * n {
        sys[(0, c)] = ZERO;
    }
    for i in 0..n {
        sys[(0, vec_index(n, i, i))] = ONE;
    }
    rhs[0] = ONE;
    let v = sys.lu().solve(&rhs).ok_or(Error::DegenerateSteadyState { zero_modes: 2 })?;
    let rho = unvectorize(&v, n);
    let mut rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let diag: Vec<f64> = (0..n).map(|i| rho[(i, i)].re).collect();
    let clipped = clip_probabilities(&diag)?;
    for (i, p) in clipped.into_iter().enumerate() {
        rho[(i, i)] = Complex64::new(p, 0.0);
    }
    DensityMatrix::new(rho)
}

fn clip_probabilities(p: &[f64]) -> Result<Vec<f64>> {
    const CLIP_TOL: f64 = 1e-10;
    let mut out: Vec<f64> = Vec::with_capacity(p.len());
    for &x in p {
        if x < -CLIP_TOL {
            return Err(Error::InvalidDensityMatrix(format!("steady state has negative population {x:.3e}")));
        }
        out.push(x.max(0.0));
    }
    let s: f64 = out.iter().sum();
    Ok(out.into_iter().map(|x| x / s).collect())
}

/// `𝒜x = (Ax + xA†)/2` and its centered version `𝒜'x = 𝒜x − Tr(𝒜ρ₀)x`.
#[derive(Debug, Clone)]
pub struct MeasurementSuperops {
    pub measure: Superoperator,
    pub centered: Superoperator,
    /// `Tr(𝒜ρ₀)`.
    pub expectation: f64,
}

pub fn measurement_superops(sys: &LindbladSystem, rho0: &DensityMatrix) -> Result<MeasurementSuperops> {
    let n = sys.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho0.dim() });
    }
    let a = sys.measurement();
    let id = CMatrix::identity(n, n);
    let half = Complex64::new(0.5, 0.0);
    let m = (id.kronecker(a) + a.conjugate().kronecker(&id)) * half;
    let measure = Superoperator { dim: n, matrix: m };
    let expectation = measure.apply(rho0.entries())?.trace().re;
    let centered = &measure - &Superoperator::identity(n).scaled(expectation);
    Ok(MeasurementSuperops { measure, centered, expectation })
}
