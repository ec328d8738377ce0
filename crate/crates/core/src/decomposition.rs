//! Biorthogonal eigensystem of a Liouvillian.
//!
//! The superoperator matrix is split into the connected components of its
//! nonzero pattern (for Markov systems: one population block plus one 1×1 block
//! per coherence), each block is brought to complex Schur form, and the
//! eigenvectors follow from back-substitution on the triangular factor. Left
//! vectors are the rows of the inverse eigenvector matrix, so
//! `left_i · right_j = δ_ij` holds without conjugation.

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{vec_index, CMatrix, CVector, Superoperator, ZERO_EIGENVALUE_REL_TOL};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative reconstruction residual above which the matrix counts as defective.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<Complex64>,
    right: Vec<CVector>,
    left: Vec<CVector>,
    zero_index: usize,
    residual: f64,
}

impl SpectralDecomposition {
    /// Hilbert-space dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn right(&self, i: usize) -> &CVector {
        &self.right[i]
    }

    /// Left vector `i`, to be contracted without conjugation.
    pub fn left(&self, i: usize) -> &CVector {
        &self.left[i]
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    /// Relative residual of `Σ λ_i right_i left_i` against the input matrix.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `Σ_i f(λ_i) right_i left_i`.
    pub fn spectral_sum(&self, f: impl Fn(usize, Complex64) -> Complex64) -> CMatrix {
        let d2 = self.dim * self.dim;
        let mut out = CMatrix::zeros(d2, d2);
        for i in 0..self.len() {
            let c = f(i, self.eigenvalues[i]);
            if c == ZERO {
                continue;
            }
            out += (&self.right[i] * self.left[i].transpose()) * c;
        }
        out
    }
}

fn connected_blocks(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for r in 0..n {
        for c in 0..n {
            if r != c && m[(r, c)] != ZERO {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(b) => blocks[b].push(i),
            None => {
                root_of[r] = Some(blocks.len());
                blocks.push(vec![i]);
            }
        }
    }
    blocks
}

/// Eigenvectors of an upper-triangular matrix by back-substitution.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let scale = t.iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lk = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = ZERO;
            for m in j + 1..=k {
                s += t[(j, m)] * y[(m, k)];
            }
            let mut den = t[(j, j)] - lk;
            if den.norm() < tiny {
                den = Complex64::new(tiny, 0.0);
            }
            y[(j, k)] = -s / den;
        }
        let norm = y.column(k).norm();
        y.column_mut(k).unscale_mut(norm);
    }
    y
}

fn block_eigensystem(m: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let n = m.nrows();
    if n == 1 {
        return Ok((vec![m[(0, 0)]], CMatrix::identity(1, 1)));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::NearDefective { residual: f64::INFINITY })?;
    let (q, t) = schur.unpack();
    let eig: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let v = &q * triangular_eigenvectors(&t);
    Ok((eig, v))
}

/// Eigen-decomposition of `l` with the zero mode normalized to the steady state.
///
/// The zero-mode right vector has unit trace and its left vector equals the
/// vectorized identity.
pub fn decompose(l: &Superoperator) -> Result<SpectralDecomposition> {
    let n = l.dim();
    let d2 = n * n;
    let mat = l.matrix();
    let scale = mat.iter().fold(0.0_f64, |a, z| a.max(z.norm()));

    let mut eigenvalues = Vec::with_capacity(d2);
    let mut right = Vec::with_capacity(d2);
    let mut left = Vec::with_capacity(d2);
    for block in connected_blocks(mat) {
        let k = block.len();
        let sub = CMatrix::from_fn(k, k, |r, c| mat[(block[r], block[c])]);
        let (eig, v) = block_eigensystem(&sub)?;
        let vinv = v.clone().lu().try_inverse().ok_or(Error::NearDefective { residual: f64::INFINITY })?;
        for (i, &lam) in eig.iter().enumerate() {
            let mut r = CVector::zeros(d2);
            let mut lv = CVector::zeros(d2);
            for (local, &global) in block.iter().enumerate() {
                r[global] = v[(local, i)];
                lv[global] = vinv[(i, local)];
            }
            eigenvalues.push(lam);
            right.push(r);
            left.push(lv);
        }
    }

    let max_eig = eigenvalues.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let zero_modes: Vec<usize> = (0..eigenvalues.len())
        .filter(|&i| eigenvalues[i].norm() < ZERO_EIGENVALUE_REL_TOL * max_eig.max(f64::MIN_POSITIVE))
        .collect();
    if zero_modes.len() != 1 {
        return Err(Error::DegenerateSteadyState { zero_modes: zero_modes.len() });
    }
    let zero_index = zero_modes[0];
    for (i, lam) in eigenvalues.iter().enumerate() {
        if i != zero_index && lam.re >= 0.0 {
            return Err(Error::NonDecayingMode { re: lam.re, im: lam.im });
        }
    }

    // normalize the zero mode: unit-trace right vector, trace functional on the left
    let tr: Complex64 = (0..n).map(|i| right[zero_index][vec_index(n, i, i)]).sum();
    if tr.norm() == 0.0 {
        return Err(Error::InvalidDensityMatrix("zero mode is traceless".into()));
    }
    right[zero_index] /= tr;
    left[zero_index] *= tr;
    eigenvalues[zero_index] = ZERO;

    let mut decomp = SpectralDecomposition { dim: n, eigenvalues, right, left, zero_index, residual: 0.0 };
    let recon = decomp.spectral_sum(|_, lam| lam);
    let err = (&recon - mat).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let residual = if scale > 0.0 { err / scale } else { err };
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::NearDefective { residual });
    }
    decomp.residual = residual;
    Ok(decomp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_emitter_liouvillian, steady_state, LindbladSystem};
    use crate::params::EmitterParams;
    use approx::assert_relative_eq;

    #[test]
    fn telegraph_nonzero_eigenvalue() {
        let l = LindbladSystem::telegraph(0.27, 0.8, 1.0).unwrap().liouvillian();
        let d = decompose(&l).unwrap();
        let pop: Vec<Complex64> = d
            .eigenvalues()
            .iter()
            .enumerate()
            .filter(|(i, _)| d.right(*i)[0] != ZERO || d.right(*i)[3] != ZERO)
            .map(|(_, z)| *z)
            .collect();
        assert_eq!(pop.len(), 2);
        let nonzero: Vec<&Complex64> = pop.iter().filter(|z| z.norm() > 0.0).collect();
        assert_relative_eq!(nonzero[0].re, -1.07, max_relative = 1e-13);
        assert!(nonzero[0].im.abs() < 1e-14);
    }

    #[test]
    fn zero_mode_is_steady_state_and_trace() {
        let sys = build_emitter_liouvillian(&EmitterParams::REFERENCE).unwrap();
        let l = sys.liouvillian();
        let d = decompose(&l).unwrap();
        let rho0 = steady_state(&l).unwrap();
        let r0 = d.right(d.zero_index());
        let diff = (r0 - rho0.vectorized()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        assert!(diff < 1e-10, "{diff}");
        let l0 = d.left(d.zero_index());
        for k in 0..16 {
            let expected = if k % 5 == 0 { 1.0 } else { 0.0 };
            assert!((l0[k] - Complex64::new(expected, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn biorthogonality_and_decay() {
        let p = EmitterParams { gamma_det: 1e5, ..EmitterParams::REFERENCE };
        let l = build_emitter_liouvillian(&p).unwrap().liouvillian();
        let d = decompose(&l).unwrap();
        for i in 0..d.len() {
            for j in 0..d.len() {
                let dot = d.left(i).dot(d.right(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - Complex64::new(expected, 0.0)).norm() < 1e-9, "({i},{j}) {dot}");
            }
            if i != d.zero_index() {
                assert!(d.eigenvalues()[i].re < 0.0);
            }
        }
        assert!(d.residual() < 1e-12);
    }

    #[test]
    fn disconnected_graph_is_degenerate() {
        let p = EmitterParams { gamma_in: 0.0, gamma_out: 0.0, ..EmitterParams::REFERENCE };
        let l = build_emitter_liouvillian(&p).unwrap().liouvillian();
        assert!(matches!(decompose(&l), Err(Error::DegenerateSteadyState { zero_modes: 2 })));
    }

    #[test]
    fn jordan_block_is_near_defective() {
        // zero mode on index 0, Jordan block on 1..=2, decaying mode on 3
        let mut big = CMatrix::zeros(4, 4);
        big[(1, 1)] = Complex64::new(-1.0, 0.0);
        big[(1, 2)] = Complex64::new(1.0, 0.0);
        big[(2, 2)] = Complex64::new(-1.0, 0.0);
        big[(3, 3)] = Complex64::new(-2.0, 0.0);
        let sup = Superoperator::from_matrix(2, big).unwrap();
        let err = decompose(&sup).unwrap_err();
        assert!(matches!(err, Error::NearDefective { .. }), "{err}");
    }
}
