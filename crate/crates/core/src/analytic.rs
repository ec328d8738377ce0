//! Closed-form polyspectra S¹–S⁴ of a measured Lindblad system.
//!
//! All spectra are expanded in the eigenbasis of ℒ'. With
//! `g_i(ω) = −1/(λ_i + iω)`, `u_i = Tr[𝒜' r_i]`, `v_i = l_i·(𝒜'ρ₀)` and
//! `M_ij = l_i·(𝒜' r_j)`, every trace in the spectra becomes a short sum over
//! modes. Only modes reachable from `𝒜'ρ₀` contribute; for Markov systems the
//! coherence modes drop out.
//!
//! The frequency integrals of the fourth-order spectrum reduce to
//! `(1/2π)∫ g_i(Ω − ω) g_j(ω) dω = −1/(λ_i + λ_j + iΩ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::grid::{orbits_2d, s3_orbit, s4_cut_orbit, FrequencyGrid, Orbit, Square};
use crate::model::{
    build_emitter_liouvillian, measurement_superops, steady_state, DensityMatrix, LindbladSystem, Superoperator,
};
use crate::params::EmitterParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

const PERMS3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn perms4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Precomputed eigen-expansion of the spectra of one system.
#[derive(Debug, Clone)]
pub struct SpectraModel {
    beta_sq: f64,
    expectation: f64,
    rho0: DensityMatrix,
    centered: Superoperator,
    decomposition: SpectralDecomposition,
    lambda: Vec<Complex64>,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    m: DMatrix<Complex64>,
}

impl SpectraModel {
    pub fn new(sys: &LindbladSystem) -> Result<Self> {
        let lp = sys.measured_liouvillian();
        if sys.is_markov() {
            // for diagonal A the measurement back-action vanishes on populations
            let l = sys.liouvillian();
            let n = sys.dim();
            let scale = l.matrix().iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(1.0);
            for i in 0..n {
                let k = i * (n + 1);
                let diff = (l.matrix().column(k) - lp.matrix().column(k)).camax();
                if diff > 1e-12 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "measured Liouvillian differs from the bare one on populations by {diff:.3e}"
                    )));
                }
            }
        }
        let rho0 = steady_state(&lp)?;
        let decomposition = decompose(&lp)?;
        let ops = measurement_superops(sys, &rho0)?;
        let centered = ops.centered;
        let n = sys.dim();
        let d2 = n * n;
        let trace_row: Vec<usize> = (0..n).map(|i| i * (n + 1)).collect();

        let y = centered.apply_vec(&rho0.vectorized());
        let ar: Vec<_> = (0..d2).map(|j| centered.apply_vec(decomposition.right(j))).collect();
        let z = decomposition.zero_index();

        let v_all: Vec<Complex64> = (0..d2).map(|i| decomposition.left(i).dot(&y)).collect();
        let u_all: Vec<Complex64> = (0..d2).map(|i| trace_row.iter().map(|&k| ar[i][k]).sum()).collect();
        let m_all = DMatrix::from_fn(d2, d2, |i, j| decomposition.left(i).dot(&ar[j]));

        // modes reachable from 𝒜'ρ₀ through repeated 𝒜' applications
        let tol = 1e-14;
        let vscale = v_all.iter().fold(0.0_f64, |a, x| a.max(x.norm())).max(f64::MIN_POSITIVE);
        let mscale = m_all.iter().fold(0.0_f64, |a, x| a.max(x.norm())).max(f64::MIN_POSITIVE);
        let mut active = vec![false; d2];
        let mut stack: Vec<usize> = Vec::new();
        for i in 0..d2 {
            if i != z && v_all[i].norm() > tol * vscale {
                active[i] = true;
                stack.push(i);
            }
        }
        while let Some(j) = stack.pop() {
            for i in 0..d2 {
                if i != z && !active[i] && m_all[(i, j)].norm() > tol * mscale {
                    active[i] = true;
                    stack.push(i);
                }
            }
        }
        let idx: Vec<usize> = (0..d2).filter(|&i| active[i]).collect();
        let lambda = idx.iter().map(|&i| decomposition.eigenvalues()[i]).collect();
        let u = idx.iter().map(|&i| u_all[i]).collect();
        let v = idx.iter().map(|&i| v_all[i]).collect();
        let m = DMatrix::from_fn(idx.len(), idx.len(), |a, b| m_all[(idx[a], idx[b])]);

        Ok(SpectraModel { beta_sq: sys.beta_sq(), expectation: ops.expectation, rho0, centered, decomposition, lambda, u, v, m })
    }

    pub fn emitter(params: &EmitterParams) -> Result<Self> {
        SpectraModel::new(&build_emitter_liouvillian(params)?)
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta_sq
    }

    pub fn steady_state(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn centered_measure(&self) -> &Superoperator {
        &self.centered
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    /// Number of eigenmodes entering the spectra.
    pub fn active_modes(&self) -> usize {
        self.lambda.len()
    }

    /// `𝒢'(ω) = Σ_{λ_i ≠ 0} −1/(λ_i + iω) r_i l_i` over all modes.
    pub fn resolvent(&self, omega: f64) -> Superoperator {
        resolvent(&self.decomposition, omega)
    }

    #[inline]
    fn g(&self, i: usize, omega: f64) -> Complex64 {
        -(self.lambda[i] + Complex64::new(0.0, omega)).inv()
    }

    /// `β² Tr[𝒜ρ₀]`.
    pub fn s1(&self) -> f64 {
        self.beta_sq * self.expectation
    }

    /// Power spectrum without the additive `β²/4` measurement-noise floor.
    pub fn s2_complex_at(&self, omega: f64) -> Complex64 {
        let mut s = ZERO;
        for i in 0..self.lambda.len() {
            s += self.u[i] * self.v[i] * (self.g(i, omega) + self.g(i, -omega));
        }
        s * self.beta_sq.powi(2)
    }

    pub fn s2_at(&self, omega: f64) -> f64 {
        self.s2_complex_at(omega).re
    }

    /// The white `β²/4` floor of the continuous detector output.
    pub fn shot_floor(&self) -> f64 {
        self.beta_sq / 4.0
    }

    fn chain2(&self, wa: f64, wb: f64) -> Complex64 {
        // Σ u_i g_i(wa) M_ij g_j(wb) v_j
        let k = self.lambda.len();
        let mut s = ZERO;
        for j in 0..k {
            let right = self.g(j, wb) * self.v[j];
            if right == ZERO {
                continue;
            }
            let mut inner = ZERO;
            for i in 0..k {
                inner += self.u[i] * self.g(i, wa) * self.m[(i, j)];
            }
            s += inner * right;
        }
        s
    }

    /// Bispectrum `S³(ω1, ω2)` with `ω3 = −ω1 − ω2`.
    pub fn s3_at(&self, w1: f64, w2: f64) -> Complex64 {
        let w = [w1, w2, -w1 - w2];
        let mut s = ZERO;
        for p in PERMS3 {
            let (l, m) = (w[p[1]], w[p[2]]);
            s += self.chain2(m, m + l);
        }
        s * self.beta_sq.powi(3)
    }

    /// Trispectrum `S⁴(ω1, ω2, ω3)` with `ω4 = −ω1 − ω2 − ω3`.
    pub fn s4_at(&self, w1: f64, w2: f64, w3: f64) -> Complex64 {
        let (t, i1, i2) = self.s4_parts(w1, w2, w3);
        t - i1 - i2
    }

    /// Cut `S⁴(ω1, ω2, −ω1)`; the imaginary residue is dropped.
    pub fn s4_cut_at(&self, w1: f64, w2: f64) -> f64 {
        self.s4_at(w1, w2, -w1).re
    }

    /// Permutation sums of the chain term and of the two integral corrections,
    /// each with the `β⁸` prefactor and without the minus signs.
    pub fn s4_parts(&self, w1: f64, w2: f64, w3: f64) -> (Complex64, Complex64, Complex64) {
        let w = [w1, w2, w3, -w1 - w2 - w3];
        let k = self.lambda.len();
        let c: Vec<Complex64> = (0..k).map(|i| self.u[i] * self.v[i]).collect();
        let (mut term, mut int1, mut int2) = (ZERO, ZERO, ZERO);
        for p in perms4() {
            let (l, m, n) = (w[p[1]], w[p[2]], w[p[3]]);
            let om1 = m + n;
            let om2 = l + m + n;
            let ga: Vec<Complex64> = (0..k).map(|i| self.g(i, n)).collect();
            let gb: Vec<Complex64> = (0..k).map(|i| self.g(i, om1)).collect();
            let gc: Vec<Complex64> = (0..k).map(|i| self.g(i, om2)).collect();
            // Σ u_i ga_i M_ij gb_j M_jq gc_q v_q
            let mut tail = vec![ZERO; k];
            for j in 0..k {
                let mut s = ZERO;
                for q in 0..k {
                    s += self.m[(j, q)] * gc[q] * self.v[q];
                }
                tail[j] = gb[j] * s;
            }
            for i in 0..k {
                let mut s = ZERO;
                for j in 0..k {
                    s += self.m[(i, j)] * tail[j];
                }
                term += self.u[i] * ga[i] * s;
            }
            for i in 0..k {
                for j in 0..k {
                    let integral = -(self.lambda[i] + self.lambda[j] + Complex64::new(0.0, om1)).inv();
                    int1 += c[i] * ga[i] * integral * c[j] * gc[j];
                    int2 += c[i] * ga[i] * gc[i] * c[j] * integral;
                }
            }
        }
        let b8 = self.beta_sq.powi(4);
        (term * b8, int1 * b8, int2 * b8)
    }
}

/// Resolvent of the zero-mode-free propagator from a decomposition.
pub fn resolvent(decomp: &SpectralDecomposition, omega: f64) -> Superoperator {
    let z = decomp.zero_index();
    let m = decomp.spectral_sum(|i, lam| if i == z { ZERO } else { -(lam + Complex64::new(0.0, omega)).inv() });
    Superoperator::from_matrix(decomp.dim(), m).expect("decomposition dimensions are consistent")
}

/// Analytic spectra tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpectra {
    pub grid: FrequencyGrid,
    pub s1: f64,
    pub s2: Vec<f64>,
    pub s3: Square<Complex64>,
    /// Cut `S⁴(ω_i, ω_j, −ω_i)`.
    pub s4: Square<f64>,
    pub params: Option<EmitterParams>,
    /// Largest `|Im S²| / max|Re S²|` seen while tabulating.
    pub s2_imag_residue: f64,
    /// Largest `|Im S⁴| / max|Re S⁴|` on the cut.
    pub s4_imag_residue: f64,
}

impl ModelSpectra {
    /// Evaluates every grid point; the shot floor is added to S² when `shot_floor` is set.
    pub fn compute(model: &SpectraModel, grid: &FrequencyGrid, shot_floor: bool) -> Self {
        let w = grid.values();
        let n = w.len();
        let s2c: Vec<Complex64> = w.iter().map(|&x| model.s2_complex_at(x)).collect();
        let floor = if shot_floor { model.shot_floor() } else { 0.0 };
        let s2: Vec<f64> = s2c.iter().map(|z| z.re + floor).collect();
        let s2max = s2c.iter().fold(0.0_f64, |a, z| a.max(z.re.abs())).max(f64::MIN_POSITIVE);
        let s2_imag_residue = s2c.iter().fold(0.0_f64, |a, z| a.max(z.im.abs())) / s2max;

        let rows3: Vec<Vec<Complex64>> =
            (0..n).into_par_iter().map(|i| (0..n).map(|j| model.s3_at(w[i], w[j])).collect()).collect();
        let rows4: Vec<Vec<Complex64>> =
            (0..n).into_par_iter().map(|i| (0..n).map(|j| model.s4_at(w[i], w[j], -w[i])).collect()).collect();
        let s3 = Square::from_rows(rows3).expect("square");
        let s4c = Square::from_rows(rows4).expect("square");
        let s4max = s4c.as_slice().iter().fold(0.0_f64, |a, z| a.max(z.re.abs())).max(f64::MIN_POSITIVE);
        let s4_imag_residue = s4c.as_slice().iter().fold(0.0_f64, |a, z| a.max(z.im.abs())) / s4max;
        ModelSpectra {
            grid: grid.clone(),
            s1: model.s1(),
            s2,
            s3,
            s4: s4c.map(|z| z.re),
            params: None,
            s2_imag_residue,
            s4_imag_residue,
        }
    }

    pub fn for_emitter(params: &EmitterParams, grid: &FrequencyGrid, shot_floor: bool) -> Result<Self> {
        let model = SpectraModel::emitter(params)?;
        let mut out = ModelSpectra::compute(&model, grid, shot_floor);
        out.params = Some(*params);
        Ok(out)
    }
}

/// Model values at the orbit representatives of a symmetric index grid
/// `ω_j = j·step`, `j = −half..=half`.
#[derive(Debug, Clone)]
pub struct OrbitValues {
    pub s1: f64,
    pub s2: Vec<f64>,
    pub s3: Vec<Complex64>,
    pub s4: Vec<f64>,
}

/// Orbit layout of a symmetric index grid, shared by model evaluation and fitting.
#[derive(Debug, Clone)]
pub struct OrbitLayout {
    pub step: f64,
    pub half: i64,
    pub s3: Vec<Orbit>,
    pub s4: Vec<Orbit>,
}

impl OrbitLayout {
    pub fn new(step: f64, half: usize) -> Self {
        let h = half as i64;
        OrbitLayout { step, half: h, s3: orbits_2d(h, |a, b| s3_orbit(a, b, h)), s4: orbits_2d(h, s4_cut_orbit) }
    }

    pub fn evaluate(&self, model: &SpectraModel, orders: &[u8]) -> OrbitValues {
        let st = self.step;
        let s2 = if orders.contains(&2) { (0..=self.half).map(|j| model.s2_at(j as f64 * st)).collect() } else { Vec::new() };
        let s3 = if orders.contains(&3) {
            self.s3
                .iter()
                .map(|o| model.s3_at(o.representative[0] as f64 * st, o.representative[1] as f64 * st))
                .collect()
        } else {
            Vec::new()
        };
        let s4 = if orders.contains(&4) {
            self.s4
                .iter()
                .map(|o| model.s4_cut_at(o.representative[0] as f64 * st, o.representative[1] as f64 * st))
                .collect()
        } else {
            Vec::new()
        };
        OrbitValues { s1: model.s1(), s2, s3, s4 }
    }
}

/// `β² Tr[𝒜ρ₀]` of a system.
pub fn s1(sys: &LindbladSystem) -> Result<f64> {
    Ok(SpectraModel::new(sys)?.s1())
}

/// Power spectrum including the `β²/4` floor.
pub fn s2(sys: &LindbladSystem, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    let m = SpectraModel::new(sys)?;
    Ok(grid.values().iter().map(|&w| m.s2_at(w) + m.shot_floor()).collect())
}

pub fn s3(sys: &LindbladSystem, grid: &FrequencyGrid) -> Result<Square<Complex64>> {
    let m = SpectraModel::new(sys)?;
    let w = grid.values();
    Ok(Square::from_fn(w.len(), |i, j| m.s3_at(w[i], w[j])))
}

pub fn s4(sys: &LindbladSystem, grid: &FrequencyGrid) -> Result<Square<f64>> {
    let m = SpectraModel::new(sys)?;
    let w = grid.values();
    Ok(Square::from_fn(w.len(), |i, j| m.s4_cut_at(w[i], w[j])))
}
