//! Windowed Fourier coefficients of click frames and sampled frames.
//!
//! Coefficient `j` belongs to `ω = j·stride·2π/T`; only `j ≥ 0` is stored, the
//! negative side follows from `a_{−j} = conj(a_j)` for real inputs.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::window::Window;
use crate::error::{Error, Result};

/// Exact exponential sums `a_j = Σ_c g(t_c/T) b_c e^{i ω_j t_c}` for one
/// frame and one weight set; times and `frame` share a unit.
pub fn click_fourier(times: &[f64], weights: &[f64], window: &Window, frame: f64, stride: usize, count: usize) -> Vec<Complex64> {
    assert_eq!(times.len(), weights.len(), "one weight per click");
    let mut out = vec![Complex64::new(0.0, 0.0); count];
    for (&t, &b) in times.iter().zip(weights) {
        let u = t / frame;
        let step = Complex64::from_polar(1.0, TAU * stride as f64 * u);
        let mut p = Complex64::new(window.value(u) * b, 0.0);
        for a in out.iter_mut() {
            *a += p;
            p *= step;
        }
    }
    out
}

const BLOCK: usize = 2048;

/// Batched coefficients of one frame for many weight realizations.
///
/// For a block of clicks the matrix `P[c, 2j + {0,1}] = g_c (cos, sin)(j θ_c)`
/// is multiplied by the click-major weight block, so each realization costs a
/// single matrix product.
#[derive(Debug, Clone)]
pub struct FramePlan {
    pub window: Window,
    pub frame: f64,
    pub stride: usize,
    pub count: usize,
}

impl FramePlan {
    /// `weights[c * realizations + r]` is the weight of click `c` in realization
    /// `r`; `out` receives `realizations × count` coefficients, realization-major.
    pub fn coefficients(&self, times: &[f64], weights: &[f64], realizations: usize, out: &mut [Complex64]) {
        let n = times.len();
        let width = 2 * self.count;
        assert_eq!(weights.len(), n * realizations);
        assert_eq!(out.len(), realizations * self.count);
        let mut acc = vec![0.0_f64; realizations * width];
        let mut p = vec![0.0_f64; BLOCK.min(n.max(1)) * width];
        let mut start = 0;
        while start < n {
            let end = (start + BLOCK).min(n);
            let rows = end - start;
            for (c, &t) in times[start..end].iter().enumerate() {
                let u = t / self.frame;
                let step = Complex64::from_polar(1.0, TAU * self.stride as f64 * u);
                let mut z = Complex64::new(self.window.value(u), 0.0);
                let row = &mut p[c * width..(c + 1) * width];
                for j in 0..self.count {
                    row[2 * j] = z.re;
                    row[2 * j + 1] = z.im;
                    z *= step;
                }
            }
            let w = &weights[start * realizations..end * realizations];
            // acc (R × width) += Wᵀ (R × rows) · P (rows × width)
            unsafe {
                matrixmultiply::dgemm(
                    realizations,
                    rows,
                    width,
                    1.0,
                    w.as_ptr(),
                    1,
                    realizations as isize,
                    p.as_ptr(),
                    width as isize,
                    1,
                    1.0,
                    acc.as_mut_ptr(),
                    width as isize,
                    1,
                );
            }
            start = end;
        }
        for r in 0..realizations {
            for j in 0..self.count {
                out[r * self.count + j] = Complex64::new(acc[r * width + 2 * j], acc[r * width + 2 * j + 1]);
            }
        }
    }
}

/// Discrete coefficients `a_k = (T/N) Σ_j g_j z_j e^{2πijk/N}` of one sampled frame.
pub struct SampledPlan {
    fft: Arc<dyn Fft<f64>>,
    taper: Vec<f64>,
    frame: f64,
    pub stride: usize,
    pub count: usize,
}

impl SampledPlan {
    pub fn new(samples: usize, window: &Window, frame: f64, stride: usize, count: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidConfig("frame holds no samples".into()));
        }
        let highest = stride * count.saturating_sub(1);
        if 2 * highest >= samples {
            return Err(Error::IndexOverflow { index: highest as i64, max: samples / 2 });
        }
        let fft = FftPlanner::new().plan_fft_inverse(samples);
        Ok(SampledPlan { fft, taper: window.samples(samples), frame, stride, count })
    }

    pub fn samples(&self) -> usize {
        self.taper.len()
    }

    pub fn coefficients(&self, z: &[f64]) -> Vec<Complex64> {
        let n = self.taper.len();
        assert_eq!(z.len(), n);
        let mut buf: Vec<Complex64> = z.iter().zip(&self.taper).map(|(x, g)| Complex64::new(x * g, 0.0)).collect();
        // the inverse transform carries the e^{+2πijk/N} sign
        self.fft.process(&mut buf);
        let scale = self.frame / n as f64;
        (0..self.count).map(|j| buf[j * self.stride] * scale).collect()
    }
}

/// Convenience wrapper over [`SampledPlan`] for a single frame.
pub fn sampled_fourier(z: &[f64], window: &Window, frame: f64, stride: usize, count: usize) -> Result<Vec<Complex64>> {
    Ok(SampledPlan::new(z.len(), window, frame, stride, count)?.coefficients(z))
}
