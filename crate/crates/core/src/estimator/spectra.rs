//! Polyspectra with error bars from click records and sampled traces.
//!
//! Frames of length T yield windowed Fourier coefficients; cumulants across
//! frames, normalized by `T·w_n`, estimate `S⁽ⁿ⁾`. Click coefficients carry
//! i.i.d. Exp(1) marks, redrawn for every resampling realization. Frames are
//! split into contiguous batches; the reported value is the mean of the
//! batch estimates and the error is their scatter over `√B`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clicks::{segment, ClickRecord};
use super::cumulants::{k2_centered, k3_centered, k4_cut_centered};
use super::fourier::{FramePlan, SampledPlan};
use super::window::Window;
use crate::analytic::ModelSpectra;
use crate::error::{Error, Result};
use crate::grid::{orbits_2d, s3_orbit, s4_cut_orbit, FrequencyGrid, Orbit, Square};
use crate::params::EmitterParams;
use crate::rng;

/// Distribution of the per-click marks used in resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkWeights {
    /// Unit-mean exponential marks, matching exponentially distributed pulse areas.
    Exponential,
    /// Every mark equal to one; biased at orders three and four.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub frame_length_s: f64,
    /// Odd number of grid points per axis.
    pub n_freq: usize,
    pub max_freq_khz: f64,
    pub window: Window,
    pub orders: Vec<u8>,
    pub resampling_count: usize,
    pub batch_count: usize,
    pub seed: u64,
    pub marks: MarkWeights,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            frame_length_s: 0.5,
            n_freq: 65,
            max_freq_khz: 20.0 * (EmitterParams::REFERENCE.gamma_in + EmitterParams::REFERENCE.gamma_out),
            window: Window::default(),
            orders: vec![1, 2, 3, 4],
            resampling_count: 100,
            batch_count: 10,
            seed: 0,
            marks: MarkWeights::Exponential,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_length_s > 0.0) || !self.frame_length_s.is_finite() {
            return Err(Error::InvalidConfig(format!("frame_length_s must be positive, got {}", self.frame_length_s)));
        }
        if self.n_freq < 3 || self.n_freq % 2 == 0 {
            return Err(Error::InvalidConfig(format!("n_freq must be odd and at least 3, got {}", self.n_freq)));
        }
        if !(self.max_freq_khz > 0.0) || !self.max_freq_khz.is_finite() {
            return Err(Error::InvalidConfig(format!("max_freq_khz must be positive, got {}", self.max_freq_khz)));
        }
        if let Window::ConfinedGaussian { sigma } = self.window {
            if !(sigma > 0.0) {
                return Err(Error::InvalidConfig(format!("window sigma must be positive, got {sigma}")));
            }
        }
        if self.orders.is_empty() || self.orders.iter().any(|o| !(1..=4).contains(o)) {
            return Err(Error::InvalidConfig(format!("orders must be a nonempty subset of 1..=4, got {:?}", self.orders)));
        }
        if self.resampling_count == 0 {
            return Err(Error::InvalidConfig("resampling_count must be at least 1".into()));
        }
        if self.batch_count < 2 {
            return Err(Error::InvalidConfig(format!("batch_count must be at least 2, got {}", self.batch_count)));
        }
        Ok(())
    }

    pub fn half(&self) -> usize {
        (self.n_freq - 1) / 2
    }

    /// Frame length in ms.
    pub fn frame_ms(&self) -> f64 {
        self.frame_length_s * 1e3
    }

    /// Multiple of the fundamental `2π/T` between neighbouring grid points.
    pub fn index_stride(&self) -> usize {
        let base = TAU / self.frame_ms();
        ((self.max_freq_khz / (base * self.half() as f64)).round() as usize).max(1)
    }

    /// Grid spacing in kHz.
    pub fn step(&self) -> f64 {
        self.index_stride() as f64 * TAU / self.frame_ms()
    }

    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid::integer_multiples(self.step(), self.half()).expect("validated grid")
    }

    fn has(&self, order: u8) -> bool {
        self.orders.contains(&order)
    }

    fn max_order(&self) -> usize {
        *self.orders.iter().max().unwrap_or(&1) as usize
    }

    fn coefficient_count(&self) -> usize {
        if self.has(3) {
            2 * self.half() + 1
        } else {
            self.half() + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarEstimate {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum1 {
    pub value: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum2 {
    pub value: Square<f64>,
    pub sigma: Square<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum2 {
    pub re: Square<f64>,
    pub im: Square<f64>,
    pub sigma_re: Square<f64>,
    pub sigma_im: Square<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectraMetadata {
    /// `clicks`, `sampled` or `model`.
    pub source: String,
    pub config: Option<EstimationConfig>,
    pub clicks: Option<usize>,
    pub duration_s: Option<f64>,
    pub frames: Option<usize>,
    pub photon_fraction: Option<f64>,
    pub window_norms: Option<[f64; 4]>,
    pub rng: Option<String>,
    pub params: Option<EmitterParams>,
}

/// Spectra on a grid `ω_i`; S³ entry `(i, j)` is `S³(ω_i, ω_j)` and S⁴ entry
/// `(i, j)` is the cut `S⁴(ω_i, ω_j, −ω_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraSet {
    pub grid: FrequencyGrid,
    pub s1: Option<ScalarEstimate>,
    pub s2: Option<Spectrum1>,
    pub s3: Option<ComplexSpectrum2>,
    pub s4: Option<Spectrum2>,
    pub metadata: SpectraMetadata,
}

impl SpectraSet {
    /// Model spectra in the same layout, with zero errors.
    pub fn from_model(model: &ModelSpectra) -> Self {
        let n = model.grid.len();
        let zeros = Square::filled(n, 0.0);
        SpectraSet {
            grid: model.grid.clone(),
            s1: Some(ScalarEstimate { value: model.s1, sigma: 0.0 }),
            s2: Some(Spectrum1 { value: model.s2.clone(), sigma: vec![0.0; n] }),
            s3: Some(ComplexSpectrum2 {
                re: model.s3.map(|z| z.re),
                im: model.s3.map(|z| z.im),
                sigma_re: zeros.clone(),
                sigma_im: zeros.clone(),
            }),
            s4: Some(Spectrum2 { value: model.s4.clone(), sigma: zeros }),
            metadata: SpectraMetadata { source: "model".into(), params: model.params, ..Default::default() },
        }
    }

    /// Step and half-width when the grid is `j·step`, `j = −half..=half`.
    pub fn index_grid(&self) -> Option<(f64, usize)> {
        let v = self.grid.values();
        let n = v.len();
        if n < 3 || n % 2 == 0 {
            return None;
        }
        let half = (n - 1) / 2;
        let step = v[half + 1] - v[half];
        let ok = v.iter().enumerate().all(|(i, &w)| (w - (i as f64 - half as f64) * step).abs() <= 1e-9 * step * half as f64);
        if ok && v[half] == 0.0 && step > 0.0 {
            Some((step, half))
        } else {
            None
        }
    }
}

/// Orbit bookkeeping for one estimator grid.
struct Layout {
    half: i64,
    s3: Vec<Orbit>,
    s4: Vec<Orbit>,
}

impl Layout {
    fn new(config: &EstimationConfig) -> Self {
        let h = config.half() as i64;
        let s3 = if config.has(3) { orbits_2d(h, |a, b| s3_orbit(a, b, h)) } else { Vec::new() };
        let s4 = if config.has(4) { orbits_2d(h, s4_cut_orbit) } else { Vec::new() };
        Layout { half: h, s3, s4 }
    }
}

/// Per-batch spectrum values at orbit representatives.
#[derive(Debug, Clone)]
struct BatchValues {
    s1: f64,
    s2: Vec<f64>,
    s3: Vec<Complex64>,
    s4: Vec<f64>,
}

/// Cumulant spectra of one batch from coefficients laid out
/// `[frame][realization][j]`, averaged over realizations.
fn batch_values(
    coeffs: &[Complex64],
    frames: usize,
    realizations: usize,
    count: usize,
    layout: &Layout,
    config: &EstimationConfig,
    norms: [f64; 4],
    frame_ms: f64,
) -> BatchValues {
    let h = layout.half as usize;
    let mut out = BatchValues {
        s1: 0.0,
        s2: vec![0.0; if config.has(2) { h + 1 } else { 0 }],
        s3: vec![Complex64::new(0.0, 0.0); layout.s3.len()],
        s4: vec![0.0; layout.s4.len()],
    };
    let mut d = vec![vec![Complex64::new(0.0, 0.0); frames]; count];
    let mut neg = vec![vec![Complex64::new(0.0, 0.0); frames]; count];
    for r in 0..realizations {
        for j in 0..count {
            let mut mean = Complex64::new(0.0, 0.0);
            for f in 0..frames {
                let v = coeffs[(f * realizations + r) * count + j];
                d[j][f] = v;
                mean += v;
            }
            mean /= frames as f64;
            for f in 0..frames {
                d[j][f] -= mean;
                neg[j][f] = d[j][f].conj();
            }
            if j == 0 {
                out.s1 += mean.re / (frame_ms * norms[0]);
            }
        }
        let signed = |j: i64| -> &Vec<Complex64> {
            if j >= 0 {
                &d[j as usize]
            } else {
                &neg[(-j) as usize]
            }
        };
        for j in 0..out.s2.len() {
            out.s2[j] += k2_centered(&d[j], &neg[j]).re / (frame_ms * norms[1]);
        }
        for (o, acc) in layout.s3.iter().zip(out.s3.iter_mut()) {
            let (j1, j2) = (o.representative[0], o.representative[1]);
            // conj(a_{j1+j2}) = a_{-(j1+j2)}
            let v = k3_centered(signed(j1), signed(j2), signed(-(j1 + j2)));
            *acc += v / (frame_ms * norms[2]);
        }
        for (o, acc) in layout.s4.iter().zip(out.s4.iter_mut()) {
            let (a, b) = (o.representative[0] as usize, o.representative[1] as usize);
            *acc += k4_cut_centered(&d[a], &d[b]) / (frame_ms * norms[3]);
        }
    }
    let inv = 1.0 / realizations as f64;
    out.s1 *= inv;
    out.s2.iter_mut().for_each(|v| *v *= inv);
    out.s3.iter_mut().for_each(|v| *v *= inv);
    out.s4.iter_mut().for_each(|v| *v *= inv);
    for (o, v) in layout.s3.iter().zip(out.s3.iter_mut()) {
        if o.real {
            v.im = 0.0;
        }
    }
    out
}

fn mean_and_error(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let b = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / b;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

fn assemble(batches: &[BatchValues], layout: &Layout, config: &EstimationConfig, metadata: SpectraMetadata) -> SpectraSet {
    let h = layout.half;
    let n = (2 * h + 1) as usize;
    let s1 = if config.has(1) {
        let (value, sigma) = mean_and_error(batches.iter().map(|b| b.s1));
        Some(ScalarEstimate { value, sigma })
    } else {
        None
    };
    let s2 = if config.has(2) {
        let mut value = vec![0.0; n];
        let mut sigma = vec![0.0; n];
        for j in 0..=h {
            let (m, s) = mean_and_error(batches.iter().map(|b| b.s2[j as usize]));
            for i in [h + j, h - j] {
                value[i as usize] = m;
                sigma[i as usize] = s;
            }
        }
        Some(Spectrum1 { value, sigma })
    } else {
        None
    };
    let s3 = if config.has(3) {
        let mut re = Square::filled(n, 0.0);
        let mut im = Square::filled(n, 0.0);
        let mut sre = Square::filled(n, 0.0);
        let mut sim = Square::filled(n, 0.0);
        for (k, o) in layout.s3.iter().enumerate() {
            let (mr, er) = mean_and_error(batches.iter().map(|b| b.s3[k].re));
            let (mi, ei) = mean_and_error(batches.iter().map(|b| b.s3[k].im));
            for (mem, conj) in o.members.iter().zip(&o.conjugated) {
                let (i, j) = ((mem[0] + h) as usize, (mem[1] + h) as usize);
                re.set(i, j, mr);
                im.set(i, j, if *conj { -mi } else { mi });
                sre.set(i, j, er);
                sim.set(i, j, ei);
            }
        }
        Some(ComplexSpectrum2 { re, im, sigma_re: sre, sigma_im: sim })
    } else {
        None
    };
    let s4 = if config.has(4) {
        let mut value = Square::filled(n, 0.0);
        let mut sigma = Square::filled(n, 0.0);
        for (k, o) in layout.s4.iter().enumerate() {
            let (m, s) = mean_and_error(batches.iter().map(|b| b.s4[k]));
            for mem in &o.members {
                let (i, j) = ((mem[0] + h) as usize, (mem[1] + h) as usize);
                value.set(i, j, m);
                sigma.set(i, j, s);
            }
        }
        Some(Spectrum2 { value, sigma })
    } else {
        None
    };
    SpectraSet { grid: config.grid(), s1, s2, s3, s4, metadata }
}

fn batch_ranges(frames: usize, batches: usize) -> Vec<(usize, usize)> {
    (0..batches).map(|b| (b * frames / batches, (b + 1) * frames / batches)).collect()
}

fn check_batches(frames: usize, config: &EstimationConfig) -> Result<()> {
    if frames < config.batch_count {
        return Err(Error::InsufficientFrames { frames, required: config.batch_count });
    }
    let per_batch = frames / config.batch_count;
    if per_batch < config.max_order().max(2) {
        return Err(Error::NotEnoughSamples { samples: per_batch, order: config.max_order().max(2) });
    }
    Ok(())
}

/// Estimates the configured spectra of a click record.
pub fn estimate_spectra(clicks: &ClickRecord, config: &EstimationConfig) -> Result<SpectraSet> {
    config.validate()?;
    let frames = segment(clicks, config.frame_length_s, config.batch_count)?;
    let n_frames = frames.count();
    check_batches(n_frames, config)?;
    let layout = Layout::new(config);
    let count = config.coefficient_count();
    let norms = config.window.norms();
    let frame_ms = config.frame_ms();
    let realizations = match config.marks {
        MarkWeights::Exponential => config.resampling_count,
        MarkWeights::Unit => 1,
    };
    let plan = FramePlan { window: config.window, frame: frame_ms, stride: config.index_stride(), count };

    let batches: Vec<BatchValues> = batch_ranges(n_frames, config.batch_count)
        .into_par_iter()
        .map(|(lo, hi)| {
            let m = hi - lo;
            let mut coeffs = vec![Complex64::new(0.0, 0.0); m * realizations * count];
            let mut times: Vec<f64> = Vec::new();
            let mut weights: Vec<f64> = Vec::new();
            for (local, k) in (lo..hi).enumerate() {
                times.clear();
                times.extend(frames.times(k).map(|t| t * 1e3));
                weights.clear();
                match config.marks {
                    MarkWeights::Exponential => {
                        let mut r = rng::stream(config.seed, k as u64);
                        weights.extend((0..times.len() * realizations).map(|_| r.sample::<f64, _>(Exp1)));
                    }
                    MarkWeights::Unit => weights.resize(times.len(), 1.0),
                }
                let out = &mut coeffs[local * realizations * count..(local + 1) * realizations * count];
                plan.coefficients(&times, &weights, realizations, out);
            }
            batch_values(&coeffs, m, realizations, count, &layout, config, norms, frame_ms)
        })
        .collect();

    let used: usize = (0..n_frames).map(|k| frames.clicks_in(k)).sum();
    let metadata = SpectraMetadata {
        source: "clicks".into(),
        config: Some(config.clone()),
        clicks: Some(used),
        duration_s: Some(clicks.duration()),
        frames: Some(n_frames),
        window_norms: Some(norms),
        rng: Some(rng::RNG_ALGORITHM.into()),
        ..Default::default()
    };
    Ok(assemble(&batches, &layout, config, metadata))
}

/// Estimates spectra of a uniformly sampled trace with spacing `dt_s` seconds.
///
/// The resampling settings of `config` are ignored; the frame length is
/// rounded to a whole number of samples.
pub fn estimate_sampled(trace: &[f64], dt_s: f64, config: &EstimationConfig) -> Result<SpectraSet> {
    config.validate()?;
    if !(dt_s > 0.0) {
        return Err(Error::InvalidConfig(format!("sample spacing must be positive, got {dt_s}")));
    }
    let per_frame = (config.frame_length_s / dt_s).round() as usize;
    if per_frame == 0 {
        return Err(Error::InvalidConfig("frame shorter than one sample".into()));
    }
    let mut cfg = config.clone();
    cfg.frame_length_s = per_frame as f64 * dt_s;
    let n_frames = trace.len() / per_frame;
    check_batches(n_frames, &cfg)?;
    let layout = Layout::new(&cfg);
    let count = cfg.coefficient_count();
    let frame_ms = cfg.frame_ms();
    let norms = cfg.window.discrete_norms(per_frame);
    let plan = SampledPlan::new(per_frame, &cfg.window, frame_ms, cfg.index_stride(), count)?;

    let batches: Vec<BatchValues> = batch_ranges(n_frames, cfg.batch_count)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut coeffs = Vec::with_capacity((hi - lo) * count);
            for k in lo..hi {
                coeffs.extend(plan.coefficients(&trace[k * per_frame..(k + 1) * per_frame]));
            }
            batch_values(&coeffs, hi - lo, 1, count, &layout, &cfg, norms, frame_ms)
        })
        .collect();
    let metadata = SpectraMetadata {
        source: "sampled".into(),
        config: Some(cfg.clone()),
        duration_s: Some(trace.len() as f64 * dt_s),
        frames: Some(n_frames),
        window_norms: Some(norms),
        ..Default::default()
    };
    Ok(assemble(&batches, &layout, &cfg, metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn poisson_record(rate_khz: f64, duration: f64, seed: u64) -> ClickRecord {
        let mut r = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut ts = Vec::new();
        let mut t = r.sample::<f64, _>(Exp1) / (rate_khz * 1e3);
        while t < duration {
            ts.push(t);
            t += r.sample::<f64, _>(Exp1) / (rate_khz * 1e3);
        }
        ClickRecord::new(ts, duration).unwrap()
    }

    fn small_config() -> EstimationConfig {
        EstimationConfig {
            frame_length_s: 0.02,
            n_freq: 7,
            max_freq_khz: 30.0,
            resampling_count: 8,
            batch_count: 10,
            ..Default::default()
        }
    }

    fn check_flat(set: &SpectraSet, expected: [f64; 4]) {
        let s1 = set.s1.unwrap();
        assert!((s1.value - expected[0]).abs() < 5.0 * s1.sigma, "S1 {} ± {}", s1.value, s1.sigma);
        let s2 = set.s2.as_ref().unwrap();
        for (v, s) in s2.value.iter().zip(&s2.sigma) {
            assert!((v - expected[1]).abs() < 5.0 * s, "S2 {v} ± {s} vs {}", expected[1]);
            assert!(*s < 0.1 * expected[1]);
        }
        let s3 = set.s3.as_ref().unwrap();
        for k in 0..s3.re.as_slice().len() {
            let (v, s) = (s3.re.as_slice()[k], s3.sigma_re.as_slice()[k]);
            assert!((v - expected[2]).abs() < 5.0 * s, "S3 {v} ± {s} vs {}", expected[2]);
            let (vi, si) = (s3.im.as_slice()[k], s3.sigma_im.as_slice()[k]);
            assert!(vi.abs() <= 5.0 * si + 1e-12);
        }
        let s4 = set.s4.as_ref().unwrap();
        for k in 0..s4.value.as_slice().len() {
            let (v, s) = (s4.value.as_slice()[k], s4.sigma.as_slice()[k]);
            assert!((v - expected[3]).abs() < 5.0 * s, "S4 {v} ± {s} vs {}", expected[3]);
        }
    }

    #[test]
    fn poisson_exponential_marks_are_flat_factorials() {
        let lambda = 20.0;
        let clicks = poisson_record(lambda, 40.0, 11);
        let set = estimate_spectra(&clicks, &small_config()).unwrap();
        check_flat(&set, [lambda, 2.0 * lambda, 6.0 * lambda, 24.0 * lambda]);
    }

    #[test]
    fn poisson_unit_marks_are_flat_rate() {
        let lambda = 20.0;
        let clicks = poisson_record(lambda, 40.0, 12);
        let cfg = EstimationConfig { marks: MarkWeights::Unit, ..small_config() };
        let set = estimate_spectra(&clicks, &cfg).unwrap();
        check_flat(&set, [lambda; 4]);
    }

    #[test]
    fn estimate_is_deterministic_in_seed() {
        let clicks = poisson_record(10.0, 2.0, 3);
        let cfg = small_config();
        let a = estimate_spectra(&clicks, &cfg).unwrap();
        let b = estimate_spectra(&clicks, &cfg).unwrap();
        assert_eq!(a, b);
        let c = estimate_spectra(&clicks, &EstimationConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.s2, c.s2);
    }

    #[test]
    fn grid_and_symmetry_layout() {
        let clicks = poisson_record(10.0, 2.0, 4);
        let set = estimate_spectra(&clicks, &small_config()).unwrap();
        assert_eq!(set.index_grid().map(|g| g.1), Some(3));
        let s3 = set.s3.unwrap();
        let n = 7;
        for i in 0..n {
            for j in 0..n {
                assert_eq!(s3.re.get(i, j), s3.re.get(j, i));
                assert_eq!(*s3.im.get(i, j), -*s3.im.get(n - 1 - i, n - 1 - j));
            }
        }
        let s4 = set.s4.unwrap();
        assert_eq!(s4.value.get(1, 5), s4.value.get(5, 1));
        assert_eq!(s4.value.get(0, 2), s4.value.get(6, 4));
    }

    #[test]
    fn too_short_record_is_rejected() {
        let clicks = poisson_record(10.0, 0.1, 5);
        assert!(matches!(estimate_spectra(&clicks, &small_config()), Err(Error::InsufficientFrames { .. })));
        let bad = EstimationConfig { n_freq: 8, ..small_config() };
        assert!(matches!(estimate_spectra(&clicks, &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn sampled_trace_overflow_is_rejected() {
        let cfg = EstimationConfig { frame_length_s: 0.001, max_freq_khz: 1e5, ..small_config() };
        let trace = vec![0.0; 10_000];
        assert!(matches!(estimate_sampled(&trace, 1e-5, &cfg), Err(Error::IndexOverflow { .. })));
    }

    #[test]
    fn sampled_matches_clicks_for_fine_binning() {
        // spikes of area 1 on a fine grid reproduce the unit-mark click estimate
        let clicks = poisson_record(5.0, 4.0, 6);
        let dt = 1e-5;
        let n = (clicks.duration() / dt).round() as usize;
        let mut trace = vec![0.0; n];
        let mut snapped = Vec::new();
        for &t in clicks.timestamps() {
            let k = (t / dt).floor() as usize;
            if k < n {
                trace[k] += 1.0 / (dt * 1e3);
                snapped.push(k as f64 * dt);
            }
        }
        let cfg = EstimationConfig { marks: MarkWeights::Unit, orders: vec![1, 2], ..small_config() };
        let a = estimate_sampled(&trace, dt, &cfg).unwrap();
        let b = estimate_spectra(&ClickRecord::new(snapped, clicks.duration()).unwrap(), &cfg).unwrap();
        let (sa, sb) = (a.s2.unwrap(), b.s2.unwrap());
        for (x, y) in sa.value.iter().zip(&sb.value) {
            assert!((x - y).abs() < 1e-3 * y.abs(), "{x} vs {y}");
        }
    }
}
