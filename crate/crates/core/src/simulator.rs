//! Exact jump-process simulation of the blinking emitter.
//!
//! Rates are in kHz and times in seconds. The default click generator treats
//! photon emission as a Poisson process at `γ_ph` during bright intervals and
//! ignores detector blocking; [`simulate_emitter_exact`] runs the full
//! four-level chain instead.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::ClickRecord;
use crate::model::{build_emitter_liouvillian, steady_state};
use crate::params::EmitterParams;
use crate::rng::{self, StreamRng};

const KHZ_TO_PER_S: f64 = 1e3;

/// Bright/dark telegraph path of the emitter occupation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationPath {
    pub initial_bright: bool,
    /// Switching times in seconds; the state alternates at each.
    pub switches: Vec<f64>,
    pub duration: f64,
}

impl OccupationPath {
    /// `(start, end, bright)` of every dwell, the last one truncated at `duration`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, bool)> + '_ {
        let n = self.switches.len();
        (0..=n).map(move |i| {
            let start = if i == 0 { 0.0 } else { self.switches[i - 1] };
            let end = if i == n { self.duration } else { self.switches[i] };
            (start, end, self.initial_bright ^ (i % 2 == 1))
        })
    }

    pub fn bright_time(&self) -> f64 {
        self.intervals().filter(|iv| iv.2).map(|(a, b, _)| b - a).sum()
    }

    pub fn bright_fraction(&self) -> f64 {
        if self.duration == 0.0 {
            0.0
        } else {
            self.bright_time() / self.duration
        }
    }

    /// Complete dwells (both ends observed) in the given state, seconds.
    pub fn dwell_times(&self, bright: bool) -> Vec<f64> {
        let n = self.switches.len();
        self.intervals()
            .enumerate()
            .filter(|(i, iv)| *i > 0 && *i < n && iv.2 == bright)
            .map(|(_, (a, b, _))| b - a)
            .collect()
    }

    pub fn state_at(&self, t: f64) -> bool {
        let k = self.switches.partition_point(|&s| s <= t);
        self.initial_bright ^ (k % 2 == 1)
    }
}

fn exp_time(r: &mut StreamRng, rate_khz: f64) -> f64 {
    let x: f64 = r.sample(Exp1);
    x / (rate_khz * KHZ_TO_PER_S)
}

fn check_duration(duration: f64) -> Result<()> {
    if !duration.is_finite() || duration < 0.0 {
        return Err(Error::InvalidParameter(format!("duration must be finite and nonnegative, got {duration}")));
    }
    Ok(())
}

/// Two-state occupation chain started from its stationary law.
pub fn simulate_occupation(gamma_in: f64, gamma_out: f64, duration: f64, seed: u64) -> Result<OccupationPath> {
    check_duration(duration)?;
    if !(gamma_in > 0.0 && gamma_out > 0.0) || !gamma_in.is_finite() || !gamma_out.is_finite() {
        return Err(Error::InvalidParameter(format!("switching rates must be positive, got {gamma_in}, {gamma_out}")));
    }
    let mut r = rng::stream(seed, 0x4f43_4355);
    let initial_bright = r.random::<f64>() < gamma_out / (gamma_in + gamma_out);
    let mut bright = initial_bright;
    let mut t = 0.0;
    let mut switches = Vec::new();
    loop {
        t += exp_time(&mut r, if bright { gamma_in } else { gamma_out });
        if t >= duration {
            break;
        }
        switches.push(t);
        bright = !bright;
    }
    Ok(OccupationPath { initial_bright, switches, duration })
}

/// Poisson clicks at `gamma_ph` restricted to the bright intervals of `path`.
pub fn simulate_clicks(path: &OccupationPath, gamma_ph: f64, seed: u64) -> Result<ClickRecord> {
    if !(gamma_ph > 0.0) || !gamma_ph.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma_ph must be positive, got {gamma_ph}")));
    }
    let mut r = rng::stream(seed, 0x434c_4943);
    let expected = (path.bright_time() * gamma_ph * KHZ_TO_PER_S) as usize;
    let mut ts = Vec::with_capacity(expected + expected / 100 + 16);
    for (start, end, bright) in path.intervals() {
        if !bright {
            continue;
        }
        let mut t = start + exp_time(&mut r, gamma_ph);
        while t < end {
            ts.push(t);
            t += exp_time(&mut r, gamma_ph);
        }
    }
    ClickRecord::new(ts, path.duration)
}

/// Occupation path and clicks of the blocking-free emitter.
pub fn simulate_emitter(params: &EmitterParams, duration: f64, seed: u64) -> Result<(OccupationPath, ClickRecord)> {
    params.validate()?;
    let path = simulate_occupation(params.gamma_in, params.gamma_out, duration, rng::derive_seed(seed, 1, 0))?;
    let clicks = simulate_clicks(&path, params.gamma_ph, rng::derive_seed(seed, 2, 0))?;
    Ok((path, clicks))
}

/// Gillespie simulation of the four-level chain; a click is each `3 → 4`
/// transition (photon entering the empty detector).
pub fn simulate_emitter_exact(params: &EmitterParams, duration: f64, seed: u64) -> Result<ClickRecord> {
    params.validate()?;
    check_duration(duration)?;
    let rho = steady_state(&build_emitter_liouvillian(params)?.liouvillian())?;
    let p = rho.probabilities();
    let mut r = rng::stream(seed, 0x4558_4143);
    let u: f64 = r.random();
    let mut state = 0;
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        state = i;
        if u < acc {
            break;
        }
    }
    // (target, rate) per level: 0 dark, 1 dark+photon, 2 bright, 3 bright+photon
    let moves: [[(usize, f64); 2]; 4] = [
        [(2, params.gamma_out), (0, 0.0)],
        [(3, params.gamma_out), (0, params.gamma_det)],
        [(0, params.gamma_in), (3, params.gamma_ph)],
        [(1, params.gamma_in), (2, params.gamma_det)],
    ];
    let expected = (duration * params.mean_click_rate() * KHZ_TO_PER_S) as usize;
    let mut ts = Vec::with_capacity(expected + expected / 100 + 16);
    let mut t = 0.0;
    loop {
        let [(a, ra), (b, rb)] = moves[state];
        let total = ra + rb;
        if total == 0.0 {
            break;
        }
        t += exp_time(&mut r, total);
        if t >= duration {
            break;
        }
        let next = if r.random::<f64>() * total < ra { a } else { b };
        if state == 2 && next == 3 {
            ts.push(t);
        }
        state = next;
    }
    ClickRecord::new(ts, duration)
}

/// Detector trace sampled on a regular grid, in units of `β²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTrace {
    /// Bin averages of `z(t)/β²`.
    pub samples: Vec<f64>,
    pub dt: f64,
    pub beta_sq: f64,
}

/// Each click becomes a unit box of Exp(`gamma_det`) length; overlapping
/// boxes are merged (the level is clipped at one) and the result is averaged
/// over bins of width `dt` seconds.
pub fn render_trace(clicks: &ClickRecord, gamma_det: f64, beta_sq: f64, dt: f64, seed: u64) -> Result<RenderedTrace> {
    if !(gamma_det > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_det and dt must be positive, got {gamma_det}, {dt}")));
    }
    if dt * gamma_det * KHZ_TO_PER_S > 0.1 {
        log::warn!("dt = {dt} s is not small against the mean pulse length; pulses will be smeared");
    }
    let n = (clicks.duration() / dt).floor() as usize;
    let mut samples = vec![0.0; n];
    let mut r = rng::stream(seed, 0x5245_4e44);
    let end_time = n as f64 * dt;
    let cover = |a: f64, b: f64, samples: &mut [f64]| {
        let b = b.min(end_time);
        if b <= a {
            return;
        }
        let first = (a / dt).floor() as usize;
        let last = ((b / dt).ceil() as usize).min(n);
        for (k, s) in samples.iter_mut().enumerate().take(last).skip(first) {
            let lo = (k as f64 * dt).max(a);
            let hi = ((k + 1) as f64 * dt).min(b);
            if hi > lo {
                *s = (*s + (hi - lo) / dt).min(1.0);
            }
        }
    };
    let mut current: Option<(f64, f64)> = None;
    for &t in clicks.timestamps() {
        let len = exp_time(&mut r, gamma_det);
        match current {
            Some((a, b)) if t <= b => current = Some((a, b.max(t + len))),
            Some((a, b)) => {
                cover(a, b, &mut samples);
                current = Some((t, t + len));
            }
            None => current = Some((t, t + len)),
        }
    }
    if let Some((a, b)) = current {
        cover(a, b, &mut samples);
    }
    Ok(RenderedTrace { samples, dt, beta_sq })
}
