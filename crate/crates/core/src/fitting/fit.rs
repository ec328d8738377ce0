use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{gamma_ph_from_rate, Objective};
use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};
use crate::estimator::{estimate_spectra, thin, ClickRecord, EstimationConfig, SpectraSet};
use crate::rng;

const SUBSET_TAG: u64 = 0x5355_4253;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub orders: Vec<u8>,
    /// kHz, held fixed during the fit.
    pub gamma_det: f64,
    pub max_evaluations: usize,
    pub tolerance: f64,
    /// Starts per rate axis; the grid has `multistart²` points.
    pub multistart: usize,
    /// Decades spanned by the start grid along each rate axis.
    pub start_span_decades: f64,
    /// Centre `(γ_in, γ_out)` of the start grid; estimated from S² when absent.
    pub initial: Option<[f64; 2]>,
    pub initial_beta_sq: Option<f64>,
    pub n_subsets: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            orders: vec![1, 2, 3, 4],
            gamma_det: 1e6,
            max_evaluations: 2000,
            tolerance: 1e-5,
            multistart: 3,
            start_span_decades: 2.0,
            initial: None,
            initial_beta_sq: None,
            n_subsets: 10,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.orders.contains(&2) || self.orders.iter().any(|o| !(1..=4).contains(o)) {
            return Err(Error::InvalidConfig(format!("fit orders must be a subset of 1..=4 containing 2, got {:?}", self.orders)));
        }
        if self.max_evaluations == 0 || self.multistart == 0 {
            return Err(Error::InvalidConfig("optimizer budget and multistart count must be positive".into()));
        }
        if !(self.gamma_det > 0.0) || !(self.tolerance > 0.0) || !(self.start_span_decades >= 0.0) {
            return Err(Error::InvalidConfig("gamma_det, tolerance and start span must be positive".into()));
        }
        if let Some([a, b]) = self.initial {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::InvalidConfig(format!("initial rates must be positive, got ({a}, {b})")));
            }
        }
        if self.n_subsets == 0 {
            return Err(Error::InvalidConfig("n_subsets must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub value: f64,
    /// Scatter across subsets; absent for a single fit.
    pub sigma: Option<f64>,
}

impl RateEstimate {
    /// `value ± 3σ`.
    pub fn interval_3sigma(&self) -> Option<[f64; 2]> {
        self.sigma.map(|s| [self.value - 3.0 * s, self.value + 3.0 * s])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartDiagnostics {
    /// `(γ_in, γ_out, β²)`.
    pub initial: [f64; 3],
    pub optimum: [f64; 3],
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub converged: bool,
    pub evaluations: usize,
    pub points: usize,
    pub excluded_points: usize,
    pub starts: Vec<StartDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFit {
    pub index: usize,
    pub clicks: usize,
    pub gamma_in: Option<f64>,
    pub gamma_out: Option<f64>,
    pub beta_sq: Option<f64>,
    pub gamma_ph: Option<f64>,
    pub objective: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub gamma_in: RateEstimate,
    pub gamma_out: RateEstimate,
    pub beta_sq: f64,
    pub gamma_ph_derived: f64,
    pub gamma_det: f64,
    pub objective: f64,
    pub click_rate_khz: f64,
    pub subsets: Vec<SubsetFit>,
    pub diagnostics: Option<FitDiagnostics>,
    pub config: FitConfig,
}

/// `γ_ph` implied by the click count of `clicks` at the given switching rates.
pub fn gamma_ph_from_counts(clicks: &ClickRecord, gamma_in: f64, gamma_out: f64) -> Result<f64> {
    if clicks.is_empty() || clicks.duration() == 0.0 {
        return Err(Error::EmptyRecord);
    }
    if !(gamma_in > 0.0 && gamma_out > 0.0) {
        return Err(Error::InvalidParameter(format!("rates must be positive, got ({gamma_in}, {gamma_out})")));
    }
    Ok(gamma_ph_from_rate(clicks.rate_khz(), gamma_in, gamma_out))
}

/// `γ_in + γ_out` from the half width at half maximum of the S² peak above its
/// high-frequency level.
pub fn switching_sum_from_s2(measured: &SpectraSet) -> Option<f64> {
    let (step, half) = measured.index_grid()?;
    let s2 = measured.s2.as_ref()?;
    let pos = &s2.value[half..];
    let bg = pos[half];
    let peak = pos[0] - bg;
    if !(peak > 0.0) {
        return None;
    }
    for j in 1..=half {
        let (a, b) = (pos[j - 1] - bg, pos[j] - bg);
        if b <= 0.5 * peak {
            let frac = (a - 0.5 * peak) / (a - b);
            return Some(step * ((j - 1) as f64 + frac));
        }
    }
    Some(step * half as f64)
}

fn start_grid(objective: &Objective, measured: &SpectraSet, config: &FitConfig) -> Vec<[f64; 3]> {
    let [ci, co] = config.initial.unwrap_or_else(|| {
        let g = switching_sum_from_s2(measured).unwrap_or(1.0);
        [0.5 * g, 0.5 * g]
    });
    let beta = config.initial_beta_sq.unwrap_or_else(|| match measured.s1 {
        // S¹ ≈ β² × (click rate / γ_det) for short pulses
        Some(s) if s.value > 0.0 => s.value * objective.gamma_det() / objective.click_rate(),
        _ => objective.gamma_det(),
    });
    let k = config.multistart;
    let factor = |i: usize| {
        if k == 1 {
            1.0
        } else {
            10f64.powf(config.start_span_decades * (i as f64 / (k - 1) as f64 - 0.5))
        }
    };
    let mut out = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            out.push([ci * factor(a), co * factor(b), beta]);
        }
    }
    out
}

fn fit_with_rate(measured: &SpectraSet, click_rate_khz: f64, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let objective = Objective::new(measured, &config.orders, click_rate_khz, config.gamma_det)?;
    let opts = SimplexOptions { max_evaluations: config.max_evaluations, tolerance: config.tolerance, initial_step: 0.2 };
    let starts: Vec<StartDiagnostics> = start_grid(&objective, measured, config)
        .into_par_iter()
        .map(|s| {
            let x0 = [s[0].ln(), s[1].ln(), s[2].ln()];
            let r = nelder_mead(|x| objective.log_value(x), &x0, &opts);
            StartDiagnostics {
                initial: s,
                optimum: [r.x[0].exp(), r.x[1].exp(), r.x[2].exp()],
                objective: r.value,
                evaluations: r.evaluations,
                converged: r.converged,
            }
        })
        .collect();
    let best = starts
        .iter()
        .filter(|s| s.objective < super::objective::PENALTY)
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .ok_or_else(|| Error::FitFailed("the model could not be evaluated from any start".into()))?
        .clone();
    if !best.converged {
        log::warn!("best start exhausted the budget of {} evaluations before converging", config.max_evaluations);
    }
    let [gin, gout, beta] = best.optimum;
    let p = objective.params(gin, gout, beta);
    Ok(FitResult {
        gamma_in: RateEstimate { value: gin, sigma: None },
        gamma_out: RateEstimate { value: gout, sigma: None },
        beta_sq: beta,
        gamma_ph_derived: p.gamma_ph,
        gamma_det: config.gamma_det,
        objective: best.objective,
        click_rate_khz,
        subsets: Vec::new(),
        diagnostics: Some(FitDiagnostics {
            converged: best.converged,
            evaluations: starts.iter().map(|s| s.evaluations).sum(),
            points: objective.points(),
            excluded_points: objective.excluded(),
            starts,
        }),
        config: config.clone(),
    })
}

/// Fits the emitter model to `measured`, with `γ_ph` tied to the click rate of `clicks`.
pub fn fit(measured: &SpectraSet, clicks: &ClickRecord, config: &FitConfig) -> Result<FitResult> {
    if clicks.is_empty() || clicks.duration() == 0.0 {
        return Err(Error::EmptyRecord);
    }
    fit_with_rate(measured, clicks.rate_khz(), config)
}

fn mean_sd(v: &[f64]) -> (f64, Option<f64>) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.len() > 1).then(|| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (m, sd)
}

/// Estimates and fits every record; the rates are reported as mean and
/// standard deviation over the records.
pub fn fit_subsets(records: &[ClickRecord], estimation: &EstimationConfig, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let run = |i: usize, r: &ClickRecord| -> SubsetFit {
        let est = EstimationConfig { seed: rng::derive_seed(estimation.seed, SUBSET_TAG, i as u64), ..estimation.clone() };
        let res = estimate_spectra(r, &est).and_then(|s| fit(&s, r, config));
        match res {
            Ok(f) => SubsetFit {
                index: i,
                clicks: r.len(),
                gamma_in: Some(f.gamma_in.value),
                gamma_out: Some(f.gamma_out.value),
                beta_sq: Some(f.beta_sq),
                gamma_ph: Some(f.gamma_ph_derived),
                objective: Some(f.objective),
                converged: f.diagnostics.is_some_and(|d| d.converged),
                error: None,
            },
            Err(e) => SubsetFit {
                index: i,
                clicks: r.len(),
                gamma_in: None,
                gamma_out: None,
                beta_sq: None,
                gamma_ph: None,
                objective: None,
                converged: false,
                error: Some(e.to_string()),
            },
        }
    };
    let subsets: Vec<SubsetFit> = records.par_iter().enumerate().map(|(i, r)| run(i, r)).collect();
    summarize(subsets, records, config)
}

fn summarize(subsets: Vec<SubsetFit>, records: &[ClickRecord], config: &FitConfig) -> Result<FitResult> {
    let failed = subsets.iter().filter(|s| s.error.is_some()).count();
    if failed > 2 || failed == subsets.len() {
        let first = subsets.iter().find_map(|s| s.error.clone()).unwrap_or_default();
        return Err(Error::FitFailed(format!("{failed} of {} subset fits failed; first error: {first}", subsets.len())));
    }
    if failed > 0 {
        log::warn!("{failed} subset fits failed and are excluded from the statistics");
    }
    let ok: Vec<&SubsetFit> = subsets.iter().filter(|s| s.error.is_none()).collect();
    let col = |f: fn(&SubsetFit) -> Option<f64>| ok.iter().filter_map(|s| f(s)).collect::<Vec<f64>>();
    let (gin, sin) = mean_sd(&col(|s| s.gamma_in));
    let (gout, sout) = mean_sd(&col(|s| s.gamma_out));
    let (beta, _) = mean_sd(&col(|s| s.beta_sq));
    let (gph, _) = mean_sd(&col(|s| s.gamma_ph));
    let (obj, _) = mean_sd(&col(|s| s.objective));
    let clicks: usize = records.iter().map(|r| r.len()).sum();
    let duration: f64 = records.iter().map(|r| r.duration()).sum();
    Ok(FitResult {
        gamma_in: RateEstimate { value: gin, sigma: sin },
        gamma_out: RateEstimate { value: gout, sigma: sout },
        beta_sq: beta,
        gamma_ph_derived: gph,
        gamma_det: config.gamma_det,
        objective: obj,
        click_rate_khz: if duration > 0.0 { clicks as f64 / (duration * 1e3) } else { 0.0 },
        subsets,
        diagnostics: None,
        config: config.clone(),
    })
}

/// Subsets of `clicks` at photon fraction `alpha`: independent thinnings for
/// `alpha < 1`, consecutive time blocks for `alpha = 1`.
pub fn subset_records(clicks: &ClickRecord, alpha: f64, n: usize, seed: u64) -> Result<Vec<ClickRecord>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("n_subsets must be at least 1".into()));
    }
    if alpha == 1.0 {
        let d = clicks.duration() / n as f64;
        (0..n).map(|i| clicks.window(i as f64 * d, (i + 1) as f64 * d)).collect()
    } else {
        (0..n).map(|i| thin(clicks, alpha, rng::derive_seed(seed, SUBSET_TAG, i as u64))).collect()
    }
}

/// Full estimate-and-fit pipeline on `config.n_subsets` subsets of `clicks`.
pub fn subset_errors(clicks: &ClickRecord, alpha: f64, estimation: &EstimationConfig, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let records = subset_records(clicks, alpha, config.n_subsets, config.seed)?;
    fit_subsets(&records, estimation, config)
}
