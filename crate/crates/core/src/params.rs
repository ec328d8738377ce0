use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates of the blinking-emitter model, all in kHz.
///
/// `gamma_in` empties the bright (uncharged, emitting) level, `gamma_out`
/// refills it, `gamma_ph` creates a photon in the detector while bright and
/// `gamma_det` removes it again. `beta_sq` scales the detector output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    pub gamma_in: f64,
    pub gamma_out: f64,
    pub gamma_ph: f64,
    pub gamma_det: f64,
    pub beta_sq: f64,
}

impl EmitterParams {
    /// Parameter set of the simulated trace used throughout the examples.
    pub const REFERENCE: EmitterParams = EmitterParams {
        gamma_in: 0.27,
        gamma_out: 0.8,
        gamma_ph: 298.0,
        gamma_det: 5000.0,
        beta_sq: 25_000.0,
    };

    pub fn new(gamma_in: f64, gamma_out: f64, gamma_ph: f64, gamma_det: f64, beta_sq: f64) -> Result<Self> {
        let p = EmitterParams { gamma_in, gamma_out, gamma_ph, gamma_det, beta_sq };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("gamma_in", self.gamma_in),
            ("gamma_out", self.gamma_out),
            ("gamma_ph", self.gamma_ph),
            ("gamma_det", self.gamma_det),
            ("beta_sq", self.beta_sq),
        ] {
            if !rate.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {rate}")));
            }
            if rate < 0.0 {
                return Err(Error::NegativeRate { name: name.to_string(), rate });
            }
        }
        if self.gamma_det > 0.0 && self.gamma_det < 10.0 * self.gamma_ph {
            log::warn!(
                "gamma_det = {} kHz is not much faster than gamma_ph = {} kHz; detector blocking will distort click statistics",
                self.gamma_det,
                self.gamma_ph
            );
        }
        Ok(())
    }

    /// Stationary probability of the bright level, `gamma_out / (gamma_in + gamma_out)`.
    pub fn bright_fraction(&self) -> f64 {
        self.gamma_out / (self.gamma_in + self.gamma_out)
    }

    /// Mean click rate of the ideal detector (no blocking), kHz.
    pub fn mean_click_rate(&self) -> f64 {
        self.gamma_ph * self.bright_fraction()
    }

    /// Same emitter with every rate (and `beta_sq`, when `scale_beta`) multiplied by `c`.
    pub fn time_rescaled(&self, c: f64, scale_beta: bool) -> Self {
        EmitterParams {
            gamma_in: self.gamma_in * c,
            gamma_out: self.gamma_out * c,
            gamma_ph: self.gamma_ph * c,
            gamma_det: self.gamma_det * c,
            beta_sq: if scale_beta { self.beta_sq * c } else { self.beta_sq },
        }
    }
}
