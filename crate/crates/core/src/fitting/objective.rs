//! Weighted least-squares distance between model and measured spectra.

use crate::analytic::{OrbitLayout, SpectraModel};
use crate::error::{Error, Result};
use crate::estimator::SpectraSet;
use crate::params::EmitterParams;

/// Returned when the model cannot be evaluated at a parameter point.
pub const PENALTY: f64 = 1e100;

/// `γ_ph` from the count constraint `γ_ph γ_in⁻¹/(γ_in⁻¹+γ_out⁻¹) = N/T`, kHz.
pub fn gamma_ph_from_rate(click_rate_khz: f64, gamma_in: f64, gamma_out: f64) -> f64 {
    click_rate_khz * (1.0 / gamma_in + 1.0 / gamma_out) / (1.0 / gamma_in)
}

/// One measured value and its weight `1/σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    value: f64,
    weight: f64,
}

impl Point {
    fn new(value: f64, sigma: f64) -> Option<Self> {
        (sigma > 0.0 && sigma.is_finite() && value.is_finite()).then(|| Point { value, weight: 1.0 / sigma })
    }

    fn residual(&self, model: f64) -> f64 {
        let r = (model - self.value) * self.weight;
        r * r
    }
}

/// Measured spectra reduced to one entry per symmetry orbit.
///
/// Each orbit enters once, so points duplicated by symmetry carry the weight
/// of a single point between them.
#[derive(Debug, Clone)]
pub struct Objective {
    layout: OrbitLayout,
    orders: Vec<u8>,
    s1: Option<Point>,
    s2: Vec<Option<Point>>,
    s3_re: Vec<Option<Point>>,
    s3_im: Vec<Option<Point>>,
    s4: Vec<Option<Point>>,
    click_rate: f64,
    gamma_det: f64,
    excluded: usize,
}

impl Objective {
    pub fn new(measured: &SpectraSet, orders: &[u8], click_rate_khz: f64, gamma_det: f64) -> Result<Self> {
        if !orders.contains(&2) {
            return Err(Error::InvalidConfig("fit orders must include 2".into()));
        }
        if !(click_rate_khz > 0.0) {
            return Err(Error::EmptyRecord);
        }
        let (step, half) = measured
            .index_grid()
            .ok_or_else(|| Error::InvalidConfig("measured spectra are not on a symmetric index grid".into()))?;
        let layout = OrbitLayout::new(step, half);
        let h = half as i64;
        let idx = |j: i64| (j + h) as usize;
        let missing = |o: u8| Error::InvalidConfig(format!("measured spectra lack order {o}"));
        let mut excluded = 0;
        let mut take = |v: f64, s: f64| {
            let p = Point::new(v, s);
            if p.is_none() {
                excluded += 1;
            }
            p
        };

        let s1 = if orders.contains(&1) {
            let s = measured.s1.ok_or_else(|| missing(1))?;
            take(s.value, s.sigma)
        } else {
            None
        };
        let sp2 = measured.s2.as_ref().ok_or_else(|| missing(2))?;
        let s2 = (0..=h).map(|j| take(sp2.value[idx(j)], sp2.sigma[idx(j)])).collect();
        let (mut s3_re, mut s3_im) = (Vec::new(), Vec::new());
        if orders.contains(&3) {
            let sp = measured.s3.as_ref().ok_or_else(|| missing(3))?;
            for o in &layout.s3 {
                let (i, j) = (idx(o.representative[0]), idx(o.representative[1]));
                s3_re.push(take(*sp.re.get(i, j), *sp.sigma_re.get(i, j)));
                // imaginary parts that vanish by symmetry carry no information
                s3_im.push(if o.real { None } else { take(*sp.im.get(i, j), *sp.sigma_im.get(i, j)) });
            }
        }
        let mut s4 = Vec::new();
        if orders.contains(&4) {
            let sp = measured.s4.as_ref().ok_or_else(|| missing(4))?;
            for o in &layout.s4 {
                let (i, j) = (idx(o.representative[0]), idx(o.representative[1]));
                s4.push(take(*sp.value.get(i, j), *sp.sigma.get(i, j)));
            }
        }
        if excluded > 0 {
            log::warn!("{excluded} measured points have zero or invalid error and are excluded from the fit");
        }
        Ok(Objective {
            layout,
            orders: orders.to_vec(),
            s1,
            s2,
            s3_re,
            s3_im,
            s4,
            click_rate: click_rate_khz,
            gamma_det,
            excluded,
        })
    }

    /// Number of weighted terms.
    pub fn points(&self) -> usize {
        let c = |v: &[Option<Point>]| v.iter().filter(|p| p.is_some()).count();
        self.s1.is_some() as usize + c(&self.s2) + c(&self.s3_re) + c(&self.s3_im) + c(&self.s4)
    }

    pub fn excluded(&self) -> usize {
        self.excluded
    }

    pub fn click_rate(&self) -> f64 {
        self.click_rate
    }

    pub fn gamma_det(&self) -> f64 {
        self.gamma_det
    }

    /// Emitter parameters with `γ_ph` fixed by the count constraint.
    pub fn params(&self, gamma_in: f64, gamma_out: f64, beta_sq: f64) -> EmitterParams {
        EmitterParams {
            gamma_in,
            gamma_out,
            gamma_ph: gamma_ph_from_rate(self.click_rate, gamma_in, gamma_out),
            gamma_det: self.gamma_det,
            beta_sq,
        }
    }

    /// Weighted squared residual sum, or `None` when the model fails.
    pub fn try_value(&self, gamma_in: f64, gamma_out: f64, beta_sq: f64) -> Option<f64> {
        let p = self.params(gamma_in, gamma_out, beta_sq);
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(p.gamma_in) && ok(p.gamma_out) && ok(p.gamma_ph) && ok(p.beta_sq)) {
            return None;
        }
        let model = SpectraModel::emitter(&p).ok()?;
        let m = self.layout.evaluate(&model, &self.orders);
        let sum = |pts: &[Option<Point>], vals: &mut dyn Iterator<Item = f64>| -> f64 {
            pts.iter().zip(vals).filter_map(|(p, v)| p.map(|p| p.residual(v))).sum()
        };
        let mut total = self.s1.map_or(0.0, |p| p.residual(m.s1));
        total += sum(&self.s2, &mut m.s2.iter().copied());
        total += sum(&self.s3_re, &mut m.s3.iter().map(|z| z.re));
        total += sum(&self.s3_im, &mut m.s3.iter().map(|z| z.im));
        total += sum(&self.s4, &mut m.s4.iter().copied());
        total.is_finite().then_some(total)
    }

    pub fn value(&self, gamma_in: f64, gamma_out: f64, beta_sq: f64) -> f64 {
        self.try_value(gamma_in, gamma_out, beta_sq).unwrap_or(PENALTY)
    }

    /// Objective over `(ln γ_in, ln γ_out, ln β²)`.
    pub fn log_value(&self, x: &[f64]) -> f64 {
        self.value(x[0].exp(), x[1].exp(), x[2].exp())
    }
}
