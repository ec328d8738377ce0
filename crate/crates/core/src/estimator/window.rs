use serde::{Deserialize, Serialize};

/// Frame taper evaluated on the normalized frame time `u = t / T ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// Approximate confined Gaussian with width `sigma` (in units of T).
    ConfinedGaussian { sigma: f64 },
    Rectangular,
}

impl Default for Window {
    fn default() -> Self {
        Window::ConfinedGaussian { sigma: 0.14 }
    }
}

impl Window {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Window::Rectangular => 1.0,
            Window::ConfinedGaussian { sigma } => {
                let gauss = |x: f64| {
                    let a = (x - 0.5) / (2.0 * sigma);
                    (-a * a).exp()
                };
                gauss(u) - gauss(0.0) * (gauss(u + 1.0) + gauss(u - 1.0)) / (gauss(1.0) + gauss(-1.0))
            }
        }
    }

    /// `w_n = ∫₀¹ g(u)ⁿ du` for `n = 1..=4`.
    pub fn norms(&self) -> [f64; 4] {
        if let Window::Rectangular = self {
            return [1.0; 4];
        }
        // composite Simpson, the taper is smooth and vanishes at both ends
        let n = 1 << 14;
        let h = 1.0 / n as f64;
        let mut acc = [0.0; 4];
        for i in 0..=n {
            let g = self.value(i as f64 * h);
            let wgt = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let mut p = 1.0;
            for a in acc.iter_mut() {
                p *= g;
                *a += wgt * p;
            }
        }
        acc.map(|a| a * h / 3.0)
    }

    /// Samples `g_j = g(j / n)` for `j = 0..n`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.value(j as f64 / n as f64)).collect()
    }

    /// Discrete norms `(1/n) Σ_j g_jᵏ` for `k = 1..=4`.
    pub fn discrete_norms(&self, n: usize) -> [f64; 4] {
        let mut acc = [0.0; 4];
        for g in self.samples(n) {
            let mut p = 1.0;
            for a in acc.iter_mut() {
                p *= g;
                *a += p;
            }
        }
        acc.map(|a| a / n as f64)
    }
}
