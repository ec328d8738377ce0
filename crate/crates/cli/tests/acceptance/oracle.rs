//! Trispectrum of the four-level emitter rebuilt from its 4×4 rate matrix with
//! resolvent solves, and the two integral corrections done by quadrature.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use polyspectra::EmitterParams;

use crate::quad::integrate_real_line;

type C = Complex64;
type M4 = Matrix4<C>;
type V4 = Vector4<C>;

pub struct ClassicalEmitter {
    w: Matrix4<f64>,
    pi: Vector4<f64>,
    /// `A − ⟨A⟩` on the diagonal.
    a: Vector4<f64>,
    beta_sq: f64,
}

impl ClassicalEmitter {
    /// States: 0 dark, 1 dark + detector photon, 2 bright, 3 bright + detector photon.
    pub fn new(p: &EmitterParams) -> Self {
        let mut w = Matrix4::<f64>::zeros();
        let mut rate = |from: usize, to: usize, r: f64| {
            w[(to, from)] += r;
            w[(from, from)] -= r;
        };
        rate(0, 2, p.gamma_out);
        rate(1, 3, p.gamma_out);
        rate(2, 0, p.gamma_in);
        rate(3, 1, p.gamma_in);
        rate(2, 3, p.gamma_ph);
        rate(3, 2, p.gamma_det);
        rate(1, 0, p.gamma_det);
        // stationary vector from W with its first row replaced by the normalisation
        let mut m = w;
        for c in 0..4 {
            m[(0, c)] = 1.0;
        }
        let pi = m.lu().solve(&Vector4::new(1.0, 0.0, 0.0, 0.0)).expect("regular generator");
        let level = Vector4::new(0.0, 1.0, 0.0, 1.0);
        let mean = level.dot(&pi);
        ClassicalEmitter { w, pi, a: level.map(|x| x - mean), beta_sq: p.beta_sq }
    }

    fn shifted(&self, omega: f64, transpose: bool) -> M4 {
        let ones = Vector4::<f64>::repeat(1.0);
        let base = self.w + self.pi * ones.transpose();
        let base = if transpose { base.transpose() } else { base };
        base.map(|x| C::new(x, 0.0)) + M4::identity() * C::new(0.0, omega)
    }

    /// `G(ω)x` with `G(ω) = Σ_{λ≠0} −r l/(λ + iω)`.
    pub fn g(&self, omega: f64, x: &V4) -> V4 {
        let y = self.shifted(omega, false).lu().solve(x).expect("regular resolvent");
        let total: C = x.iter().sum();
        -y + self.pi.map(|p| C::new(p, 0.0)) * (total / C::new(1.0, omega))
    }

    /// `G(ω)ᵀx`.
    pub fn gt(&self, omega: f64, x: &V4) -> V4 {
        let y = self.shifted(omega, true).lu().solve(x).expect("regular resolvent");
        let along: C = self.pi.iter().zip(x.iter()).map(|(p, v)| v * *p).sum();
        -y + V4::repeat(along / C::new(1.0, omega))
    }

    fn times_a(&self, x: &V4) -> V4 {
        V4::from_fn(|i, _| x[i] * self.a[i])
    }

    fn a_vec(&self) -> V4 {
        self.a.map(|x| C::new(x, 0.0))
    }

    fn s(&self) -> V4 {
        V4::from_fn(|i, _| C::new(self.a[i] * self.pi[i], 0.0))
    }

    /// Permutation-summed chain term and the two corrections (β⁸ included, signs not).
    pub fn s4_parts(&self, w1: f64, w2: f64, w3: f64, rel: f64) -> (C, C, C) {
        let w = [w1, w2, w3, -w1 - w2 - w3];
        let s = self.s();
        let av = self.a_vec();
        struct Perm {
            om1: f64,
            l1: V4,
            l2: V4,
            q: V4,
        }
        let mut term = C::new(0.0, 0.0);
        let mut perms = Vec::with_capacity(24);
        for p in permutations() {
            let (l, m, n) = (w[p[1]], w[p[2]], w[p[3]]);
            let (om1, om2) = (m + n, l + m + n);
            let right = self.g(om2, &s);
            let chain = self.g(n, &self.times_a(&self.g(om1, &self.times_a(&right))));
            term += av.dot(&chain);
            // row vectors stored as columns: (aᵀG(n))ᵀ = G(n)ᵀa
            let l1 = self.gt(n, &av);
            let l2 = self.gt(om2, &l1);
            perms.push(Perm { om1, l1, l2, q: right });
        }
        let mut om1s: Vec<f64> = perms.iter().map(|p| p.om1).collect();
        om1s.sort_by(f64::total_cmp);
        om1s.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let slot: Vec<usize> = perms.iter().map(|p| om1s.iter().position(|o| (o - p.om1).abs() < 1e-12).unwrap()).collect();

        let integrand = |nu: f64, which: usize| {
            let x = self.g(nu, &s);
            let h: Vec<V4> = om1s.iter().map(|o| self.gt(o - nu, &av)).collect();
            let mut total = C::new(0.0, 0.0);
            for (p, &k) in perms.iter().zip(&slot) {
                total += if which == 1 {
                    p.l1.dot(&x) * h[k].dot(&p.q)
                } else {
                    p.l2.dot(&x) * h[k].dot(&s)
                };
            }
            total / (2.0 * std::f64::consts::PI)
        };
        let mut points = om1s.clone();
        points.push(0.0);
        let (int1, _) = integrate_real_line(|nu| integrand(nu, 1), &points, rel, 0.0);
        let (int2, _) = integrate_real_line(|nu| integrand(nu, 2), &points, rel, 0.0);
        let b8 = self.beta_sq.powi(4);
        (term * b8, int1 * b8, int2 * b8)
    }

    pub fn s4(&self, w1: f64, w2: f64, w3: f64, rel: f64) -> C {
        let (t, i1, i2) = self.s4_parts(w1, w2, w3, rel);
        t - i1 - i2
    }
}

fn permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.contains(&i)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}
