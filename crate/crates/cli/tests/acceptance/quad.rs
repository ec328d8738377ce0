//! Adaptive Gauss–Kronrod (7/15) quadrature of complex integrands over the real line.

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let x = h * XGK[k];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[k];
        if k % 2 == 1 {
            gauss += s * WG[k / 2];
        }
    }
    Piece { a, b, value: kron * h, error: ((kron - gauss) * h).norm() }
}

/// Integral of `f` over `[a, b]`, bisecting the worst piece until the summed
/// error estimate is below `rel · |I|` (or `abs`).
pub fn integrate(mut f: impl FnMut(f64) -> Complex64, breaks: &[f64], rel: f64, abs: f64, max_pieces: usize) -> (Complex64, f64) {
    let mut pieces: Vec<Piece> = breaks.windows(2).map(|w| gk15(&mut f, w[0], w[1])).collect();
    loop {
        let total: Complex64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.error).sum();
        if err <= abs.max(rel * total.norm()) || pieces.len() >= max_pieces {
            return (total, err);
        }
        let worst = (0..pieces.len()).max_by(|&i, &j| pieces[i].error.total_cmp(&pieces[j].error)).unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        pieces.push(gk15(&mut f, p.a, mid));
        pieces.push(gk15(&mut f, mid, p.b));
    }
}

/// `∫_ℝ f(ν) dν`, split at the sorted breakpoints; the two tails are mapped
/// onto `[0, 1)` by `ν = b ± t/(1 − t)`.
pub fn integrate_real_line(mut f: impl FnMut(f64) -> Complex64, points: &[f64], rel: f64, abs: f64) -> (Complex64, f64) {
    let mut pts: Vec<f64> = points.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let (lo, hi) = (pts[0], *pts.last().unwrap());
    let tail = |f: &mut dyn FnMut(f64) -> Complex64, t: f64, base: f64, dir: f64| {
        let s = 1.0 - t;
        f(base + dir * t / s) / (s * s)
    };
    // the three ranges share the budget through a common parameter:
    // u ∈ [−1, 0) lower tail, [0, K] finite pieces, (K, K+1] upper tail
    let k = (pts.len() - 1) as f64;
    let mut breaks: Vec<f64> = vec![-1.0, -0.5];
    breaks.extend((0..pts.len()).map(|i| i as f64));
    breaks.extend([k + 0.5, k + 1.0]);
    let span = |i: usize| pts[i + 1] - pts[i];
    integrate(
        |u| {
            if u < 0.0 {
                tail(&mut f, -u, lo, -1.0)
            } else if u > k {
                tail(&mut f, u - k, hi, 1.0)
            } else {
                let i = (u.floor() as usize).min(pts.len().saturating_sub(2));
                let w = span(i);
                f(pts[i] + (u - i as f64) * w) * w
            }
        },
        &breaks,
        rel,
        abs,
        200_000,
    )
}
