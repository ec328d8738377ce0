//! Unbiased joint cumulant estimators (multivariate k-statistics) of orders 2–4.
//!
//! All estimators are written in terms of the biased central sample moments
//! `m_xy = mean((x − x̄)(y − ȳ))` etc. of `m` paired samples.

use num_complex::Complex64;

use crate::error::{Error, Result};

fn check(m: usize, order: usize, lens: &[usize]) -> Result<()> {
    if lens.iter().any(|&l| l != m) {
        return Err(Error::DimensionMismatch { expected: m, found: *lens.iter().find(|&&l| l != m).unwrap() });
    }
    if m < order {
        return Err(Error::NotEnoughSamples { samples: m, order });
    }
    Ok(())
}

fn mean(x: &[Complex64]) -> Complex64 {
    x.iter().sum::<Complex64>() / x.len() as f64
}

fn centered(x: &[Complex64]) -> Vec<Complex64> {
    let mu = mean(x);
    x.iter().map(|v| v - mu).collect()
}

fn cmean(len: usize, f: impl Fn(usize) -> Complex64) -> Complex64 {
    (0..len).map(f).sum::<Complex64>() / len as f64
}

/// `m/(m−1) · m_xy`.
pub fn k2(x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
    let m = x.len();
    check(m, 2, &[y.len()])?;
    let (dx, dy) = (centered(x), centered(y));
    Ok(k2_centered(&dx, &dy))
}

/// `k2` of samples whose sample mean is already removed.
pub fn k2_centered(dx: &[Complex64], dy: &[Complex64]) -> Complex64 {
    let m = dx.len() as f64;
    cmean(dx.len(), |i| dx[i] * dy[i]) * (m / (m - 1.0))
}

/// `m²/((m−1)(m−2)) · m_xyz`.
pub fn k3(x: &[Complex64], y: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
    let m = x.len();
    check(m, 3, &[y.len(), z.len()])?;
    Ok(k3_centered(&centered(x), &centered(y), &centered(z)))
}

pub fn k3_centered(dx: &[Complex64], dy: &[Complex64], dz: &[Complex64]) -> Complex64 {
    let m = dx.len() as f64;
    cmean(dx.len(), |i| dx[i] * dy[i] * dz[i]) * (m * m / ((m - 1.0) * (m - 2.0)))
}

/// `m²[(m+1)m_xyzw − (m−1)(m_xy m_zw + m_xz m_yw + m_xw m_yz)] / ((m−1)(m−2)(m−3))`.
pub fn k4(x: &[Complex64], y: &[Complex64], z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    let m = x.len();
    check(m, 4, &[y.len(), z.len(), w.len()])?;
    Ok(k4_centered(&centered(x), &centered(y), &centered(z), &centered(w)))
}

pub fn k4_centered(dx: &[Complex64], dy: &[Complex64], dz: &[Complex64], dw: &[Complex64]) -> Complex64 {
    let n = dx.len();
    let m = n as f64;
    let m4 = cmean(n, |i| dx[i] * dy[i] * dz[i] * dw[i]);
    let p = |a: &[Complex64], b: &[Complex64]| cmean(n, |i| a[i] * b[i]);
    let pairs = p(dx, dy) * p(dz, dw) + p(dx, dz) * p(dy, dw) + p(dx, dw) * p(dy, dz);
    (m4 * (m + 1.0) - pairs * (m - 1.0)) * (m * m / ((m - 1.0) * (m - 2.0) * (m - 3.0)))
}

/// `k4(a, a*, b, b*)` from centered `da`, `db`; real by construction.
pub fn k4_cut_centered(da: &[Complex64], db: &[Complex64]) -> f64 {
    let n = da.len();
    let m = n as f64;
    let (mut m4, mut aa, mut bb) = (0.0, 0.0, 0.0);
    let (mut ab, mut abc) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for i in 0..n {
        let (x, y) = (da[i], db[i]);
        let (nx, ny) = (x.norm_sqr(), y.norm_sqr());
        m4 += nx * ny;
        aa += nx;
        bb += ny;
        ab += x * y;
        abc += x * y.conj();
    }
    let inv = 1.0 / m;
    let (m4, aa, bb, ab, abc) = (m4 * inv, aa * inv, bb * inv, ab * inv, abc * inv);
    let pairs = aa * bb + ab.norm_sqr() + abc.norm_sqr();
    ((m + 1.0) * m4 - (m - 1.0) * pairs) * (m * m / ((m - 1.0) * (m - 2.0) * (m - 3.0)))
}

pub fn real_k2(x: &[f64]) -> Result<f64> {
    let c: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(k2(&c, &c)?.re)
}

pub fn real_k3(x: &[f64]) -> Result<f64> {
    let c: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(k3(&c, &c, &c)?.re)
}

pub fn real_k4(x: &[f64]) -> Result<f64> {
    let c: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(k4(&c, &c, &c, &c)?.re)
}
