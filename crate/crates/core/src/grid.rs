//! Frequency grids, square arrays over them and the symmetry orbits of
//! spectra on symmetric index grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending angular frequencies in kHz (rad/ms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    values: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("frequency grid is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("frequency grid contains non-finite values".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("frequency grid must be strictly ascending".into()));
        }
        Ok(FrequencyGrid { values })
    }

    /// `n` equally spaced points on `[-max, max]`.
    pub fn symmetric(max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(max > 0.0) {
            return Err(Error::InvalidConfig(format!("symmetric grid needs n >= 2 and max > 0, got n = {n}, max = {max}")));
        }
        let step = 2.0 * max / (n - 1) as f64;
        let values = (0..n).map(|i| -max + step * i as f64).collect::<Vec<_>>();
        // pin exact mirror values so sign-flip symmetries hold bitwise
        let mut v = values.clone();
        for i in 0..n {
            let m = 0.5 * (values[i] - values[n - 1 - i]);
            v[i] = m;
        }
        FrequencyGrid::new(v)
    }

    /// `ω_j = j·step` for `j = -half..=half`.
    pub fn integer_multiples(step: f64, half: usize) -> Result<Self> {
        let h = half as i64;
        FrequencyGrid::new((-h..=h).map(|j| j as f64 * step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mirror-symmetric about 0 within a relative tolerance.
    pub fn is_symmetric(&self) -> bool {
        let n = self.values.len();
        let scale = self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        (0..n).all(|i| (self.values[i] + self.values[n - 1 - i]).abs() <= 1e-12 * scale)
    }
}

/// Row-major n×n array; entry `(i, j)` belongs to `(ω_i, ω_j)`.
///
/// Serialized as a list of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Square<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Clone> Square<T> {
    pub fn filled(n: usize, value: T) -> Self {
        Square { n, data: vec![value; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Square { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: rows.iter().map(|r| r.len()).max().unwrap_or(0) });
        }
        Ok(Square { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n.max(1)).map(|c| c.to_vec()).collect()
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Square<U> {
        Square { n: self.n, data: self.data.iter().map(f).collect() }
    }
}

impl<T> Square<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.n + j] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T: Clone + Serialize> Serialize for Square<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de, T: Clone + Deserialize<'de>> Deserialize<'de> for Square<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(deserializer)?;
        Square::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Symmetry class of one spectrum point, expressed in signed grid indices
/// `j ∈ [-half, half]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    pub representative: Vec<i64>,
    /// All members inside the grid, representative included.
    pub members: Vec<Vec<i64>>,
    /// Some members carry the complex conjugate of the representative value.
    pub conjugated: Vec<bool>,
    /// The value at the representative is real by symmetry.
    pub real: bool,
}

fn in_range(j: i64, half: i64) -> bool {
    j.abs() <= half
}

fn sorted_orbit(mut members: Vec<(Vec<i64>, bool)>) -> Orbit {
    members.sort();
    members.dedup_by(|a, b| a.0 == b.0);
    let representative = members[0].0.clone();
    let rep_conj = members[0].1;
    let conjugated = members.iter().map(|(_, c)| *c != rep_conj).collect();
    Orbit { representative, members: members.into_iter().map(|(m, _)| m).collect(), conjugated, real: false }
}

/// Orbit of an S² point under `j → -j` (a conjugation, the spectrum is real).
pub fn s2_orbit(j: i64) -> Orbit {
    let mut m = vec![vec![j.abs()]];
    if j != 0 {
        m.push(vec![-j.abs()]);
    }
    let conjugated = vec![false; m.len()];
    Orbit { representative: vec![j.abs()], members: m, conjugated, real: true }
}

/// Orbit of the bispectrum point `(j1, j2)` under the permutations of
/// `(j1, j2, -j1-j2)` and overall negation (which conjugates the value).
pub fn s3_orbit(j1: i64, j2: i64, half: i64) -> Orbit {
    let t = [j1, j2, -j1 - j2];
    let perms = [[0, 1], [1, 0], [0, 2], [2, 0], [1, 2], [2, 1]];
    let mut members = Vec::new();
    let mut plain = Vec::new();
    for p in perms {
        let (a, b) = (t[p[0]], t[p[1]]);
        plain.push(vec![a, b]);
        if in_range(a, half) && in_range(b, half) {
            members.push((vec![a, b], false));
        }
        if in_range(-a, half) && in_range(-b, half) {
            members.push((vec![-a, -b], true));
        }
    }
    let mut orbit = sorted_orbit(members);
    let neg = vec![-j1, -j2];
    // self-conjugate when the negated point is a plain permutation
    orbit.real = plain.contains(&neg);
    if orbit.real {
        orbit.conjugated.iter_mut().for_each(|c| *c = false);
    }
    orbit
}

/// Orbit of the trispectrum cut point `(j1, j2)` (arguments `ω1, ω2, -ω1, -ω2`),
/// generated by sign flips of either index and the swap; the value is real.
pub fn s4_cut_orbit(j1: i64, j2: i64) -> Orbit {
    let (a, b) = (j1.abs().max(j2.abs()), j1.abs().min(j2.abs()));
    let mut members = Vec::new();
    for (x, y) in [(a, b), (b, a)] {
        for sx in [1, -1] {
            for sy in [1, -1] {
                members.push(vec![sx * x, sy * y]);
            }
        }
    }
    members.sort();
    members.dedup();
    let conjugated = vec![false; members.len()];
    Orbit { representative: vec![a, b], members, conjugated, real: true }
}

/// All orbits of a 2-D spectrum on signed indices `-half..=half`, ordered by representative.
pub fn orbits_2d(half: i64, orbit: impl Fn(i64, i64) -> Orbit) -> Vec<Orbit> {
    let mut out: Vec<Orbit> = Vec::new();
    for j1 in -half..=half {
        for j2 in -half..=half {
            let o = orbit(j1, j2);
            if o.representative == vec![j1, j2] {
                out.push(o);
            }
        }
    }
    out
}
