use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Photon arrival times in seconds over a record of known duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    timestamps: Vec<f64>,
    duration: f64,
}

impl ClickRecord {
    pub fn new(timestamps: Vec<f64>, duration: f64) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::InvalidClickRecord(format!("duration must be finite and nonnegative, got {duration}")));
        }
        for (i, &t) in timestamps.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::InvalidClickRecord(format!("timestamp {i} is not finite")));
            }
            if t < 0.0 || t > duration {
                return Err(Error::InvalidClickRecord(format!("timestamp {t} outside [0, {duration}]")));
            }
            if i > 0 && t < timestamps[i - 1] {
                return Err(Error::InvalidClickRecord(format!(
                    "timestamps not ascending at index {i} ({} > {t})",
                    timestamps[i - 1]
                )));
            }
        }
        Ok(ClickRecord { timestamps, duration })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Mean click rate in kHz.
    pub fn rate_khz(&self) -> f64 {
        if self.duration == 0.0 {
            0.0
        } else {
            self.timestamps.len() as f64 / (self.duration * 1e3)
        }
    }

    /// Clicks inside `[start, end)` seconds, re-referenced to `start`.
    pub fn window(&self, start: f64, end: f64) -> Result<ClickRecord> {
        let lo = self.timestamps.partition_point(|&t| t < start);
        let hi = self.timestamps.partition_point(|&t| t < end);
        let ts = self.timestamps[lo..hi].iter().map(|t| t - start).collect::<Vec<_>>();
        let dur = end - start;
        // subtraction can push a value a hair past the new duration
        let ts = ts.into_iter().map(|t| t.clamp(0.0, dur)).collect();
        ClickRecord::new(ts, dur)
    }
}

/// Clicks grouped into consecutive frames of equal length.
#[derive(Debug, Clone)]
pub struct Frames<'a> {
    record: &'a ClickRecord,
    frame_length: f64,
    bounds: Vec<usize>,
}

impl<'a> Frames<'a> {
    pub fn count(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Seconds.
    pub fn frame_length(&self) -> f64 {
        self.frame_length
    }

    pub fn clicks_in(&self, k: usize) -> usize {
        self.bounds[k + 1] - self.bounds[k]
    }

    /// Click times of frame `k` relative to its start, seconds.
    pub fn times(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        let start = k as f64 * self.frame_length;
        self.record.timestamps[self.bounds[k]..self.bounds[k + 1]].iter().map(move |t| t - start)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.count()).map(|k| self.times(k).collect()).collect()
    }
}

fn frame_of(t: f64, frame: f64) -> usize {
    let mut k = (t / frame).floor() as i64;
    while k > 0 && t < k as f64 * frame {
        k -= 1;
    }
    while t >= (k + 1) as f64 * frame {
        k += 1;
    }
    k.max(0) as usize
}

/// Splits into `floor(duration / frame_length)` half-open frames; the
/// remainder is dropped. Fewer than `min_frames` frames is an error.
pub fn segment(record: &ClickRecord, frame_length: f64, min_frames: usize) -> Result<Frames<'_>> {
    if !(frame_length > 0.0) || !frame_length.is_finite() {
        return Err(Error::InvalidConfig(format!("frame length must be positive, got {frame_length}")));
    }
    let ratio = record.duration / frame_length;
    let mut n = ratio.floor() as usize;
    // tolerate duration = n·T computed with rounding error
    if ((n + 1) as f64 - ratio).abs() < 1e-9 * ratio.max(1.0) {
        n += 1;
    }
    if n < min_frames {
        return Err(Error::InsufficientFrames { frames: n, required: min_frames });
    }
    let mut bounds = Vec::with_capacity(n + 1);
    bounds.push(0);
    let ts = &record.timestamps;
    let mut idx = 0;
    for k in 0..n {
        while idx < ts.len() && frame_of(ts[idx], frame_length) <= k {
            idx += 1;
        }
        bounds.push(idx);
    }
    Ok(Frames { record, frame_length, bounds })
}

/// Keeps each click independently with probability `alpha`.
pub fn thin(record: &ClickRecord, alpha: f64, seed: u64) -> Result<ClickRecord> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("photon fraction must lie in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(record.clone());
    }
    let mut r = rng::stream(seed, 0x7448_494e);
    let kept = record.timestamps.iter().copied().filter(|_| r.random::<f64>() < alpha).collect();
    Ok(ClickRecord { timestamps: kept, duration: record.duration })
}
