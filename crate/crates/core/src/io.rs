//! File formats: click records (text or binary) with a JSON sidecar,
//! versioned JSON documents for spectra and fits, and plot tables.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{ClickRecord, SpectraSet};
use crate::fitting::FitResult;
use crate::simulator::OccupationPath;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BINARY_MAGIC: &[u8; 4] = b"PSK1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickFormat {
    Text,
    Binary,
}

/// Sidecar metadata stored next to a click file as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickMetadata {
    pub format_version: u32,
    pub tool_version: String,
    pub duration_s: f64,
    pub clicks: usize,
    /// Free-form provenance (generating parameters, seeds, thinning).
    #[serde(default)]
    pub provenance: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Writes the click payload and its sidecar.
pub fn write_clicks(path: &Path, record: &ClickRecord, format: ClickFormat, provenance: serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    match format {
        ClickFormat::Text => {
            writeln!(w, "# duration_s {}", record.duration())?;
            for t in record.timestamps() {
                // shortest round-trip representation
                writeln!(w, "{t:?}")?;
            }
        }
        ClickFormat::Binary => {
            w.write_all(BINARY_MAGIC)?;
            w.write_all(&(record.len() as u64).to_le_bytes())?;
            for t in record.timestamps() {
                w.write_all(&t.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    let meta = ClickMetadata {
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION.into(),
        duration_s: record.duration(),
        clicks: record.len(),
        provenance,
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn read_click_metadata(path: &Path) -> Result<Option<ClickMetadata>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let meta: ClickMetadata = serde_json::from_reader(BufReader::new(fs::File::open(side)?))?;
    check_version(meta.format_version)?;
    Ok(Some(meta))
}

fn check_version(found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::FormatVersion { found, expected: FORMAT_VERSION });
    }
    Ok(())
}

/// Parses text timestamps: one value in seconds per line, `#` starts a
/// comment, and a `# duration_s <value>` line sets the record duration.
pub fn parse_clicks_text(reader: impl BufRead) -> Result<(Vec<f64>, Option<f64>)> {
    let mut ts = Vec::new();
    let mut duration = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if let Some(c) = s.strip_prefix('#') {
            let mut parts = c.split_whitespace();
            if parts.next() == Some("duration_s") {
                let v = parts.next().and_then(|v| v.parse::<f64>().ok());
                duration = Some(v.ok_or_else(|| Error::Parse { line: i + 1, message: "malformed duration header".into() })?);
            }
            continue;
        }
        if s.is_empty() {
            continue;
        }
        let t: f64 = s.parse().map_err(|_| Error::Parse { line: i + 1, message: format!("not a number: {s:?}") })?;
        if !t.is_finite() {
            return Err(Error::Parse { line: i + 1, message: "timestamp is not finite".into() });
        }
        if let Some(&prev) = ts.last() {
            if t < prev {
                return Err(Error::Parse { line: i + 1, message: format!("timestamps not ascending ({prev} > {t})") });
            }
        }
        ts.push(t);
    }
    Ok((ts, duration))
}

pub fn parse_clicks_binary(mut reader: impl Read) -> Result<Vec<f64>> {
    let mut head = [0u8; 12];
    reader.read_exact(&mut head).map_err(|_| Error::Parse { line: 0, message: "truncated binary header".into() })?;
    if &head[..4] != BINARY_MAGIC {
        return Err(Error::Parse { line: 0, message: "missing PSK1 magic".into() });
    }
    let n = u64::from_le_bytes(head[4..12].try_into().unwrap()) as usize;
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    if buf.len() != 8 * n {
        return Err(Error::Parse { line: 0, message: format!("expected {} payload bytes for {n} clicks, found {}", 8 * n, buf.len()) });
    }
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Reads a click file in either format; the duration comes from the
/// sidecar, then the text header, then the last timestamp.
pub fn read_clicks(path: &Path) -> Result<ClickRecord> {
    let mut f = BufReader::new(fs::File::open(path)?);
    let is_binary = f.fill_buf()?.starts_with(BINARY_MAGIC);
    let (ts, header) = if is_binary { (parse_clicks_binary(f)?, None) } else { parse_clicks_text(f)? };
    let meta = read_click_metadata(path)?;
    let duration = match (meta.map(|m| m.duration_s), header) {
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => {
            log::warn!("{} carries no duration; using the last timestamp", path.display());
            ts.last().copied().unwrap_or(0.0)
        }
    };
    ClickRecord::new(ts, duration)
}

/// Versioned JSON envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub format_version: u32,
    pub tool_version: String,
    pub kind: String,
    /// Configuration and seeds of the producing run.
    #[serde(default)]
    pub run: serde_json::Value,
    pub data: T,
}

impl<T> Document<T> {
    pub fn new(kind: &str, run: serde_json::Value, data: T) -> Self {
        Document { format_version: FORMAT_VERSION, tool_version: TOOL_VERSION.into(), kind: kind.into(), run, data }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
}

fn read_document<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Document<T>> {
    let text = fs::read_to_string(path)?;
    let head: Header = serde_json::from_str(&text)?;
    check_version(head.format_version)?;
    if head.kind != kind {
        return Err(Error::InvalidConfig(format!("{} holds a {} document, expected {kind}", path.display(), head.kind)));
    }
    Ok(serde_json::from_str(&text)?)
}

pub fn read_spectra(path: &Path) -> Result<Document<SpectraSet>> {
    read_document(path, "spectra")
}

pub fn read_fit(path: &Path) -> Result<Document<FitResult>> {
    read_document(path, "fit")
}

/// Two columns `time state` with state 1 for bright, one row per dwell start.
pub fn write_occupation(path: &Path, occupation: &OccupationPath) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# time_s bright")?;
    for (start, _, bright) in occupation.intervals() {
        writeln!(w, "{start:?} {}", bright as u8)?;
    }
    writeln!(w, "# duration_s {}", occupation.duration)?;
    w.flush()?;
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

/// CSV tables `S²(ω)`, the `S³(ω, ω₀)` cut along the second argument at
/// `ω₀ = 0` and the `S⁴` diagonal cut, with optional model overlay.
pub fn plot_tables(measured: &SpectraSet, model: Option<&SpectraSet>) -> Vec<(String, String)> {
    let w = measured.grid.values();
    let n = w.len();
    let mut out = Vec::new();
    if let Some(s2) = &measured.s2 {
        let m = model.and_then(|m| m.s2.as_ref());
        let mut t = String::from("omega_khz,value,sigma,model\n");
        for i in 0..n {
            t += &format!("{:e},{:e},{:e},{}\n", w[i], s2.value[i], s2.sigma[i], fmt(m.map(|m| m.value[i])));
        }
        out.push(("s2".into(), t));
    }
    let mid = n / 2;
    if let Some(s3) = &measured.s3 {
        let m = model.and_then(|m| m.s3.as_ref());
        let mut t = String::from("omega_khz,re,im,sigma_re,sigma_im,model_re,model_im\n");
        for i in 0..n {
            t += &format!(
                "{:e},{:e},{:e},{:e},{:e},{},{}\n",
                w[i],
                s3.re.get(i, mid),
                s3.im.get(i, mid),
                s3.sigma_re.get(i, mid),
                s3.sigma_im.get(i, mid),
                fmt(m.map(|m| *m.re.get(i, mid))),
                fmt(m.map(|m| *m.im.get(i, mid)))
            );
        }
        out.push(("s3_cut".into(), t));
    }
    if let Some(s4) = &measured.s4 {
        let m = model.and_then(|m| m.s4.as_ref());
        let mut t = String::from("omega_khz,value,sigma,model\n");
        for i in 0..n {
            t += &format!("{:e},{:e},{:e},{}\n", w[i], s4.value.get(i, i), s4.sigma.get(i, i), fmt(m.map(|m| *m.value.get(i, i))));
        }
        out.push(("s4_cut".into(), t));
    }
    out
}

/// Per-subset fit table.
pub fn fit_table(fit: &FitResult) -> String {
    let mut t = String::from("subset,clicks,gamma_in_khz,gamma_out_khz,beta_sq_khz,gamma_ph_khz,objective,converged,error\n");
    for s in &fit.subsets {
        t += &format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.index,
            s.clicks,
            fmt(s.gamma_in),
            fmt(s.gamma_out),
            fmt(s.beta_sq),
            fmt(s.gamma_ph),
            fmt(s.objective),
            s.converged,
            s.error.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    t
}
