use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use polyspectra::analytic::ModelSpectra;
use polyspectra::estimator::{self, ClickRecord, EstimationConfig, MarkWeights, SpectraSet, Window};
use polyspectra::fitting::{self, FitConfig};
use polyspectra::io::{self, ClickFormat, Document};
use polyspectra::simulator;
use polyspectra::{rng, EmitterParams};

use crate::config::RunConfig;
use crate::failure::{code, Failure};

pub type Handler = fn(&RunConfig, bool) -> Result<(), Failure>;

const PARAM_KEYS: [(&str, &str); 5] =
    [("gamma_in", "0.27"), ("gamma_out", "0.8"), ("gamma_ph", "298"), ("gamma_det", "5000"), ("beta_sq", "25000")];

const ESTIMATION_KEYS: [(&str, &str); 10] = [
    ("frame_length_s", "0.5"),
    ("n_freq", "65"),
    ("max_freq_khz", "21.4"),
    ("window", "confined_gaussian"),
    ("window_sigma", "0.14"),
    ("orders", "1,2,3,4"),
    ("resampling_count", "100"),
    ("batch_count", "10"),
    ("seed", "0"),
    ("marks", "exponential"),
];

const FIT_KEYS: [(&str, &str); 11] = [
    ("fit_orders", "1,2,3,4"),
    ("fit_gamma_det", "1000000"),
    ("max_evaluations", "2000"),
    ("tolerance", "1e-5"),
    ("multistart", "3"),
    ("start_span_decades", "2"),
    ("initial_gamma_in", ""),
    ("initial_gamma_out", ""),
    ("initial_beta_sq", ""),
    ("n_subsets", "10"),
    ("seed", "0"),
];

pub const SIMULATE_KEYS: [(&str, &str); 13] = [
    ("output", ""),
    ("duration_s", "360"),
    ("seed", "0"),
    ("gamma_in", "0.27"),
    ("gamma_out", "0.8"),
    ("gamma_ph", "298"),
    ("gamma_det", "5000"),
    ("beta_sq", "25000"),
    ("exact", "false"),
    ("format", "text"),
    ("occupation", ""),
    ("trace", ""),
    ("trace_dt_s", "1e-6"),
];

pub const THIN_KEYS: [(&str, &str); 5] = [("input", ""), ("output", ""), ("alpha", "1"), ("seed", "0"), ("format", "text")];

pub const PLOT_KEYS: [(&str, &str); 4] = [("input", ""), ("output", ""), ("model", ""), ("fit", "")];

fn with(base: &[(&'static str, &'static str)], extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    let mut v = base.to_vec();
    for e in extra {
        if !v.iter().any(|(k, _)| k == &e.0) {
            v.push(*e);
        }
    }
    v
}

pub fn estimate_keys() -> Vec<(&'static str, &'static str)> {
    with(&[("input", ""), ("output", "")], &ESTIMATION_KEYS)
}

pub fn model_keys() -> Vec<(&'static str, &'static str)> {
    let grid = [("frame_length_s", "0.5"), ("n_freq", "65"), ("max_freq_khz", "21.4"), ("grid_from", ""), ("shot_floor", "false")];
    with(&with(&[("output", "")], &PARAM_KEYS), &grid)
}

pub fn fit_keys() -> Vec<(&'static str, &'static str)> {
    with(&[("input", ""), ("clicks", ""), ("output", "")], &FIT_KEYS)
}

pub fn subset_keys() -> Vec<(&'static str, &'static str)> {
    with(&with(&[("input", ""), ("output", ""), ("alpha", "1")], &ESTIMATION_KEYS), &FIT_KEYS)
}

fn echo_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

/// Refuses to overwrite any of `paths` unless forced.
fn guard(paths: &[PathBuf], force: bool) -> Result<(), Failure> {
    if force {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(Failure { code: code::OUTPUT_EXISTS, message: format!("{} exists; pass --force to overwrite", p.display()) });
        }
    }
    Ok(())
}

fn write_echo(cfg: &RunConfig, output: &Path) -> Result<(), Failure> {
    fs::write(echo_path(output), cfg.echo()).map_err(|e| Failure::io(format!("cannot write config echo: {e}")))
}

fn click_format(cfg: &RunConfig) -> Result<ClickFormat, Failure> {
    match cfg.raw("format") {
        "text" => Ok(ClickFormat::Text),
        "binary" => Ok(ClickFormat::Binary),
        other => Err(Failure::config(format!("format must be text or binary, got {other:?}"))),
    }
}

fn params(cfg: &RunConfig) -> Result<EmitterParams, Failure> {
    Ok(EmitterParams::new(
        cfg.get("gamma_in")?,
        cfg.get("gamma_out")?,
        cfg.get("gamma_ph")?,
        cfg.get("gamma_det")?,
        cfg.get("beta_sq")?,
    )?)
}

fn estimation(cfg: &RunConfig) -> Result<EstimationConfig, Failure> {
    let window = match cfg.raw("window") {
        "confined_gaussian" => Window::ConfinedGaussian { sigma: cfg.get("window_sigma")? },
        "rectangular" => Window::Rectangular,
        other => return Err(Failure::config(format!("window must be confined_gaussian or rectangular, got {other:?}"))),
    };
    let marks = match cfg.raw("marks") {
        "exponential" => MarkWeights::Exponential,
        "unit" => MarkWeights::Unit,
        other => return Err(Failure::config(format!("marks must be exponential or unit, got {other:?}"))),
    };
    let c = EstimationConfig {
        frame_length_s: cfg.get("frame_length_s")?,
        n_freq: cfg.get("n_freq")?,
        max_freq_khz: cfg.get("max_freq_khz")?,
        window,
        orders: cfg.list("orders")?,
        resampling_count: cfg.get("resampling_count")?,
        batch_count: cfg.get("batch_count")?,
        seed: cfg.get("seed")?,
        marks,
    };
    c.validate()?;
    Ok(c)
}

fn fit_config(cfg: &RunConfig) -> Result<FitConfig, Failure> {
    let initial = match (cfg.optional::<f64>("initial_gamma_in")?, cfg.optional::<f64>("initial_gamma_out")?) {
        (Some(a), Some(b)) => Some([a, b]),
        (None, None) => None,
        _ => return Err(Failure::config("initial_gamma_in and initial_gamma_out must be given together")),
    };
    let c = FitConfig {
        orders: cfg.list("fit_orders")?,
        gamma_det: cfg.get("fit_gamma_det")?,
        max_evaluations: cfg.get("max_evaluations")?,
        tolerance: cfg.get("tolerance")?,
        multistart: cfg.get("multistart")?,
        start_span_decades: cfg.get("start_span_decades")?,
        initial,
        initial_beta_sq: cfg.optional("initial_beta_sq")?,
        n_subsets: cfg.get("n_subsets")?,
        seed: cfg.get("seed")?,
    };
    c.validate()?;
    Ok(c)
}

fn output(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    Ok(PathBuf::from(cfg.required("output")?))
}

pub fn simulate(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let out = output(cfg)?;
    let p = params(cfg)?;
    let duration: f64 = cfg.get("duration_s")?;
    let seed: u64 = cfg.get("seed")?;
    let exact: bool = cfg.get("exact")?;
    let format = click_format(cfg)?;
    let occupation = cfg.optional::<PathBuf>("occupation")?;
    let trace = cfg.optional::<PathBuf>("trace")?;
    let mut targets = vec![out.clone(), io::sidecar_path(&out), echo_path(&out)];
    targets.extend(occupation.iter().cloned());
    targets.extend(trace.iter().cloned());
    guard(&targets, force)?;

    let clicks = if exact {
        if occupation.is_some() {
            return Err(Failure::config("occupation output is only available without exact"));
        }
        simulator::simulate_emitter_exact(&p, duration, seed)?
    } else {
        let (path, clicks) = simulator::simulate_emitter(&p, duration, seed)?;
        if let Some(o) = &occupation {
            io::write_occupation(o, &path)?;
        }
        clicks
    };
    log::info!("simulated {} clicks over {duration} s", clicks.len());
    let provenance = json!({ "source": "simulate", "params": p, "seed": seed, "exact": exact, "rng": rng::RNG_ALGORITHM, "alpha": 1.0 });
    io::write_clicks(&out, &clicks, format, provenance)?;
    if let Some(t) = &trace {
        let tr = simulator::render_trace(&clicks, p.gamma_det, p.beta_sq, cfg.get("trace_dt_s")?, rng::derive_seed(seed, 3, 0))?;
        let mut s = format!("# dt_s {}\n", tr.dt);
        for v in &tr.samples {
            s += &format!("{v:?}\n");
        }
        fs::write(t, s).map_err(|e| Failure::io(format!("cannot write {}: {e}", t.display())))?;
    }
    write_echo(cfg, &out)
}

fn read_input_clicks(path: &str) -> Result<(ClickRecord, Option<io::ClickMetadata>), Failure> {
    let p = Path::new(path);
    let rec = io::read_clicks(p)?;
    let meta = io::read_click_metadata(p)?;
    Ok((rec, meta))
}

fn alpha_of(meta: &Option<io::ClickMetadata>) -> f64 {
    meta.as_ref().and_then(|m| m.provenance.get("alpha")).and_then(|a| a.as_f64()).unwrap_or(1.0)
}

pub fn thin(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let input = cfg.required("input")?;
    let out = output(cfg)?;
    guard(&[out.clone(), io::sidecar_path(&out), echo_path(&out)], force)?;
    let alpha: f64 = cfg.get("alpha")?;
    let seed: u64 = cfg.get("seed")?;
    let (rec, meta) = read_input_clicks(&input)?;
    let thinned = estimator::thin(&rec, alpha, seed)?;
    let provenance = json!({
        "source": "thin",
        "input": input,
        "alpha": alpha * alpha_of(&meta),
        "step_alpha": alpha,
        "seed": seed,
        "rng": rng::RNG_ALGORITHM,
        "parent": meta.map(|m| m.provenance),
    });
    io::write_clicks(&out, &thinned, click_format(cfg)?, provenance)?;
    write_echo(cfg, &out)
}

pub fn estimate(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let input = cfg.required("input")?;
    let out = output(cfg)?;
    guard(&[out.clone(), echo_path(&out)], force)?;
    let est = estimation(cfg)?;
    let (rec, meta) = read_input_clicks(&input)?;
    let mut set = estimator::estimate_spectra(&rec, &est)?;
    set.metadata.photon_fraction = Some(alpha_of(&meta));
    io::write_json(&out, &Document::new("spectra", cfg.to_json(), set))?;
    write_echo(cfg, &out)
}

pub fn model_spectra(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let out = output(cfg)?;
    guard(&[out.clone(), echo_path(&out)], force)?;
    let p = params(cfg)?;
    let grid = match cfg.optional::<PathBuf>("grid_from")? {
        Some(g) => io::read_spectra(&g)?.data.grid,
        None => {
            let e = EstimationConfig {
                frame_length_s: cfg.get("frame_length_s")?,
                n_freq: cfg.get("n_freq")?,
                max_freq_khz: cfg.get("max_freq_khz")?,
                ..Default::default()
            };
            e.validate()?;
            e.grid()
        }
    };
    let model = ModelSpectra::for_emitter(&p, &grid, cfg.get("shot_floor")?)?;
    io::write_json(&out, &Document::new("spectra", cfg.to_json(), SpectraSet::from_model(&model)))?;
    write_echo(cfg, &out)
}

pub fn fit(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let spectra = cfg.required("input")?;
    let clicks = cfg.required("clicks")?;
    let out = output(cfg)?;
    guard(&[out.clone(), echo_path(&out)], force)?;
    let fc = fit_config(cfg)?;
    let measured = io::read_spectra(Path::new(&spectra))?.data;
    let (rec, _) = read_input_clicks(&clicks)?;
    let result = fitting::fit(&measured, &rec, &fc)?;
    log::info!(
        "gamma_in = {:.6} kHz, gamma_out = {:.6} kHz, beta_sq = {:.6e} kHz, gamma_ph = {:.6} kHz",
        result.gamma_in.value,
        result.gamma_out.value,
        result.beta_sq,
        result.gamma_ph_derived
    );
    io::write_json(&out, &Document::new("fit", cfg.to_json(), result))?;
    write_echo(cfg, &out)
}

pub fn subset_errors(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let input = cfg.required("input")?;
    let out = output(cfg)?;
    guard(&[out.clone(), echo_path(&out)], force)?;
    let est = estimation(cfg)?;
    let fc = fit_config(cfg)?;
    let (rec, _) = read_input_clicks(&input)?;
    let result = fitting::subset_errors(&rec, cfg.get("alpha")?, &est, &fc)?;
    io::write_json(&out, &Document::new("fit", cfg.to_json(), result))?;
    write_echo(cfg, &out)
}

pub fn plot_export(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let input = cfg.required("input")?;
    let prefix = cfg.required("output")?;
    let measured = io::read_spectra(Path::new(&input))?.data;
    let model = cfg.optional::<PathBuf>("model")?.map(|m| io::read_spectra(&m)).transpose()?.map(|d| d.data);
    if let Some(m) = &model {
        if m.grid != measured.grid {
            return Err(Failure::config("model spectra use a different grid than the measured spectra"));
        }
    }
    let fit = cfg.optional::<PathBuf>("fit")?.map(|f| io::read_fit(&f)).transpose()?.map(|d| d.data);
    let mut tables = io::plot_tables(&measured, model.as_ref());
    if let Some(f) = &fit {
        tables.push(("fit_subsets".into(), io::fit_table(f)));
    }
    let paths: Vec<PathBuf> = tables.iter().map(|(n, _)| PathBuf::from(format!("{prefix}_{n}.csv"))).collect();
    let mut all = paths.clone();
    all.push(echo_path(Path::new(&prefix)));
    guard(&all, force)?;
    for (p, (_, t)) in paths.iter().zip(&tables) {
        fs::write(p, t).map_err(|e| Failure::io(format!("cannot write {}: {e}", p.display())))?;
    }
    write_echo(cfg, Path::new(&prefix))
}
