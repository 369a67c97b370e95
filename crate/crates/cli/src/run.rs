use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use majorana_twist::freefermion::{analyze, DEFAULT_ZERO_MODE_TOL};
use majorana_twist::trace::{render_csv, FULL_TRACE_LIMIT};
use majorana_twist::{
    build_floquet_step, build_translation, export_qasm, full_trace, partial_trace, run_mitigated_series,
    AutocorrSeries, ConfigError, EstimatorSpec, PauliAxis, PauliString, RunConfig, TraceOptions, ValidatedConfig,
};
use majorana_twist::noise::Sampling;

use crate::plot::{self, Curve};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Run(_) => 1,
            CliError::Io { .. } => 3,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Simulate,
    ZeroMode,
    Translate,
    Noisy,
    ExportQasm,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::ZeroMode => "zero-mode",
            Kind::Translate => "translate",
            Kind::Noisy => "noisy",
            Kind::ExportQasm => "export-qasm",
        }
    }

    fn artifact(self) -> &'static str {
        match self {
            Kind::Simulate => "autocorrelation.csv",
            Kind::ZeroMode => "zero_mode.json",
            Kind::Translate => "translated.csv",
            Kind::Noisy => "noisy.csv",
            Kind::ExportQasm => "floquet.qasm",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub plot: Option<PathBuf>,
    pub export_qasm: Option<PathBuf>,
    pub zero_mode_tol: Option<f64>,
    pub allow_large: bool,
    pub translations: Option<usize>,
}

/// Options that live outside the run config but still shape the output.
#[derive(Debug, Clone, Copy)]
struct RunOptions {
    zero_mode_tol: f64,
    allow_large: bool,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn resolve(kind: Kind, text: &str, ov: &Overrides) -> Result<(RunConfig, RunOptions), CliError> {
    let mut cfg = RunConfig::from_json(text)?;
    // A manifest carries the non-config options of the run it records.
    let recorded = serde_json::from_str::<Value>(text).ok().and_then(|v| v.get("options").cloned());
    let recorded_tol = recorded.as_ref().and_then(|o| o.get("zero_mode_tol")).and_then(Value::as_f64);
    let recorded_large = recorded.as_ref().and_then(|o| o.get("allow_large")).and_then(Value::as_bool);

    if let Some(steps) = ov.steps {
        cfg.steps = steps as i64;
    }
    if let Some(samples) = ov.samples {
        cfg.estimator.kind = "partial".into();
        cfg.estimator.samples = Some(samples.min(i64::MAX as usize) as i64);
    }
    if let Some(seed) = ov.seed {
        cfg.estimator.seed = Some(seed);
        if let Some(noise) = cfg.noise.as_mut() {
            noise.config.seed = seed;
        }
    }
    if cfg.estimator.kind == "partial" && cfg.estimator.seed.is_none() {
        cfg.estimator.seed = Some(0);
    }
    if let Some(out) = &ov.out {
        cfg.out = Some(out.to_string_lossy().into_owned());
    }
    if kind == Kind::Translate {
        cfg.translations = match ov.translations {
            Some(t) => t as i64,
            None => cfg.translations.max(1),
        };
        if cfg.translations < 1 {
            return Err(ConfigError::Field {
                field: "translations".into(),
                message: "translate needs at least one translation".into(),
            }
            .into());
        }
    }
    let options = RunOptions {
        zero_mode_tol: ov.zero_mode_tol.or(recorded_tol).unwrap_or(DEFAULT_ZERO_MODE_TOL),
        allow_large: ov.allow_large || recorded_large.unwrap_or(false),
    };
    if !(options.zero_mode_tol > 0.0 && options.zero_mode_tol.is_finite()) {
        return Err(ConfigError::Field {
            field: "zero_mode_tol".into(),
            message: format!("must be positive and finite (got {})", options.zero_mode_tol),
        }
        .into());
    }
    Ok((cfg, options))
}

fn trace_options(v: &ValidatedConfig, options: RunOptions) -> TraceOptions {
    let mut t = TraceOptions::new(v.steps).with_translations(v.translations);
    t.allow_large = options.allow_large;
    t
}

fn trace_all(v: &ValidatedConfig, observables: &[PauliString], options: RunOptions) -> Result<Vec<AutocorrSeries>, CliError> {
    observables
        .iter()
        .map(|obs| {
            let opts = trace_options(v, options);
            match v.estimator {
                EstimatorSpec::Full => full_trace(&v.params, obs, opts),
                EstimatorSpec::Partial { samples, seed } => partial_trace(&v.params, obs, samples, seed, opts),
            }
            .map_err(run_err)
        })
        .collect()
}

fn translated_observables(v: &ValidatedConfig, explicit: bool) -> Result<Vec<PauliString>, CliError> {
    if explicit {
        return Ok(v.observables.clone());
    }
    let t = build_translation(&v.params, v.translations).map_err(run_err)?;
    let n = v.params.num_sites();
    let bare = PauliString::single(n, v.params.defect(), PauliAxis::Y).map_err(run_err)?;
    Ok(vec![t.zero_mode.string, bare])
}

fn noisy_series(v: &ValidatedConfig, options: RunOptions) -> Result<Vec<AutocorrSeries>, CliError> {
    let settings = v.noise.as_ref().ok_or_else(|| ConfigError::Field {
        field: "noise".into(),
        message: "the noisy command needs a noise section".into(),
    })?;
    let sampling = match v.estimator {
        EstimatorSpec::Full => {
            let n = v.params.num_sites();
            if n > FULL_TRACE_LIMIT && !options.allow_large {
                return Err(run_err(format!(
                    "a full noisy trace at L = {n} exceeds the limit of {FULL_TRACE_LIMIT}; use a partial estimator or --allow-large"
                )));
            }
            Sampling::Full
        }
        EstimatorSpec::Partial { samples, seed } => Sampling::Partial { samples, seed },
    };
    let mut out = Vec::new();
    for obs in &v.observables {
        let s = run_mitigated_series(&v.params, obs, v.steps, v.translations, sampling, settings).map_err(run_err)?;
        for (n, value) in s.mitigated.values.iter().enumerate() {
            if value.abs() > 1.0 {
                eprintln!("warning: mitigated {} at n = {n} is {value}, outside [-1, 1]", s.mitigated.observable);
            }
        }
        out.push(s.raw);
        out.push(s.mitigated);
    }
    Ok(out)
}

fn series_curves(series: &[AutocorrSeries]) -> Vec<Curve> {
    series
        .iter()
        .map(|s| Curve {
            label: format!("{} ({})", s.observable, s.estimator),
            points: s.values.iter().enumerate().map(|(n, &v)| (n as f64, v)).collect(),
        })
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn execute(kind: Kind, config_path: &Path, ov: Overrides) -> Result<(), CliError> {
    let text = read_text(config_path)?;
    let (cfg, options) = resolve(kind, &text, &ov)?;
    let v = cfg.validate()?;

    let (body, plot_data): (Vec<u8>, Option<(Vec<Curve>, &str, &str)>) = match kind {
        Kind::Simulate => {
            let series = trace_all(&v, &v.observables, options)?;
            (render_csv(&series).into_bytes(), Some((series_curves(&series), "n", "A(n)")))
        }
        Kind::Translate => {
            let observables = translated_observables(&v, cfg.observable.is_some())?;
            let series = trace_all(&v, &observables, options)?;
            (render_csv(&series).into_bytes(), Some((series_curves(&series), "n", "A(n)")))
        }
        Kind::Noisy => {
            let series = noisy_series(&v, options)?;
            (render_csv(&series).into_bytes(), Some((series_curves(&series), "n", "A(n)")))
        }
        Kind::ZeroMode => {
            let report = analyze(&v.params, options.zero_mode_tol).map_err(run_err)?;
            let curves = report
                .sectors
                .iter()
                .flat_map(|s| {
                    s.modes.iter().enumerate().map(move |(i, m)| Curve {
                        label: format!("{:?} mode {i}", s.sector),
                        points: m.profile.iter().enumerate().map(|(j, &w)| (j as f64, w)).collect(),
                    })
                })
                .collect();
            let mut json = serde_json::to_string_pretty(&report).map_err(run_err)?;
            json.push('\n');
            (json.into_bytes(), Some((curves, "site", "weight")))
        }
        Kind::ExportQasm => (export_qasm(&build_floquet_step(&v.params)).into_bytes(), None),
    };

    let out_dir = PathBuf::from(v.out.as_deref().unwrap_or("."));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let mut artifacts = Vec::new();
    let main_path = out_dir.join(kind.artifact());
    write_bytes(&main_path, &body)?;
    artifacts.push((main_path, sha256_hex(&body)));

    if let Some(path) = &ov.plot {
        let (curves, x, y) = plot_data.ok_or_else(|| run_err("--plot: export-qasm produces no series"))?;
        let svg = plot::render_svg(&curves, x, y);
        write_bytes(path, svg.as_bytes())?;
        artifacts.push((path.clone(), sha256_hex(svg.as_bytes())));
    }
    if let Some(path) = &ov.export_qasm {
        let qasm = export_qasm(&build_floquet_step(&v.params));
        write_bytes(path, qasm.as_bytes())?;
        artifacts.push((path.clone(), sha256_hex(qasm.as_bytes())));
    }

    let manifest = json!({
        "command": kind.name(),
        "config": cfg.to_json(),
        "options": {
            "zero_mode_tol": options.zero_mode_tol,
            "allow_large": options.allow_large,
        },
        "artifacts": artifacts
            .iter()
            .map(|(p, h)| json!({ "path": p.to_string_lossy(), "sha256": h }))
            .collect::<Vec<_>>(),
    });
    let manifest_path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(run_err)?;
    text.push('\n');
    write_bytes(&manifest_path, text.as_bytes())
}
