//! JSON run configuration and its validation.
//!
//! Angles may be plain radians or strings such as `"0.75pi"`. When no
//! observable is given the run covers σx, σy and σz at the defect and at
//! the bulk probe site.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{MAX_SITES, ModelError, ModelParams, PauliAxis, PauliString, DEFAULT_COUPLING, DEFAULT_FIELD};
use crate::noise::{NoiseError, NoiseMetadata};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Name of the offending key, when the error concerns one.
    pub fn field_name(&self) -> Option<&str> {
        match self {
            ConfigError::Field { field, .. } => Some(field),
            ConfigError::Parse(_) => None,
        }
    }
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        let text = e.to_string();
        match text.split_once(": ") {
            Some((field, message)) => ConfigError::field(field, message),
            None => ConfigError::Parse(text),
        }
    }
}

impl From<NoiseError> for ConfigError {
    fn from(e: NoiseError) -> Self {
        let text = e.to_string();
        match text.split_once(": ") {
            Some((field, message)) if field.starts_with("noise") => ConfigError::field(field, message),
            _ => ConfigError::field("noise", text),
        }
    }
}

/// Radians, written either as a number or as `"<k>pi"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_f64()
                .map(Angle)
                .ok_or_else(|| serde::de::Error::custom("angle out of range")),
            Value::String(s) => parse_angle(&s)
                .map(Angle)
                .ok_or_else(|| serde::de::Error::custom(format!("cannot read angle {s:?}"))),
            other => Err(serde::de::Error::custom(format!("expected an angle, got {other}"))),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

/// Reads `1.5`, `pi`, `0.75pi`, `-0.2*pi`, `0.2π`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let t = text.trim().to_ascii_lowercase().replace('π', "pi");
    match t.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.trim().trim_end_matches('*').trim();
            let k = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().ok()?,
            };
            Some(k * PI)
        }
        None => t.parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableTerm {
    pub site: i64,
    pub axis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// The configuration document as written; every field is checked by
/// [`RunConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub num_sites: i64,
    #[serde(rename = "J", default = "default_coupling")]
    pub coupling: Angle,
    #[serde(default = "default_field")]
    pub g: Angle,
    #[serde(rename = "Jx", default = "zero_angle")]
    pub interaction: Angle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<ObservableTerm>>,
    #[serde(default = "default_steps")]
    pub steps: i64,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub translations: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseMetadata>,
    /// Output directory for artifacts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_coupling() -> Angle {
    Angle(DEFAULT_COUPLING)
}

fn default_field() -> Angle {
    Angle(DEFAULT_FIELD)
}

fn zero_angle() -> Angle {
    Angle(0.0)
}

fn default_steps() -> i64 {
    30
}

fn default_estimator() -> EstimatorConfig {
    EstimatorConfig {
        kind: "full".into(),
        samples: None,
        seed: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimatorSpec {
    Full,
    Partial { samples: usize, seed: u64 },
}

/// A configuration whose every invariant has been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub params: ModelParams,
    pub observables: Vec<PauliString>,
    pub steps: usize,
    pub estimator: EstimatorSpec,
    pub translations: usize,
    pub noise: Option<NoiseMetadata>,
    pub out: Option<String>,
}

impl RunConfig {
    /// Parses a config document, or the `config` member of a manifest.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let body = match value {
            Value::Object(mut map) if map.contains_key("config") => map.remove("config").unwrap_or(Value::Null),
            other => other,
        };
        serde_json::from_value(body).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<ValidatedConfig, ConfigError> {
        if self.num_sites < 3 {
            return Err(ConfigError::field("L", format!("L < 3 (got {})", self.num_sites)));
        }
        if self.num_sites > MAX_SITES as i64 {
            return Err(ModelError::TooManySites(self.num_sites).into());
        }
        let n = self.num_sites as usize;
        let defect = match self.defect {
            None => n - 1,
            Some(d) if d >= 0 && (d as usize) < n => d as usize,
            Some(d) => return Err(ModelError::DefectOutOfRange { defect: d, sites: n }.into()),
        };
        for (name, angle) in [("J", self.coupling), ("g", self.g), ("Jx", self.interaction)] {
            if !angle.0.is_finite() {
                return Err(ConfigError::field(name, "value must be finite"));
            }
        }
        let params = ModelParams::new(n, self.coupling.0, self.g.0, self.interaction.0, defect)?;

        let observables = match &self.observable {
            None => default_observables(&params),
            Some(terms) => vec![parse_observable(terms, n)?],
        };
        if self.steps < 0 {
            return Err(ConfigError::field("steps", format!("must be non-negative (got {})", self.steps)));
        }
        if self.translations < 0 || self.translations as usize >= n {
            return Err(ConfigError::field(
                "translations",
                format!("must lie in [0, L) (got {})", self.translations),
            ));
        }
        let estimator = match self.estimator.kind.as_str() {
            "full" => EstimatorSpec::Full,
            "partial" => {
                let samples = self
                    .estimator
                    .samples
                    .ok_or_else(|| ConfigError::field("estimator.samples", "required for a partial trace"))?;
                let available = 1i64 << n.min(62);
                if samples < 1 {
                    return Err(ConfigError::field("estimator.samples", format!("num_samples must be at least 1 (got {samples})")));
                }
                if samples > available {
                    return Err(ConfigError::field(
                        "estimator.samples",
                        format!("num_samples exceeds 2^L ({samples} > {available})"),
                    ));
                }
                EstimatorSpec::Partial {
                    samples: samples as usize,
                    seed: self.estimator.seed.unwrap_or(0),
                }
            }
            other => {
                return Err(ConfigError::field(
                    "estimator.kind",
                    format!("expected \"full\" or \"partial\", got {other:?}"),
                ))
            }
        };
        if let Some(noise) = &self.noise {
            noise.config.validate(n)?;
            noise.pipeline.validate()?;
        }
        Ok(ValidatedConfig {
            params,
            observables,
            steps: self.steps as usize,
            estimator,
            translations: self.translations as usize,
            noise: self.noise.clone(),
            out: self.out.clone(),
        })
    }
}

fn parse_observable(terms: &[ObservableTerm], n: usize) -> Result<PauliString, ConfigError> {
    let mut parsed = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let axis = match t.axis.to_ascii_uppercase().as_str() {
            "X" => PauliAxis::X,
            "Y" => PauliAxis::Y,
            "Z" => PauliAxis::Z,
            other => {
                return Err(ConfigError::field(
                    format!("observable[{i}].axis"),
                    format!("expected X, Y or Z, got {other:?}"),
                ))
            }
        };
        if t.site < 0 || t.site as usize >= n {
            return Err(ConfigError::field(
                format!("observable[{i}].site"),
                format!("site {} is outside [0, {n})", t.site),
            ));
        }
        parsed.push((t.site as usize, axis));
    }
    Ok(PauliString::new(n, parsed)?)
}

/// σx, σy, σz at the defect, then at the bulk site `L/2 - 1`.
pub fn default_observables(params: &ModelParams) -> Vec<PauliString> {
    let n = params.num_sites();
    [params.defect(), params.bulk_site()]
        .into_iter()
        .flat_map(|site| PauliAxis::ALL.map(|axis| PauliString::single(n, site, axis).expect("site in range")))
        .collect()
}
