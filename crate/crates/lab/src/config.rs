//! Experiment configuration: a flat JSON object whose keys double as CLI flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("config is not a JSON object: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: name.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    LinearDecay,
    NonlinearDecay,
    FrameTracking,
    CommutatorStudy,
    PicardStudy,
    ConvergenceStudy,
    DissipativityStudy,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::LinearDecay,
        Kind::NonlinearDecay,
        Kind::FrameTracking,
        Kind::CommutatorStudy,
        Kind::PicardStudy,
        Kind::ConvergenceStudy,
        Kind::DissipativityStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::LinearDecay => "linear-decay",
            Kind::NonlinearDecay => "nonlinear-decay",
            Kind::FrameTracking => "frame-tracking",
            Kind::CommutatorStudy => "commutator-study",
            Kind::PicardStudy => "picard-study",
            Kind::ConvergenceStudy => "convergence-study",
            Kind::DissipativityStudy => "dissipativity-study",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| field("kind", format!("unknown experiment kind `{s}`")))
    }
}

/// Every knob of a run. Thresholds default to the acceptance targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: f64,
    pub gamma: f64,
    pub amplitude: f64,
    #[serde(rename = "T_end")]
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    /// Defaults to 8 for dim ≤ 2 and 4 for dim = 3.
    #[serde(rename = "K_frame")]
    pub k_frame: i64,
    pub output_dir: PathBuf,

    /// Steps between rows of the time series.
    pub record_stride: usize,
    /// Time between trajectory snapshots on disk; 0 disables them.
    pub snapshot_every: f64,
    /// Steps between frame solves along a trajectory.
    pub frame_stride: usize,
    /// Steps between the finite-difference checks of the frame dynamics.
    pub check_stride: usize,
    #[serde(rename = "T_window")]
    pub t_window: f64,
    pub picard_iterations: usize,
    pub samples: usize,
    pub conv_dt: f64,
    #[serde(rename = "conv_T")]
    pub conv_t: f64,
    pub conv_amplitude: f64,

    pub rate_target: f64,
    pub rate_tolerance: f64,
    pub refinement_tolerance: f64,
    pub min_rate: f64,
    pub mass_tolerance: f64,
    pub slaving_max: f64,
    pub cdot_tolerance: f64,
    pub tangent_tolerance: f64,
    pub spread_max: f64,
    pub constant_state_max: f64,
    pub contraction_max: f64,
    pub contraction_small_max: f64,
    pub growth_factor_max: f64,
    pub min_order: f64,
    pub linear_step_tolerance: f64,
    pub dissipativity_spread_max: f64,
}

pub const FORMAT_VERSION: &str = "euler-lab/1";

fn default_k_frame(dim: usize) -> i64 {
    if dim >= 3 {
        4
    } else {
        8
    }
}

impl ExperimentConfig {
    pub fn defaults(kind: Kind) -> Self {
        Self {
            kind,
            dim: 2,
            n: 32,
            s: 2.0,
            gamma: 1.4,
            amplitude: 1e-2,
            t_end: 20.0,
            dt: 1e-2,
            seed: 0,
            k_frame: default_k_frame(2),
            output_dir: PathBuf::from("runs"),
            record_stride: 10,
            snapshot_every: 1.0,
            frame_stride: 10,
            check_stride: 250,
            t_window: 0.5,
            picard_iterations: 6,
            samples: 20,
            conv_dt: 0.05,
            conv_t: 1.0,
            conv_amplitude: 0.1,
            rate_target: 0.5,
            rate_tolerance: 0.05,
            refinement_tolerance: 0.01,
            min_rate: 0.25,
            mass_tolerance: 1e-10,
            slaving_max: 10.0,
            cdot_tolerance: 1e-2,
            tangent_tolerance: 1e-3,
            spread_max: 3.0,
            constant_state_max: 1e-12,
            contraction_max: 1.0,
            contraction_small_max: 0.5,
            growth_factor_max: std::f64::consts::E,
            min_order: 3.5,
            linear_step_tolerance: 1e-13,
            dissipativity_spread_max: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=3).contains(&self.dim) {
            return Err(field("dim", format!("{} is not 1, 2 or 3", self.dim)));
        }
        if self.n < 8 || !self.n.is_multiple_of(2) {
            return Err(field("N", format!("{} must be even and at least 8", self.n)));
        }
        if !(self.s > self.dim as f64 / 2.0) {
            return Err(field("s", format!("{} must exceed dim/2 = {}", self.s, self.dim as f64 / 2.0)));
        }
        if !(self.gamma > 1.0) {
            return Err(field("gamma", format!("{} must exceed 1", self.gamma)));
        }
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("dt", self.dt),
            ("T_end", self.t_end),
            ("T_window", self.t_window),
            ("conv_dt", self.conv_dt),
            ("conv_T", self.conv_t),
            ("conv_amplitude", self.conv_amplitude),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(field(name, format!("{v} must be positive")));
            }
        }
        if !(self.snapshot_every >= 0.0) {
            return Err(field("snapshot_every", "must not be negative"));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(field("dt", format!("{} does not divide T_end = {}", self.dt, self.t_end)));
        }
        let conv = (self.conv_t / self.conv_dt).round();
        if (conv * self.conv_dt - self.conv_t).abs() > 1e-9 * self.conv_t {
            return Err(field("conv_dt", format!("{} does not divide conv_T = {}", self.conv_dt, self.conv_t)));
        }
        if self.k_frame < 1 {
            return Err(field("K_frame", "must be at least 1"));
        }
        for (name, v) in [
            ("record_stride", self.record_stride),
            ("frame_stride", self.frame_stride),
            ("check_stride", self.check_stride),
            ("picard_iterations", self.picard_iterations),
            ("samples", self.samples),
        ] {
            if v == 0 {
                return Err(field(name, "must be at least 1"));
            }
        }
        if !(steps as usize).is_multiple_of(self.record_stride) {
            return Err(field("record_stride", format!("{} does not divide the {} steps", self.record_stride, steps)));
        }
        Ok(())
    }

    /// The directory `<output_dir>/<kind>_<seed>`.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(format!("{}_{}", self.kind, self.seed))
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Reads an optional JSON file, then applies `key=value` overrides, then validates.
/// `kind` may come from either source; `dim` given without `K_frame` picks the
/// dimension's default truncation.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentConfig, ConfigError> {
    let mut obj = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Read { path: p.to_path_buf(), message: e.to_string() })?;
            match serde_json::from_str::<Value>(&text).map_err(|e| ConfigError::Parse(e.to_string()))? {
                Value::Object(m) => m,
                other => return Err(ConfigError::Parse(format!("expected an object, found {other}"))),
            }
        }
        None => Map::new(),
    };
    for (key, raw) in overrides {
        obj.insert(key.clone(), Value::String(raw.clone()));
    }
    let kind: Kind = match obj.get("kind") {
        Some(Value::String(s)) => s.parse()?,
        Some(other) => return Err(field("kind", format!("expected a string, found {other}"))),
        None => return Err(field("kind", "missing")),
    };
    let mut base = ExperimentConfig::defaults(kind).to_json();
    let dims = base.as_object_mut().expect("object");
    if !obj.contains_key("K_frame") {
        if let Some(d) = obj.get("dim") {
            let d = coerce(dims.get("dim").expect("key"), d).map_err(|m| field("dim", m))?;
            let d = d.as_u64().ok_or_else(|| field("dim", "expected an integer"))? as usize;
            dims.insert("K_frame".into(), Value::from(default_k_frame(d)));
        }
    }
    for (key, value) in obj {
        let slot = dims.get(&key).ok_or_else(|| ConfigError::UnknownKey(key.clone()))?;
        let v = coerce(slot, &value).map_err(|m| field(&key, m))?;
        dims.insert(key, v);
    }
    let cfg: ExperimentConfig = serde_json::from_value(base).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Converts flag strings to the JSON type of the default in `slot`.
fn coerce(slot: &Value, value: &Value) -> Result<Value, String> {
    let Value::String(raw) = value else {
        return match (slot, value) {
            (Value::Number(a), Value::Number(b)) if a.is_u64() && !b.is_u64() => {
                Err(format!("expected a non-negative integer, found {b}"))
            }
            (Value::Number(_), Value::Number(_)) | (Value::String(_), Value::String(_)) => Ok(value.clone()),
            _ => Err(format!("unexpected value {value}")),
        };
    };
    match slot {
        Value::Number(n) if n.is_u64() || n.is_i64() => {
            raw.trim().parse::<i64>().map(Value::from).map_err(|_| format!("expected an integer, found `{raw}`"))
        }
        Value::Number(_) => {
            let x: f64 = raw.trim().parse().map_err(|_| format!("expected a number, found `{raw}`"))?;
            serde_json::Number::from_f64(x).map(Value::Number).ok_or_else(|| format!("`{raw}` is not finite"))
        }
        _ => Ok(Value::String(raw.clone())),
    }
}
