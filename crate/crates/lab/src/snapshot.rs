//! Field snapshots and trajectory directories.
//!
//! A snapshot file holds one field: a header `# dim=<n> N=<N> field=<name> t=<time>`,
//! further `#` comment lines, then `xi_1 … xi_n re im` for every retained mode.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use euler_lab_core::dynamics::GasParameters;
use euler_lab_core::integrator::{Observer, Trajectory};
use euler_lab_core::spectral::{GridSpec, ScalarField, State};
use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ExperimentConfig, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Meta(String),
    #[error(transparent)]
    Core(#[from] euler_lab_core::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io { path: path.to_path_buf(), source }
}

/// Component names of a state in dimension `dim`: sigma, u1, …
pub fn field_names(dim: usize) -> Vec<String> {
    std::iter::once("sigma".to_string()).chain((1..=dim).map(|j| format!("u{j}"))).collect()
}

pub fn render_field(field: &ScalarField, name: &str, t: f64, comments: &[String]) -> String {
    let grid = field.grid();
    let dim = grid.dim();
    let mut out = String::new();
    writeln!(out, "# dim={dim} N={} field={name} t={t:.16e}", grid.n()).unwrap();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    let coeffs = field.coeffs();
    for (i, mode) in grid.modes().iter().enumerate() {
        if !grid.in_mask(i) {
            continue;
        }
        for x in &mode[..dim] {
            write!(out, "{x} ").unwrap();
        }
        writeln!(out, "{:.16e} {:.16e}", coeffs[i].re, coeffs[i].im).unwrap();
    }
    out
}

/// Parsed snapshot: its header values and the field.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub name: String,
    pub time: f64,
    pub field: ScalarField,
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.trim_start_matches('#').split_whitespace().find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

pub fn parse_field(text: &str, path: &Path) -> Result<Snapshot, SnapshotError> {
    let bad = |line: usize, message: String| SnapshotError::Format { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let get = |key: &str| header_value(header, key).ok_or_else(|| bad(1, format!("header lacks `{key}=`")));
    let dim: usize = get("dim")?.parse().map_err(|_| bad(1, "bad dim".into()))?;
    let n: usize = get("N")?.parse().map_err(|_| bad(1, "bad N".into()))?;
    let name = get("field")?.to_string();
    let time: f64 = get("t")?.parse().map_err(|_| bad(1, "bad t".into()))?;
    let grid = GridSpec::new(dim, n)?;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for (k, line) in lines {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != dim + 2 {
            return Err(bad(k + 1, format!("expected {} columns, found {}", dim + 2, toks.len())));
        }
        let mode: Vec<i64> = toks[..dim]
            .iter()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(k + 1, "bad mode".into()))?;
        let re: f64 = toks[dim].parse().map_err(|_| bad(k + 1, "bad re".into()))?;
        let im: f64 = toks[dim + 1].parse().map_err(|_| bad(k + 1, "bad im".into()))?;
        let i = grid.index_of(&mode).ok_or_else(|| bad(k + 1, format!("mode {mode:?} is off the grid")))?;
        coeffs[i] = Complex64::new(re, im);
    }
    Ok(Snapshot { name, time, field: ScalarField::from_coeffs(&grid, coeffs)? })
}

fn snapshot_file(index: usize, name: &str) -> String {
    format!("snap_{index:05}_{name}.txt")
}

/// Observer that writes every `every`-th step into `<dir>` and, on
/// [`TrajectoryWriter::finish`], a `meta.json` describing the run.
pub struct TrajectoryWriter {
    dir: PathBuf,
    every: usize,
    comments: Vec<String>,
    times: Vec<f64>,
    files: Vec<Vec<String>>,
    meta: Value,
}

impl TrajectoryWriter {
    pub fn new(
        dir: PathBuf,
        every: usize,
        config: &ExperimentConfig,
        params: &GasParameters,
    ) -> Result<Self, SnapshotError> {
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let comments = vec![format!("format={FORMAT_VERSION}"), format!("config={}", config.to_json())];
        let meta = json!({
            "format_version": FORMAT_VERSION,
            "grid": {"dim": config.dim, "N": config.n},
            "params": {"gamma": params.gamma, "theta": params.theta},
            "dt": config.dt,
            "seed": config.seed,
            "scheme": "lawson-rk4",
            "K_frame": config.k_frame,
            "config": config.to_json(),
        });
        Ok(Self { dir, every: every.max(1), comments, times: Vec::new(), files: Vec::new(), meta })
    }

    pub fn write(&mut self, time: f64, state: &State) -> Result<(), SnapshotError> {
        let index = self.times.len();
        let mut names = Vec::new();
        for (field, name) in state.components().zip(field_names(state.dim())) {
            let file = snapshot_file(index, &name);
            let path = self.dir.join(&file);
            fs::write(&path, render_field(field, &name, time, &self.comments)).map_err(io_err(&path))?;
            names.push(file);
        }
        self.times.push(time);
        self.files.push(names);
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, SnapshotError> {
        self.meta["stride"] = json!(self.every);
        self.meta["times"] = json!(self.times);
        self.meta["snapshots"] = json!(self.files);
        let path = self.dir.join("meta.json");
        let text = serde_json::to_string_pretty(&self.meta).map_err(|e| SnapshotError::Meta(e.to_string()))? + "\n";
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(self.dir)
    }
}

impl Observer for TrajectoryWriter {
    fn observe(&mut self, step: usize, time: f64, state: &State) -> euler_lab_core::Result<()> {
        if step.is_multiple_of(self.every) {
            self.write(time, state).map_err(|e| euler_lab_core::Error::InvalidArgument(e.to_string()))?;
        }
        Ok(())
    }
}

/// A trajectory read back from disk with the frame truncation it was run with.
pub struct StoredTrajectory {
    pub trajectory: Trajectory,
    pub k_frame: i64,
    pub meta: Value,
}

pub fn read_trajectory(dir: &Path) -> Result<StoredTrajectory, SnapshotError> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: Value =
        serde_json::from_str(&text).map_err(|e| SnapshotError::Meta(format!("{}: {e}", meta_path.display())))?;
    let missing = |k: &str| SnapshotError::Meta(format!("{}: missing `{k}`", meta_path.display()));
    let gamma = meta["params"]["gamma"].as_f64().ok_or_else(|| missing("params.gamma"))?;
    let dt = meta["dt"].as_f64().ok_or_else(|| missing("dt"))?;
    let stride = meta["stride"].as_u64().ok_or_else(|| missing("stride"))? as usize;
    let k_frame = meta["K_frame"].as_i64().ok_or_else(|| missing("K_frame"))?;
    let snapshots = meta["snapshots"].as_array().ok_or_else(|| missing("snapshots"))?;
    if snapshots.is_empty() {
        return Err(SnapshotError::Meta(format!("{}: no snapshots", meta_path.display())));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for entry in snapshots {
        let files = entry.as_array().ok_or_else(|| missing("snapshots[]"))?;
        let mut fields = Vec::new();
        let mut time = 0.0;
        for f in files {
            let name = f.as_str().ok_or_else(|| missing("snapshot file name"))?;
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let snap = parse_field(&text, &path)?;
            time = snap.time;
            fields.push(snap.field);
        }
        let mut it = fields.into_iter();
        let sigma = it.next().ok_or_else(|| missing("sigma snapshot"))?;
        states.push(State::new(sigma, it.collect())?);
        times.push(time);
    }
    let grid = states[0].grid().clone();
    let params = GasParameters::new(gamma)?;
    Ok(StoredTrajectory { trajectory: Trajectory { times, states, dt, stride, params, grid }, k_frame, meta })
}
