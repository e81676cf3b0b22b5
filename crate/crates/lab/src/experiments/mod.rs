//! The experiment kinds. Each returns an [`Outcome`]; [`run_experiment`] also
//! writes it to disk.

mod commutator;
mod convergence;
mod decay;
mod dissipativity;
mod frames;
mod picard;

use std::path::PathBuf;

use euler_lab_core::diagnostics::{mass_integral, poincare_ratio};
use euler_lab_core::dynamics::GasParameters;
use euler_lab_core::integrator::Observer;
use euler_lab_core::spectral::{GridSpec, RandomState, State, Weight};
use thiserror::Error;

use crate::config::{ExperimentConfig, Kind};
use crate::output::{write_outputs, Outcome, Series};
use crate::snapshot::{SnapshotError, TrajectoryWriter};

pub use frames::FrameTracker;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] euler_lab_core::Error),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Runs `config.kind` and writes its artifacts; returns the outcome and the files written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Outcome, Vec<PathBuf>)> {
    let outcome = measure(config)?;
    let paths = write_outputs(&outcome, config)?;
    Ok((outcome, paths))
}

/// Runs `config.kind` without writing the summary files. Kinds that store
/// trajectories still write their snapshots.
pub fn measure(config: &ExperimentConfig) -> Result<Outcome> {
    match config.kind {
        Kind::LinearDecay => decay::linear(config),
        Kind::NonlinearDecay => decay::nonlinear(config),
        Kind::FrameTracking => frames::tracking(config),
        Kind::CommutatorStudy => commutator::study(config),
        Kind::PicardStudy => picard::study(config),
        Kind::ConvergenceStudy => convergence::study(config),
        Kind::DissipativityStudy => dissipativity::study(config),
    }
}

pub(crate) fn grid(config: &ExperimentConfig) -> Result<GridSpec> {
    Ok(GridSpec::new(config.dim, config.n)?)
}

pub(crate) fn params(config: &ExperimentConfig) -> Result<GasParameters> {
    Ok(GasParameters::new(config.gamma)?)
}

/// Unit-mass data normalized to `amplitude` in the physical (s+1)-norm.
pub(crate) fn nonlinear_initial(
    config: &ExperimentConfig,
    grid: &GridSpec,
    amplitude: f64,
    seed: u64,
) -> Result<State> {
    let theta = params(config)?.theta;
    Ok(RandomState::new(config.s + 1.0, amplitude).unit_mass(theta).generate(seed, grid)?)
}

/// `count` values from `lo` to `hi`, evenly spaced in log.
pub(crate) fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect()
}

pub(crate) fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

pub(crate) fn snapshot_stride(config: &ExperimentConfig) -> Option<usize> {
    (config.snapshot_every > 0.0).then(|| ((config.snapshot_every / config.dt).round() as usize).max(1))
}

pub(crate) fn trajectory_writer(config: &ExperimentConfig, params: &GasParameters) -> Result<Option<TrajectoryWriter>> {
    snapshot_stride(config)
        .map(|every| TrajectoryWriter::new(config.run_dir().join("trajectory"), every, config, params))
        .transpose()
        .map_err(Into::into)
}

/// Records norms, mass and the mean of σ every `record_stride` steps.
pub(crate) struct NormRecorder {
    pub series: Series,
    s: f64,
    stride: usize,
    params: GasParameters,
}

impl NormRecorder {
    pub fn new(config: &ExperimentConfig, params: GasParameters) -> Self {
        let series = Series::new("norms", &["t", "norm_s", "norm_s1", "mass", "mean_sigma", "poincare_sigma"]);
        Self { series, s: config.s, stride: config.record_stride, params }
    }
}

impl Observer for NormRecorder {
    fn observe(&mut self, step: usize, time: f64, state: &State) -> euler_lab_core::Result<()> {
        if step.is_multiple_of(self.stride) {
            let poincare = poincare_ratio(&state.sigma).unwrap_or(f64::NAN);
            self.series.push(vec![
                time,
                state.norm(self.s, Weight::Physical),
                state.norm(self.s + 1.0, Weight::Physical),
                mass_integral(state, &self.params)?,
                state.sigma.mean(),
                poincare,
            ]);
        }
        Ok(())
    }
}
