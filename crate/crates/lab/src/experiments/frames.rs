use std::collections::VecDeque;

use euler_lab_core::diagnostics::{fit_decay, slaving_series, FitMode};
use euler_lab_core::dynamics::{full_rhs, GasParameters};
use euler_lab_core::frame::{c_rate, central_weights, conjugated_rhs, decompose_state, solve_frame, DecomposedState};
use euler_lab_core::integrator::{evolve, EvolveOptions, Observer};
use euler_lab_core::spectral::{State, Weight};

use super::{grid, nonlinear_initial, params, trajectory_writer, NormRecorder, Result};
use crate::config::ExperimentConfig;
use crate::output::{Check, Outcome, Series};

const STENCIL: usize = 5;

/// Solves the frame along a run: every `frame_stride` steps for the slaving
/// series, and on five consecutive steps around every `check_stride`-th step
/// to compare difference quotients of c and (σ₁,U₁) with their equations.
pub struct FrameTracker {
    params: GasParameters,
    k_frame: i64,
    s: f64,
    dt: f64,
    frame_stride: usize,
    check_stride: usize,
    ring: VecDeque<State>,
    pub times: Vec<f64>,
    pub decomps: Vec<DecomposedState>,
    pub frames: Series,
    pub checks: Series,
}

impl FrameTracker {
    pub fn new(config: &ExperimentConfig, params: GasParameters) -> Self {
        Self {
            params,
            k_frame: config.k_frame,
            s: config.s,
            dt: config.dt,
            frame_stride: config.frame_stride,
            check_stride: config.check_stride,
            ring: VecDeque::with_capacity(STENCIL),
            times: Vec::new(),
            decomps: Vec::new(),
            frames: Series::new(
                "frame",
                &[
                    "t",
                    "c",
                    "mean_sigma",
                    "norm_sigma1_s1",
                    "norm_u1_s1",
                    "slaving_ratio",
                    "frame_norm",
                    "solve_residual",
                ],
            ),
            checks: Series::new(
                "frame_checks",
                &["t", "cdot_difference", "cdot_equation", "cdot_relative_error", "tangent_relative_error"],
            ),
        }
    }

    fn record(&mut self, time: f64, state: &State) -> euler_lab_core::Result<()> {
        let f = solve_frame(state, &self.params, self.k_frame)?;
        let d = decompose_state(state, &f);
        let s1 = self.s + 1.0;
        let ns = d.sigma1.sobolev_norm(s1, Weight::Physical);
        let nu: f64 = d.u1.iter().map(|u| u.sobolev_norm(s1, Weight::Physical)).sum();
        let ratio = if ns + nu > 0.0 { d.c.abs() / (ns + nu) } else { f64::NAN };
        self.frames.push(vec![time, d.c, state.sigma.mean(), ns, nu, ratio, f.norm(), f.solve_residual]);
        self.times.push(time);
        self.decomps.push(d);
        Ok(())
    }

    fn check(&mut self, time: f64) -> euler_lab_core::Result<()> {
        let frames = self
            .ring
            .iter()
            .map(|x| solve_frame(x, &self.params, self.k_frame))
            .collect::<euler_lab_core::Result<Vec<_>>>()?;
        let decomps: Vec<DecomposedState> = self.ring.iter().zip(&frames).map(|(x, f)| decompose_state(x, f)).collect();
        let w = central_weights(STENCIL, self.dt)?;
        let mid = STENCIL / 2;

        let measured: f64 = w.iter().zip(&decomps).map(|(a, d)| a * d.c).sum();
        let tangent = full_rhs(&self.ring[mid], &self.params)?;
        let predicted = c_rate(&decomps[mid], &tangent, &frames, self.dt)?;
        let cdot_err = (measured - predicted).abs() / predicted.abs();

        let mut fd = State::zeros(self.ring[mid].grid());
        for (a, d) in w.iter().zip(&decomps) {
            fd.axpy(*a, &d.part());
        }
        let rhs = conjugated_rhs(&decomps[mid], &frames[mid], &self.params)?;
        let tangent_err = fd.sub(&rhs).norm(self.s, Weight::Physical) / rhs.norm(self.s, Weight::Physical);
        self.checks.push(vec![time, measured, predicted, cdot_err, tangent_err]);
        Ok(())
    }
}

impl Observer for FrameTracker {
    fn observe(&mut self, step: usize, time: f64, state: &State) -> euler_lab_core::Result<()> {
        if self.ring.len() == STENCIL {
            self.ring.pop_front();
        }
        self.ring.push_back(state.clone());
        if step.is_multiple_of(self.frame_stride) {
            self.record(time, state)?;
        }
        let mid = STENCIL / 2;
        if step >= STENCIL - 1 && (step - mid).is_multiple_of(self.check_stride) {
            self.check(time - mid as f64 * self.dt)?;
        }
        Ok(())
    }
}

fn max_of(values: Option<Vec<f64>>) -> f64 {
    // NaN propagates so that a missing or broken check cannot pass
    let v = values.unwrap_or_default();
    if v.is_empty() || v.iter().any(|x| x.is_nan()) {
        return f64::NAN;
    }
    v.into_iter().fold(0.0, f64::max)
}

/// The nonlinear run with the frame tracked along it.
pub fn tracking(config: &ExperimentConfig) -> Result<Outcome> {
    let g = grid(config)?;
    let p = params(config)?;
    let x = nonlinear_initial(config, &g, config.amplitude, config.seed)?;

    let mut tracker = FrameTracker::new(config, p);
    let mut recorder = NormRecorder::new(config, p);
    let mut writer = trajectory_writer(config, &p)?;
    {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut tracker, &mut recorder];
        if let Some(w) = writer.as_mut() {
            observers.push(w);
        }
        evolve(
            &x,
            config.t_end,
            config.dt,
            &p,
            EvolveOptions::with_s(config.s + 1.0).stride(config.steps()),
            &mut observers,
        )?;
    }
    let mut out = Outcome::default();
    if let Some(w) = writer {
        w.finish()?;
        out.artifacts.push("trajectory/meta.json".into());
    }

    let slaving = slaving_series(&tracker.times, &tracker.decomps, config.s, Weight::Physical)?;
    let slaving_sup = slaving.k_measured.unwrap_or(f64::NAN);
    let part_norms: Vec<f64> =
        tracker.decomps.iter().map(|d| d.part().norm(config.s + 1.0, Weight::Physical)).collect();
    let part_fit = fit_decay("norm_part_s1", &tracker.times, &part_norms, (0.0, config.t_end), FitMode::Envelope)?;
    let cdot = max_of(tracker.checks.column("cdot_relative_error"));
    let tangent = max_of(tracker.checks.column("tangent_relative_error"));

    // the same constant from data ten times smaller, over the first tenth of the run
    let small_steps = (config.steps() / 10).max(config.frame_stride);
    let small = nonlinear_initial(config, &g, config.amplitude / 10.0, config.seed)?;
    let mut small_tracker = FrameTracker::new(config, p);
    small_tracker.check_stride = usize::MAX;
    evolve(
        &small,
        small_steps as f64 * config.dt,
        config.dt,
        &p,
        EvolveOptions::with_s(config.s + 1.0).stride(small_steps),
        &mut [&mut small_tracker],
    )?;
    let small_sup = slaving_series(&small_tracker.times, &small_tracker.decomps, config.s, Weight::Physical)?
        .k_measured
        .unwrap_or(f64::NAN);
    let window_sup = tracker
        .frames
        .rows
        .iter()
        .filter(|r| r[0] <= small_steps as f64 * config.dt + 1e-12)
        .map(|r| r[5])
        .fold(0.0, f64::max);

    let decay = fit_decay(
        "norm_s1",
        &recorder.series.column("t").expect("column"),
        &recorder.series.column("norm_s1").expect("column"),
        (0.0, config.t_end),
        FitMode::Envelope,
    )?;

    out.measure("K_frame", tracker.k_frame.min(g.cutoff()));
    out.measure("slaving_constant", slaving_sup);
    out.measure("slaving_constant_early_window", window_sup);
    out.measure("slaving_constant_tenth_amplitude", small_sup);
    out.measure("part_decay_rate", part_fit.rate);
    out.measure("state_decay_rate", decay.rate);
    out.measure("cdot_max_relative_error", cdot);
    out.measure("tangent_max_relative_error", tangent);
    out.measure("check_centres", tracker.checks.rows.len());
    out.check(Check::below("slaving_constant", slaving_sup, config.slaving_max));
    out.check(Check::at_least("part_decay_rate", part_fit.rate, config.min_rate));
    out.check(Check::below("cdot_relative_error", cdot, config.cdot_tolerance));
    out.check(Check::below("tangent_relative_error", tangent, config.tangent_tolerance));
    out.fit(slaving, "frame");
    out.fit(part_fit, "frame");
    out.fit(decay, "norms");
    out.series.push(recorder.series);
    out.series.push(tracker.frames);
    out.series.push(tracker.checks);
    Ok(out)
}
