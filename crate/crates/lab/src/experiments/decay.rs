use euler_lab_core::diagnostics::{continuity_residual, fit_decay, momentum_residual, FitMode};
use euler_lab_core::integrator::{evolve, EvolveOptions, Observer};
use euler_lab_core::propagator::{apply_semigroup, semigroup_constant};
use euler_lab_core::spectral::{GridSpec, RandomState, Weight};

use super::{grid, nonlinear_initial, params, trajectory_writer, NormRecorder, Result};
use crate::config::ExperimentConfig;
use crate::output::{Check, Outcome, Series};

/// ∥T(t)x∥_s for zero-mean x, against the fitted rate and the operator bound.
pub fn linear(config: &ExperimentConfig) -> Result<Outcome> {
    let g = grid(config)?;
    let p = params(config)?;
    let s = config.s;
    let x = RandomState::new(s, config.amplitude).generate(config.seed, &g)?;
    let h0 = x.hilbert_norm(s, Weight::Physical);

    let sample_dt = config.dt * config.record_stride as f64;
    let count = config.steps() / config.record_stride;
    let times: Vec<f64> = (0..=count).map(|k| k as f64 * sample_dt).collect();
    let mut writer = trajectory_writer(config, &p)?;
    let every = super::snapshot_stride(config).unwrap_or(usize::MAX);

    let mut series = Series::new("norms", &["t", "norm_s", "hilbert_s", "bound_ratio"]);
    for (k, &t) in times.iter().enumerate() {
        let y = apply_semigroup(&x, t)?;
        let h = y.hilbert_norm(s, Weight::Physical);
        series.push(vec![t, y.norm(s, Weight::Physical), h, h * (0.5 * t).exp() / h0]);
        if let Some(w) = writer.as_mut() {
            if (k * config.record_stride).is_multiple_of(every) {
                w.write(t, &y)?;
            }
        }
    }
    let mut out = Outcome::default();
    if let Some(w) = writer {
        w.finish()?;
        out.artifacts.push("trajectory/meta.json".into());
    }

    let norms = series.column("norm_s").expect("column");
    let mut fit = fit_decay("norm_s", &times, &norms, (0.0, config.t_end), FitMode::Envelope)?;
    let k_measured = semigroup_constant(&g, s, &times)?;
    let k_refined = semigroup_constant(&GridSpec::new(config.dim, 2 * config.n)?, s, &times)?;
    fit.k_measured = Some(k_measured);
    let sup_ratio = series.column("bound_ratio").expect("column").into_iter().fold(0.0, f64::max);
    let rate_error = (fit.rate - config.rate_target).abs() / config.rate_target;
    let refinement = (k_refined - k_measured).abs() / k_measured;

    out.measure("rate", fit.rate);
    out.measure("K_measured", k_measured);
    out.measure("K_measured_refined", k_refined);
    out.measure("sup_bound_ratio", sup_ratio);
    out.check(Check::below("rate_relative_error", rate_error, config.rate_tolerance));
    // the bound holds up to the roundoff of the norms themselves
    out.check(Check::at_most("bound_ratio_over_K", sup_ratio / k_measured, 1.0 + 1e-12));
    out.check(Check::below("K_refinement_change", refinement, config.refinement_tolerance));
    out.fit(fit, "norms");
    out.series.push(series);
    Ok(out)
}

/// The full equation from small unit-mass data.
pub fn nonlinear(config: &ExperimentConfig) -> Result<Outcome> {
    let g = grid(config)?;
    let p = params(config)?;
    let s = config.s;
    let x = nonlinear_initial(config, &g, config.amplitude, config.seed)?;

    let mut recorder = NormRecorder::new(config, p);
    let mut writer = trajectory_writer(config, &p)?;
    {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut recorder];
        if let Some(w) = writer.as_mut() {
            observers.push(w);
        }
        let opts = EvolveOptions::with_s(s + 1.0).stride(config.steps());
        evolve(&x, config.t_end, config.dt, &p, opts, &mut observers)?;
    }
    let mut out = Outcome::default();
    if let Some(w) = writer {
        w.finish()?;
        out.artifacts.push("trajectory/meta.json".into());
    }

    let series = recorder.series;
    let times = series.column("t").expect("column");
    let fit = fit_decay(
        "norm_s1",
        &times,
        &series.column("norm_s1").expect("column"),
        (0.0, config.t_end),
        FitMode::Envelope,
    )?;
    let mass = series.column("mass").expect("column");
    let mass_dev = mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max) / mass[0];
    let poincare =
        series.column("poincare_sigma").expect("column").into_iter().filter(|v| v.is_finite()).fold(0.0, f64::max);

    // ρ-form residuals on a short path stored every step, at two steps
    let cont = |dt: f64| -> Result<(f64, f64)> {
        let path = evolve(&x, 20.0 * config.dt, dt, &p, EvolveOptions::with_s(s + 1.0), &mut [])?;
        Ok((continuity_residual(&path)?, momentum_residual(&path)?))
    };
    let (c1, m1) = cont(config.dt)?;
    let (c2, m2) = cont(0.5 * config.dt)?;

    out.measure("rate", fit.rate);
    out.measure("rate_relative_to_target", fit.rate / config.rate_target);
    out.measure("mass_relative_deviation", mass_dev);
    out.measure("poincare_sigma_max", poincare);
    out.measure("continuity_residual", c1);
    out.measure("continuity_residual_half_dt", c2);
    out.measure("momentum_residual", m1);
    out.measure("momentum_residual_half_dt", m2);
    out.check(Check::at_least("decay_rate", fit.rate, config.min_rate));
    out.check(Check::below("mass_relative_deviation", mass_dev, config.mass_tolerance));
    out.fit(fit, "norms");
    out.series.push(series);
    Ok(out)
}
