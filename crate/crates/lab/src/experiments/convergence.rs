use euler_lab_core::integrator::{evolve, EvolveOptions};
use euler_lab_core::propagator::apply_semigroup;
use euler_lab_core::spectral::{State, Weight};

use super::{grid, nonlinear_initial, params, Result};
use crate::config::ExperimentConfig;
use crate::output::{Check, Outcome, Series};

/// Self-convergence of the nonlinear scheme under step halving, and the
/// linear-only scheme against the exact semigroup step by step.
pub fn study(config: &ExperimentConfig) -> Result<Outcome> {
    let g = grid(config)?;
    let p = params(config)?;
    let s = config.s;
    let x = nonlinear_initial(config, &g, config.conv_amplitude, config.seed)?;
    let steps = [config.conv_dt, config.conv_dt / 2.0, config.conv_dt / 4.0];
    let finals = steps
        .iter()
        .map(|&dt| {
            let n = (config.conv_t / dt).round() as usize;
            Ok(evolve(&x, config.conv_t, dt, &p, EvolveOptions::with_s(s).stride(n), &mut [])?.last().clone())
        })
        .collect::<Result<Vec<State>>>()?;
    let e1 = finals[0].sub(&finals[1]).norm(s, Weight::Physical);
    let e2 = finals[1].sub(&finals[2]).norm(s, Weight::Physical);
    let order = (e1 / e2).log2();

    let mut conv = Series::new("convergence", &["dt", "difference_to_half_step"]);
    conv.push(vec![steps[0], e1]);
    conv.push(vec![steps[1], e2]);

    let linear = evolve(&x, config.conv_t, config.conv_dt, &p, EvolveOptions::with_s(s).linear_only(), &mut [])?;
    let mut per_step = Series::new("linear_steps", &["t", "relative_error"]);
    let mut worst = 0.0f64;
    for k in 0..linear.len() - 1 {
        let exact = apply_semigroup(&linear.states[k], config.conv_dt)?;
        let err = linear.states[k + 1].sub(&exact).max_coeff() / exact.max_coeff();
        worst = worst.max(err);
        per_step.push(vec![linear.times[k + 1], err]);
    }

    let mut out = Outcome::default();
    out.measure("order", order);
    out.measure("linear_step_max_relative_error", worst);
    out.check(Check::at_least("order", order, config.min_order));
    out.check(Check::below("linear_step_error", worst, config.linear_step_tolerance));
    out.series.push(conv);
    out.series.push(per_step);
    Ok(out)
}
