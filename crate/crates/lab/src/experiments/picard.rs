use euler_lab_core::integrator::{picard_iterate, PicardReport, Trajectory};
use euler_lab_core::spectral::Weight;

use super::{grid, nonlinear_initial, params, Result};
use crate::config::ExperimentConfig;
use crate::output::{Check, Outcome, Series};

/// Largest successive-difference ratio from the second ratio on.
fn contraction(report: &PicardReport) -> f64 {
    let tail = if report.ratios.len() > 1 { &report.ratios[1..] } else { &report.ratios[..] };
    if tail.is_empty() || tail.iter().any(|r| r.is_nan()) {
        return f64::NAN;
    }
    tail.iter().copied().fold(0.0, f64::max)
}

/// Picard iteration of the frozen-coefficient map over one window, at the
/// configured amplitude and a tenth of it.
pub fn study(config: &ExperimentConfig) -> Result<Outcome> {
    let g = grid(config)?;
    let p = params(config)?;
    let s = config.s;
    let mut out = Outcome::default();
    let mut series = Series::new("picard", &["amplitude", "iteration", "difference", "ratio"]);

    for (label, amp, limit) in [
        ("", config.amplitude, config.contraction_max),
        ("_tenth_amplitude", config.amplitude / 10.0, config.contraction_small_max),
    ] {
        let x = nonlinear_initial(config, &g, amp, config.seed)?;
        let guess = Trajectory::constant(&x, config.t_window, config.dt, p)?;
        let report = picard_iterate(&guess, &x, config.picard_iterations, s, Weight::Physical)?;
        for (k, d) in report.differences.iter().enumerate() {
            let ratio = if k == 0 { f64::NAN } else { report.ratios[k - 1] };
            series.push(vec![amp, (k + 1) as f64, *d, ratio]);
        }
        let factor = contraction(&report);
        let growth = report.max_higher_norm / x.norm(s + 1.0, Weight::Physical);
        out.measure(&format!("contraction_factor{label}"), factor);
        out.measure(&format!("last_ratio{label}"), report.contraction_factor);
        out.measure(&format!("higher_norm_growth{label}"), growth);
        out.measure(&format!("iterations{label}"), report.differences.len());
        out.check(Check::below(&format!("contraction_factor{label}"), factor, limit));
        out.check(Check::at_most(&format!("higher_norm_growth{label}"), growth, config.growth_factor_max));
    }
    out.series.push(series);
    Ok(out)
}
