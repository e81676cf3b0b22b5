use euler_lab_core::diagnostics::{dissipativity_constant, dissipativity_form};
use euler_lab_core::spectral::{RandomState, Weight};

use super::{grid, log_spaced, params, spread, Result};
use crate::config::ExperimentConfig;
use crate::output::{Check, Outcome, Series};

const POWER_ITERATIONS: usize = 60;

/// C in |⟨B_{σ,U}(σ₁,U₁),(σ₁,U₁)⟩_{H^s}| ≤ C∥D(σ,U)∥_∞∥(σ₁,U₁)∥²_s over random pairs.
///
/// The measured C of a pair is the numerical radius of the symmetric part of
/// B_{σ,U} (the sup of the form over arguments, reached by power iteration
/// from the sampled argument) divided by the grid sup of D(σ,U). The raw
/// ratio of the form at the sampled argument is reported beside it.
pub fn study(config: &ExperimentConfig) -> Result<Outcome> {
    let g = grid(config)?;
    let p = params(config)?;
    let s = config.s;
    let amplitudes = log_spaced(config.amplitude / 10.0, config.amplitude * 10.0, config.samples);
    let coef_recipe = RandomState::new(s + 1.0, 1.0).unit_mass(p.theta);
    let arg_recipe = RandomState::new(s, 1.0).theta(f64::MIN_POSITIVE);

    let mut series =
        Series::new("dissipativity", &["sample", "amplitude", "grad_sup", "numerical_radius", "constant", "raw_ratio"]);
    let mut constants = Vec::new();
    let mut raw = Vec::new();
    for (k, &amp) in amplitudes.iter().enumerate() {
        let seed = config.seed.wrapping_add(k as u64);
        let coef = RandomState { norm_target: amp, ..coef_recipe.clone() }.generate(seed, &g)?;
        let arg = arg_recipe.generate(seed.wrapping_add(1 << 32), &g)?;
        let grad = coef.grad_sup();
        let radius = dissipativity_constant(&coef, &arg, &p, s, Weight::Physical, POWER_ITERATIONS)?;
        let size = arg.hilbert_norm(s, Weight::Physical);
        let form = dissipativity_form(&coef, &arg, &p, s, Weight::Physical)?;
        let ratio = form.abs() / (grad * size * size);
        constants.push(radius / grad);
        raw.push(ratio);
        series.push(vec![k as f64, amp, grad, radius, radius / grad, ratio]);
    }

    let mut out = Outcome::default();
    let sp = spread(&constants);
    out.measure("dissipativity_constant", constants.iter().copied().fold(0.0, f64::max));
    out.measure("constant_spread", sp);
    out.measure("raw_ratio_max", raw.iter().copied().fold(0.0, f64::max));
    out.measure("raw_ratio_spread", spread(&raw));
    out.measure("raw_ratio_over_constant_max", raw_over_constant(&raw, &constants));
    out.check(Check::below("constant_spread", sp, config.dissipativity_spread_max));
    out.series.push(series);
    Ok(out)
}

/// max over pairs of raw/constant, at most 1 once the power iteration has converged.
fn raw_over_constant(raw: &[f64], constants: &[f64]) -> f64 {
    raw.iter().zip(constants).map(|(r, c)| r / c).fold(0.0, f64::max)
}
