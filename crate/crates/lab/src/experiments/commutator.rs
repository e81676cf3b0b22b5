use euler_lab_core::diagnostics::{commutator_norm_probe, ProbeOptions};
use euler_lab_core::spectral::{GridSpec, RandomState, State, Weight};

use super::{log_spaced, params, spread, Result};
use crate::config::ExperimentConfig;
use crate::output::{Check, Outcome, Series};

/// ∥SBS⁻¹ − B∥ / ∥(σ,U)∥_{s+1} over amplitudes and two resolutions.
pub fn study(config: &ExperimentConfig) -> Result<Outcome> {
    let p = params(config)?;
    let s = config.s;
    let coarse = GridSpec::new(config.dim, config.n / 2)?;
    let fine = GridSpec::new(config.dim, config.n)?;
    let opts = ProbeOptions::default();
    // a shallower spectrum than the default keeps the state's (s+1)-norm
    // from being dominated by its lowest modes
    let recipe = RandomState::new(s + 1.0, 1.0).exponent(s + 2.0).weight(Weight::Paper).unit_mass(p.theta);
    let amplitudes = log_spaced(config.amplitude / 10.0, config.amplitude * 10.0, config.samples);

    let mut series = Series::new("commutator", &["sample", "N", "amplitude", "norm_s1", "probe", "ratio"]);
    let mut ratios = Vec::new();
    for (k, &amp) in amplitudes.iter().enumerate() {
        let seed = config.seed.wrapping_add(k as u64);
        let base = RandomState { norm_target: amp, ..recipe.clone() }.generate(seed, &coarse)?;
        for g in [&coarse, &fine] {
            let state = base.transfer(g)?;
            let size = state.hilbert_norm(s + 1.0, Weight::Paper);
            let probe = commutator_norm_probe(&state, &p, s, seed, opts)?;
            ratios.push(probe / size);
            series.push(vec![k as f64, g.n() as f64, amp, size, probe, probe / size]);
        }
    }

    let constants = [
        State::constant(&fine, 0.3, &vec![0.0; config.dim]),
        State::constant(&fine, -0.1, &(1..=config.dim).map(|j| 0.05 * j as f64).collect::<Vec<_>>()),
        State::constant(&fine, 0.0, &vec![1.0; config.dim]),
    ];
    let mut constant_max = 0.0f64;
    for (k, c) in constants.iter().enumerate() {
        constant_max = constant_max.max(commutator_norm_probe(c, &p, s, config.seed.wrapping_add(k as u64), opts)?);
    }

    let mut out = Outcome::default();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let sp = spread(&ratios);
    out.measure("commutator_constant", max_ratio);
    out.measure("ratio_spread", sp);
    out.measure("constant_state_probe", constant_max);
    out.check(Check::below("ratio_spread", sp, config.spread_max));
    out.check(Check::below("constant_state_probe", constant_max, config.constant_state_max));
    out.series.push(series);
    Ok(out)
}
