//! Measured quantities: decay fits, conserved mass, Poincaré and
//! dissipativity ratios, the Kato commutator norm, slaving, and residuals of
//! the equations in (ρ, U) form.

use num_complex::Complex64;

use crate::dynamics::{apply_b, apply_b_adjoint, density_samples, GasParameters};
use crate::error::{Error, Result};
use crate::frame::DecomposedState;
use crate::integrator::Trajectory;
use crate::spectral::{GridSpec, RandomState, ScalarField, Shift, State, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Every sample in the window.
    Plain,
    /// Strict local maxima only; falls back to every sample when fewer than two exist.
    Envelope,
}

/// Least-squares fit values ≈ prefactor·e^{−rate·t} over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub quantity: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub rate: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    /// RMS deviation of log(values) from the fitted line over the fitted points.
    pub residual: f64,
    pub k_measured: Option<f64>,
}

/// Fits log(values) = log(prefactor) − rate·t on the samples with t in `window`.
pub fn fit_decay(
    quantity: &str,
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    mode: FitMode,
) -> Result<DecayReport> {
    if times.len() != values.len() {
        return Err(Error::ShapeMismatch { expected: times.len(), actual: values.len() });
    }
    let slack = 1e-12 * window.1.abs().max(1.0);
    let inside: Vec<usize> =
        (0..times.len()).filter(|&i| times[i] >= window.0 - slack && times[i] <= window.1 + slack).collect();
    if inside.len() < 10 {
        return Err(Error::InsufficientSamples { needed: 10, have: inside.len() });
    }
    if inside.iter().any(|&i| !(values[i] > 0.0) || !values[i].is_finite()) {
        return Err(Error::NonPositiveSeries);
    }
    let picked: Vec<usize> = match mode {
        FitMode::Plain => inside.clone(),
        FitMode::Envelope => {
            let peaks: Vec<usize> = inside
                .windows(3)
                .filter(|w| values[w[1]] > values[w[0]] && values[w[1]] > values[w[2]])
                .map(|w| w[1])
                .collect();
            if peaks.len() >= 2 {
                peaks
            } else {
                inside.clone()
            }
        }
    };
    let n = picked.len() as f64;
    let mt = picked.iter().map(|&i| times[i]).sum::<f64>() / n;
    let my = picked.iter().map(|&i| values[i].ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &i in &picked {
        let dt = times[i] - mt;
        sxy += dt * (values[i].ln() - my);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mt;
    let residual =
        (picked.iter().map(|&i| (values[i].ln() - intercept - slope * times[i]).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayReport {
        quantity: quantity.to_string(),
        times: times.to_vec(),
        values: values.to_vec(),
        rate: -slope,
        prefactor: intercept.exp(),
        window,
        residual,
        k_measured: None,
    })
}

/// ∫ρ dx with ρ = (1+θσ)^{1/θ}, the grid mean.
pub fn mass_integral(state: &State, params: &GasParameters) -> Result<f64> {
    let rho = density_samples(&state.sigma, params)?;
    Ok(rho.iter().sum::<f64>() / rho.len() as f64)
}

/// ∥f∥_{L²} / ∥∇f∥_{L²}.
pub fn poincare_ratio(field: &ScalarField) -> Result<f64> {
    let grad: f64 = field.gradient().iter().map(|d| d.sobolev_norm_sq(0.0, Weight::Physical)).sum();
    if grad == 0.0 {
        return Err(Error::ZeroGradient);
    }
    Ok(field.l2_norm() / grad.sqrt())
}

/// ⟨B_{coef}(arg), arg⟩_{H^s}.
pub fn dissipativity_form(coef: &State, arg: &State, params: &GasParameters, s: f64, weight: Weight) -> Result<f64> {
    Ok(apply_b(coef, arg, params)?.inner(arg, s, weight))
}

/// sup over arguments x of |⟨B_{coef}x, x⟩_{H^s}| / ∥x∥²_s, the numerical
/// radius of the H^s-symmetric part of B_{coef}, by power iteration from `start`.
pub fn dissipativity_constant(
    coef: &State,
    start: &State,
    params: &GasParameters,
    s: f64,
    weight: Weight,
    iterations: usize,
) -> Result<f64> {
    coef.same_grid(start)?;
    let sym = |x: &State| -> Result<State> {
        let adj = weight_power(&apply_b_adjoint(coef, &weight_power(x, weight, s), params)?, weight, -s);
        let mut y = apply_b(coef, x, params)?;
        y.axpy(1.0, &adj);
        y.scale(0.5);
        Ok(y)
    };
    let size = start.hilbert_norm(s, weight);
    if size == 0.0 {
        return Err(Error::InvalidArgument("power iteration needs a nonzero start".into()));
    }
    let mut x = start.scaled(1.0 / size);
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let y = sym(&x)?;
        estimate = y.hilbert_norm(s, weight);
        if estimate == 0.0 {
            break;
        }
        x = y.scaled(1.0 / estimate);
    }
    Ok(estimate)
}

fn shift(state: &State, dir: Shift) -> State {
    let mut out = state.clone();
    out.components_mut().for_each(|f| *f = f.bessel_shift(dir));
    out
}

/// C = S B S⁻¹ − B with S the Bessel multiplier (1+|ξ|²)^{1/2}.
fn commutator(state: &State, x: &State, params: &GasParameters) -> Result<State> {
    let inner = apply_b(state, &shift(x, Shift::Down), params)?;
    Ok(shift(&inner, Shift::Up).sub(&apply_b(state, x, params)?))
}

/// L²-adjoint C† = S⁻¹B†S − B†.
fn commutator_adjoint(state: &State, y: &State, params: &GasParameters) -> Result<State> {
    let inner = apply_b_adjoint(state, &shift(y, Shift::Up), params)?;
    Ok(shift(&inner, Shift::Down).sub(&apply_b_adjoint(state, y, params)?))
}

fn weight_power(state: &State, weight: Weight, s: f64) -> State {
    let mut out = state.clone();
    out.components_mut().for_each(|f| *f = f.multiplier(|xi_sq| weight.factor(xi_sq, s)));
    out
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    pub n_probes: usize,
    pub iterations: usize,
    pub tolerance: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { n_probes: 8, iterations: 30, tolerance: 1e-6 }
    }
}

/// Power-iteration estimate of ∥S B_{state} S⁻¹ − B_{state}∥ on X_s, with the
/// Hilbert norm built from the (1+|ξ|²)^s weights.
pub fn commutator_norm_probe(
    state: &State,
    params: &GasParameters,
    s: f64,
    seed: u64,
    opts: ProbeOptions,
) -> Result<f64> {
    if opts.n_probes == 0 {
        return Err(Error::InvalidArgument("at least one probe is needed".into()));
    }
    let grid = state.grid().clone();
    let norm = |x: &State| x.hilbert_norm(s, Weight::Paper);
    // X_s-adjoint: W⁻²C†W² with W² = (1+|ξ|²)^s
    let normal = |x: &State| -> Result<State> {
        let cx = commutator(state, x, params)?;
        Ok(weight_power(&commutator_adjoint(state, &weight_power(&cx, Weight::Paper, s), params)?, Weight::Paper, -s))
    };
    let recipe = RandomState::new(0.0, 1.0).exponent(0.0).theta(f64::MIN_POSITIVE);
    let mut best = 0.0f64;
    for p in 0..opts.n_probes {
        let mut x = recipe.generate(seed.wrapping_add(p as u64), &grid)?;
        x.sigma.coeffs_mut()[0] = Complex64::new(1.0 / (grid.len() as f64).sqrt(), 0.0);
        x.scale(1.0 / norm(&x));
        let mut estimate = 0.0f64;
        for _ in 0..opts.iterations {
            let y = normal(&x)?;
            let ny = norm(&y);
            let next = norm(&commutator(state, &x, params)?);
            let converged = (next - estimate).abs() <= opts.tolerance * next.max(f64::MIN_POSITIVE);
            estimate = next;
            if ny == 0.0 || converged {
                break;
            }
            x = y.scaled(1.0 / ny);
        }
        best = best.max(estimate);
    }
    Ok(best)
}

/// Time series of |c| / (∥σ₁∥_{s+1} + ∥U₁∥_{s+1}); the sup is the measured slaving constant.
pub fn slaving_series(times: &[f64], decomps: &[DecomposedState], s: f64, weight: Weight) -> Result<DecayReport> {
    if times.len() != decomps.len() {
        return Err(Error::ShapeMismatch { expected: times.len(), actual: decomps.len() });
    }
    let mut ratios = Vec::with_capacity(decomps.len());
    for d in decomps {
        let denom = d.part().norm(s + 1.0, weight);
        if denom == 0.0 {
            return Err(Error::DegenerateDenominator);
        }
        ratios.push(d.c.abs() / denom);
    }
    let sup = ratios.iter().copied().fold(0.0, f64::max);
    let window = (times.first().copied().unwrap_or(0.0), times.last().copied().unwrap_or(0.0));
    let mut report = match fit_decay("slaving ratio", times, &ratios, window, FitMode::Plain) {
        Ok(r) => r,
        Err(Error::InsufficientSamples { .. }) | Err(Error::NonPositiveSeries) => DecayReport {
            quantity: "slaving ratio".into(),
            times: times.to_vec(),
            values: ratios.clone(),
            rate: f64::NAN,
            prefactor: f64::NAN,
            window,
            residual: f64::NAN,
            k_measured: None,
        },
        Err(e) => return Err(e),
    };
    report.k_measured = Some(sup);
    Ok(report)
}

fn all_modes(grid: &GridSpec, samples: &[f64]) -> ScalarField {
    ScalarField::from_samples(grid, samples).expect("sample count matches the grid")
}

fn l2_vec(fields: &[ScalarField]) -> f64 {
    fields.iter().map(|f| f.sobolev_norm_sq(0.0, Weight::Physical)).sum::<f64>().sqrt()
}

/// Physical samples of ρ and of every product a·U_j for a sample vector a.
struct Primitive {
    rho: Vec<f64>,
    u: Vec<Vec<f64>>,
}

impl Primitive {
    fn new(state: &State, params: &GasParameters) -> Result<Self> {
        Ok(Self {
            rho: density_samples(&state.sigma, params)?,
            u: state.velocity.iter().map(|f| f.to_samples()).collect(),
        })
    }

    fn momentum(&self, j: usize) -> Vec<f64> {
        self.rho.iter().zip(&self.u[j]).map(|(r, u)| r * u).collect()
    }
}

fn central_steps(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, have: traj.len() });
    }
    Ok(traj.spacing())
}

/// max over interior snapshots of ∥ρ_t + ∇·(ρU)∥ / ∥ρU∥ with ρ_t by central differences.
pub fn continuity_residual(traj: &Trajectory) -> Result<f64> {
    let h = central_steps(traj)?;
    let grid = &traj.grid;
    let dim = grid.dim();
    let prim: Vec<Primitive> = traj.states.iter().map(|s| Primitive::new(s, &traj.params)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for k in 1..traj.len() - 1 {
        let rho_t: Vec<f64> = prim[k + 1].rho.iter().zip(&prim[k - 1].rho).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let mut res = all_modes(grid, &rho_t);
        let mut flux = Vec::with_capacity(dim);
        for j in 0..dim {
            let m = all_modes(grid, &prim[k].momentum(j));
            res.axpy(1.0, &m.derivative(j)?);
            flux.push(m);
        }
        let scale = l2_vec(&flux);
        if scale > 0.0 {
            worst = worst.max(res.l2_norm() / scale);
        }
    }
    Ok(worst)
}

/// The same check on (ρU)_t + ∇·(ρU⊗U) + ∇P + ρU = 0, relative to ∥ρU∥.
pub fn momentum_residual(traj: &Trajectory) -> Result<f64> {
    let h = central_steps(traj)?;
    let grid = &traj.grid;
    let dim = grid.dim();
    let gamma = traj.params.gamma;
    let prim: Vec<Primitive> = traj.states.iter().map(|s| Primitive::new(s, &traj.params)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for k in 1..traj.len() - 1 {
        let p = &prim[k];
        let pressure = all_modes(grid, &p.rho.iter().map(|r| r.powf(gamma) / gamma).collect::<Vec<_>>());
        let mut residual = Vec::with_capacity(dim);
        let mut flux = Vec::with_capacity(dim);
        for i in 0..dim {
            let (after, before) = (prim[k + 1].momentum(i), prim[k - 1].momentum(i));
            let m_i = p.momentum(i);
            let mut r: Vec<f64> = after.iter().zip(&before).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            r.iter_mut().zip(&m_i).for_each(|(x, m)| *x += m);
            let mut res = all_modes(grid, &r);
            res.axpy(1.0, &pressure.derivative(i)?);
            for j in 0..dim {
                let prod: Vec<f64> = m_i.iter().zip(&p.u[j]).map(|(m, u)| m * u).collect();
                res.axpy(1.0, &all_modes(grid, &prod).derivative(j)?);
            }
            residual.push(res);
            flux.push(all_modes(grid, &m_i));
        }
        let scale = l2_vec(&flux);
        if scale > 0.0 {
            worst = worst.max(l2_vec(&residual) / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{evolve, EvolveOptions};
    use crate::spectral::random_state;
    use std::f64::consts::PI;

    fn series(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..=600).map(|k| k as f64 * 0.05).collect();
        let v = t.iter().map(|&x| f(x)).collect();
        (t, v)
    }

    #[test]
    fn exact_exponential_and_constant() {
        let (t, v) = series(|x| (-0.5 * x).exp());
        let r = fit_decay("x", &t, &v, (0.0, 30.0), FitMode::Plain).unwrap();
        assert!((r.rate - 0.5).abs() < 1e-10);
        assert!((r.prefactor - 1.0).abs() < 1e-9);
        let (t, v) = series(|_| 3.0);
        let r = fit_decay("x", &t, &v, (0.0, 30.0), FitMode::Plain).unwrap();
        assert!(r.rate.abs() < 1e-10);
        // a monotone series has no interior maxima, so the envelope fit sees every sample
        let (t, v) = series(|x| 2.0 * (-0.5 * x).exp());
        let r = fit_decay("x", &t, &v, (0.0, 30.0), FitMode::Envelope).unwrap();
        assert!((r.rate - 0.5).abs() < 1e-10);
    }

    #[test]
    fn envelope_of_an_oscillating_decay() {
        let (t, v) = series(|x| (-0.5 * x).exp() * (2.0 + (7.0 * x).cos()));
        let r = fit_decay("x", &t, &v, (0.0, 30.0), FitMode::Envelope).unwrap();
        assert!((r.rate - 0.5).abs() < 0.01, "{}", r.rate);
    }

    #[test]
    fn fit_errors() {
        let (t, mut v) = series(|x| (-x).exp());
        assert!(matches!(
            fit_decay("x", &t[..5], &v[..5], (0.0, 1.0), FitMode::Plain),
            Err(Error::InsufficientSamples { .. })
        ));
        v[20] = 0.0;
        assert!(matches!(fit_decay("x", &t, &v, (0.0, 30.0), FitMode::Plain), Err(Error::NonPositiveSeries)));
    }

    #[test]
    fn mass_examples() {
        let g = GridSpec::new(2, 16).unwrap();
        assert!((mass_integral(&State::zeros(&g), &GasParameters::default()).unwrap() - 1.0).abs() < 1e-15);
        let mut x = State::zeros(&g);
        x.sigma = ScalarField::from_fn(&g, |p| 0.1 * (2.0 * PI * p[0]).cos());
        let m = mass_integral(&x, &GasParameters::new(3.0).unwrap()).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poincare_examples() {
        let g = GridSpec::new(2, 16).unwrap();
        let f = ScalarField::from_fn(&g, |p| (2.0 * PI * p[0]).cos());
        assert!((poincare_ratio(&f).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-14);
        let x = random_state(3, &g, 1.0, 1.0).unwrap();
        assert!(poincare_ratio(&x.sigma).unwrap() <= 1.0 / (2.0 * PI) + 1e-15);
        assert!(matches!(poincare_ratio(&ScalarField::constant(&g, 2.0)), Err(Error::ZeroGradient)));
    }

    #[test]
    fn dissipativity_is_linear_in_coefficients() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let c = random_state(1, &g, 2.0, 1e-2).unwrap();
        let a = random_state(2, &g, 2.0, 1.0).unwrap();
        assert_eq!(dissipativity_form(&State::zeros(&g), &a, &p, 2.0, Weight::Physical).unwrap(), 0.0);
        let f1 = dissipativity_form(&c, &a, &p, 2.0, Weight::Physical).unwrap();
        let f2 = dissipativity_form(&c.scaled(2.0), &a, &p, 2.0, Weight::Physical).unwrap();
        assert!((f2 - 2.0 * f1).abs() < 1e-12 * f1.abs());
    }

    #[test]
    fn dissipativity_constant_bounds_the_form() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let c = random_state(1, &g, 3.0, 1e-2).unwrap();
        let a = random_state(2, &g, 2.0, 1.0).unwrap();
        let k = dissipativity_constant(&c, &a, &p, 2.0, Weight::Physical, 60).unwrap();
        for seed in 10..15 {
            let x = random_state(seed, &g, 2.0, 1.0).unwrap();
            let f = dissipativity_form(&c, &x, &p, 2.0, Weight::Physical).unwrap();
            assert!(f.abs() <= k * x.hilbert_norm(2.0, Weight::Physical).powi(2) * (1.0 + 1e-6));
        }
        let k2 = dissipativity_constant(&c.scaled(2.0), &a, &p, 2.0, Weight::Physical, 60).unwrap();
        assert!((k2 / k - 2.0).abs() < 1e-3, "{}", k2 / k);
    }

    #[test]
    fn commutator_vanishes_for_constant_coefficients() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let c = State::constant(&g, 0.2, &[0.1, -0.3]);
        let opts = ProbeOptions { n_probes: 2, ..ProbeOptions::default() };
        assert!(commutator_norm_probe(&c, &p, 2.0, 1, opts).unwrap() < 1e-12);
    }

    #[test]
    fn commutator_probe_is_linear() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let c = random_state(4, &g, 3.0, 1e-2).unwrap();
        let opts = ProbeOptions { n_probes: 2, ..ProbeOptions::default() };
        let a = commutator_norm_probe(&c, &p, 2.0, 1, opts).unwrap();
        let b = commutator_norm_probe(&c.scaled(2.0), &p, 2.0, 1, opts).unwrap();
        assert!(a > 0.0);
        assert!((b / a - 2.0).abs() < 1e-6, "{}", b / a);
    }

    #[test]
    fn commutator_adjoint_identity() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let c = random_state(4, &g, 1.0, 1.0).unwrap();
        let x = random_state(5, &g, 1.0, 1.0).unwrap();
        let y = random_state(6, &g, 1.0, 1.0).unwrap();
        let lhs = commutator(&c, &x, &p).unwrap().inner(&y, 0.0, Weight::Physical);
        let rhs = x.inner(&commutator_adjoint(&c, &y, &p).unwrap(), 0.0, Weight::Physical);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs(), "{lhs} {rhs}");
    }

    #[test]
    fn residuals_vanish_at_rest_and_shrink_with_dt() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let rest = evolve(&State::zeros(&g), 0.1, 0.05, &p, EvolveOptions::default(), &mut []).unwrap();
        assert_eq!(continuity_residual(&rest).unwrap(), 0.0);

        let x = RandomState::new(2.0, 1e-2).unit_mass(p.theta).generate(3, &g).unwrap();
        let run = |dt: f64| evolve(&x, 0.2, dt, &p, EvolveOptions::default(), &mut []).unwrap();
        let (a, b) = (run(0.02), run(0.01));
        let (ca, cb) = (continuity_residual(&a).unwrap(), continuity_residual(&b).unwrap());
        assert!((ca / cb - 4.0).abs() < 0.4, "{ca} {cb}");
        let (ma, mb) = (momentum_residual(&a).unwrap(), momentum_residual(&b).unwrap());
        assert!((ma / mb - 4.0).abs() < 0.4, "{ma} {mb}");
    }
}
