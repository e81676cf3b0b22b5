//! The state equation in symmetrized variables.
//!
//! With P(ρ) = ρ^γ/γ, unit friction and ρ̄ = 1, the substitution
//! σ = (ρ^θ − 1)/θ turns the damped Euler system into
//! (σ,U)_t = A(σ,U) + B_{σ,U}(σ,U), where
//! A = [[0, −∇·], [−∇, −I]] and B_{σ,U} = −[[U·∇, θσ∇·], [θσ∇, U·∇]].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, ScalarField, State};

/// Polytropic gas with P(ρ) = ρ^γ/γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParameters {
    pub gamma: f64,
    pub theta: f64,
}

impl GasParameters {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("adiabatic exponent {gamma} must exceed 1")));
        }
        Ok(Self { gamma, theta: (gamma - 1.0) / 2.0 })
    }
}

impl Default for GasParameters {
    fn default() -> Self {
        Self::new(1.4).expect("1.4 > 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// σ = (ρ^θ − 1)/θ
    RhoToSigma,
    /// ρ = (1 + θσ)^{1/θ}
    SigmaToRho,
}

/// Pointwise ρ ↔ σ on the physical grid.
pub fn rho_sigma_transform(field: &ScalarField, direction: Transform, params: &GasParameters) -> Result<ScalarField> {
    let theta = params.theta;
    let samples = field.to_samples();
    let mut out = Vec::with_capacity(samples.len());
    for v in samples {
        match direction {
            Transform::RhoToSigma => {
                if v <= 0.0 {
                    return Err(Error::NonPhysicalDensity(format!("ρ = {v:.3e}")));
                }
                out.push((v.powf(theta) - 1.0) / theta);
            }
            Transform::SigmaToRho => {
                let base = 1.0 + theta * v;
                if base <= 0.0 {
                    return Err(Error::NonPhysicalDensity(format!("1 + θσ = {base:.3e}")));
                }
                out.push(base.powf(1.0 / theta));
            }
        }
    }
    ScalarField::from_samples(field.grid(), &out)
}

/// Physical samples of ρ = (1+θσ)^{1/θ}.
pub fn density_samples(sigma: &ScalarField, params: &GasParameters) -> Result<Vec<f64>> {
    let theta = params.theta;
    sigma
        .to_samples()
        .into_iter()
        .map(|v| {
            let base = 1.0 + theta * v;
            if base <= 0.0 {
                Err(Error::NonPhysicalDensity(format!("1 + θσ = {base:.3e}")))
            } else {
                Ok(base.powf(1.0 / theta))
            }
        })
        .collect()
}

/// A(σ,U) = (−∇·U, −∇σ − U), exact in spectral space.
pub fn apply_a(state: &State) -> State {
    let grid = state.grid().clone();
    let dim = grid.dim();
    let mut out = State::zeros(&grid);
    {
        let sig = out.sigma.coeffs_mut();
        for a in 0..dim {
            let u = state.velocity[a].coeffs();
            for i in 0..grid.len() {
                sig[i] -= u[i] * Complex64::new(0.0, grid.wavenumber(i, a));
            }
        }
    }
    let s = state.sigma.coeffs();
    for a in 0..dim {
        let u = state.velocity[a].coeffs();
        let du = out.velocity[a].coeffs_mut();
        for i in 0..grid.len() {
            du[i] = -s[i] * Complex64::new(0.0, grid.wavenumber(i, a)) - u[i];
        }
    }
    out
}

fn physical(field: &ScalarField) -> Vec<Complex64> {
    field.masked().to_physical()
}

fn to_band(grid: &GridSpec, data: Vec<Complex64>) -> ScalarField {
    let mut f = ScalarField::from_physical(grid, data);
    f.apply_mask();
    f
}

/// B_{coef}(arg) = −(U·∇σ₁ + θσ∇·U₁, θσ∇σ₁ + U·∇U₁), with (σ,U) = coef and
/// (σ₁,U₁) = arg. Products are formed on the grid and truncated to the band.
pub fn apply_b(coef: &State, arg: &State, params: &GasParameters) -> Result<State> {
    coef.same_grid(arg)?;
    let grid = coef.grid().clone();
    let dim = grid.dim();
    let theta = params.theta;
    let len = grid.len();

    let sig = physical(&coef.sigma);
    let vel: Vec<Vec<Complex64>> = coef.velocity.iter().map(physical).collect();
    let arg_sigma = arg.sigma.masked();
    let grad_s: Vec<Vec<Complex64>> =
        (0..dim).map(|a| arg_sigma.derivative(a).expect("axis in range").to_physical()).collect();
    // grad_u[i][j] = ∂_j U₁_i
    let grad_u: Vec<Vec<Vec<Complex64>>> = arg
        .velocity
        .iter()
        .map(|u| {
            let u = u.masked();
            (0..dim).map(|a| u.derivative(a).expect("axis in range").to_physical()).collect()
        })
        .collect();

    let mut out_sigma = vec![Complex64::default(); len];
    for p in 0..len {
        let mut div = Complex64::default();
        let mut adv = Complex64::default();
        for a in 0..dim {
            div += grad_u[a][a][p];
            adv += vel[a][p] * grad_s[a][p];
        }
        out_sigma[p] = -(adv + sig[p] * div * theta);
    }
    let mut velocity = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut out = vec![Complex64::default(); len];
        for p in 0..len {
            let mut adv = Complex64::default();
            for a in 0..dim {
                adv += vel[a][p] * grad_u[i][a][p];
            }
            out[p] = -(sig[p] * grad_s[i][p] * theta + adv);
        }
        velocity.push(to_band(&grid, out));
    }
    Ok(State { sigma: to_band(&grid, out_sigma), velocity })
}

/// L²-adjoint of `apply_b` in its second slot:
/// B†(τ,V) = (∇·(Uτ + θσV), ∇(θστ) + [∇·(U V_j)]_j).
pub fn apply_b_adjoint(coef: &State, arg: &State, params: &GasParameters) -> Result<State> {
    coef.same_grid(arg)?;
    let grid = coef.grid().clone();
    let dim = grid.dim();
    let theta = params.theta;
    let len = grid.len();

    let sig = physical(&coef.sigma);
    let vel: Vec<Vec<Complex64>> = coef.velocity.iter().map(physical).collect();
    let tau = physical(&arg.sigma);
    let v: Vec<Vec<Complex64>> = arg.velocity.iter().map(physical).collect();

    let mut out = State::zeros(&grid);
    for a in 0..dim {
        let flux: Vec<Complex64> = (0..len).map(|p| vel[a][p] * tau[p] + sig[p] * v[a][p] * theta).collect();
        out.sigma.axpy(1.0, &to_band(&grid, flux).derivative(a)?);
    }
    let pressure_like: Vec<Complex64> = (0..len).map(|p| sig[p] * tau[p] * theta).collect();
    let pressure_like = to_band(&grid, pressure_like);
    for j in 0..dim {
        let mut acc = pressure_like.derivative(j)?;
        for a in 0..dim {
            let flux: Vec<Complex64> = (0..len).map(|p| vel[a][p] * v[j][p]).collect();
            acc.axpy(1.0, &to_band(&grid, flux).derivative(a)?);
        }
        out.velocity[j] = acc;
    }
    Ok(out)
}

/// (A + B_{σ,U})(σ,U).
pub fn full_rhs(state: &State, params: &GasParameters) -> Result<State> {
    let mut out = apply_a(state);
    out.axpy(1.0, &apply_b(state, state, params)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_state, Weight};
    use std::f64::consts::PI;

    #[test]
    fn transform_examples() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let one = ScalarField::constant(&g, 1.0);
        let s = rho_sigma_transform(&one, Transform::RhoToSigma, &p).unwrap();
        assert!(s.max_coeff() < 1e-15);

        let p3 = GasParameters::new(3.0).unwrap();
        assert_eq!(p3.theta, 1.0);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.05 * (2.0 * PI * x[0]).sin());
        let s = rho_sigma_transform(&rho, Transform::RhoToSigma, &p3).unwrap();
        assert!(s.sub(&rho).sub(&ScalarField::constant(&g, -1.0)).max_coeff() < 1e-15);
    }

    #[test]
    fn transform_round_trip() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::new(1.4).unwrap();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.1 * (2.0 * PI * x[0]).sin() * (2.0 * PI * 2.0 * x[1]).cos());
        let s = rho_sigma_transform(&rho, Transform::RhoToSigma, &p).unwrap();
        let back = rho_sigma_transform(&s, Transform::SigmaToRho, &p).unwrap();
        let err = back.to_samples().iter().zip(rho.to_samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn transform_rejects_vacuum() {
        let g = GridSpec::new(1, 8).unwrap();
        let p = GasParameters::default();
        let bad = ScalarField::constant(&g, -1.0);
        assert!(matches!(rho_sigma_transform(&bad, Transform::RhoToSigma, &p), Err(Error::NonPhysicalDensity(_))));
        let bad_sigma = ScalarField::constant(&g, -6.0);
        assert!(matches!(
            rho_sigma_transform(&bad_sigma, Transform::SigmaToRho, &p),
            Err(Error::NonPhysicalDensity(_))
        ));
        assert!(GasParameters::new(1.0).is_err());
    }

    #[test]
    fn b_vanishes_for_zero_coefficients_and_constant_arguments() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let x = random_state(1, &g, 2.0, 1.0).unwrap();
        assert!(apply_b(&State::zeros(&g), &x, &p).unwrap().max_coeff() == 0.0);
        let c = State::constant(&g, 0.3, &[0.1, -0.2]);
        assert!(apply_b(&x, &c, &p).unwrap().max_coeff() < 1e-16);
    }

    #[test]
    fn b_is_bilinear() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let a = random_state(1, &g, 2.0, 1.0).unwrap();
        let b = random_state(2, &g, 2.0, 1.0).unwrap();
        let x = random_state(3, &g, 2.0, 1.0).unwrap();
        let lhs = apply_b(&a.scaled(2.0), &x, &p).unwrap();
        let rhs = apply_b(&a, &x, &p).unwrap().scaled(2.0);
        assert!(lhs.sub(&rhs).max_coeff() < 1e-13 * rhs.max_coeff());
        let sum = apply_b(&a.add(&b), &x, &p).unwrap();
        let parts = apply_b(&a, &x, &p).unwrap().add(&apply_b(&b, &x, &p).unwrap());
        assert!(sum.sub(&parts).max_coeff() < 1e-13 * sum.max_coeff());
        let sum = apply_b(&x, &a.add(&b), &p).unwrap();
        let parts = apply_b(&x, &a, &p).unwrap().add(&apply_b(&x, &b, &p).unwrap());
        assert!(sum.sub(&parts).max_coeff() < 1e-13 * sum.max_coeff());
    }

    #[test]
    fn adjoint_identity() {
        for (dim, n) in [(1, 16), (2, 16), (3, 8)] {
            let g = GridSpec::new(dim, n).unwrap();
            let p = GasParameters::default();
            let c = random_state(4, &g, 1.0, 1.0).unwrap();
            let x = random_state(5, &g, 1.0, 1.0).unwrap();
            let y = random_state(6, &g, 1.0, 1.0).unwrap();
            let lhs = apply_b(&c, &x, &p).unwrap().inner(&y, 0.0, Weight::Physical);
            let rhs = x.inner(&apply_b_adjoint(&c, &y, &p).unwrap(), 0.0, Weight::Physical);
            assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1e-3), "dim {dim}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn steady_state_is_fixed() {
        let g = GridSpec::new(2, 16).unwrap();
        let r = full_rhs(&State::zeros(&g), &GasParameters::default()).unwrap();
        assert!(r.max_coeff() == 0.0);
    }

    #[test]
    fn shear_mode_right_side() {
        // σ = 0, U = ε(sin 2πy, 0): σ_t = 0 and U_t = −U − U·∇U = −U
        let g = GridSpec::new(2, 16).unwrap();
        let eps = 1e-2;
        let mut x = State::zeros(&g);
        x.velocity[0] = ScalarField::from_fn(&g, |p| eps * (2.0 * PI * p[1]).sin());
        let r = full_rhs(&x, &GasParameters::default()).unwrap();
        assert!(r.sigma.max_coeff() < 1e-16);
        assert!(r.velocity[0].add(&x.velocity[0]).max_coeff() < 1e-16);
        assert!(r.velocity[1].max_coeff() < 1e-16);
    }

    #[test]
    fn shear_mode_with_advection_matches_finite_differences() {
        // U = ε(sin 2πy, cos 2πx) is divergence free but self-advecting
        let n = 32;
        let g = GridSpec::new(2, n).unwrap();
        let eps = 0.1;
        let u = |x: f64, y: f64| [eps * (2.0 * PI * y).sin(), eps * (2.0 * PI * x).cos()];
        let mut st = State::zeros(&g);
        st.velocity[0] = ScalarField::from_fn(&g, |p| u(p[0], p[1])[0]);
        st.velocity[1] = ScalarField::from_fn(&g, |p| u(p[0], p[1])[1]);
        let r = full_rhs(&st, &GasParameters::default()).unwrap();
        assert!(r.sigma.max_coeff() < 1e-15);
        // fourth-order central differences of U·∇U in physical space
        let h = 1e-3;
        let rx = r.velocity[0].to_samples();
        let ry = r.velocity[1].to_samples();
        for idx in [0usize, 37, 300, 811] {
            let pt = g.sample_point(idx);
            let (x, y) = (pt[0], pt[1]);
            let d = |f: &dyn Fn(f64, f64) -> f64, ax: usize| {
                let (dx, dy) = if ax == 0 { (h, 0.0) } else { (0.0, h) };
                (-f(x + 2.0 * dx, y + 2.0 * dy) + 8.0 * f(x + dx, y + dy) - 8.0 * f(x - dx, y - dy)
                    + f(x - 2.0 * dx, y - 2.0 * dy))
                    / (12.0 * h)
            };
            let uu = u(x, y);
            for (comp, got) in [(0usize, rx[idx]), (1, ry[idx])] {
                let f = move |a: f64, b: f64| u(a, b)[comp];
                let adv = uu[0] * d(&f, 0) + uu[1] * d(&f, 1);
                let expect = -uu[comp] - adv;
                assert!((got - expect).abs() < 1e-9, "{comp} {got} {expect}");
            }
        }
    }

    #[test]
    fn nonlinear_part_is_quadratic() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = GasParameters::default();
        let x = random_state(8, &g, 2.0, 1.0).unwrap();
        let defect = |eps: f64| {
            let xs = x.scaled(eps);
            full_rhs(&xs, &p).unwrap().sub(&apply_a(&xs)).norm(0.0, Weight::Physical)
        };
        let ratio = defect(1e-2) / defect(5e-3);
        assert!((ratio - 4.0).abs() < 1e-8, "{ratio}");
    }

    #[test]
    fn rhs_preserves_reality() {
        let g = GridSpec::new(3, 8).unwrap();
        let x = random_state(2, &g, 2.0, 1.0).unwrap();
        let r = full_rhs(&x, &GasParameters::default()).unwrap();
        assert!(r.max_imag_sample() < 1e-12 * r.max_coeff());
    }
}
