use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::field::{ScalarField, Weight};
use super::grid::GridSpec;
use super::state::State;
use crate::error::{Error, Result};

/// How the mean of the σ component is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMean {
    /// Pσ = 0.
    Zero,
    /// Pσ chosen so that ∫ρ dx = 1 for ρ = (1+θσ)^{1/θ}.
    UnitMass,
}

/// Recipe for smooth random initial data.
#[derive(Debug, Clone)]
pub struct RandomState {
    /// Sobolev index of the normalizing norm.
    pub s_target: f64,
    pub norm_target: f64,
    /// Amplitudes follow (1+|ξ|²)^{-exponent/2}.
    pub spectrum_exponent: f64,
    pub weight: Weight,
    pub sigma_mean: SigmaMean,
    /// Restrict the support to |ξ|_∞ ≤ band.
    pub band: Option<i64>,
    /// θ = (γ−1)/2, used for the positivity cap and unit-mass normalization.
    pub theta: f64,
}

impl RandomState {
    pub fn new(s_target: f64, norm_target: f64) -> Self {
        Self {
            s_target,
            norm_target,
            spectrum_exponent: 2.0 * (s_target + 2.0),
            weight: Weight::Physical,
            sigma_mean: SigmaMean::Zero,
            band: None,
            theta: 0.2,
        }
    }

    pub fn exponent(mut self, p: f64) -> Self {
        self.spectrum_exponent = p;
        self
    }

    pub fn band(mut self, band: i64) -> Self {
        self.band = Some(band);
        self
    }

    pub fn unit_mass(mut self, theta: f64) -> Self {
        self.sigma_mean = SigmaMean::UnitMass;
        self.theta = theta;
        self
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn weight(mut self, weight: Weight) -> Self {
        self.weight = weight;
        self
    }

    pub fn generate(&self, seed: u64, grid: &GridSpec) -> Result<State> {
        if !(self.norm_target > 0.0) {
            return Err(Error::InvalidArgument(format!("norm target {} must be positive", self.norm_target)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = State::zeros(grid);
        for (comp, field) in state.components_mut().enumerate() {
            fill_random(field, &mut rng, self.spectrum_exponent, self.band);
            if comp == 0 {
                field.coeffs_mut()[0] = Complex64::default();
            }
        }
        let norm = state.norm(self.s_target, self.weight);
        if norm == 0.0 {
            return Err(Error::InvalidArgument("random band is empty".into()));
        }
        state.scale(self.norm_target / norm);

        // keep 1 + θσ > 1/2 pointwise
        let cap = 1.0 / (2.0 * self.theta);
        let sup = state.sigma.to_samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sup >= cap {
            let sigma_norm = state.sigma.sobolev_norm(self.s_target, self.weight);
            state.sigma.scale(0.99 * cap / sup);
            let sigma_after = state.sigma.sobolev_norm(self.s_target, self.weight);
            let u_norm: f64 = state.velocity.iter().map(|u| u.sobolev_norm(self.s_target, self.weight)).sum();
            let budget = self.norm_target - sigma_after;
            if u_norm == 0.0 || budget <= 0.0 {
                return Err(Error::NonPhysicalDensity(format!(
                    "norm target {} needs sup|σ| = {:.3e} beyond the cap {cap:.3e}",
                    self.norm_target,
                    sup * sigma_after / sigma_norm
                )));
            }
            state.velocity.iter_mut().for_each(|u| u.scale(budget / u_norm));
        }

        if self.sigma_mean == SigmaMean::UnitMass {
            // the mean shift feeds back into the norm; a few sweeps converge
            let zero_mean = state.clone();
            let mut alpha = 1.0;
            for _ in 0..50 {
                let mut trial = zero_mean.scaled(alpha);
                let shift = unit_mass_shift(&trial.sigma, self.theta)?;
                trial.sigma.coeffs_mut()[0] = Complex64::new(shift, 0.0);
                let n = trial.norm(self.s_target, self.weight);
                state = trial;
                if ((n - self.norm_target) / self.norm_target).abs() < 1e-15 {
                    break;
                }
                alpha *= self.norm_target / n;
            }
        }
        Ok(state)
    }
}

/// `random_state` with the default spectrum exponent 2(s_target + 2).
pub fn random_state(seed: u64, grid: &GridSpec, s_target: f64, norm_target: f64) -> Result<State> {
    RandomState::new(s_target, norm_target).generate(seed, grid)
}

/// Hermitian-symmetric Gaussian coefficients inside the dealias band.
fn fill_random(field: &mut ScalarField, rng: &mut ChaCha8Rng, exponent: f64, band: Option<i64>) {
    let grid = field.grid().clone();
    let dim = grid.dim();
    for i in 0..grid.len() {
        if !grid.in_mask(i) {
            continue;
        }
        let m = grid.mode(i);
        if let Some(b) = band {
            if m[..dim].iter().any(|x| x.abs() > b) {
                continue;
            }
        }
        // one draw per conjugate pair: the lexicographically positive member
        let first_nonzero = m[..dim].iter().find(|&&x| x != 0);
        let envelope = (1.0 + grid.xi_sq(i)).powf(-exponent / 2.0);
        match first_nonzero {
            None => {
                let re: f64 = StandardNormal.sample(rng);
                field.coeffs_mut()[i] = Complex64::new(re * envelope, 0.0);
            }
            Some(&x) if x > 0 => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let c = Complex64::new(re, im) * (envelope / 2f64.sqrt());
                field.set_real_mode(&m[..dim], c).expect("masked modes are on the grid");
            }
            _ => {}
        }
    }
}

/// Mean m such that mean((1+θ(σ₁+m))^{1/θ}) = 1, for zero-mean σ₁.
pub fn unit_mass_shift(sigma: &ScalarField, theta: f64) -> Result<f64> {
    let (_, zero_mean) = sigma.mean_project();
    let samples = zero_mean.to_samples();
    let inv = 1.0 / theta;
    let mut m = 0.0;
    for _ in 0..100 {
        let mut f = 0.0;
        let mut df = 0.0;
        for &s in &samples {
            let base = 1.0 + theta * (s + m);
            if base <= 0.0 {
                return Err(Error::NonPhysicalDensity(format!("1 + θσ = {base:.3e}")));
            }
            f += base.powf(inv);
            df += base.powf(inv - 1.0);
        }
        let len = samples.len() as f64;
        let step = (f / len - 1.0) / (df / len);
        m -= step;
        if step.abs() < 1e-17 {
            break;
        }
    }
    Ok(m)
}
