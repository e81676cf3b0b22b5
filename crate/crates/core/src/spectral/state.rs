use super::field::{ScalarField, Weight};
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// The evolved pair (σ, U): a scalar and a `dim`-vector of scalars on one grid.
#[derive(Clone, Debug)]
pub struct State {
    pub sigma: ScalarField,
    pub velocity: Vec<ScalarField>,
}

impl State {
    pub fn new(sigma: ScalarField, velocity: Vec<ScalarField>) -> Result<Self> {
        if velocity.len() != sigma.grid().dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} velocity components, got {}",
                sigma.grid().dim(),
                velocity.len()
            )));
        }
        for u in &velocity {
            sigma.same_grid(u)?;
        }
        Ok(Self { sigma, velocity })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { sigma: ScalarField::zeros(grid), velocity: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect() }
    }

    /// The constant state (a, v).
    pub fn constant(grid: &GridSpec, sigma: f64, velocity: &[f64]) -> Self {
        let mut s = Self::zeros(grid);
        s.sigma = ScalarField::constant(grid, sigma);
        for (u, &v) in s.velocity.iter_mut().zip(velocity) {
            *u = ScalarField::constant(grid, v);
        }
        s
    }

    pub fn grid(&self) -> &GridSpec {
        self.sigma.grid()
    }

    pub fn dim(&self) -> usize {
        self.velocity.len()
    }

    /// σ first, then U_1 … U_dim.
    pub fn components(&self) -> impl Iterator<Item = &ScalarField> {
        std::iter::once(&self.sigma).chain(self.velocity.iter())
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut ScalarField> {
        std::iter::once(&mut self.sigma).chain(self.velocity.iter_mut())
    }

    pub fn same_grid(&self, other: &State) -> Result<()> {
        if self.grid().same_as(other.grid()) && self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// ∥(σ,U)∥_s = ∥σ∥_s + Σ_i ∥U_i∥_s.
    pub fn norm(&self, s: f64, weight: Weight) -> f64 {
        self.components().map(|f| f.sobolev_norm(s, weight)).sum()
    }

    /// (∥σ∥_s² + Σ_i ∥U_i∥_s²)^{1/2}, the Hilbert norm in which the per-mode
    /// propagator bounds are operator norms.
    pub fn hilbert_norm(&self, s: f64, weight: Weight) -> f64 {
        self.components().map(|f| f.sobolev_norm_sq(s, weight)).sum::<f64>().sqrt()
    }

    /// Real part of the H^s inner product summed over components.
    pub fn inner(&self, other: &State, s: f64, weight: Weight) -> f64 {
        self.components().zip(other.components()).map(|(a, b)| a.sobolev_inner(b, s, weight).re).sum()
    }

    pub fn scale(&mut self, a: f64) {
        self.components_mut().for_each(|f| f.scale(a));
    }

    pub fn scaled(&self, a: f64) -> State {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// self += a·other
    pub fn axpy(&mut self, a: f64, other: &State) {
        for (x, y) in self.components_mut().zip(other.components()) {
            x.axpy(a, y);
        }
    }

    pub fn add(&self, other: &State) -> State {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &State) -> State {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Every component moved to `grid` with `ScalarField::transfer`.
    pub fn transfer(&self, grid: &GridSpec) -> Result<State> {
        Ok(State {
            sigma: self.sigma.transfer(grid)?,
            velocity: self.velocity.iter().map(|u| u.transfer(grid)).collect::<Result<_>>()?,
        })
    }

    pub fn apply_mask(&mut self) {
        self.components_mut().for_each(|f| f.apply_mask());
    }

    pub fn max_coeff(&self) -> f64 {
        self.components().map(|f| f.max_coeff()).fold(0.0, f64::max)
    }

    pub fn max_imag_sample(&self) -> f64 {
        self.components().map(|f| f.max_imag_sample()).fold(0.0, f64::max)
    }

    /// Max over the grid of every first derivative of every component.
    pub fn grad_sup(&self) -> f64 {
        let mut worst = 0.0f64;
        for f in self.components() {
            for d in f.gradient() {
                for v in d.to_samples() {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}
