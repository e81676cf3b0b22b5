use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::{GridSpec, Mode};
use crate::error::{Error, Result};

/// Sobolev weight family.
///
/// `Physical` uses the derivative symbol, (1 + 4π²|ξ|²)^s, and is equivalent to
/// the sum-of-derivatives norm on [0,1]^n. `Paper` uses (1 + |ξ|²)^s, the family
/// in which the Bessel shift is an exact isometry H^{s+1} → H^s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Physical,
    Paper,
}

impl Weight {
    #[inline]
    pub fn base(self, xi_sq: f64) -> f64 {
        match self {
            Weight::Physical => 1.0 + 4.0 * PI * PI * xi_sq,
            Weight::Paper => 1.0 + xi_sq,
        }
    }

    #[inline]
    pub fn factor(self, xi_sq: f64, s: f64) -> f64 {
        if s == 0.0 {
            1.0
        } else {
            self.base(xi_sq).powf(s)
        }
    }
}

/// Direction of the Bessel multiplier (1+|ξ|²)^{±1/2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    Up,
    Down,
}

/// Fourier coefficients of a periodic scalar on [0,1]^dim.
///
/// Normalization: f(x) = Σ_ξ f̂(ξ) e^{2πi x·ξ}, so f̂(0) is the spatial mean.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex64::default(); grid.len()] }
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_coeffs(grid: &GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), actual: coeffs.len() });
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    /// Forward transform of real physical samples.
    pub fn from_samples(grid: &GridSpec, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), actual: samples.len() });
        }
        let data = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(Self::from_physical(grid, data))
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.sample_point(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::from_samples(grid, &samples).expect("sample count matches grid")
    }

    pub(crate) fn from_physical(grid: &GridSpec, mut data: Vec<Complex64>) -> Self {
        grid.fft_in_place(&mut data, false);
        let scale = 1.0 / grid.len() as f64;
        for c in &mut data {
            *c *= scale;
        }
        Self { grid: grid.clone(), coeffs: data }
    }

    /// Complex physical samples (imaginary parts vanish for real fields).
    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        self.grid.fft_in_place(&mut data, true);
        data
    }

    pub fn to_samples(&self) -> Vec<f64> {
        self.to_physical().into_iter().map(|c| c.re).collect()
    }

    /// Largest imaginary part among the physical samples.
    pub fn max_imag_sample(&self) -> f64 {
        self.to_physical().iter().fold(0.0f64, |m, c| m.max(c.im.abs()))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode ξ, or zero when ξ is not on the stored lattice.
    pub fn coeff(&self, mode: &[i64]) -> Complex64 {
        self.grid.index_of(mode).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Sets f̂(ξ) = value and f̂(−ξ) = conj(value).
    pub fn set_real_mode(&mut self, mode: &[i64], value: Complex64) -> Result<()> {
        let i = self.grid.index_of(mode).ok_or_else(|| Error::InvalidArgument(format!("mode {mode:?} not on grid")))?;
        let neg: Vec<i64> = mode.iter().map(|&x| -x).collect();
        let j = self.grid.index_of(&neg).ok_or_else(|| Error::InvalidArgument(format!("mode {neg:?} not on grid")))?;
        if i == j {
            self.coeffs[i] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[i] = value;
            self.coeffs[j] = value.conj();
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// ∂f/∂x_axis via the symbol 2πiξ_axis.
    pub fn derivative(&self, axis: usize) -> Result<ScalarField> {
        let dim = self.grid.dim();
        if axis >= dim {
            return Err(Error::AxisOutOfRange { axis, dim });
        }
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, self.grid.wavenumber(i, axis));
        }
        Ok(out)
    }

    pub fn gradient(&self) -> Vec<ScalarField> {
        (0..self.grid.dim()).map(|a| self.derivative(a).expect("axis in range")).collect()
    }

    /// (Σ_ξ w(ξ)^s |f̂(ξ)|²)^{1/2}.
    pub fn sobolev_norm(&self, s: f64, weight: Weight) -> f64 {
        self.sobolev_norm_sq(s, weight).sqrt()
    }

    pub fn sobolev_norm_sq(&self, s: f64, weight: Weight) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            acc += weight.factor(self.grid.xi_sq(i), s) * c.norm_sqr();
        }
        acc
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0, Weight::Physical)
    }

    /// H^s inner product Σ w^s f̂ conj(ĝ).
    pub fn sobolev_inner(&self, other: &ScalarField, s: f64, weight: Weight) -> Complex64 {
        let mut acc = Complex64::default();
        for (i, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            acc += a * b.conj() * weight.factor(self.grid.xi_sq(i), s);
        }
        acc
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Splits f into its mean Pf and the zero-mean part (I−P)f.
    pub fn mean_project(&self) -> (f64, ScalarField) {
        let mut rest = self.clone();
        let mean = rest.coeffs[0].re;
        rest.coeffs[0] = Complex64::default();
        (mean, rest)
    }

    /// Multiplies every coefficient by (1+|ξ|²)^{±1/2}.
    pub fn bessel_shift(&self, shift: Shift) -> ScalarField {
        let exponent = match shift {
            Shift::Up => 0.5,
            Shift::Down => -0.5,
        };
        self.multiplier(|xi_sq| (1.0 + xi_sq).powf(exponent))
    }

    /// Applies a real radial multiplier m(|ξ|²).
    pub fn multiplier(&self, m: impl Fn(f64) -> f64) -> ScalarField {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= m(self.grid.xi_sq(i));
        }
        out
    }

    /// Zeroes every coefficient outside the dealias band.
    pub fn apply_mask(&mut self) {
        for (c, &keep) in self.coeffs.iter_mut().zip(self.grid.mask()) {
            if !keep {
                *c = Complex64::default();
            }
        }
    }

    pub fn masked(&self) -> ScalarField {
        let mut out = self.clone();
        out.apply_mask();
        out
    }

    /// The same band-limited function on another grid of equal dimension:
    /// coefficients are copied mode by mode inside the target's dealias band.
    pub fn transfer(&self, grid: &GridSpec) -> Result<ScalarField> {
        if grid.dim() != self.grid.dim() {
            return Err(Error::GridMismatch);
        }
        let dim = grid.dim();
        let mut out = ScalarField::zeros(grid);
        for i in 0..grid.len() {
            if grid.in_mask(i) {
                out.coeffs[i] = self.coeff(&grid.mode(i)[..dim]);
            }
        }
        Ok(out)
    }

    /// Pointwise product with inputs and output restricted to the dealias band.
    pub fn dealiased_product(&self, other: &ScalarField) -> Result<ScalarField> {
        self.same_grid(other)?;
        let a = self.masked().to_physical();
        let b = other.masked().to_physical();
        Ok(band_product(&self.grid, &a, &b))
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// self += a·other
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Largest |f̂(ξ)|.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// Largest |f̂(ξ) − conj f̂(−ξ)| over the lattice, ignoring the Nyquist planes.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let half = self.grid.n() as i64 / 2;
        for (i, m) in self.grid.modes().iter().enumerate() {
            if m.iter().any(|&x| x == -half) {
                continue;
            }
            let neg: Mode = [-m[0], -m[1], -m[2]];
            let j = self.grid.index_of(&neg[..self.grid.dim()]).expect("negated mode on grid");
            worst = worst.max((self.coeffs[i] - self.coeffs[j].conj()).norm());
        }
        worst
    }
}

/// Forward-transforms the pointwise product of two physical samples and masks it.
pub(crate) fn band_product(grid: &GridSpec, a: &[Complex64], b: &[Complex64]) -> ScalarField {
    let data = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mut out = ScalarField::from_physical(grid, data);
    out.apply_mask();
    out
}
