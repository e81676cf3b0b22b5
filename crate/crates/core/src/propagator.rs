//! Exact per-mode exponential of the damped acoustic operator
//! A = [[0, −∇·], [−∇, −I]].
//!
//! On a Fourier mode with derivative symbol k = 2πξ the velocity splits into
//! the longitudinal part u_∥ = k̂·Û, which couples to σ̂ through the 2×2 block
//! M = [[0, −i|k|], [−i|k|, −1]], and dim−1 transverse (shear) parts that are
//! simply damped by e^{−t}. Since |k| ≥ 2π > 1/2 for every ξ ≠ 0, M always has
//! the complex pair λ = −1/2 ± iω with ω = √(4|k|² − 1)/2, so
//!
//!   e^{tM} = e^{−t/2} [cos(ωt) I + sin(ωt)/ω (M + I/2)].

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, State, MAX_DIM};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn wavevector(xi: &[i64]) -> Vec<f64> {
    xi.iter().map(|&x| 2.0 * PI * x as f64).collect()
}

/// Â(ξ) = [[0, −i kᵀ], [−i k, −I]] with k = 2πξ.
pub fn symbol_matrix(xi: &[i64]) -> Mat<Complex64> {
    let k = wavevector(xi);
    let n = xi.len() + 1;
    Mat::from_fn(n, n, |r, c| match (r, c) {
        (0, 0) => Complex64::default(),
        (0, c) => -I * k[c - 1],
        (r, 0) => -I * k[r - 1],
        (r, c) if r == c => Complex64::new(-1.0, 0.0),
        _ => Complex64::default(),
    })
}

/// Acoustic eigen-data of one lattice mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSymbol {
    pub xi: Vec<i64>,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    /// Imaginary part of λ₁; zero for ξ = 0.
    pub omega: f64,
    pub shear_multiplicity: usize,
}

impl ModeSymbol {
    pub fn new(xi: &[i64]) -> Self {
        let k_sq: f64 = wavevector(xi).iter().map(|k| k * k).sum();
        let (lambda1, lambda2, omega) = if k_sq == 0.0 {
            (Complex64::default(), Complex64::new(-1.0, 0.0), 0.0)
        } else {
            let omega = (4.0 * k_sq - 1.0).sqrt() / 2.0;
            (Complex64::new(-0.5, omega), Complex64::new(-0.5, -omega), omega)
        };
        Self { xi: xi.to_vec(), lambda1, lambda2, omega, shear_multiplicity: xi.len() - 1 }
    }
}

/// Orthonormal basis of the plane orthogonal to the unit vector `khat`.
fn transverse_basis(khat: &[f64]) -> Vec<Vec<f64>> {
    match khat.len() {
        1 => vec![],
        2 => vec![vec![-khat[1], khat[0]]],
        _ => {
            // start from the axis least aligned with khat
            let axis =
                (0..3).min_by(|&a, &b| khat[a].abs().partial_cmp(&khat[b].abs()).expect("finite")).expect("three axes");
            let mut e = [0.0; 3];
            e[axis] = 1.0;
            let dot = khat[axis];
            let mut eta1: Vec<f64> = (0..3).map(|i| e[i] - dot * khat[i]).collect();
            let n = eta1.iter().map(|v| v * v).sum::<f64>().sqrt();
            eta1.iter_mut().for_each(|v| *v /= n);
            let eta2 = vec![
                khat[1] * eta1[2] - khat[2] * eta1[1],
                khat[2] * eta1[0] - khat[0] * eta1[2],
                khat[0] * eta1[1] - khat[1] * eta1[0],
            ];
            vec![eta1, eta2]
        }
    }
}

/// Unitary R(ξ) and lower-triangular B(ξ) with R* Â(ξ) R = B(ξ).
///
/// Columns of R are ordered (V₂, V₁, η₁, …): V₁ is the λ₁-eigenvector
/// (−iλ₂, k)/√(|k|²+|λ₂|²), V₂ its orthogonal complement in the acoustic
/// plane, and η_i span the shear directions. B is [[λ₂, 0], [−1, λ₁]] ⊕ −I.
pub fn mode_eigensystem(xi: &[i64]) -> Result<(ModeSymbol, Mat<Complex64>, Mat<Complex64>)> {
    let sym = ModeSymbol::new(xi);
    let k = wavevector(xi);
    let k_sq: f64 = k.iter().map(|v| v * v).sum();
    if k_sq == 0.0 {
        return Err(Error::ZeroMode);
    }
    let k_abs = k_sq.sqrt();
    let l2 = sym.lambda2;
    let dim = xi.len();
    let n = dim + 1;

    let n1 = (k_sq + l2.norm_sqr()).sqrt();
    let n2 = (k_sq * k_sq / l2.norm_sqr() + k_sq).sqrt();
    let h0 = I * k_sq / (l2.conj() * n2);
    let khat: Vec<f64> = k.iter().map(|v| v / k_abs).collect();
    let shear = transverse_basis(&khat);

    let mut r = Mat::<Complex64>::zeros(n, n);
    r[(0, 0)] = h0;
    r[(0, 1)] = -I * l2 / n1;
    for a in 0..dim {
        r[(a + 1, 0)] = Complex64::new(k[a] / n2, 0.0);
        r[(a + 1, 1)] = Complex64::new(k[a] / n1, 0.0);
    }
    for (j, eta) in shear.iter().enumerate() {
        for a in 0..dim {
            r[(a + 1, j + 2)] = Complex64::new(eta[a], 0.0);
        }
    }

    let mut b = Mat::<Complex64>::zeros(n, n);
    b[(0, 0)] = l2;
    b[(1, 0)] = Complex64::new(-1.0, 0.0);
    b[(1, 1)] = sym.lambda1;
    for j in 2..n {
        b[(j, j)] = Complex64::new(-1.0, 0.0);
    }
    Ok((sym, r, b))
}

/// Closed-form e^{tM} for the acoustic block at |k|, row-major.
pub fn acoustic_exponential(k_abs: f64, t: f64) -> [[Complex64; 2]; 2] {
    if k_abs == 0.0 {
        return [
            [Complex64::new(1.0, 0.0), Complex64::default()],
            [Complex64::default(), Complex64::new((-t).exp(), 0.0)],
        ];
    }
    let omega = (4.0 * k_abs * k_abs - 1.0).sqrt() / 2.0;
    let decay = (-0.5 * t).exp();
    let (s, c) = (omega * t).sin_cos();
    let q = s / omega;
    // M + I/2 = [[1/2, −i|k|], [−i|k|, −1/2]]
    [
        [Complex64::new(decay * (c + 0.5 * q), 0.0), Complex64::new(0.0, -decay * q * k_abs)],
        [Complex64::new(0.0, -decay * q * k_abs), Complex64::new(decay * (c - 0.5 * q), 0.0)],
    ]
}

/// e^{tÂ(ξ)} assembled from the acoustic block and the shear damping.
pub fn mode_exponential(xi: &[i64], t: f64) -> Result<Mat<Complex64>> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let dim = xi.len();
    let k = wavevector(xi);
    let k_abs = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a = acoustic_exponential(k_abs, t);
    let shear = (-t).exp();
    let mut m = Mat::<Complex64>::zeros(dim + 1, dim + 1);
    m[(0, 0)] = a[0][0];
    if k_abs == 0.0 {
        for i in 1..=dim {
            m[(i, i)] = Complex64::new(shear, 0.0);
        }
        return Ok(m);
    }
    let khat: Vec<f64> = k.iter().map(|v| v / k_abs).collect();
    for i in 0..dim {
        m[(0, i + 1)] = a[0][1] * khat[i];
        m[(i + 1, 0)] = a[1][0] * khat[i];
        for j in 0..dim {
            let transverse = if i == j { 1.0 } else { 0.0 } - khat[i] * khat[j];
            m[(i + 1, j + 1)] = a[1][1] * (khat[i] * khat[j]) + transverse * shear;
        }
    }
    Ok(m)
}

/// Largest singular value of a 2×2 complex matrix.
pub fn spectral_norm_2x2(m: &[[Complex64; 2]; 2]) -> f64 {
    // H = M*M
    let a = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let d = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let b = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    let half = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (half + disc).max(0.0).sqrt()
}

/// ∥e^{tÂ(ξ)}∥₂ at |k|, using the block-diagonal structure.
pub fn mode_exponential_norm(k_abs: f64, t: f64, dim: usize) -> f64 {
    let acoustic = spectral_norm_2x2(&acoustic_exponential(k_abs, t));
    if dim > 1 || k_abs == 0.0 {
        acoustic.max((-t).exp())
    } else {
        acoustic
    }
}

#[derive(Debug, Clone, Copy)]
struct ModeEntry {
    block: [[Complex64; 2]; 2],
    khat: [f64; MAX_DIM],
}

/// Per-mode e^{dtÂ(ξ)} for one grid and one time step.
#[derive(Debug, Clone)]
pub struct PropagatorTable {
    grid: GridSpec,
    dt: f64,
    shear: f64,
    entries: Vec<ModeEntry>,
}

impl PropagatorTable {
    pub fn new(grid: &GridSpec, dt: f64) -> Result<Self> {
        if dt < 0.0 {
            return Err(Error::NegativeTime(dt));
        }
        let dim = grid.dim();
        let entries = (0..grid.len())
            .map(|i| {
                let mut k = [0.0; MAX_DIM];
                for (a, slot) in k.iter_mut().enumerate().take(dim) {
                    *slot = grid.wavenumber(i, a);
                }
                let k_abs = k.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut khat = [0.0; MAX_DIM];
                if k_abs > 0.0 {
                    for a in 0..dim {
                        khat[a] = k[a] / k_abs;
                    }
                }
                ModeEntry { block: acoustic_exponential(k_abs, dt), khat }
            })
            .collect();
        Ok(Self { grid: grid.clone(), dt, shear: (-dt).exp(), entries })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Largest ∥block∥₂·e^{dt/2} over ξ ≠ 0.
    pub fn growth_constant(&self) -> f64 {
        let dim = self.grid.dim();
        let mut worst = 0.0f64;
        for (i, e) in self.entries.iter().enumerate() {
            if self.grid.xi_sq(i) == 0.0 {
                continue;
            }
            let mut n = spectral_norm_2x2(&e.block);
            if dim > 1 {
                n = n.max(self.shear);
            }
            worst = worst.max(n * (0.5 * self.dt).exp());
        }
        worst
    }

    pub fn apply_in_place(&self, state: &mut State) -> Result<()> {
        if !state.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if self.dt == 0.0 {
            return Ok(());
        }
        let dim = self.grid.dim();
        let shear = self.shear;
        let State { sigma, velocity } = state;
        let sig = sigma.coeffs_mut();
        let mut vel: Vec<&mut [Complex64]> = velocity.iter_mut().map(|u| u.coeffs_mut()).collect();
        for (i, e) in self.entries.iter().enumerate() {
            let s = sig[i];
            let mut par = Complex64::default();
            for a in 0..dim {
                par += vel[a][i] * e.khat[a];
            }
            sig[i] = e.block[0][0] * s + e.block[0][1] * par;
            let new_par = e.block[1][0] * s + e.block[1][1] * par;
            for a in 0..dim {
                let u = vel[a][i];
                vel[a][i] = (u - par * e.khat[a]) * shear + new_par * e.khat[a];
            }
        }
        Ok(())
    }

    pub fn apply(&self, state: &State) -> Result<State> {
        let mut out = state.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }
}

/// T(t)·state.
pub fn apply_semigroup(state: &State, t: f64) -> Result<State> {
    PropagatorTable::new(state.grid(), t)?.apply(state)
}

/// sup over the sampled times and retained ξ ≠ 0 of ∥e^{tÂ(ξ)}∥₂·e^{t/2}.
///
/// Weights of any Sobolev family are constant on each mode, so the value does
/// not depend on `s`; the parameter is accepted for interface symmetry.
pub fn semigroup_constant(grid: &GridSpec, _s: f64, t_samples: &[f64]) -> Result<f64> {
    if t_samples.is_empty() {
        return Err(Error::InvalidArgument("no time samples".into()));
    }
    if let Some(&t) = t_samples.iter().find(|&&t| t < 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let mut radii: Vec<f64> = Vec::new();
    for i in 0..grid.len() {
        if grid.in_mask(i) && grid.xi_sq(i) > 0.0 {
            let k: f64 = (0..grid.dim()).map(|a| grid.wavenumber(i, a).powi(2)).sum::<f64>().sqrt();
            radii.push(k);
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut worst = 0.0f64;
    for &k in &radii {
        for &t in t_samples {
            worst = worst.max(mode_exponential_norm(k, t, grid.dim()) * (0.5 * t).exp());
        }
    }
    Ok(worst)
}
