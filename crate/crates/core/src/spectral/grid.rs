use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A lattice vector ξ ∈ Z^dim, padded with zeros up to [`MAX_DIM`].
pub type Mode = [i64; MAX_DIM];

/// Uniform periodic grid on [0,1]^dim together with its Fourier lattice.
///
/// Coefficients are stored for every lattice mode ξ with ξ_a ∈ [−N/2, N/2)
/// in FFT order, row-major with the last axis contiguous. The retained
/// (dealiased) band is |ξ_a| < fraction·N/2 on every axis, which for the
/// default 2/3 fraction is the strict Orszag rule: products of two band
/// fields never alias back into the band.
#[derive(Clone)]
pub struct GridSpec {
    inner: Arc<GridData>,
}

struct GridData {
    dim: usize,
    n: usize,
    fraction: (u32, u32),
    cutoff: i64,
    modes: Vec<Mode>,
    mask: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridSpec {
    /// Grid with the default 2/3 dealiasing rule.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        Self::with_dealias(dim, n, 2, 3)
    }

    pub fn with_dealias(dim: usize, n: usize, num: u32, den: u32) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("unsupported dimension {dim}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("modes per axis must be even and >= 8, got {n}")));
        }
        if den == 0 || num == 0 || num > den {
            return Err(Error::InvalidGrid(format!("dealias fraction {num}/{den} must lie in (0, 1]")));
        }
        // |xi| < (num/den)·(N/2)  <=>  2·den·|xi| < num·N
        let cutoff = ((num as i64 * n as i64 - 1) / (2 * den as i64)).min(n as i64 / 2 - 1);
        let len = n.pow(dim as u32);
        let mut modes = Vec::with_capacity(len);
        let mut mask = Vec::with_capacity(len);
        for idx in 0..len {
            let mut mode = [0i64; MAX_DIM];
            let mut rest = idx;
            for axis in (0..dim).rev() {
                let j = rest % n;
                rest /= n;
                mode[axis] = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
            }
            mask.push(mode[..dim].iter().all(|x| x.abs() <= cutoff));
            modes.push(mode);
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self { inner: Arc::new(GridData { dim, n, fraction: (num, den), cutoff, modes, mask, forward, inverse }) })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Modes (and samples) per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Total number of physical samples, N^dim.
    pub fn len(&self) -> usize {
        self.inner.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.modes.is_empty()
    }

    pub fn dealias_fraction(&self) -> (u32, u32) {
        self.inner.fraction
    }

    /// Largest |ξ_a| kept by the dealias mask.
    pub fn cutoff(&self) -> i64 {
        self.inner.cutoff
    }

    pub fn mode(&self, index: usize) -> Mode {
        self.inner.modes[index]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.inner.modes
    }

    pub fn in_mask(&self, index: usize) -> bool {
        self.inner.mask[index]
    }

    pub fn mask(&self) -> &[bool] {
        &self.inner.mask
    }

    /// Flat index of a lattice mode, or `None` when it is not representable.
    pub fn index_of(&self, mode: &[i64]) -> Option<usize> {
        let n = self.inner.n as i64;
        let mut idx = 0usize;
        for axis in 0..self.inner.dim {
            let x = mode.get(axis).copied().unwrap_or(0);
            if x < -n / 2 || x >= n / 2 {
                return None;
            }
            idx = idx * self.inner.n + x.rem_euclid(n) as usize;
        }
        if mode.iter().skip(self.inner.dim).any(|&x| x != 0) {
            return None;
        }
        Some(idx)
    }

    /// |ξ|² of the mode at `index`.
    pub fn xi_sq(&self, index: usize) -> f64 {
        let m = &self.inner.modes[index];
        m[..self.inner.dim].iter().map(|&x| (x * x) as f64).sum()
    }

    /// Derivative symbol component k_axis = 2π ξ_axis, zero on the Nyquist plane.
    pub fn wavenumber(&self, index: usize, axis: usize) -> f64 {
        let x = self.inner.modes[index][axis];
        if x == -(self.inner.n as i64) / 2 {
            0.0
        } else {
            2.0 * std::f64::consts::PI * x as f64
        }
    }

    /// Physical sample point x_j = j/N.
    pub fn sample_point(&self, index: usize) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        let mut rest = index;
        for axis in (0..self.inner.dim).rev() {
            out[axis] = (rest % self.inner.n) as f64 / self.inner.n as f64;
            rest /= self.inner.n;
        }
        out
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    /// In-place N-d DFT over this grid's layout. No normalization is applied.
    pub(crate) fn fft_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let d = &*self.inner;
        let plan = if inverse { &d.inverse } else { &d.forward };
        let n = d.n;
        let len = data.len();
        debug_assert_eq!(len, self.len());
        // last axis is contiguous
        plan.process(data);
        if d.dim == 1 {
            return;
        }
        let lines = len / n;
        let mut scratch = vec![Complex64::default(); len];
        for axis in 0..d.dim - 1 {
            let stride = n.pow((d.dim - 1 - axis) as u32);
            let block = stride * n;
            // gather every line along `axis` into consecutive chunks
            let mut line = 0;
            for base in (0..len).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    let chunk = &mut scratch[line * n..(line + 1) * n];
                    for (j, c) in chunk.iter_mut().enumerate() {
                        *c = data[start + j * stride];
                    }
                    line += 1;
                }
            }
            debug_assert_eq!(line, lines);
            plan.process(&mut scratch);
            let mut line = 0;
            for base in (0..len).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    let chunk = &scratch[line * n..(line + 1) * n];
                    for (j, c) in chunk.iter().enumerate() {
                        data[start + j * stride] = *c;
                    }
                    line += 1;
                }
            }
        }
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dim == other.inner.dim && self.inner.n == other.inner.n && self.inner.cutoff == other.inner.cutoff
    }
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("fraction", &self.inner.fraction)
            .field("cutoff", &self.inner.cutoff)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_eight_modes() {
        let g = GridSpec::new(1, 8).unwrap();
        let xs: Vec<i64> = g.modes().iter().map(|m| m[0]).collect();
        assert_eq!(xs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        // floor((2/3)·4) = 2
        assert_eq!(g.cutoff(), 2);
        let kept: Vec<i64> = (0..8).filter(|&i| g.in_mask(i)).map(|i| g.mode(i)[0]).collect();
        assert_eq!(kept, vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn sample_count_is_n_to_the_dim() {
        assert_eq!(GridSpec::new(2, 32).unwrap().len(), 1024);
        assert_eq!(GridSpec::new(3, 16).unwrap().len(), 4096);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(GridSpec::new(3, 7), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(4, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(1, 6), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn strict_rule_when_n_divisible_by_three() {
        // N = 12: keeping |xi| = 4 would let 4 + 4 alias onto -4
        let g = GridSpec::new(1, 12).unwrap();
        assert_eq!(g.cutoff(), 3);
        for n in [8, 16, 32, 64, 24, 48] {
            let g = GridSpec::new(1, n).unwrap();
            assert!(3 * g.cutoff() < n as i64);
        }
    }

    #[test]
    fn mask_is_symmetric() {
        let g = GridSpec::new(2, 16).unwrap();
        for i in 0..g.len() {
            if g.in_mask(i) {
                let m = g.mode(i);
                let j = g.index_of(&[-m[0], -m[1]]).unwrap();
                assert!(g.in_mask(j));
            }
        }
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(3, 8).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index_of(&g.mode(i)), Some(i));
        }
        assert_eq!(g.index_of(&[4, 0, 0]), None);
    }
}
