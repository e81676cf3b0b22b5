//! Moving frame for the mean of σ.
//!
//! For a state (σ,U) near rest, the functionals (L₁, L₂) are defined by
//! requiring that the subspace E₂ = {(σ₁ + L₁σ₁ + L₂U₁, U₁) : Pσ₁ = 0} be
//! invariant under A + B_{σ,U}. Invariance is the linear condition
//! (L₁, L₂)·T = b with
//!
//! ```text
//! T(σ₁,U₁) = ((I−P)(U·∇σ₁ + (1+θσ)∇·U₁), (1+θσ)∇σ₁ + U₁ + U·∇U₁)
//! b(σ₁,U₁) = P(U·∇σ₁ + θσ∇·U₁)
//! ```
//!
//! which is solved on the Galerkin space V of modes with |ξ|_∞ ≤ K_frame:
//! zero-mean σ₁-modes and every U₁-mode. Every state then splits as
//! σ = c + (I+L₁)σ₁ + L₂U₁, U = U₁, and c is slaved to (σ₁,U₁).

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{apply_a, apply_b, GasParameters};
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, RandomState, ScalarField, State, Weight};

/// Modes of the frame truncation and the layout of V.
#[derive(Debug, Clone)]
pub struct FrameBasis {
    grid: GridSpec,
    k_frame: i64,
    /// Grid indices of the modes with |ξ|_∞ ≤ K_frame, in grid order.
    indices: Vec<usize>,
    zero: usize,
}

impl FrameBasis {
    /// K_frame is capped at the dealias cutoff.
    pub fn new(grid: &GridSpec, k_frame: i64) -> Result<Self> {
        if k_frame < 1 {
            return Err(Error::InvalidArgument(format!("frame truncation {k_frame} must be at least 1")));
        }
        let k = k_frame.min(grid.cutoff());
        let dim = grid.dim();
        let indices: Vec<usize> =
            (0..grid.len()).filter(|&i| grid.mode(i)[..dim].iter().all(|x| x.abs() <= k)).collect();
        let zero = indices.iter().position(|&i| i == 0).expect("mode zero is always present");
        Ok(Self { grid: grid.clone(), k_frame: k, indices, zero })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The effective truncation.
    pub fn k_frame(&self) -> i64 {
        self.k_frame
    }

    /// Number of frame modes, (2K_frame+1)^dim.
    pub fn modes(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// dim V = (dim+1)·modes − 1.
    pub fn size(&self) -> usize {
        (self.grid.dim() + 1) * self.modes() - 1
    }

    /// Position in V of component `comp` (0 = σ) at frame mode `m`.
    fn var(&self, comp: usize, m: usize) -> Option<usize> {
        let modes = self.modes();
        if comp == 0 {
            match m.cmp(&self.zero) {
                std::cmp::Ordering::Less => Some(m),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(m - 1),
            }
        } else {
            Some(modes - 1 + (comp - 1) * modes + m)
        }
    }

    /// Coefficient vector of a state's restriction to V.
    #[cfg(test)]
    fn restrict(&self, state: &State) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.size()];
        for (comp, f) in state.components().enumerate() {
            for (m, &gi) in self.indices.iter().enumerate() {
                if let Some(v) = self.var(comp, m) {
                    out[v] = f.coeffs()[gi];
                }
            }
        }
        out
    }
}

/// Coefficient of `field` at a lattice offset, zero outside the dealias band.
fn band_coeff(grid: &GridSpec, field: &ScalarField, mode: &[i64]) -> Complex64 {
    match grid.index_of(mode) {
        Some(i) if grid.in_mask(i) => field.coeffs()[i],
        _ => Complex64::default(),
    }
}

/// The Galerkin system on V: T as a dense matrix and b as a row.
#[derive(Debug, Clone)]
pub struct FrameSystem {
    pub basis: FrameBasis,
    pub t_matrix: Mat<Complex64>,
    pub b_row: Vec<Complex64>,
}

/// Assembles T and b in closed form from the state's Fourier coefficients.
/// Row (ξ, comp) and column (η, comp') couple through the state mode ξ − η.
pub fn assemble_frame_system(state: &State, params: &GasParameters, k_frame: i64) -> Result<FrameSystem> {
    let basis = FrameBasis::new(state.grid(), k_frame)?;
    let grid = basis.grid.clone();
    let dim = grid.dim();
    let theta = params.theta;
    let modes = basis.modes();
    let size = basis.size();
    let i = Complex64::i();

    // full output space: V plus the σ-mean row, which is b
    let out_index = |comp: usize, m: usize| -> usize {
        if comp == 0 {
            m
        } else {
            comp * modes + m
        }
    };
    let b_slot = out_index(0, basis.zero);
    let rows_full = (dim + 1) * modes;

    let columns: Vec<(usize, Vec<Complex64>)> = (0..modes)
        .into_par_iter()
        .flat_map_iter(|n| {
            let eta_idx = basis.indices[n];
            let eta = grid.mode(eta_idx);
            let k: Vec<Complex64> = (0..dim).map(|a| i * grid.wavenumber(eta_idx, a)).collect();
            // one column per component of the η mode
            let mut cols = vec![vec![Complex64::default(); rows_full]; dim + 1];
            for (m, &xi_idx) in basis.indices.iter().enumerate() {
                let xi = grid.mode(xi_idx);
                let mut delta_mode = [0i64; 3];
                for a in 0..dim {
                    delta_mode[a] = xi[a] - eta[a];
                }
                let same = if m == n { 1.0 } else { 0.0 };
                let s_hat = band_coeff(&grid, &state.sigma, &delta_mode[..dim]);
                let u_hat: Vec<Complex64> =
                    state.velocity.iter().map(|u| band_coeff(&grid, u, &delta_mode[..dim])).collect();
                let adv: Complex64 = (0..dim).map(|a| u_hat[a] * k[a]).sum();
                let press = s_hat * theta + same;

                cols[0][out_index(0, m)] = adv;
                for c in 0..dim {
                    cols[0][out_index(1 + c, m)] = press * k[c];
                    cols[1 + c][out_index(0, m)] = press * k[c];
                    cols[1 + c][out_index(1 + c, m)] = adv + same;
                }
            }
            let basis = &basis;
            cols.into_iter()
                .enumerate()
                .filter_map(move |(comp, col)| basis.var(comp, n).map(|v| (v, col)))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut t_matrix = Mat::<Complex64>::zeros(size, size);
    let mut b_row = vec![Complex64::default(); size];
    for (v, col) in columns {
        b_row[v] = col[b_slot];
        for comp in 0..=dim {
            for m in 0..modes {
                if let Some(r) = basis.var(comp, m) {
                    t_matrix[(r, v)] = col[out_index(comp, m)];
                }
            }
        }
    }
    Ok(FrameSystem { basis, t_matrix, b_row })
}

/// The pair (L₁, L₂) as rows over the frame modes.
#[derive(Debug, Clone)]
pub struct FrameFunctionals {
    pub basis: FrameBasis,
    /// Indexed by frame mode; the entry at ξ = 0 is zero.
    pub l1: Vec<Complex64>,
    /// l2[j][m] multiplies Û_j at frame mode m.
    pub l2: Vec<Vec<Complex64>>,
    /// The state the frame was solved at.
    pub base_state: State,
    /// ∥(l1,l2)T − b∥₂ of the dense solve.
    pub solve_residual: f64,
}

impl FrameFunctionals {
    /// L₁ = L₂ = 0.
    pub fn zero(state: &State, k_frame: i64) -> Result<Self> {
        let basis = FrameBasis::new(state.grid(), k_frame)?;
        let modes = basis.modes();
        Ok(Self {
            l1: vec![Complex64::default(); modes],
            l2: vec![vec![Complex64::default(); modes]; state.dim()],
            basis,
            base_state: state.clone(),
            solve_residual: 0.0,
        })
    }

    pub fn k_frame(&self) -> i64 {
        self.basis.k_frame
    }

    /// L₁f. Only zero-mean content is seen, so L₁ annihilates constants.
    pub fn apply_l1(&self, f: &ScalarField) -> f64 {
        let c = f.coeffs();
        let mut acc = Complex64::default();
        for (m, &gi) in self.basis.indices.iter().enumerate() {
            if m != self.basis.zero {
                acc += self.l1[m] * c[gi];
            }
        }
        acc.re
    }

    /// L₂U.
    pub fn apply_l2(&self, u: &[ScalarField]) -> f64 {
        let mut acc = Complex64::default();
        for (row, f) in self.l2.iter().zip(u) {
            let c = f.coeffs();
            for (m, &gi) in self.basis.indices.iter().enumerate() {
                acc += row[m] * c[gi];
            }
        }
        acc.re
    }

    /// L₁σ + L₂U.
    pub fn apply(&self, state: &State) -> f64 {
        self.apply_l1(&state.sigma) + self.apply_l2(&state.velocity)
    }

    /// Euclidean size of the coefficient rows.
    pub fn norm(&self) -> f64 {
        self.l1.iter().chain(self.l2.iter().flatten()).map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |l(ξ) − conj l(−ξ)|, zero for functionals that are real on real fields.
    pub fn hermitian_defect(&self) -> f64 {
        let grid = &self.basis.grid;
        let dim = grid.dim();
        let pos: std::collections::HashMap<usize, usize> =
            self.basis.indices.iter().enumerate().map(|(m, &g)| (g, m)).collect();
        let mut worst = 0.0f64;
        for (m, &g) in self.basis.indices.iter().enumerate() {
            let neg: Vec<i64> = grid.mode(g)[..dim].iter().map(|x| -x).collect();
            let mn = pos[&grid.index_of(&neg).expect("frame modes are symmetric")];
            worst = worst.max((self.l1[m] - self.l1[mn].conj()).norm());
            for row in &self.l2 {
                worst = worst.max((row[m] - row[mn].conj()).norm());
            }
        }
        worst
    }

    /// Σ a_k F_k over frames sharing one basis; the rows of a finite-difference ∂_t L.
    pub fn combination(terms: &[(f64, &FrameFunctionals)]) -> Result<FrameFunctionals> {
        let (_, first) = terms.first().ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        let mut out = FrameFunctionals::zero(&first.base_state, first.basis.k_frame)?;
        out.basis = first.basis.clone();
        for (a, f) in terms {
            if f.basis.indices != first.basis.indices || !f.basis.grid.same_as(&first.basis.grid) {
                return Err(Error::GridMismatch);
            }
            for (x, y) in out.l1.iter_mut().zip(&f.l1) {
                *x += *y * *a;
            }
            for (rx, ry) in out.l2.iter_mut().zip(&f.l2) {
                for (x, y) in rx.iter_mut().zip(ry) {
                    *x += *y * *a;
                }
            }
        }
        Ok(out)
    }

    /// Rows of `self − other`.
    pub fn difference(&self, other: &FrameFunctionals) -> Result<FrameFunctionals> {
        Self::combination(&[(1.0, self), (-1.0, other)])
    }
}

/// Central first-derivative weights for 3 or 5 equally spaced samples.
pub fn central_weights(points: usize, h: f64) -> Result<Vec<f64>> {
    match points {
        3 => Ok(vec![-0.5 / h, 0.0, 0.5 / h]),
        5 => Ok([1.0, -8.0, 0.0, 8.0, -1.0].iter().map(|w| w / (12.0 * h)).collect()),
        n => Err(Error::InvalidArgument(format!("no central stencil on {n} points"))),
    }
}

fn euclid(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves (l1,l2)·T = b by a dense LU factorization of Tᵀ.
pub fn solve_frame(state: &State, params: &GasParameters, k_frame: i64) -> Result<FrameFunctionals> {
    let system = assemble_frame_system(state, params, k_frame)?;
    let size = system.basis.size();
    let tt = system.t_matrix.transpose().to_owned();
    let rhs = Mat::<Complex64>::from_fn(size, 1, |r, _| system.b_row[r]);
    let x = tt.partial_piv_lu().solve(&rhs);

    let row: Vec<Complex64> = (0..size).map(|r| x[(r, 0)]).collect();
    if row.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::FrameSolve("dense solve produced non-finite coefficients".into()));
    }
    let check = &tt * &x;
    let defect: Vec<Complex64> = (0..size).map(|r| check[(r, 0)] - system.b_row[r]).collect();
    let solve_residual = euclid(&defect);
    let b_norm = euclid(&system.b_row);
    if !(solve_residual < 1e-10 * b_norm + 1e-14) {
        return Err(Error::FrameSolve(format!(
            "residual {solve_residual:.3e} against |b| = {b_norm:.3e}; T is numerically singular"
        )));
    }

    let basis = system.basis;
    let modes = basis.modes();
    let dim = state.dim();
    let mut l1 = vec![Complex64::default(); modes];
    let mut l2 = vec![vec![Complex64::default(); modes]; dim];
    for m in 0..modes {
        if let Some(v) = basis.var(0, m) {
            l1[m] = row[v];
        }
        for (j, r) in l2.iter_mut().enumerate() {
            r[m] = row[basis.var(1 + j, m).expect("velocity slots always exist")];
        }
    }
    Ok(FrameFunctionals { basis, l1, l2, base_state: state.clone(), solve_residual })
}

/// c and the zero-mean part (σ₁, U₁) of a state in the frame.
#[derive(Debug, Clone)]
pub struct DecomposedState {
    pub c: f64,
    pub sigma1: ScalarField,
    pub u1: Vec<ScalarField>,
}

impl DecomposedState {
    /// (σ₁, U₁) as a state.
    pub fn part(&self) -> State {
        State { sigma: self.sigma1.clone(), velocity: self.u1.clone() }
    }

    /// σ = c + (I+L₁)σ₁ + L₂U₁, U = U₁.
    pub fn reconstruct(&self, frame: &FrameFunctionals) -> State {
        let mut out = lift(frame, &self.part());
        out.sigma.coeffs_mut()[0] += self.c;
        out
    }
}

/// σ₁ = (I−P)σ, U₁ = U, c = Pσ − L₁σ₁ − L₂U.
pub fn decompose_state(state: &State, frame: &FrameFunctionals) -> DecomposedState {
    let (mean, sigma1) = state.sigma.mean_project();
    let c = mean - frame.apply_l1(&sigma1) - frame.apply_l2(&state.velocity);
    DecomposedState { c, sigma1, u1: state.velocity.clone() }
}

/// [[I+L₁, L₂], [0, I]] applied to (σ₁, U₁).
pub fn lift(frame: &FrameFunctionals, part: &State) -> State {
    let mut out = part.clone();
    out.sigma.coeffs_mut()[0] += frame.apply(part);
    out
}

/// [[I−L₁, −L₂], [0, I]], the inverse of `lift`.
pub fn inverse_lift(frame: &FrameFunctionals, state: &State) -> State {
    let mut out = state.clone();
    out.sigma.coeffs_mut()[0] -= frame.apply(state);
    out
}

/// φ(w) = Pw_σ − L₁w_σ − L₂w_U; it vanishes on E₂.
pub fn frame_defect(frame: &FrameFunctionals, w: &State) -> f64 {
    w.sigma.mean() - frame.apply(w)
}

/// Unit-norm probes (σ₁, U₁) with zero-mean σ₁ supported in |ξ|_∞ ≤ band.
pub fn random_probes(grid: &GridSpec, band: i64, count: usize, seed: u64, s: f64) -> Result<Vec<State>> {
    // probes are not densities, so the positivity cap is switched off
    let recipe = RandomState::new(s, 1.0).band(band).theta(f64::MIN_POSITIVE).exponent(0.0);
    (0..count as u64).map(|k| recipe.generate(seed.wrapping_add(k), grid)).collect()
}

/// max over probes of |φ((A+B_{σ,U}) lift(probe))| / ∥probe∥_s: how far E₂
/// is from invariant under the linearized flow.
pub fn frame_residual(
    frame: &FrameFunctionals,
    probes: &[State],
    params: &GasParameters,
    s: f64,
    weight: Weight,
) -> Result<f64> {
    let state = &frame.base_state;
    let mut worst = 0.0f64;
    for probe in probes {
        state.same_grid(probe)?;
        let mut p = probe.clone();
        p.sigma.coeffs_mut()[0] = Complex64::default();
        let w = lift(frame, &p);
        let mut r = apply_a(&w);
        r.axpy(1.0, &apply_b(state, &w, params)?);
        let size = p.norm(s, weight);
        if size > 0.0 {
            worst = worst.max(frame_defect(frame, &r).abs() / size);
        }
    }
    Ok(worst)
}

/// Tangent of (σ₁, U₁): (A + B_{σ̄,U₁} + B̃)(σ₁,U₁) with σ̄ = c + (I+L₁)σ₁ + L₂U₁.
/// The B̃ row contributes the scalar L₁q_σ + L₂q_U to the σ₁ equation, where
/// (−q_σ, −q_U) = (A + B_{σ̄,U₁})(σ₁,U₁).
pub fn conjugated_rhs(decomp: &DecomposedState, frame: &FrameFunctionals, params: &GasParameters) -> Result<State> {
    let coefficient = decomp.reconstruct(frame);
    let part = decomp.part();
    let mut out = apply_a(&part);
    out.axpy(1.0, &apply_b(&coefficient, &part, params)?);
    let correction = -frame.apply(&out);
    out.sigma.coeffs_mut()[0] += correction;
    Ok(out)
}

/// ċ = φ(x_t) − (∂_tL₁)σ₁ − (∂_tL₂)U₁ at the middle of `frames`, solved at
/// equally spaced times h apart; `tangent` is x_t there.
pub fn c_rate(decomp: &DecomposedState, tangent: &State, frames: &[FrameFunctionals], h: f64) -> Result<f64> {
    let weights = central_weights(frames.len(), h)?;
    let terms: Vec<(f64, &FrameFunctionals)> = weights.into_iter().zip(frames).collect();
    let dl = FrameFunctionals::combination(&terms)?;
    let centre = &frames[frames.len() / 2];
    Ok(frame_defect(centre, tangent) - dl.apply(&decomp.part()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small_state(seed: u64, grid: &GridSpec, amp: f64, band: Option<i64>) -> State {
        let p = GasParameters::default();
        let mut r = RandomState::new(2.0, amp).unit_mass(p.theta);
        if let Some(b) = band {
            r = r.band(b);
        }
        r.generate(seed, grid).unwrap()
    }

    #[test]
    fn zero_state_block_in_one_dimension() {
        let g = GridSpec::new(1, 8).unwrap();
        let sys = assemble_frame_system(&State::zeros(&g), &GasParameters::default(), 1).unwrap();
        // frame modes in grid order are (0, 1, −1), so V = (σ(1), σ(−1), u(0), u(1), u(−1))
        assert_eq!(sys.basis.size(), 5);
        let t = &sys.t_matrix;
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let (s1, u1) = (0, 3);
        assert_eq!(t[(s1, s1)], Complex64::default());
        assert!((t[(s1, u1)] - two_pi_i).norm() < 1e-15);
        assert!((t[(u1, s1)] - two_pi_i).norm() < 1e-15);
        assert_eq!(t[(u1, u1)], Complex64::new(1.0, 0.0));
        let det = t[(s1, s1)] * t[(u1, u1)] - t[(s1, u1)] * t[(u1, s1)];
        assert!((det - Complex64::new(4.0 * PI * PI, 0.0)).norm() < 1e-12);
        assert!(sys.b_row.iter().all(|c| *c == Complex64::default()));
    }

    // T and b as the operator they discretize, applied on the grid
    fn t_and_b_by_fields(state: &State, p: &State, params: &GasParameters) -> (State, f64) {
        let theta = params.theta;
        let g = state.grid();
        let dim = g.dim();
        let one_plus = ScalarField::constant(g, 1.0).add(&state.sigma.scaled(theta));
        let mut div = ScalarField::zeros(g);
        for a in 0..dim {
            div.axpy(1.0, &p.velocity[a].derivative(a).unwrap());
        }
        let mut adv_s = ScalarField::zeros(g);
        for a in 0..dim {
            adv_s.axpy(1.0, &state.velocity[a].dealiased_product(&p.sigma.derivative(a).unwrap()).unwrap());
        }
        let b = adv_s.add(&state.sigma.scaled(theta).dealiased_product(&div).unwrap()).mean();
        let q_s = adv_s.add(&one_plus.dealiased_product(&div).unwrap()).mean_project().1;
        let mut q_u = Vec::new();
        for i in 0..dim {
            let mut f = one_plus.dealiased_product(&p.sigma.derivative(i).unwrap()).unwrap().add(&p.velocity[i]);
            for a in 0..dim {
                f.axpy(1.0, &state.velocity[a].dealiased_product(&p.velocity[i].derivative(a).unwrap()).unwrap());
            }
            q_u.push(f);
        }
        (State { sigma: q_s, velocity: q_u }, b)
    }

    #[test]
    fn assembly_matches_the_operator() {
        for (dim, n, k) in [(1, 16, 5), (2, 16, 3), (3, 8, 2)] {
            let g = GridSpec::new(dim, n).unwrap();
            let params = GasParameters::default();
            let state = small_state(3, &g, 0.1, None);
            let sys = assemble_frame_system(&state, &params, k).unwrap();
            let probe = &random_probes(&g, k, 1, 11, 1.0).unwrap()[0];
            let v = sys.basis.restrict(probe);
            let (tp, b) = t_and_b_by_fields(&state, probe, &params);
            let want = sys.basis.restrict(&tp);
            let size = sys.basis.size();
            let mut err = 0.0f64;
            for r in 0..size {
                let got: Complex64 = (0..size).map(|c| sys.t_matrix[(r, c)] * v[c]).sum();
                err = err.max((got - want[r]).norm());
            }
            let bv: Complex64 = sys.b_row.iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!(err < 1e-12, "dim {dim}: {err}");
            assert!((bv - b).norm() < 1e-14, "dim {dim}: {bv} vs {b}");
        }
    }

    #[test]
    fn zero_state_gives_zero_frame() {
        let g = GridSpec::new(2, 16).unwrap();
        let f = solve_frame(&State::zeros(&g), &GasParameters::default(), 4).unwrap();
        assert!(f.norm() < 1e-12);
        let probes = random_probes(&g, g.cutoff(), 3, 1, 2.0).unwrap();
        let r = frame_residual(&f, &probes, &GasParameters::default(), 2.0, Weight::Physical).unwrap();
        assert!(r < 1e-13, "{r}");
    }

    #[test]
    fn invariance_inside_the_truncation() {
        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let state = small_state(5, &g, 1e-2, Some(2));
        let f = solve_frame(&state, &params, 4).unwrap();
        assert!(f.norm() > 0.0);
        assert!(f.hermitian_defect() < 1e-12 * f.norm());
        let probes = random_probes(&g, 4, 4, 7, 2.0).unwrap();
        let r = frame_residual(&f, &probes, &params, 2.0, Weight::Physical).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn constants_and_lift() {
        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let state = small_state(9, &g, 1e-2, None);
        let f = solve_frame(&state, &params, 3).unwrap();
        assert_eq!(f.apply_l1(&ScalarField::constant(&g, 2.5)), 0.0);
        let part = random_probes(&g, g.cutoff(), 1, 4, 2.0).unwrap().remove(0);
        let back = inverse_lift(&f, &lift(&f, &part));
        assert!(back.sub(&part).max_coeff() < 1e-13 * part.max_coeff());
    }

    #[test]
    fn decomposition_round_trip() {
        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let state = small_state(2, &g, 1e-2, None);
        let f = solve_frame(&state, &params, 4).unwrap();
        let d = decompose_state(&state, &f);
        assert_eq!(d.sigma1.mean(), 0.0);
        assert!(d.reconstruct(&f).sub(&state).max_coeff() < 1e-13 * state.max_coeff());

        let constant = State::constant(&g, 0.3, &[0.0, 0.0]);
        let fc = solve_frame(&constant, &params, 2).unwrap();
        let dc = decompose_state(&constant, &fc);
        assert_eq!(dc.c, 0.3);
        assert_eq!(dc.part().max_coeff(), 0.0);
    }

    #[test]
    fn frame_is_first_order_in_the_state() {
        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let base = small_state(8, &g, 1e-2, None);
        let (_, sigma) = base.sigma.mean_project();
        let base = State { sigma, velocity: base.velocity };
        let n1 = solve_frame(&base, &params, 3).unwrap().norm();
        let n2 = solve_frame(&base.scaled(0.5), &params, 3).unwrap().norm();
        assert!((n1 / n2 - 2.0).abs() < 0.1, "{}", n1 / n2);
    }

    #[test]
    fn zero_frame_reduces_to_the_full_equation() {
        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let state = small_state(1, &g, 1e-2, None);
        let f = FrameFunctionals::zero(&state, 4).unwrap();
        let d = decompose_state(&state, &f);
        let tangent = conjugated_rhs(&d, &f, &params).unwrap();
        let full = crate::dynamics::full_rhs(&state, &params).unwrap();
        assert!(tangent.sub(&full).max_coeff() < 1e-15);
    }

    #[test]
    fn conjugated_tangent_has_zero_mean_up_to_truncation() {
        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let state = small_state(1, &g, 1e-2, Some(2));
        let f = solve_frame(&state, &params, g.cutoff()).unwrap();
        let d = decompose_state(&state, &f);
        let tangent = conjugated_rhs(&d, &f, &params).unwrap();
        let full = crate::dynamics::full_rhs(&state, &params).unwrap();
        assert!(tangent.sigma.mean().abs() < 1e-14 * full.max_coeff());
        // the zero-mean part agrees with the full equation's
        let (_, a) = tangent.sigma.mean_project();
        let (_, b) = full.sigma.mean_project();
        assert!(a.sub(&b).max_coeff() < 1e-15);
    }

    #[test]
    fn stencils_and_combinations() {
        let w = central_weights(5, 0.1).unwrap();
        // exact on cubics
        let f = |t: f64| t * t * t - 2.0 * t;
        let d: f64 = w.iter().enumerate().map(|(k, a)| a * f(0.3 + (k as f64 - 2.0) * 0.1)).sum();
        assert!((d - (3.0 * 0.09 - 2.0)).abs() < 1e-12);
        assert!(central_weights(4, 0.1).is_err());

        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let f1 = solve_frame(&small_state(1, &g, 1e-2, Some(3)), &params, 3).unwrap();
        let f2 = solve_frame(&small_state(2, &g, 1e-2, Some(3)), &params, 3).unwrap();
        let probe = small_state(3, &g, 1.0, None);
        let mix = FrameFunctionals::combination(&[(2.0, &f1), (-3.0, &f2)]).unwrap();
        let expect = 2.0 * f1.apply(&probe) - 3.0 * f2.apply(&probe);
        assert!((mix.apply(&probe) - expect).abs() < 1e-14 * expect.abs().max(1.0));
        let other = solve_frame(&small_state(1, &g, 1e-2, Some(2)), &params, 2).unwrap();
        assert!(matches!(f1.difference(&other), Err(Error::GridMismatch)));
    }

    #[test]
    fn slaved_rate_matches_the_difference_quotient() {
        use crate::integrator::{lawson_rk4_step, Propagators};
        let g = GridSpec::new(2, 16).unwrap();
        let params = GasParameters::default();
        let h = 1e-2;
        let props = Propagators::new(&g, h).unwrap();
        let mut states = vec![small_state(5, &g, 1e-2, None)];
        for _ in 0..4 {
            let next = lawson_rk4_step(states.last().unwrap(), &props, &params).unwrap();
            states.push(next);
        }
        let frames: Vec<_> = states.iter().map(|x| solve_frame(x, &params, 4).unwrap()).collect();
        let cs: Vec<f64> = states.iter().zip(&frames).map(|(x, f)| decompose_state(x, f).c).collect();
        let w = central_weights(5, h).unwrap();
        let measured: f64 = w.iter().zip(&cs).map(|(a, c)| a * c).sum();
        let d = decompose_state(&states[2], &frames[2]);
        let tangent = crate::dynamics::full_rhs(&states[2], &params).unwrap();
        let predicted = c_rate(&d, &tangent, &frames, h).unwrap();
        assert!((measured - predicted).abs() < 1e-2 * predicted.abs(), "{measured:e} {predicted:e}");
    }
}
