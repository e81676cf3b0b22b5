//! Lawson–RK4 time stepping with the exact linear propagator.
//!
//! With y = e^{−tA}v the system v' = Av + N(t,v) becomes
//! y' = e^{−tA}N(t, e^{tA}y), which classical RK4 integrates. Mapping the
//! stages back to v only needs e^{hA} and e^{hA/2}.

use crate::dynamics::{apply_b, GasParameters};
use crate::error::{Error, Result};
use crate::propagator::PropagatorTable;
use crate::spectral::{GridSpec, State, Weight};

/// Mode tables for e^{hA} and e^{hA/2}.
#[derive(Debug, Clone)]
pub struct Propagators {
    full: PropagatorTable,
    half: PropagatorTable,
}

impl Propagators {
    pub fn new(grid: &GridSpec, dt: f64) -> Result<Self> {
        Ok(Self { full: PropagatorTable::new(grid, dt)?, half: PropagatorTable::new(grid, dt / 2.0)? })
    }

    pub fn dt(&self) -> f64 {
        self.full.dt()
    }

    pub fn grid(&self) -> &GridSpec {
        self.full.grid()
    }
}

/// One Lawson–RK4 step of v' = Av + N(τ, v), where τ ∈ [0, h] is the
/// offset of the stage inside the step.
pub fn lawson_rk4_step_with<F>(state: &State, props: &Propagators, mut nonlinearity: F) -> Result<State>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    if !state.grid().same_as(props.grid()) {
        return Err(Error::GridMismatch);
    }
    let h = props.dt();
    if h == 0.0 {
        return Ok(state.clone());
    }
    let half = &props.half;
    let full = &props.full;

    let k1 = nonlinearity(0.0, state)?;
    let ev = half.apply(state)?;
    let ek1 = half.apply(&k1)?;

    let mut stage = ev.clone();
    stage.axpy(h / 2.0, &ek1);
    let k2 = nonlinearity(h / 2.0, &stage)?;

    let mut stage = ev.clone();
    stage.axpy(h / 2.0, &k2);
    let k3 = nonlinearity(h / 2.0, &stage)?;

    let mut stage = half.apply(&ev)?;
    stage.axpy(h, &half.apply(&k3)?);
    let k4 = nonlinearity(h, &stage)?;

    let mut out = full.apply(state)?;
    let mut mid = k2;
    mid.axpy(1.0, &k3);
    out.axpy(h / 6.0, &full.apply(&k1)?);
    out.axpy(h / 3.0, &half.apply(&mid)?);
    out.axpy(h / 6.0, &k4);
    Ok(out)
}

/// One step of the full system (A + B_{σ,U})(σ,U).
pub fn lawson_rk4_step(state: &State, props: &Propagators, params: &GasParameters) -> Result<State> {
    lawson_rk4_step_with(state, props, |_, x| apply_b(x, x, params))
}

/// A stored solution path: states on a uniform lattice of times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Integration step.
    pub dt: f64,
    /// Steps between stored states.
    pub stride: usize,
    pub params: GasParameters,
    pub grid: GridSpec,
}

impl Trajectory {
    /// A path holding `state` at every lattice time of [0, t_end].
    pub fn constant(state: &State, t_end: f64, dt: f64, params: GasParameters) -> Result<Self> {
        let steps = step_count(t_end, dt)?;
        Ok(Self {
            times: (0..=steps).map(|k| k as f64 * dt).collect(),
            states: vec![state.clone(); steps + 1],
            dt,
            stride: 1,
            params,
            grid: state.grid().clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Spacing between stored times.
    pub fn spacing(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("trajectories are never empty")
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectories are never empty")
    }

    /// Coefficients linearly interpolated between stored states.
    pub fn interpolate(&self, t: f64) -> Result<State> {
        let (start, end) = (self.start(), self.end());
        let slack = 1e-9 * self.spacing().max(f64::MIN_POSITIVE);
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::TimeOutOfRange { time: t, start, end });
        }
        let pos = ((t - start) / self.spacing()).max(0.0);
        let k = (pos.floor() as usize).min(self.len() - 1);
        let w = pos - k as f64;
        if k + 1 >= self.len() || w.abs() < 1e-12 {
            return Ok(self.states[k].clone());
        }
        if (1.0 - w).abs() < 1e-12 {
            return Ok(self.states[k + 1].clone());
        }
        let mut out = self.states[k].scaled(1.0 - w);
        out.axpy(w, &self.states[k + 1]);
        Ok(out)
    }

    /// ∥·∥_Z = sup over stored times of the s-norm.
    pub fn z_norm(&self, s: f64, weight: Weight) -> f64 {
        self.states.iter().map(|x| x.norm(s, weight)).fold(0.0, f64::max)
    }

    /// sup over stored times of ∥self(t) − other(t)∥_s.
    pub fn z_distance(&self, other: &Trajectory, s: f64, weight: Weight) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch { expected: self.len(), actual: other.len() });
        }
        let mut worst = 0.0f64;
        for (a, b) in self.states.iter().zip(&other.states) {
            a.same_grid(b)?;
            worst = worst.max(a.sub(b).norm(s, weight));
        }
        Ok(worst)
    }
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("final time {t_end} must be positive")));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end {
        return Err(Error::InvalidArgument(format!("time step {dt} does not divide {t_end}")));
    }
    Ok(steps as usize)
}

/// Called once before the first step and after every step, in time order.
pub trait Observer {
    fn observe(&mut self, step: usize, time: f64, state: &State) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(usize, f64, &State) -> Result<()>,
{
    fn observe(&mut self, step: usize, time: f64, state: &State) -> Result<()> {
        self(step, time, state)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Steps between stored states.
    pub stride: usize,
    /// Index and weight of the norm watched for blow-up.
    pub s: f64,
    pub weight: Weight,
    /// Absolute ceiling; defaults to 10·∥initial∥_s + 1.
    pub ceiling: Option<f64>,
    /// Drop the nonlinearity and integrate the linear part alone.
    pub linear_only: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { stride: 1, s: 2.0, weight: Weight::Physical, ceiling: None, linear_only: false }
    }
}

impl EvolveOptions {
    pub fn with_s(s: f64) -> Self {
        Self { s, ..Self::default() }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn linear_only(mut self) -> Self {
        self.linear_only = true;
        self
    }

    pub fn ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = Some(ceiling);
        self
    }
}

fn check_positive_density(state: &State, params: &GasParameters) -> Result<()> {
    let theta = params.theta;
    if let Some(v) = state.sigma.to_samples().into_iter().find(|&v| !(1.0 + theta * v > 0.0)) {
        return Err(Error::NonPhysicalDensity(format!("1 + θσ = {:.3e}", 1.0 + theta * v)));
    }
    Ok(())
}

/// Integrates the full system from `initial` over [0, t_end].
pub fn evolve(
    initial: &State,
    t_end: f64,
    dt: f64,
    params: &GasParameters,
    options: EvolveOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let steps = step_count(t_end, dt)?;
    let stride = options.stride.max(1);
    if steps % stride != 0 {
        return Err(Error::InvalidArgument(format!("stride {stride} does not divide {steps} steps")));
    }
    check_positive_density(initial, params)?;
    let grid = initial.grid().clone();
    let props = Propagators::new(&grid, dt)?;
    let ceiling = options.ceiling.unwrap_or(10.0 * initial.norm(options.s, options.weight) + 1.0);

    let mut traj =
        Trajectory { times: vec![0.0], states: vec![initial.clone()], dt, stride, params: *params, grid: grid.clone() };
    for obs in observers.iter_mut() {
        obs.observe(0, 0.0, initial)?;
    }
    let mut current = initial.clone();
    for step in 1..=steps {
        current =
            if options.linear_only { props.full.apply(&current)? } else { lawson_rk4_step(&current, &props, params)? };
        let time = step as f64 * dt;
        let norm = current.norm(options.s, options.weight);
        if !(norm <= ceiling) {
            return Err(Error::BlowUp { time, norm, ceiling });
        }
        check_positive_density(&current, params)?;
        for obs in observers.iter_mut() {
            obs.observe(step, time, &current)?;
        }
        if step % stride == 0 {
            traj.times.push(time);
            traj.states.push(current.clone());
        }
    }
    Ok(traj)
}

/// Lattice of the frozen-coefficient sweep from `from` to `to`.
fn frozen_lattice(path: &Trajectory, from: f64, to: f64) -> Result<(usize, f64)> {
    if to < from {
        return Err(Error::NegativeTime(to - from));
    }
    for t in [from, to] {
        let slack = 1e-9 * path.spacing();
        if t < path.start() - slack || t > path.end() + slack {
            return Err(Error::TimeOutOfRange { time: t, start: path.start(), end: path.end() });
        }
    }
    let span = to - from;
    let steps = ((span / path.dt) - 1e-9).ceil().max(0.0) as usize;
    Ok((steps, if steps == 0 { 0.0 } else { span / steps as f64 }))
}

/// y' = (A + B_{σ(t),U(t)})y with coefficients interpolated from `path`:
/// the evolution system M_{σ,U}(to, from) applied to `initial`.
pub fn frozen_evolve(path: &Trajectory, initial: &State, from: f64, to: f64) -> Result<State> {
    path.grid.same_as(initial.grid()).then_some(()).ok_or(Error::GridMismatch)?;
    let (steps, h) = frozen_lattice(path, from, to)?;
    if steps == 0 {
        return Ok(initial.clone());
    }
    let props = Propagators::new(initial.grid(), h)?;
    let mut y = initial.clone();
    for k in 0..steps {
        y = frozen_step(path, &y, &props, from + k as f64 * h)?;
    }
    Ok(y)
}

fn frozen_step(path: &Trajectory, y: &State, props: &Propagators, t0: f64) -> Result<State> {
    let params = path.params;
    let mut cache: Option<(f64, State)> = None;
    lawson_rk4_step_with(y, props, |offset, x| {
        let t = (t0 + offset).min(path.end());
        let coef = match &cache {
            Some((tc, c)) if *tc == offset => c.clone(),
            _ => {
                let c = path.interpolate(t)?;
                cache = Some((offset, c.clone()));
                c
            }
        };
        apply_b(&coef, x, &params)
    })
}

/// M_{σ,U}(t, 0)·initial at every stored time of `path`.
pub fn frozen_trajectory(path: &Trajectory, initial: &State) -> Result<Trajectory> {
    path.grid.same_as(initial.grid()).then_some(()).ok_or(Error::GridMismatch)?;
    let props = Propagators::new(initial.grid(), path.dt)?;
    let mut out = Trajectory {
        times: path.times.clone(),
        states: Vec::with_capacity(path.len()),
        dt: path.dt,
        stride: path.stride,
        params: path.params,
        grid: path.grid.clone(),
    };
    let mut y = initial.clone();
    out.states.push(y.clone());
    for k in 1..path.len() {
        for j in 0..path.stride {
            let t0 = path.times[k - 1] + j as f64 * path.dt;
            y = frozen_step(path, &y, &props, t0)?;
        }
        out.states.push(y.clone());
    }
    Ok(out)
}

/// Outcome of a Picard sweep F(g) = M_g(·, 0)·initial.
#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Iterates g₀, g₁ = F(g₀), …
    pub iterates: Vec<Trajectory>,
    /// ∥g_{k+1} − g_k∥_Z.
    pub differences: Vec<f64>,
    /// differences[k+1] / differences[k].
    pub ratios: Vec<f64>,
    /// The last ratio, ∥F(g₂) − F(g₁)∥_Z / ∥g₂ − g₁∥_Z for the final pair.
    pub contraction_factor: f64,
    /// sup over iterates of ∥g_k∥_{Z, s+1}.
    pub max_higher_norm: f64,
}

/// One Picard map: F(guess) sampled on the guess's lattice.
pub fn picard_map(guess: &Trajectory, initial: &State) -> Result<Trajectory> {
    frozen_trajectory(guess, initial)
}

/// Iterates F starting from `guess` and reports successive contraction.
/// Stops early once the Z-difference falls to roundoff.
pub fn picard_iterate(
    guess: &Trajectory,
    initial: &State,
    iterations: usize,
    s: f64,
    weight: Weight,
) -> Result<PicardReport> {
    let size = initial.norm(s, weight).max(f64::MIN_POSITIVE);
    let mut iterates = vec![guess.clone()];
    let mut differences = Vec::new();
    for _ in 0..iterations {
        let next = picard_map(iterates.last().expect("non-empty"), initial)?;
        let diff = next.z_distance(iterates.last().expect("non-empty"), s, weight)?;
        iterates.push(next);
        differences.push(diff);
        if diff < 1e-12 * size {
            break;
        }
    }
    let ratios: Vec<f64> = differences.windows(2).map(|w| w[1] / w[0]).collect();
    let contraction_factor = ratios.last().copied().unwrap_or(f64::NAN);
    let max_higher_norm = iterates.iter().map(|g| g.z_norm(s + 1.0, weight)).fold(0.0, f64::max);
    Ok(PicardReport { iterates, differences, ratios, contraction_factor, max_higher_norm })
}
