//! Text dumps for cross-checking: the per-mode exponential and frame rows.

use std::fmt::Write as _;
use std::path::Path;

use euler_lab_core::frame::{decompose_state, solve_frame};
use euler_lab_core::propagator::mode_exponential;

use crate::config::FORMAT_VERSION;
use crate::snapshot::{read_trajectory, SnapshotError};

/// e^{tÂ(ξ)} as `row col re im` lines below a `#` header.
pub fn dump_symbol(xi: &[i64], t: f64) -> Result<String, euler_lab_core::Error> {
    let m = mode_exponential(xi, t)?;
    let mut out = String::new();
    let modes: Vec<String> = xi.iter().map(|x| x.to_string()).collect();
    writeln!(out, "# dim={} xi={} field=mode_exponential t={t:.16e}", xi.len(), modes.join(",")).unwrap();
    writeln!(out, "# format={FORMAT_VERSION}").unwrap();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            writeln!(out, "{r} {c} {:.16e} {:.16e}", z.re, z.im).unwrap();
        }
    }
    Ok(out)
}

/// Rows of L₁, L₂ and the value of c at time `t` along a stored trajectory,
/// as `component,xi_1..xi_n,re,im`.
pub fn dump_frame(traj_dir: &Path, t: f64) -> Result<String, SnapshotError> {
    let stored = read_trajectory(traj_dir)?;
    let traj = &stored.trajectory;
    let state = traj.interpolate(t)?;
    let frame = solve_frame(&state, &traj.params, stored.k_frame)?;
    let c = decompose_state(&state, &frame).c;
    let grid = &traj.grid;
    let dim = grid.dim();

    let mut out = String::new();
    writeln!(out, "# format={FORMAT_VERSION}").unwrap();
    writeln!(out, "# trajectory={} t={t:.16e} K_frame={}", traj_dir.display(), frame.k_frame()).unwrap();
    if let Some(cfg) = stored.meta.get("config") {
        writeln!(out, "# config={cfg}").unwrap();
    }
    let axes: Vec<String> = (1..=dim).map(|a| format!("xi_{a}")).collect();
    writeln!(out, "component,{},re,im", axes.join(",")).unwrap();
    let row = |out: &mut String, name: &str, mode: &[i64], re: f64, im: f64| {
        let m: Vec<String> = mode.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{name},{},{re:.16e},{im:.16e}", m.join(",")).unwrap();
    };
    let basis = &frame.basis;
    for (m, &gi) in basis.indices().iter().enumerate() {
        let z = frame.l1[m];
        row(&mut out, "l1", &grid.mode(gi)[..dim], z.re, z.im);
    }
    for (j, r) in frame.l2.iter().enumerate() {
        for (m, &gi) in basis.indices().iter().enumerate() {
            row(&mut out, &format!("l2_{}", j + 1), &grid.mode(gi)[..dim], r[m].re, r[m].im);
        }
    }
    row(&mut out, "c", &vec![0; dim], c, 0.0);
    Ok(out)
}
