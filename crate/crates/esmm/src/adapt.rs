//! Adaptive mesh redistribution driven by a Winslow-type monitor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mesh::MeshBlock;
use crate::state::{PrimState, Vec3};

/// Scalar field feeding the monitor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorVariable {
    Rho,
    LnRho,
    Pressure,
    LnPressure,
    Lorentz,
    Bmag,
}

impl MonitorVariable {
    pub fn eval(self, w: &PrimState) -> f64 {
        match self {
            MonitorVariable::Rho => w.rho,
            MonitorVariable::LnRho => w.rho.ln(),
            MonitorVariable::Pressure => w.p,
            MonitorVariable::LnPressure => w.p.ln(),
            MonitorVariable::Lorentz => w.lorentz(),
            MonitorVariable::Bmag => (w.b[0] * w.b[0] + w.b[1] * w.b[1] + w.b[2] * w.b[2]).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorParams {
    pub variable: MonitorVariable,
    /// Weight of the normalised gradient term.
    pub alpha: f64,
    /// Weight of the normalised Laplacian term.
    #[serde(default)]
    pub laplacian_weight: f64,
    /// Low-pass filter passes.
    #[serde(default = "default_passes")]
    pub passes: usize,
    /// Jacobi sweeps per time step.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn default_passes() -> usize {
    4
}

fn default_iterations() -> usize {
    10
}

impl Default for MonitorParams {
    fn default() -> Self {
        MonitorParams { variable: MonitorVariable::LnRho, alpha: 1200.0, laplacian_weight: 0.0, passes: 4, iterations: 10 }
    }
}

/// Fill every ghost layer of a scalar field: periodic wrap, mirror otherwise.
pub fn fill_scalar_ghosts(grid: &Grid, periodic: &[bool; 3], field: &mut [f64]) {
    for dir in 0..grid.dim {
        let nk = grid.n[dir] as isize;
        let gk = grid.g[dir] as isize;
        let mut r = grid.range(0);
        for (k, rk) in r.iter_mut().enumerate().take(grid.dim) {
            if k < dir {
                *rk = (-(grid.g[k] as isize), grid.n[k] as isize + grid.g[k] as isize);
            }
        }
        r[dir] = (0, 1);
        let st = grid.stride[dir] as isize;
        for base in grid.box_indices(r) {
            let at = |i: isize| (base as isize + i * st) as usize;
            for i in 1..=gk {
                let (lo, hi) = (-i, nk - 1 + i);
                if periodic[dir] {
                    field[at(lo)] = field[at(lo + nk)];
                    field[at(hi)] = field[at(hi - nk)];
                } else {
                    field[at(lo)] = field[at(i.min(nk - 1))];
                    field[at(hi)] = field[at((nk - 1 - i).max(0))];
                }
            }
        }
    }
}

/// ω = √(1 + α|∇σ|/max|∇σ| + β|Δσ|/max|Δσ|) at interior nodes.
///
/// `sigma` must be valid on the interior and one ghost layer. Terms whose
/// maximum is negligible are dropped. Ghosts of the result are filled.
pub fn build_monitor(grid: &Grid, periodic: &[bool; 3], dxi: &[f64; 3], sigma: &[f64], alpha: f64, laplacian_weight: f64) -> Vec<f64> {
    let idx = grid.interior_indices();
    let mut grad = Vec::with_capacity(idx.len());
    let mut lap = Vec::with_capacity(idx.len());
    let mut scale = 0.0f64;
    for &f in &idx {
        let mut g2 = 0.0;
        let mut l = 0.0;
        for k in 0..grid.dim {
            let st = grid.stride[k];
            let (a, b, c) = (sigma[f - st], sigma[f], sigma[f + st]);
            let d = (c - a) / (2.0 * dxi[k]);
            g2 += d * d;
            l += (c - 2.0 * b + a) / (dxi[k] * dxi[k]);
        }
        scale = scale.max(sigma[f].abs());
        grad.push(g2.sqrt());
        lap.push(l.abs());
    }
    let gmax = grad.iter().cloned().fold(0.0, f64::max);
    let lmax = lap.iter().cloned().fold(0.0, f64::max);
    let hmin = dxi[..grid.dim].iter().cloned().fold(f64::INFINITY, f64::min);
    let tiny = 1e-14 * scale.max(1e-300);
    let mut omega = vec![1.0; grid.len];
    for (s, &f) in idx.iter().enumerate() {
        let mut v = 1.0;
        if gmax * hmin > tiny {
            v += alpha * grad[s] / gmax;
        }
        if laplacian_weight != 0.0 && lmax * hmin * hmin > tiny {
            v += laplacian_weight * lap[s] / lmax;
        }
        omega[f] = v.sqrt();
    }
    fill_scalar_ghosts(grid, periodic, &mut omega);
    omega
}

/// Weighted neighbourhood average with weights 2^−(|j|₁+d), applied `passes` times.
pub fn lowpass_filter(grid: &Grid, periodic: &[bool; 3], omega: &mut Vec<f64>, passes: usize) {
    let idx = grid.interior_indices();
    let d = grid.dim as i32;
    let mut offsets = Vec::new();
    for j2 in -1isize..=1 {
        for j1 in -1isize..=1 {
            for j0 in -1isize..=1 {
                let j = [j0, j1, j2];
                if (0..3).any(|k| k >= grid.dim && j[k] != 0) {
                    continue;
                }
                let l1 = j0.abs() + j1.abs() + j2.abs();
                let off: isize = (0..3).map(|k| j[k] * grid.stride[k] as isize).sum();
                offsets.push((off, 0.5f64.powi(l1 as i32 + d)));
            }
        }
    }
    for _ in 0..passes {
        fill_scalar_ghosts(grid, periodic, omega);
        let mut out = omega.clone();
        for &f in &idx {
            out[f] = offsets.iter().map(|&(o, w)| w * omega[(f as isize + o) as usize]).sum();
        }
        *omega = out;
    }
    fill_scalar_ghosts(grid, periodic, omega);
}

/// Per-node role in the redistribution.
#[derive(Clone, Copy, Debug, PartialEq)]
enum NodeRole {
    Free,
    /// On one non-periodic face; the coordinate normal to it is held.
    Face(usize),
    Pinned,
}

fn node_role(mesh: &MeshBlock, i: [isize; 3]) -> NodeRole {
    let mut faces = Vec::new();
    for k in 0..mesh.dim() {
        if !mesh.periodic[k] && (i[k] == 0 || i[k] == mesh.grid.n[k] as isize - 1) {
            faces.push(k);
        }
    }
    match faces.len() {
        0 => NodeRole::Free,
        1 if mesh.dim() > 1 => NodeRole::Face(faces[0]),
        _ => NodeRole::Pinned,
    }
}

/// `mu` Jacobi sweeps of the discrete Winslow equations.
///
/// `omega` must have filled ghosts. Returns candidate coordinates on the full
/// index range (ghosts filled by the mesh boundary rule).
pub fn jacobi_redistribute(mesh: &MeshBlock, omega: &[f64], mu: usize) -> Vec<Vec3> {
    let g = &mesh.grid;
    let idx = g.interior_indices();
    let roles: Vec<NodeRole> = idx.iter().map(|&f| node_role(mesh, g.unflatten(f))).collect();
    let mut x = mesh.x.clone();
    for _ in 0..mu {
        let mut next = x.clone();
        for (s, &f) in idx.iter().enumerate() {
            let skip = match roles[s] {
                NodeRole::Pinned => continue,
                NodeRole::Face(b) => Some(b),
                NodeRole::Free => None,
            };
            let mut num = [0.0; 3];
            let mut den = 0.0;
            for k in 0..g.dim {
                if Some(k) == skip {
                    continue;
                }
                let st = g.stride[k];
                let (wp, wm) = (omega[f] + omega[f + st], omega[f] + omega[f - st]);
                for c in 0..3 {
                    num[c] += wp * x[f + st][c] + wm * x[f - st][c];
                }
                den += wp + wm;
            }
            let mut xn = [num[0] / den, num[1] / den, num[2] / den];
            if let Some(b) = skip {
                xn[b] = x[f][b];
            }
            for c in g.dim..3 {
                xn[c] = x[f][c];
            }
            next[f] = xn;
        }
        mesh.fill_ghost_vec3(&mut next, true);
        x = next;
    }
    x
}

/// Result of limiting a candidate mesh movement.
#[derive(Clone, Debug)]
pub struct MeshMove {
    pub delta_tau: f64,
    /// Limited displacement Δτ·(x_candidate − x) on the full index range.
    pub displacement: Vec<Vec3>,
}

/// Movement limiter: Δτ ≤ 1 keeps every node within half the gap to its
/// neighbours along each index direction.
pub fn limit_movement(mesh: &MeshBlock, candidate: &[Vec3]) -> Result<MeshMove> {
    let g = &mesh.grid;
    let idx = g.interior_indices();
    let mut tau = 1.0f64;
    for &f in &idx {
        for k in 0..g.dim {
            let st = g.stride[k];
            let gap_lo = mesh.x[f][k] - mesh.x[f - st][k];
            let gap_hi = mesh.x[f + st][k] - mesh.x[f][k];
            if !(gap_lo > 0.0 && gap_hi > 0.0) {
                return Err(Error::DegenerateMesh(format!(
                    "non-increasing coordinate {k} around node {:?} (gaps {gap_lo:e}, {gap_hi:e})",
                    g.unflatten(f)
                )));
            }
            let d = candidate[f][k] - mesh.x[f][k];
            if d < 0.0 {
                tau = tau.min(-gap_lo / (2.0 * d));
            } else if d > 0.0 {
                tau = tau.min(gap_hi / (2.0 * d));
            }
        }
    }
    let mut disp = vec![[0.0; 3]; g.len];
    for &f in &idx {
        for c in 0..3 {
            disp[f][c] = tau * (candidate[f][c] - mesh.x[f][c]);
        }
    }
    mesh.fill_ghost_vec3(&mut disp, false);
    Ok(MeshMove { delta_tau: tau, displacement: disp })
}

/// Limited move plus the mesh velocity Δτ δ_τx / Δt.
pub fn limit_and_velocity(mesh: &MeshBlock, candidate: &[Vec3], dt: f64) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    if !(dt > 0.0) {
        return Err(Error::TimeStep(format!("non-positive dt {dt}")));
    }
    let mv = limit_movement(mesh, candidate)?;
    let xnew: Vec<Vec3> = mesh.x.iter().zip(&mv.displacement).map(|(x, d)| [x[0] + d[0], x[1] + d[1], x[2] + d[2]]).collect();
    let xdot = mv.displacement.iter().map(|d| [d[0] / dt, d[1] / dt, d[2] / dt]).collect();
    Ok((xnew, xdot))
}

/// Coordinates strictly increasing along every index line.
pub fn is_monotone(mesh: &MeshBlock) -> bool {
    let g = &mesh.grid;
    g.interior_indices().iter().all(|&f| {
        (0..g.dim).all(|k| {
            let st = g.stride[k];
            mesh.x[f + st][k] > mesh.x[f][k] && mesh.x[f][k] > mesh.x[f - st][k]
        })
    })
}
