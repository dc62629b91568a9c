//! Test-problem presets: initial data, boundary conditions, exact solutions
//! and prescribed mesh motions.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::adapt::{MonitorParams, MonitorVariable};
use crate::state::{Physics, PrimState, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Riemann1,
    Riemann2,
    Riemann3,
    Vortex2d,
    Vortex3d,
    Blast2d,
    Shockcloud2d,
    Shockcloud3d,
    Sphericalrp3d,
    Shockbubble3d,
    /// Constant RMHD state, used for free-stream checks.
    Freestream2d,
    Freestream3d,
}

impl ProblemId {
    pub const ALL: [ProblemId; 12] = [
        ProblemId::Riemann1,
        ProblemId::Riemann2,
        ProblemId::Riemann3,
        ProblemId::Vortex2d,
        ProblemId::Vortex3d,
        ProblemId::Blast2d,
        ProblemId::Shockcloud2d,
        ProblemId::Shockcloud3d,
        ProblemId::Sphericalrp3d,
        ProblemId::Shockbubble3d,
        ProblemId::Freestream2d,
        ProblemId::Freestream3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Riemann1 => "riemann1",
            ProblemId::Riemann2 => "riemann2",
            ProblemId::Riemann3 => "riemann3",
            ProblemId::Vortex2d => "vortex2d",
            ProblemId::Vortex3d => "vortex3d",
            ProblemId::Blast2d => "blast2d",
            ProblemId::Shockcloud2d => "shockcloud2d",
            ProblemId::Shockcloud3d => "shockcloud3d",
            ProblemId::Sphericalrp3d => "sphericalrp3d",
            ProblemId::Shockbubble3d => "shockbubble3d",
            ProblemId::Freestream2d => "freestream2d",
            ProblemId::Freestream3d => "freestream3d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|p| p.name() == s)
    }
}

/// Boundary rule on one face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    Periodic,
    Outflow,
    Inflow(PrimState),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshMode {
    Uniform,
    Prescribed,
    Adaptive,
}

/// Analytic mesh motion x(ξ, t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Motion {
    /// Two-dimensional sinusoidal shear with amplitude 0.2 cos(πt/4).
    Vortex2d { r: f64 },
    /// Three-dimensional product-of-sines motion.
    Vortex3d { r: f64 },
    /// Generic smooth periodic motion over the box `[lo, lo + len]`.
    Sinusoidal { amp: f64, lo: Vec3, len: Vec3, dim: usize },
}

impl Motion {
    pub fn position(&self, xi: Vec3, t: f64) -> Vec3 {
        match *self {
            Motion::Vortex2d { r } => {
                let c = 0.2 * (PI * t / 4.0).cos();
                let k = 3.0 * PI / r;
                [xi[0] + c * (k * xi[1]).sin(), xi[1] + c * (k * xi[0]).sin(), xi[2]]
            }
            Motion::Vortex3d { r } => {
                let c = 0.2 * (PI * t / 4.0).cos();
                let k = 3.0 * PI / r;
                let k3 = 3.0 * PI / (5.0 * r);
                let (s1, s2, s3) = ((k * xi[0]).sin(), (k * xi[1]).sin(), (k3 * xi[2]).sin());
                [xi[0] + c * s2 * s3, xi[1] + c * s3 * s1, xi[2] + c * s1 * s2]
            }
            Motion::Sinusoidal { amp, lo, len, dim } => {
                let mut x = xi;
                let s: Vec<f64> = (0..3).map(|k| if k < dim { (2.0 * PI * (xi[k] - lo[k]) / len[k]).sin() } else { 1.0 }).collect();
                for c in 0..dim {
                    let mut prod = 1.0;
                    for k in 0..dim {
                        if k != c || dim == 1 {
                            prod *= s[k];
                        }
                    }
                    let phase = 1.3 * c as f64 + 0.4;
                    x[c] += amp * len[c] * (3.0 * t + phase).sin() * prod;
                }
                x
            }
        }
    }
}

/// Everything a run needs to know about a problem.
#[derive(Clone, Debug)]
pub struct ProblemSetup {
    pub id: ProblemId,
    pub physics: Physics,
    pub dim: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    /// Boundary per face, ordered (dir0 low, dir0 high, dir1 low, ...).
    pub bc: [Boundary; 6],
    pub gamma: f64,
    pub t_final: f64,
    pub default_n: [usize; 3],
    pub default_mesh: MeshMode,
    pub monitor: MonitorParams,
    pub cfl: f64,
    pub motion: Option<Motion>,
}

impl ProblemSetup {
    pub fn periodic(&self) -> [bool; 3] {
        let mut p = [false; 3];
        for (k, pk) in p.iter_mut().enumerate().take(self.dim) {
            *pk = self.bc[2 * k] == Boundary::Periodic;
        }
        p
    }

    pub fn preset(id: ProblemId) -> Self {
        let outflow = [Boundary::Outflow; 6];
        let periodic = [Boundary::Periodic; 6];
        let ln_rho = |alpha: f64| MonitorParams { variable: MonitorVariable::LnRho, alpha, ..MonitorParams::default() };
        let vortex_monitor = MonitorParams {
            variable: MonitorVariable::Rho,
            alpha: 20.0,
            laplacian_weight: 10.0,
            ..MonitorParams::default()
        };
        let base = ProblemSetup {
            id,
            physics: Physics::Rhd,
            dim: 2,
            lo: [0.0; 3],
            hi: [1.0, 1.0, 0.0],
            bc: outflow,
            gamma: 5.0 / 3.0,
            t_final: 0.4,
            default_n: [100, 100, 1],
            default_mesh: MeshMode::Adaptive,
            monitor: ln_rho(1200.0),
            cfl: 0.4,
            motion: None,
        };
        match id {
            ProblemId::Riemann1 | ProblemId::Riemann2 | ProblemId::Riemann3 => base,
            ProblemId::Vortex2d => ProblemSetup {
                physics: Physics::Rmhd,
                lo: [-5.0, -5.0, 0.0],
                hi: [5.0, 5.0, 0.0],
                bc: periodic,
                t_final: 4.0,
                default_n: [40, 40, 1],
                default_mesh: MeshMode::Prescribed,
                monitor: vortex_monitor,
                motion: Some(Motion::Vortex2d { r: 5.0 }),
                ..base
            },
            ProblemId::Vortex3d => ProblemSetup {
                physics: Physics::Rmhd,
                dim: 3,
                lo: [-5.0, -5.0, -25.0],
                hi: [5.0, 5.0, 25.0],
                bc: periodic,
                t_final: 0.1,
                default_n: [10, 10, 50],
                default_mesh: MeshMode::Prescribed,
                monitor: vortex_monitor,
                cfl: 0.3,
                motion: Some(Motion::Vortex3d { r: 5.0 }),
                ..base
            },
            ProblemId::Blast2d => ProblemSetup {
                physics: Physics::Rmhd,
                lo: [-6.0, -6.0, 0.0],
                hi: [6.0, 6.0, 0.0],
                gamma: 4.0 / 3.0,
                t_final: 4.0,
                default_n: [150, 150, 1],
                monitor: ln_rho(800.0),
                ..base
            },
            ProblemId::Shockcloud2d => {
                let mut bc = outflow;
                bc[0] = Boundary::Inflow(shock_cloud_post());
                ProblemSetup {
                    physics: Physics::Rmhd,
                    lo: [-0.2, 0.0, 0.0],
                    hi: [1.2, 1.0, 0.0],
                    bc,
                    t_final: 1.2,
                    default_n: [210, 150, 1],
                    monitor: ln_rho(800.0),
                    ..base
                }
            }
            ProblemId::Shockcloud3d => {
                let mut bc = outflow;
                bc[0] = Boundary::Inflow(shock_cloud_post());
                ProblemSetup {
                    physics: Physics::Rmhd,
                    dim: 3,
                    lo: [-0.2, 0.0, 0.0],
                    hi: [1.2, 1.0, 1.0],
                    bc,
                    t_final: 1.2,
                    default_n: [42, 30, 30],
                    monitor: ln_rho(800.0),
                    cfl: 0.3,
                    ..base
                }
            }
            ProblemId::Sphericalrp3d => ProblemSetup {
                dim: 3,
                lo: [-1.0; 3],
                hi: [1.0; 3],
                default_n: [40, 40, 40],
                monitor: ln_rho(800.0),
                cfl: 0.3,
                ..base
            },
            ProblemId::Shockbubble3d => {
                let mut bc = outflow;
                bc[1] = Boundary::Inflow(shock_bubble_post());
                ProblemSetup {
                    dim: 3,
                    lo: [0.0, -45.0, -45.0],
                    hi: [325.0, 45.0, 45.0],
                    bc,
                    t_final: 450.0,
                    default_n: [65, 18, 18],
                    monitor: ln_rho(800.0),
                    cfl: 0.3,
                    ..base
                }
            }
            ProblemId::Freestream2d => ProblemSetup {
                physics: Physics::Rmhd,
                bc: periodic,
                t_final: 0.1,
                default_n: [24, 24, 1],
                default_mesh: MeshMode::Prescribed,
                motion: Some(Motion::Sinusoidal { amp: 0.02, lo: [0.0; 3], len: [1.0; 3], dim: 2 }),
                ..base
            },
            ProblemId::Freestream3d => ProblemSetup {
                physics: Physics::Rmhd,
                dim: 3,
                hi: [1.0; 3],
                bc: periodic,
                t_final: 0.1,
                default_n: [12, 12, 12],
                default_mesh: MeshMode::Prescribed,
                cfl: 0.3,
                motion: Some(Motion::Sinusoidal { amp: 0.02, lo: [0.0; 3], len: [1.0; 3], dim: 3 }),
                ..base
            },
        }
    }

    /// Initial primitive state at a physical point.
    pub fn initial(&self, x: Vec3) -> PrimState {
        let g = self.gamma;
        let hydro = |rho: f64, v1: f64, v2: f64, p: f64| PrimState::hydro(rho, [v1, v2, 0.0], p, g);
        match self.id {
            ProblemId::Riemann1 => match quadrant(x) {
                0 => hydro(0.5, 0.5, -0.5, 5.0),
                1 => hydro(1.0, 0.5, 0.5, 5.0),
                2 => hydro(3.0, -0.5, 0.5, 5.0),
                _ => hydro(1.5, -0.5, -0.5, 5.0),
            },
            ProblemId::Riemann2 => match quadrant(x) {
                0 => hydro(1.0, 0.0, 0.0, 1.0),
                1 => hydro(0.5771, -0.3529, 0.0, 0.4),
                2 => hydro(1.0, -0.3529, -0.3529, 1.0),
                _ => hydro(0.5771, 0.0, -0.3529, 0.4),
            },
            ProblemId::Riemann3 => match quadrant(x) {
                0 => hydro(0.035145216124503, 0.0, 0.0, 0.162931056509027),
                1 => hydro(0.1, 0.7, 0.0, 1.0),
                2 => hydro(0.5, 0.0, 0.0, 1.0),
                _ => hydro(0.1, 0.0, 0.7, 1.0),
            },
            ProblemId::Vortex2d => vortex2d_exact(x, 0.0, g),
            ProblemId::Vortex3d => vortex3d_exact(x, 0.0, g),
            ProblemId::Blast2d => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let s = ((r - 0.8) / 0.2).clamp(0.0, 1.0);
                let rho = 0.01 + s * (1e-4 - 0.01);
                let p = 1.0 + s * (5e-4 - 1.0);
                PrimState::new(rho, [0.0; 3], p, [0.1, 0.0, 0.0], g)
            }
            ProblemId::Shockcloud2d | ProblemId::Shockcloud3d => {
                let c = if self.dim == 2 { [0.25, 0.5, x[2]] } else { [0.25, 0.5, 0.5] };
                let d2: f64 = (0..3).map(|k| (x[k] - c[k]).powi(2)).sum();
                if x[0] < 0.05 {
                    shock_cloud_post()
                } else {
                    let rho = if d2 <= 0.15 * 0.15 { 30.0 } else { 1.0 };
                    PrimState::new(rho, [0.0; 3], 0.05, [0.0, 0.16106, 0.16106], g)
                }
            }
            ProblemId::Sphericalrp3d => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                if r2 < 0.25 {
                    PrimState::hydro(10.0, [0.0; 3], 40.0 / 3.0, g)
                } else {
                    PrimState::hydro(1.0, [0.0; 3], 1e-2, g)
                }
            }
            ProblemId::Shockbubble3d => {
                let d2 = (x[0] - 215.0).powi(2) + x[1] * x[1] + x[2] * x[2];
                if x[0] > 265.0 {
                    shock_bubble_post()
                } else if d2 <= 625.0 {
                    PrimState::hydro(0.1358, [0.0; 3], 0.05, g)
                } else {
                    PrimState::hydro(1.0, [0.0; 3], 0.05, g)
                }
            }
            ProblemId::Freestream2d | ProblemId::Freestream3d => freestream_state(g),
        }
    }

    /// Exact solution where one is known.
    pub fn exact(&self, x: Vec3, t: f64) -> Option<PrimState> {
        match self.id {
            ProblemId::Vortex2d => Some(vortex2d_exact(x, t, self.gamma)),
            ProblemId::Vortex3d => Some(vortex3d_exact(x, t, self.gamma)),
            ProblemId::Freestream2d | ProblemId::Freestream3d => Some(freestream_state(self.gamma)),
            _ => None,
        }
    }
}

pub fn freestream_state(g: f64) -> PrimState {
    PrimState::new(1.3, [0.3, -0.25, 0.1], 0.8, [0.6, -0.4, 0.3], g)
}

/// Quadrant index about (0.5, 0.5): 0 upper right, 1 upper left, 2 lower left, 3 lower right.
fn quadrant(x: Vec3) -> usize {
    match (x[0] > 0.5, x[1] > 0.5) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

fn shock_cloud_post() -> PrimState {
    PrimState::new(3.86859, [0.68, 0.0, 0.0], 1.25115, [0.0, 0.84981, -0.84981], 5.0 / 3.0)
}

fn shock_bubble_post() -> PrimState {
    PrimState::hydro(1.865225080631180, [-0.196781107378299, 0.0, 0.0], 0.15, 5.0 / 3.0)
}

const VORTEX_SIGMA: f64 = 0.2;
const VORTEX_B0: f64 = 0.05;

/// Rest-frame vortex profile at skewed coordinates (x̃₁, x̃₂).
/// Returns (ρ, p, ṽ, B̃).
fn vortex_core(xt: [f64; 2], g: f64) -> (f64, f64, [f64; 2], [f64; 2]) {
    let r2 = xt[0] * xt[0] + xt[1] * xt[1];
    let e = (1.0 - r2).exp();
    let rho = (1.0 - VORTEX_SIGMA * e).powf(1.0 / (g - 1.0));
    let p = rho.powf(g);
    let kappa = 2.0 * g * VORTEX_SIGMA * rho + (g - 1.0) * VORTEX_B0 * VORTEX_B0 * (2.0 - r2);
    let f = (kappa * e / (kappa * r2 * e + (g - 1.0) * rho + g * p)).sqrt();
    let vt = [-xt[1] * f, xt[0] * f];
    // The field decays with half the exponent of the pressure bump; this is
    // the profile for which κ above gives radial force balance.
    let eb = (0.5 * (1.0 - r2)).exp();
    let bt = [-VORTEX_B0 * eb * xt[1], VORTEX_B0 * eb * xt[0]];
    (rho, p, vt, bt)
}

/// Exact 2D vortex, periodic image nearest the core.
pub fn vortex2d_exact(x: Vec3, t: f64, g: f64) -> PrimState {
    let r = 5.0;
    let c = (SQRT_2 - 1.0) / 2.0;
    let mut best = ([0.0; 2], f64::INFINITY);
    for k1 in -2..=2 {
        for k2 in -2..=2 {
            let xh = [2.0 * k1 as f64 * r + x[0] + t / 2.0 - 1.0, 2.0 * k2 as f64 * r + x[1] + t / 2.0 - 1.0];
            let s = c * (xh[0] + xh[1]);
            let xt = [xh[0] + s, xh[1] + s];
            let r2 = xt[0] * xt[0] + xt[1] * xt[1];
            if r2 < best.1 {
                best = (xt, r2);
            }
        }
    }
    let (rho, p, vt, bt) = vortex_core(best.0, g);
    let den = 4.0 - 2.0 * (vt[0] + vt[1]);
    let v = [
        ((2.0 + SQRT_2) * vt[0] + (2.0 - SQRT_2) * vt[1] - 2.0) / den,
        ((2.0 + SQRT_2) * vt[1] + (2.0 - SQRT_2) * vt[0] - 2.0) / den,
        0.0,
    ];
    let b = [
        0.5 * ((SQRT_2 + 1.0) * bt[0] - (SQRT_2 - 1.0) * bt[1]),
        0.5 * ((SQRT_2 + 1.0) * bt[1] - (SQRT_2 - 1.0) * bt[0]),
        0.0,
    ];
    PrimState::new(rho, v, p, b, g)
}

/// Exact 3D vortex, lattice image nearest the core.
pub fn vortex3d_exact(x: Vec3, t: f64, g: f64) -> PrimState {
    let s = (x[0] + x[1] + x[2]) / 3.0;
    let xh = [x[0] + s + t, x[1] + s + t];
    let mut best = ([0.0; 2], f64::INFINITY);
    for k1 in -4..=4 {
        for k2 in -4..=4 {
            let (a, b) = (k1 as f64, k2 as f64);
            let xt = [40.0 / 3.0 * a + 10.0 / 3.0 * b + xh[0], 10.0 / 3.0 * a + 40.0 / 3.0 * b + xh[1]];
            let r2 = xt[0] * xt[0] + xt[1] * xt[1];
            if r2 < best.1 {
                best = (xt, r2);
            }
        }
    }
    let (rho, p, vt, bt) = vortex_core(best.0, g);
    let den = 6.0 - 3.0 * (vt[0] + vt[1]);
    let v = [(4.0 * vt[0] + vt[1] - 3.0) / den, (4.0 * vt[1] + vt[0] - 3.0) / den, (vt[0] + vt[1] - 3.0) / den];
    let b = [(5.0 * bt[0] - bt[1]) / 3.0, (5.0 * bt[1] - bt[0]) / 3.0, (-bt[0] - bt[1]) / 3.0];
    PrimState::new(rho, v, p, b, g)
}
