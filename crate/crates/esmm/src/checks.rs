//! Fast self-checks of the discrete identities the schemes rely on. Each
//! returns the worst measured residual so callers can apply a tolerance.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::config::{SchemeKind, SimulationConfig};
use crate::ec_flux::{ec_flux_curvilinear, Metric};
use crate::error::Result;
use crate::mesh::MeshBlock;
use crate::problems::ProblemId;
use crate::solver::Solver;
use crate::state::{entropy_quantities, norm2, prim_to_cons_array, PrimState, Vec3, NVAR};

const GAMMA: f64 = 5.0 / 3.0;

/// Random admissible state with |v| < 0.95 and, optionally, |B_i| < 3.
pub fn random_state(rng: &mut StdRng, magnetized: bool) -> PrimState {
    let rho = 10f64.powf(rng.gen_range(-2.0..1.0));
    let p = 10f64.powf(rng.gen_range(-2.0..1.0));
    let dir = loop {
        let c: Vec3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = norm2(&c);
        if n > 1e-6 && n <= 1.0 {
            break c.map(|x| x / n.sqrt());
        }
    };
    let s = rng.gen_range(0.0..0.95);
    let b = if magnetized { std::array::from_fn(|_| rng.gen_range(-3.0..3.0)) } else { [0.0; 3] };
    PrimState::new(rho, dir.map(|x| x * s), p, b, GAMMA)
}

/// Relative residual of the curvilinear entropy-conservation contract
/// `[[V]]·F = c_t [[φ]] + Σ_j c_j ([[ψ_j]] − {B_j} [[Φ]])` for one pair.
pub fn ec_contract_residual(wl: &PrimState, wr: &PrimState, ml: &Metric, mr: &Metric) -> f64 {
    let f = ec_flux_curvilinear(wl, wr, ml, mr);
    let (el, er) = (entropy_quantities(wl), entropy_quantities(wr));
    let dv: [f64; NVAR] = std::array::from_fn(|i| er.v[i] - el.v[i]);
    let lhs: f64 = (0..NVAR).map(|i| dv[i] * f[i]).sum();
    let ct = 0.5 * (ml[0] + mr[0]);
    let mut rhs = ct * (er.pots.phi - el.pots.phi);
    let mut scale = ct.abs() * (er.pots.phi.abs() + el.pots.phi.abs());
    for j in 0..3 {
        let c = 0.5 * (ml[1 + j] + mr[1 + j]);
        let bm = 0.5 * (wl.b[j] + wr.b[j]);
        rhs += c * (er.pots.psi[j] - el.pots.psi[j]) - c * bm * (er.pots.big_phi - el.pots.big_phi);
        scale += c.abs() * (er.pots.psi[j].abs() + el.pots.psi[j].abs());
        scale += (c * bm).abs() * (er.pots.big_phi.abs() + el.pots.big_phi.abs());
    }
    let terms: f64 = (0..NVAR).map(|i| (dv[i] * f[i]).abs()).sum();
    (lhs - rhs).abs() / scale.max(terms).max(1.0)
}

/// Worst contract residual over `pairs` random state/metric pairs.
pub fn ec_contract_worst(pairs: usize, magnetized: bool, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (wl, wr) = (random_state(&mut rng, magnetized), random_state(&mut rng, magnetized));
        let mut metric = || -> Metric { [rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)] };
        let (ml, mr) = (metric(), metric());
        worst = worst.max(ec_contract_residual(&wl, &wr, &ml, &mr));
    }
    worst
}

/// Uniform unit-box mesh displaced by three random smooth periodic modes.
pub fn random_smooth_mesh(rng: &mut StdRng, dim: usize, n: usize, p: usize, periodic: bool) -> Result<MeshBlock> {
    let modes: Vec<(Vec3, Vec3, f64)> = (0..3)
        .map(|_| {
            let k = std::array::from_fn(|_| rng.gen_range(1..3) as f64);
            let a = std::array::from_fn(|_| rng.gen_range(-0.02..0.02));
            (k, a, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let mut m = MeshBlock::uniform(dim, [n, n, n], [0.0; 3], [1.0; 3], [periodic; 3], p)?;
    for f in m.grid.interior_indices() {
        let xi = m.xi_of(m.grid.unflatten(f));
        let mut x = xi;
        for (k, a, ph) in &modes {
            let arg = (0..dim).map(|d| 2.0 * PI * k[d] * xi[d]).sum::<f64>() + ph;
            for c in 0..dim {
                x[c] += a[c] * arg.sin();
            }
        }
        m.x[f] = x;
    }
    m.init_geometry();
    Ok(m)
}

/// Worst surface-conservation residual over `cases` random meshes (2D and
/// 3D, periodic and bounded) and half-orders 1 to 3.
pub fn scl_worst(cases: usize, seed: u64) -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let dim = 2 + case % 2;
        let periodic = case % 4 < 2;
        let n = if dim == 2 { 24 } else { 12 };
        let state = rng.gen::<u64>();
        for p in 1..=3 {
            let m = random_smooth_mesh(&mut StdRng::seed_from_u64(state), dim, n, p, periodic)?;
            let r = m.scl_residual().iter().flat_map(|r| r.iter()).fold(0.0f64, |a, b| a.max(b.abs()));
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// Largest deviation of `U = JU / J` from the constant initial state after
/// `steps` steps of the free-stream problem on its prescribed moving mesh.
pub fn freestream_deviation(id: ProblemId, kind: SchemeKind, order: usize, steps: usize) -> Result<f64> {
    let mut cfg = SimulationConfig::preset(id, kind, order)?;
    cfg.problem.t_final = 1.0;
    let mut s = Solver::new(cfg)?;
    let u0 = prim_to_cons_array(&s.setup.initial([0.0; 3]));
    for _ in 0..steps {
        s.step(1.0)?;
    }
    let mut dev = 0.0f64;
    for &f in s.interior() {
        for c in 0..NVAR {
            dev = dev.max((s.ju[f][c] / s.mesh.jac[f] - u0[c]).abs());
        }
    }
    Ok(dev)
}

/// Scheme variants exercised by the free-stream check.
pub const FREESTREAM_SCHEMES: [(SchemeKind, usize); 5] =
    [(SchemeKind::Ec, 2), (SchemeKind::Ec, 4), (SchemeKind::Ec, 6), (SchemeKind::Es, 3), (SchemeKind::Es, 5)];

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// The quick property suite: EC contract, surface conservation laws and 2D
/// free-stream preservation.
pub fn fast_suite() -> Result<Vec<CheckOutcome>> {
    let mut out = vec![
        CheckOutcome { name: "ec contract (RHD)".into(), value: ec_contract_worst(10_000, false, 7), tolerance: 1e-10 },
        CheckOutcome { name: "ec contract (RMHD)".into(), value: ec_contract_worst(10_000, true, 8), tolerance: 1e-10 },
        CheckOutcome { name: "scl residual".into(), value: scl_worst(20, 9)?, tolerance: 1e-12 },
    ];
    for (kind, order) in FREESTREAM_SCHEMES {
        let value = freestream_deviation(ProblemId::Freestream2d, kind, order, 10)?;
        out.push(CheckOutcome { name: format!("free-stream 2D {kind:?} order {order}"), value, tolerance: 1e-12 });
    }
    Ok(out)
}
