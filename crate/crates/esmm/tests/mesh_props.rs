use esmm::grid::NG;
use esmm::mesh::MeshBlock;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

/// Smooth random displacement built from a few periodic modes.
struct Perturbation {
    modes: Vec<([f64; 3], [f64; 3], f64)>,
}

impl Perturbation {
    fn random(rng: &mut StdRng, amp: f64) -> Self {
        let modes = (0..3)
            .map(|_| {
                let k = [rng.gen_range(1..3) as f64, rng.gen_range(1..3) as f64, rng.gen_range(1..3) as f64];
                let a = [rng.gen_range(-amp..amp), rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)];
                (k, a, rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        Perturbation { modes }
    }

    fn apply(&self, xi: [f64; 3], dim: usize) -> [f64; 3] {
        let mut x = xi;
        for (k, a, ph) in &self.modes {
            let arg: f64 = (0..dim).map(|d| 2.0 * PI * k[d] * xi[d]).sum::<f64>() + ph;
            for c in 0..dim {
                x[c] += a[c] * arg.sin();
            }
        }
        x
    }
}

fn perturbed_mesh(dim: usize, n: usize, p: usize, periodic: bool, pert: &Perturbation) -> MeshBlock {
    let mut m = MeshBlock::uniform(dim, [n, n, n], [0.0; 3], [1.0; 3], [periodic; 3], p).unwrap();
    for f in m.grid.interior_indices() {
        let xi = m.xi_of(m.grid.unflatten(f));
        m.x[f] = pert.apply(xi, dim);
    }
    m.init_geometry();
    m
}

fn max_residual(m: &MeshBlock) -> f64 {
    m.scl_residual().iter().flat_map(|r| r.iter()).fold(0.0f64, |a, b| a.max(b.abs()))
}

#[test]
fn scl_vanishes_on_random_smooth_meshes() {
    let mut rng = StdRng::seed_from_u64(21);
    for case in 0..20 {
        let dim = 2 + case % 2;
        let periodic = case % 4 < 2;
        let pert = Perturbation::random(&mut rng, 0.02);
        let n = if dim == 2 { 24 } else { 12 };
        for p in 1..=3 {
            let m = perturbed_mesh(dim, n, p, periodic, &pert);
            let r = max_residual(&m);
            assert!(r <= 1e-12, "case {case} dim {dim} p {p}: residual {r:e}");
            assert!(m.min_jacobian().0 > 0.0);
        }
    }
}

#[test]
fn inconsistent_metrics_give_large_residual() {
    let mut rng = StdRng::seed_from_u64(22);
    let pert = Perturbation::random(&mut rng, 0.02);
    let mut m = perturbed_mesh(2, 16, 2, true, &pert);
    for ms in m.met_s.iter_mut() {
        ms[0][0] += rng.gen_range(-0.5..0.5);
    }
    assert!(max_residual(&m) > 0.1);
}

#[test]
fn rotated_uniform_map_has_adjugate_metrics() {
    let th = 0.37f64;
    let q = [[th.cos(), -th.sin()], [th.sin(), th.cos()]];
    let mut m = MeshBlock::uniform(2, [10, 12, 1], [0.0; 3], [1.0, 1.3, 1.0], [false; 3], 3).unwrap();
    for f in m.grid.interior_indices() {
        let xi = m.xi_of(m.grid.unflatten(f));
        m.x[f] = [q[0][0] * xi[0] + q[0][1] * xi[1], q[1][0] * xi[0] + q[1][1] * xi[1], 0.0];
    }
    m.init_geometry();
    for f in m.grid.box_indices(m.grid.range(NG)) {
        // J ∂ξ/∂x = adj(Q) = Qᵀ for a rotation.
        for k in 0..2 {
            for j in 0..2 {
                assert!((m.met_s[f][k][j] - q[j][k]).abs() < 1e-13);
            }
        }
        assert!((m.jac[f] - 1.0).abs() < 1e-13);
    }
    assert!(max_residual(&m) < 1e-12);
}

#[test]
fn periodic_ghosts_carry_the_period_shift() {
    let m = MeshBlock::uniform(2, [8, 8, 1], [-1.0, 0.0, 0.0], [1.0, 2.0, 0.0], [true, true, false], 3).unwrap();
    let a = m.x[m.grid.idx([-2, -3, 0])];
    let b = m.x[m.grid.idx([6, 5, 0])];
    assert!((a[0] - (b[0] - 2.0)).abs() < 1e-14 && (a[1] - (b[1] - 2.0)).abs() < 1e-14);
    let xi = m.xi_of([-2, -3, 0]);
    assert!((a[0] - xi[0]).abs() < 1e-14 && (a[1] - xi[1]).abs() < 1e-14);
}

#[test]
fn outflow_ghosts_extrapolate_linearly() {
    let mut m = MeshBlock::uniform(1, [8, 1, 1], [0.0; 3], [1.0; 3], [false; 3], 2).unwrap();
    for f in m.grid.interior_indices() {
        let i = m.grid.unflatten(f)[0] as f64;
        m.x[f][0] = (i / 7.0).powi(2);
    }
    m.fill_ghost_coords();
    let h = 1.0 / 49.0;
    assert!((m.x[m.grid.idx([-3, 0, 0])][0] + 3.0 * h).abs() < 1e-14);
}

/// Prescribed 2D motion x = ξ + c(t)(sin(kξ₂), sin(kξ₁)).
fn moving_map(xi: [f64; 3], t: f64, kw: f64) -> ([f64; 3], [f64; 3]) {
    let c = 0.2 * (PI * t / 4.0).cos();
    let cd = -0.2 * PI / 4.0 * (PI * t / 4.0).sin();
    let (s1, s2) = ((kw * xi[0]).sin(), (kw * xi[1]).sin());
    ([xi[0] + c * s2, xi[1] + c * s1, 0.0], [cd * s2, cd * s1, 0.0])
}

fn analytic_jdot(xi: [f64; 3], t: f64, kw: f64) -> f64 {
    let c = 0.2 * (PI * t / 4.0).cos();
    let cd = -0.2 * PI / 4.0 * (PI * t / 4.0).sin();
    -2.0 * c * cd * kw * kw * (kw * xi[0]).cos() * (kw * xi[1]).cos()
}

#[test]
fn vcl_matches_analytic_jacobian_rate() {
    let r = 5.0;
    let kw = 3.0 * PI / r;
    let t = 1.3;
    for p in 2..=3 {
        let mut errs = Vec::new();
        for n in [40usize, 80] {
            let mut m = MeshBlock::uniform(2, [n, n, 1], [-r, -r, 0.0], [r, r, 0.0], [true, true, false], p).unwrap();
            for f in m.grid.interior_indices() {
                let xi = m.xi_of(m.grid.unflatten(f));
                let (x, v) = moving_map(xi, t, kw);
                m.x[f] = x;
                m.xdot[f] = v;
            }
            m.init_geometry();
            let rhs = m.vcl_rhs();
            let e = m
                .grid
                .interior_indices()
                .iter()
                .zip(&rhs)
                .map(|(&f, &d)| (d - analytic_jdot(m.xi_of(m.grid.unflatten(f)), t, kw)).abs())
                .fold(0.0f64, f64::max);
            errs.push(e);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 2.0 * p as f64 - 0.5, "p {p}: errors {errs:?} order {order}");
    }
}

#[test]
fn rigid_translation_keeps_jacobian_constant() {
    let mut rng = StdRng::seed_from_u64(23);
    let pert = Perturbation::random(&mut rng, 0.02);
    let mut m = perturbed_mesh(3, 10, 3, true, &pert);
    for v in m.xdot.iter_mut() {
        *v = [0.3, -0.2, 0.7];
    }
    m.compute_temporal_metrics();
    assert!(m.vcl_rhs().iter().all(|d| d.abs() < 1e-12));
}
