//! Moving-mesh geometry: coordinates, velocities, metric terms and the
//! discrete geometric conservation laws.
//!
//! Spatial metrics use the conservative (divergence-form) construction so the
//! discrete surface conservation laws hold to roundoff. The Jacobian is not
//! derived from the coordinates during a run; it is advanced with the
//! discrete volume conservation law by the time integrator.

use crate::ec_flux::{highorder_coeffs, CombinationCoeffs, Metric};
use crate::error::{Error, Result};
use crate::grid::{Grid, GHOST, NG};
use crate::state::Vec3;

#[derive(Clone, Debug)]
pub struct MeshBlock {
    pub grid: Grid,
    pub coeffs: CombinationCoeffs,
    /// Computational spacing per direction.
    pub dxi: [f64; 3],
    /// Lower corner of the computational box (ξ at node 0).
    pub xi0: Vec3,
    pub periodic: [bool; 3],
    /// Physical shift applied when wrapping across a periodic direction.
    pub period: [Vec3; 3],
    pub x: Vec<Vec3>,
    pub xdot: Vec<Vec3>,
    pub jac: Vec<f64>,
    /// `met_s[node][k][j]` = J ∂ξ_k/∂x_j.
    pub met_s: Vec<[Vec3; 3]>,
    /// `met_t[node][k]` = J ∂ξ_k/∂t.
    pub met_t: Vec<Vec3>,
}

/// ½ Σ α_n (a_{+n} − a_{−n}) along a strided line of a flat array.
#[inline]
pub fn central_diff_strided(a: &[f64], f: usize, stride: usize, alpha: &[f64]) -> f64 {
    let mut s = 0.0;
    for (n1, &al) in alpha.iter().enumerate() {
        let o = (n1 + 1) * stride;
        s += al * (a[f + o] - a[f - o]);
    }
    0.5 * s
}

/// Central difference δ[a_i] on a contiguous line.
pub fn central_diff(a: &[f64], i: usize, coeffs: &CombinationCoeffs) -> f64 {
    central_diff_strided(a, i, 1, &coeffs.alpha)
}

/// Metric flux between nodes `f` and `f + stride` of a strided line.
#[inline]
pub fn metric_flux_strided(a: &[f64], f: usize, stride: usize, alpha: &[f64]) -> f64 {
    let mut out = 0.0;
    for (n1, &al) in alpha.iter().enumerate() {
        let n = n1 + 1;
        for s in 0..n {
            out += al * 0.5 * (a[f - s * stride] + a[f + (n - s) * stride]);
        }
    }
    out
}

impl MeshBlock {
    /// Uniform Cartesian mesh on the box `[lo, hi]`.
    ///
    /// Periodic directions hold `N` nodes with spacing `L/N`; other
    /// directions include both boundary faces with spacing `L/(N−1)`.
    pub fn uniform(dim: usize, n: [usize; 3], lo: Vec3, hi: Vec3, periodic: [bool; 3], p: usize) -> Result<Self> {
        let coeffs = highorder_coeffs(p)?;
        let grid = Grid::new(dim, n);
        let mut dxi = [1.0; 3];
        let mut period = [[0.0; 3]; 3];
        let mut per = [false; 3];
        for k in 0..dim {
            let nk = grid.n[k];
            if nk < GHOST.max(2) {
                return Err(Error::Config(format!("direction {k} needs at least {GHOST} nodes, got {nk}")));
            }
            if !(hi[k] > lo[k]) {
                return Err(Error::Config(format!("empty domain extent in direction {k}")));
            }
            let l = hi[k] - lo[k];
            per[k] = periodic[k];
            dxi[k] = if periodic[k] { l / nk as f64 } else { l / (nk - 1) as f64 };
            period[k][k] = l;
        }
        let len = grid.len;
        let mut mesh = MeshBlock {
            grid,
            coeffs,
            dxi,
            xi0: lo,
            periodic: per,
            period,
            x: vec![[0.0; 3]; len],
            xdot: vec![[0.0; 3]; len],
            jac: vec![0.0; len],
            met_s: vec![[[0.0; 3]; 3]; len],
            met_t: vec![[0.0; 3]; len],
        };
        for f in mesh.grid.interior_indices() {
            mesh.x[f] = mesh.xi_of(mesh.grid.unflatten(f));
        }
        mesh.init_geometry();
        Ok(mesh)
    }

    /// Computational coordinate of a node.
    pub fn xi_of(&self, i: [isize; 3]) -> Vec3 {
        let mut out = [0.0; 3];
        for k in 0..self.grid.dim {
            out[k] = self.xi0[k] + i[k] as f64 * self.dxi[k];
        }
        out
    }

    pub fn p(&self) -> usize {
        self.coeffs.p
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// Fill ghosts, compute metrics and set J from the geometry.
    pub fn init_geometry(&mut self) {
        self.fill_ghost_coords();
        self.compute_spatial_metrics();
        self.compute_temporal_metrics();
        self.jac = self.geometric_jacobian();
    }

    /// Ghost coordinates and velocities from the interior nodes.
    pub fn fill_ghost_coords(&mut self) {
        let mut x = std::mem::take(&mut self.x);
        self.fill_ghost_vec3(&mut x, true);
        self.x = x;
        let mut v = std::mem::take(&mut self.xdot);
        self.fill_ghost_vec3(&mut v, false);
        self.xdot = v;
    }

    /// Periodic wrap (optionally shifted by the period) or linear extrapolation.
    pub fn fill_ghost_vec3(&self, field: &mut [Vec3], shift: bool) {
        let g = &self.grid;
        for dir in 0..g.dim {
            let nk = g.n[dir] as isize;
            let gk = g.g[dir] as isize;
            // Directions already processed include their ghosts so corners fill.
            let mut r = g.range(0);
            for (k, rk) in r.iter_mut().enumerate().take(g.dim) {
                if k < dir {
                    *rk = (-(g.g[k] as isize), g.n[k] as isize + g.g[k] as isize);
                }
            }
            r[dir] = (0, 1);
            for base in g.box_indices(r) {
                let st = g.stride[dir] as isize;
                let at = |i: isize| (base as isize + i * st) as usize;
                for i in 1..=gk {
                    let (lo, hi) = (-i, nk - 1 + i);
                    if self.periodic[dir] {
                        let mut a = field[at(lo + nk)];
                        let mut b = field[at(hi - nk)];
                        if shift {
                            for c in 0..3 {
                                a[c] -= self.period[dir][c];
                                b[c] += self.period[dir][c];
                            }
                        }
                        field[at(lo)] = a;
                        field[at(hi)] = b;
                    } else {
                        let (x0, x1) = (field[at(0)], field[at(1)]);
                        let (xn, xm) = (field[at(nk - 1)], field[at(nk - 2)]);
                        let fi = i as f64;
                        let mut a = [0.0; 3];
                        let mut b = [0.0; 3];
                        for c in 0..3 {
                            a[c] = x0[c] - fi * (x1[c] - x0[c]);
                            b[c] = xn[c] + fi * (xn[c] - xm[c]);
                        }
                        field[at(lo)] = a;
                        field[at(hi)] = b;
                    }
                }
            }
        }
    }

    fn coord_component(&self, c: usize) -> Vec<f64> {
        self.x.iter().map(|x| x[c]).collect()
    }

    /// Spatial metrics on every node within `NG` layers of the interior.
    pub fn compute_spatial_metrics(&mut self) {
        let g = self.grid.clone();
        let alpha = self.coeffs.alpha.clone();
        let region = g.box_indices(g.range(NG));
        match g.dim {
            1 => {
                for &f in &region {
                    self.met_s[f] = [[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]];
                }
            }
            2 => {
                let xs = [self.coord_component(0), self.coord_component(1)];
                for &f in &region {
                    let d = |c: usize, k: usize| central_diff_strided(&xs[c], f, g.stride[k], &alpha) / self.dxi[k];
                    self.met_s[f] = [[d(1, 1), -d(0, 1), 0.0], [-d(1, 0), d(0, 0), 0.0], [0.0; 3]];
                }
            }
            _ => self.compute_spatial_metrics_3d(&region, &alpha),
        }
        // Periodic images get bitwise identical metrics so fluxes telescope exactly.
        let mut ms = std::mem::take(&mut self.met_s);
        g.wrap_periodic(&self.periodic, &mut ms);
        self.met_s = ms;
    }

    fn compute_spatial_metrics_3d(&mut self, region: &[usize], alpha: &[f64]) {
        let g = self.grid.clone();
        let p = alpha.len();
        let xs = [self.coord_component(0), self.coord_component(1), self.coord_component(2)];
        let full = |dir: usize| {
            let mut r = [(0isize, 0isize); 3];
            for k in 0..3 {
                let w = if k == dir { (GHOST - p) as isize } else { GHOST as isize };
                r[k] = (-w, g.n[k] as isize + w);
            }
            g.box_indices(r)
        };
        let boxes = [full(0), full(1), full(2)];
        // prod[a][m][n] holds δ_a[x_m]·x_n on the box valid for direction a.
        let mut prod = vec![vec![0.0; g.len]; 27];
        let key = |a: usize, m: usize, n: usize| a * 9 + m * 3 + n;
        for a in 0..3 {
            for m in 0..3 {
                let n = (m + 1) % 3;
                let arr = &mut prod[key(a, m, n)];
                for &f in &boxes[a] {
                    arr[f] = central_diff_strided(&xs[m], f, g.stride[a], alpha) * xs[n][f];
                }
            }
        }
        for &f in region {
            let mut ms = [[0.0; 3]; 3];
            for k in 0..3 {
                let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                for j in 0..3 {
                    let (m, n) = ((j + 1) % 3, (j + 2) % 3);
                    let t1 = central_diff_strided(&prod[key(a, m, n)], f, g.stride[b], alpha);
                    let t2 = central_diff_strided(&prod[key(b, m, n)], f, g.stride[a], alpha);
                    ms[k][j] = (t1 - t2) / (self.dxi[a] * self.dxi[b]);
                }
            }
            self.met_s[f] = ms;
        }
    }

    /// J∂ξ_k/∂t = −Σ_j ẋ_j J∂ξ_k/∂x_j on every node within `NG` layers.
    pub fn compute_temporal_metrics(&mut self) {
        let g = &self.grid;
        for f in g.box_indices(g.range(NG)) {
            let ms = &self.met_s[f];
            let xd = &self.xdot[f];
            let mut mt = [0.0; 3];
            for k in 0..g.dim {
                mt[k] = -(xd[0] * ms[k][0] + xd[1] * ms[k][1] + xd[2] * ms[k][2]);
            }
            self.met_t[f] = mt;
        }
        let mut mt = std::mem::take(&mut self.met_t);
        self.grid.wrap_periodic(&self.periodic, &mut mt);
        self.met_t = mt;
    }

    /// Metric 4-vector of direction `k` at a node.
    #[inline]
    pub fn metric(&self, f: usize, k: usize) -> Metric {
        let ms = &self.met_s[f][k];
        [self.met_t[f][k], ms[0], ms[1], ms[2]]
    }

    /// Jacobian computed from the coordinates, valid within `NG` layers.
    pub fn geometric_jacobian(&self) -> Vec<f64> {
        let g = &self.grid;
        let alpha = &self.coeffs.alpha;
        let xs: Vec<Vec<f64>> = (0..g.dim).map(|c| self.coord_component(c)).collect();
        let mut jac = vec![0.0; g.len];
        for f in g.box_indices(g.range(NG)) {
            let d = |c: usize, k: usize| central_diff_strided(&xs[c], f, g.stride[k], alpha) / self.dxi[k];
            jac[f] = match g.dim {
                1 => d(0, 0),
                2 => d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0),
                _ => {
                    let ms = &self.met_s[f];
                    let mut s = 0.0;
                    for k in 0..3 {
                        for j in 0..3 {
                            s += ms[k][j] * d(j, k);
                        }
                    }
                    s / 3.0
                }
            };
        }
        jac
    }

    /// Left side of the discrete surface conservation laws at interior nodes.
    pub fn scl_residual(&self) -> Vec<Vec3> {
        let g = &self.grid;
        let alpha = &self.coeffs.alpha;
        let comps: Vec<Vec<Vec<f64>>> = (0..g.dim)
            .map(|k| (0..3).map(|j| self.met_s.iter().map(|m| m[k][j]).collect()).collect())
            .collect();
        g.interior_indices()
            .into_iter()
            .map(|f| {
                let mut r = [0.0; 3];
                for (j, rj) in r.iter_mut().enumerate() {
                    for (k, ck) in comps.iter().enumerate() {
                        let st = g.stride[k];
                        let d = metric_flux_strided(&ck[j], f, st, alpha) - metric_flux_strided(&ck[j], f - st, st, alpha);
                        *rj += d / self.dxi[k];
                    }
                }
                r
            })
            .collect()
    }

    /// dJ/dt from the discrete volume conservation law at interior nodes.
    pub fn vcl_rhs(&self) -> Vec<f64> {
        let g = &self.grid;
        let alpha = &self.coeffs.alpha;
        let comps: Vec<Vec<f64>> = (0..g.dim).map(|k| self.met_t.iter().map(|m| m[k]).collect()).collect();
        g.interior_indices()
            .into_iter()
            .map(|f| {
                let mut r = 0.0;
                for (k, ck) in comps.iter().enumerate() {
                    let st = g.stride[k];
                    r -= (metric_flux_strided(ck, f, st, alpha) - metric_flux_strided(ck, f - st, st, alpha)) / self.dxi[k];
                }
                r
            })
            .collect()
    }

    /// Fill the Jacobian ghosts from the interior (periodic wrap or copy).
    pub fn fill_ghost_jacobian(&mut self) {
        let mut j = std::mem::take(&mut self.jac);
        let mut tmp: Vec<Vec3> = j.iter().map(|&v| [v, 0.0, 0.0]).collect();
        self.fill_ghost_vec3(&mut tmp, false);
        for (d, t) in j.iter_mut().zip(&tmp) {
            *d = t[0];
        }
        self.jac = j;
    }

    /// Smallest interior Jacobian and its node.
    pub fn min_jacobian(&self) -> (f64, [isize; 3]) {
        let mut best = (f64::INFINITY, [0isize; 3]);
        for f in self.grid.interior_indices() {
            if self.jac[f] < best.0 || self.jac[f].is_nan() {
                best = (self.jac[f], self.grid.unflatten(f));
            }
        }
        best
    }

    pub fn check_jacobian(&self) -> Result<()> {
        let (v, i) = self.min_jacobian();
        if v > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveJacobian { node: i.map(|c| c.max(0) as usize), value: v })
        }
    }
}
