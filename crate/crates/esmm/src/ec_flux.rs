//! Two-point entropy-conservative fluxes and their high-order combinations.
//!
//! The average state Ũ and the fluxes F̃_j are obtained from one linear
//! "jump solve": given coefficients `t` of the independent jumps
//! ⟦ρ⟧, ⟦β⟧, ⟦u⟧, ⟦W⟧, ⟦b⟧, ⟦b⁰⟧ of a target scalar jump, the solve returns
//! the vector X with ⟦V⟧ᵀX equal to that target. The solve is linear in `t`,
//! so the curvilinear flux (a metric-weighted sum of Ũ and F̃_j) needs a
//! single solve per pair.

use crate::error::{Error, Result};
use crate::state::{entropy_quantities, PrimState, StateVec, Vec3, NVAR};

/// Metric 4-vector (J∂ξ_k/∂t, J∂ξ_k/∂x_1, J∂ξ_k/∂x_2, J∂ξ_k/∂x_3) at a node.
pub type Metric = [f64; 4];

/// Logarithmic mean (b−a)/(ln b − ln a) of two positive numbers.
#[inline]
pub fn log_mean(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0, "log_mean of non-positive argument");
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let z = (b - a) / (b + a);
    let u = z * z;
    // |ln(b/a)| = 2 atanh(z) < 1e-4  <=>  z < 5e-5 to leading order
    if u < 2.5e-9 {
        0.5 * (a + b) / (1.0 + u * (1.0 / 3.0 + u * (0.2 + u / 7.0)))
    } else {
        (b - a) / ((b - a) / a).ln_1p()
    }
}

/// Checked logarithmic mean returning an error for non-positive input.
pub fn try_log_mean(a: f64, b: f64) -> Result<f64> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(log_mean(a, b))
    } else {
        Err(Error::Unsupported(format!("log_mean domain error: ({a}, {b})")))
    }
}

/// Weights α_{p,n}, n = 1..p, of the 2p-th-order flux combination.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinationCoeffs {
    pub p: usize,
    pub alpha: Vec<f64>,
}

pub fn highorder_coeffs(p: usize) -> Result<CombinationCoeffs> {
    let alpha = match p {
        1 => vec![1.0],
        2 => vec![4.0 / 3.0, -1.0 / 6.0],
        3 => vec![1.5, -0.3, 1.0 / 30.0],
        _ => return Err(Error::Unsupported(format!("half-order p = {p} (supported: 1, 2, 3)"))),
    };
    Ok(CombinationCoeffs { p, alpha })
}

/// Per-node quantities reused by every pair flux touching the node.
#[derive(Clone, Copy, Debug, Default)]
pub struct NodeVars {
    pub rho: f64,
    pub beta: f64,
    pub w: f64,
    pub u: Vec3,
    pub b: Vec3,
    pub b0: f64,
    pub bmag: Vec3,
    pub b_sq_spatial: f64,
    pub b0_sq: f64,
    pub beta_b_sq: f64,
    pub beta_b0_sq: f64,
    pub gamma: f64,
    pub ventropy: StateVec,
    pub phi: f64,
    pub psi: Vec3,
    pub big_phi: f64,
    pub eta: f64,
}

impl NodeVars {
    pub fn from_prim(w: &PrimState) -> Self {
        let eq = entropy_quantities(w);
        let wl = w.lorentz();
        let beta = w.rho / w.p;
        let b0 = w.b0();
        let mut b = [0.0; 3];
        let mut u = [0.0; 3];
        for k in 0..3 {
            u[k] = wl * w.v[k];
            b[k] = w.b[k] / wl + b0 * w.v[k];
        }
        let bs = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
        NodeVars {
            rho: w.rho,
            beta,
            w: wl,
            u,
            b,
            b0,
            bmag: w.b,
            b_sq_spatial: bs,
            b0_sq: b0 * b0,
            beta_b_sq: beta * bs,
            beta_b0_sq: beta * b0 * b0,
            gamma: w.gamma,
            ventropy: eq.v,
            phi: eq.pots.phi,
            psi: eq.pots.psi,
            big_phi: eq.pots.big_phi,
            eta: eq.eta,
        }
    }
}

/// Ũ and F̃_1..3 for a pair of states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointECFlux {
    pub u_tilde: StateVec,
    pub f_tilde: [StateVec; 3],
}

#[inline]
fn avg(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// Means shared by all targets of one pair.
struct PairMeans {
    beta: f64,
    w: f64,
    u: Vec3,
    b: Vec3,
    b0: f64,
    bmag: Vec3,
    rho_ln: f64,
    beta_ln: f64,
    b_sq: f64,
    b0_sq: f64,
    p_mean: f64,
    gamma: f64,
}

impl PairMeans {
    #[inline]
    fn new(l: &NodeVars, r: &NodeVars) -> Self {
        let mut u = [0.0; 3];
        let mut b = [0.0; 3];
        let mut bmag = [0.0; 3];
        for k in 0..3 {
            u[k] = avg(l.u[k], r.u[k]);
            b[k] = avg(l.b[k], r.b[k]);
            bmag[k] = avg(l.bmag[k], r.bmag[k]);
        }
        let rho = avg(l.rho, r.rho);
        PairMeans {
            beta: avg(l.beta, r.beta),
            w: avg(l.w, r.w),
            u,
            b,
            b0: avg(l.b0, r.b0),
            bmag,
            rho_ln: log_mean(l.rho, r.rho),
            beta_ln: log_mean(l.beta, r.beta),
            b_sq: avg(l.b_sq_spatial, r.b_sq_spatial),
            b0_sq: avg(l.b0_sq, r.b0_sq),
            p_mean: rho + 0.5 * (avg(l.beta_b_sq, r.beta_b_sq) - avg(l.beta_b0_sq, r.beta_b0_sq)),
            gamma: l.gamma,
        }
    }

    /// Target coefficients of c_t·Ũ + Σ_j c_j·F̃_j, then the jump solve.
    #[inline]
    fn weighted_flux(&self, ct: f64, c: &Vec3) -> StateVec {
        let ubar = ct * self.w + c[0] * self.u[0] + c[1] * self.u[1] + c[2] * self.u[2];
        let cb = c[0] * self.bmag[0] + c[1] * self.bmag[1] + c[2] * self.bmag[2];
        let t_rho = ubar;
        let t_beta = 0.5 * ubar * (self.b_sq - self.b0_sq) - cb * self.b0;
        let t_w = ct * self.p_mean;
        let t_u = [c[0] * self.p_mean, c[1] * self.p_mean, c[2] * self.p_mean];
        let ub = ubar * self.beta;
        let t_b = [ub * self.b[0], ub * self.b[1], ub * self.b[2]];
        let t_b0 = -ub * self.b0 - cb * self.beta;
        self.solve(t_rho, t_beta, &t_u, t_w, &t_b, t_b0)
    }

    #[inline]
    fn solve(&self, t_rho: f64, t_beta: f64, t_u: &Vec3, t_w: f64, t_b: &Vec3, t_b0: f64) -> StateVec {
        let w = self.w;
        let aw = t_w - t_b0 * self.b0 / w;
        let mut tu = [0.0; 3];
        let mut tb = [0.0; 3];
        for k in 0..3 {
            tu[k] = t_u[k] + t_b0 * self.b[k] / w + aw * self.u[k] / w;
            tb[k] = t_b[k] + t_b0 * self.u[k] / w;
        }
        let mut x = [0.0; NVAR];
        x[0] = self.rho_ln * t_rho;
        for k in 0..3 {
            x[5 + k] = tb[k] / self.beta;
        }
        let alpha0 = 1.0 + 1.0 / ((self.gamma - 1.0) * self.beta_ln);
        let uu = self.u[0] * self.u[0] + self.u[1] * self.u[1] + self.u[2] * self.u[2];
        let dd = self.beta * (w * w - uu) / w;
        let bx = self.b[0] * x[5] + self.b[1] * x[6] + self.b[2] * x[7];
        let utu = self.u[0] * tu[0] + self.u[1] * tu[1] + self.u[2] * tu[2];
        x[4] = (utu - self.beta * (t_beta - alpha0 * x[0] - bx)) / dd;
        for k in 0..3 {
            x[1 + k] = tu[k] / self.beta + x[4] * self.u[k] / w;
        }
        x
    }
}

/// Cartesian two-point EC flux: Ũ and F̃_j.
pub fn ec_flux_pointpair(wl: &PrimState, wr: &PrimState) -> TwoPointECFlux {
    let (l, r) = (NodeVars::from_prim(wl), NodeVars::from_prim(wr));
    let m = PairMeans::new(&l, &r);
    let u_tilde = m.weighted_flux(1.0, &[0.0; 3]);
    let f_tilde = [
        m.weighted_flux(0.0, &[1.0, 0.0, 0.0]),
        m.weighted_flux(0.0, &[0.0, 1.0, 0.0]),
        m.weighted_flux(0.0, &[0.0, 0.0, 1.0]),
    ];
    TwoPointECFlux { u_tilde, f_tilde }
}

#[inline]
fn metric_mean(ml: &Metric, mr: &Metric) -> (f64, Vec3) {
    (avg(ml[0], mr[0]), [avg(ml[1], mr[1]), avg(ml[2], mr[2]), avg(ml[3], mr[3])])
}

/// ½(mt_L+mt_R)Ũ + Σ_j ½(m_jL+m_jR)F̃_j from precomputed node data.
#[inline]
pub fn ec_flux_curvilinear_nodes(l: &NodeVars, r: &NodeVars, ml: &Metric, mr: &Metric) -> StateVec {
    let (ct, c) = metric_mean(ml, mr);
    PairMeans::new(l, r).weighted_flux(ct, &c)
}

pub fn ec_flux_curvilinear(wl: &PrimState, wr: &PrimState, ml: &Metric, mr: &Metric) -> StateVec {
    ec_flux_curvilinear_nodes(&NodeVars::from_prim(wl), &NodeVars::from_prim(wr), ml, mr)
}

/// Two-point numerical entropy flux paired with the curvilinear EC flux.
pub fn num_entropy_flux_nodes(l: &NodeVars, r: &NodeVars, ml: &Metric, mr: &Metric) -> f64 {
    let f = ec_flux_curvilinear_nodes(l, r, ml, mr);
    two_point_entropy_flux(l, r, ml, mr, &f)
}

/// Entropy flux given the already evaluated pair flux `f`.
#[inline]
pub fn two_point_entropy_flux(l: &NodeVars, r: &NodeVars, ml: &Metric, mr: &Metric, f: &StateVec) -> f64 {
    let (ct, c) = metric_mean(ml, mr);
    let mut q = 0.0;
    for i in 0..NVAR {
        q += avg(l.ventropy[i], r.ventropy[i]) * f[i];
    }
    q -= ct * avg(l.phi, r.phi);
    let phim = avg(l.big_phi, r.big_phi);
    for j in 0..3 {
        q -= c[j] * avg(l.psi[j], r.psi[j]);
        q += c[j] * avg(l.bmag[j], r.bmag[j]) * phim;
    }
    q
}

pub fn num_entropy_flux(wl: &PrimState, wr: &PrimState, ml: &Metric, mr: &Metric) -> f64 {
    num_entropy_flux_nodes(&NodeVars::from_prim(wl), &NodeVars::from_prim(wr), ml, mr)
}

/// 2p-th-order EC flux at the interface between `i` and `i+1` of a line.
///
/// Requires indices `i+1-p ..= i+p` to be valid.
pub fn highorder_ec_flux(nodes: &[NodeVars], mets: &[Metric], i: usize, coeffs: &CombinationCoeffs) -> StateVec {
    let mut out = [0.0; NVAR];
    for (n1, &a) in coeffs.alpha.iter().enumerate() {
        let n = n1 + 1;
        for s in 0..n {
            let (l, r) = (i - s, i - s + n);
            let f = ec_flux_curvilinear_nodes(&nodes[l], &nodes[r], &mets[l], &mets[r]);
            for c in 0..NVAR {
                out[c] += a * f[c];
            }
        }
    }
    out
}

/// High-order EC flux together with its matching entropy flux.
pub fn highorder_ec_flux_with_entropy(
    nodes: &[NodeVars],
    mets: &[Metric],
    i: usize,
    coeffs: &CombinationCoeffs,
) -> (StateVec, f64) {
    let mut out = [0.0; NVAR];
    let mut q = 0.0;
    for (n1, &a) in coeffs.alpha.iter().enumerate() {
        let n = n1 + 1;
        for s in 0..n {
            let (l, r) = (i - s, i - s + n);
            let f = ec_flux_curvilinear_nodes(&nodes[l], &nodes[r], &mets[l], &mets[r]);
            q += a * two_point_entropy_flux(&nodes[l], &nodes[r], &mets[l], &mets[r], &f);
            for c in 0..NVAR {
                out[c] += a * f[c];
            }
        }
    }
    (out, q)
}

/// 2p-th-order Godunov–Powell source flux Σ α Σ Σ_j ¼(m_jl+m_jr)(B_jl+B_jr).
pub fn highorder_source_flux(bfield: &[Vec3], mets: &[Metric], i: usize, coeffs: &CombinationCoeffs) -> f64 {
    let mut out = 0.0;
    for (n1, &a) in coeffs.alpha.iter().enumerate() {
        let n = n1 + 1;
        for s in 0..n {
            let (l, r) = (i - s, i - s + n);
            let mut t = 0.0;
            for j in 0..3 {
                t += 0.25 * (mets[l][1 + j] + mets[r][1 + j]) * (bfield[l][j] + bfield[r][j]);
            }
            out += a * t;
        }
    }
    out
}

/// 2p-th-order metric flux Σ α Σ ½(a_l + a_r).
pub fn highorder_metric_flux(vals: &[f64], i: usize, coeffs: &CombinationCoeffs) -> f64 {
    let mut out = 0.0;
    for (n1, &a) in coeffs.alpha.iter().enumerate() {
        let n = n1 + 1;
        for s in 0..n {
            out += a * 0.5 * (vals[i - s] + vals[i - s + n]);
        }
    }
    out
}
