//! High-order entropy-stable interface dissipation.
//!
//! The dissipation acts on scaled entropy variables Ṽ = RᵀTV where T rotates
//! vectors into the interface-normal frame and R Rᵀ = ∂U/∂V at the rotated
//! interface mean state. Point values of Ṽ are interpolated to the interface
//! by WENO and the jump is masked componentwise so that it keeps the sign of
//! the first-order jump.

use nalgebra::{SMatrix, SVector, SymmetricEigen};

use crate::ec_flux::{highorder_ec_flux_with_entropy, CombinationCoeffs, Metric, NodeVars};
use crate::state::{primitive_jacobians, spectral_radius, Physics, PrimState, SignalBound, StateVec, NVAR};

pub type Mat8 = SMatrix<f64, NVAR, NVAR>;
pub type Mat3 = [[f64; 3]; 3];

const WENO_EPS: f64 = 1e-6;

/// How the scaling matrix R is obtained from H = ∂U/∂V.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    #[default]
    Cholesky,
    SymmetricSqrt,
}

/// Dissipation options shared by every interface of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationParams {
    pub physics: Physics,
    pub bound: SignalBound,
    pub scaling: ScalingKind,
    /// Interpolation order: 1, 3 or 5.
    pub order: usize,
}

/// Rotation T₀ taking the unit normal of `n` to the first axis.
pub fn rotation_matrix(n: &[f64; 3]) -> Option<Mat3> {
    let rxy = (n[0] * n[0] + n[1] * n[1]).sqrt();
    if rxy == 0.0 && n[2] == 0.0 {
        return None;
    }
    let th = n[1].atan2(n[0]);
    let ph = n[2].atan2(rxy);
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    Some([[cp * ct, cp * st, sp], [-st, ct, 0.0], [-sp * ct, -sp * st, cp]])
}

#[inline]
fn mat3_vec(t: &Mat3, v: &[f64]) -> [f64; 3] {
    [
        t[0][0] * v[0] + t[0][1] * v[1] + t[0][2] * v[2],
        t[1][0] * v[0] + t[1][1] * v[1] + t[1][2] * v[2],
        t[2][0] * v[0] + t[2][1] * v[1] + t[2][2] * v[2],
    ]
}

#[inline]
fn mat3t_vec(t: &Mat3, v: &[f64]) -> [f64; 3] {
    [
        t[0][0] * v[0] + t[1][0] * v[1] + t[2][0] * v[2],
        t[0][1] * v[0] + t[1][1] * v[1] + t[2][1] * v[2],
        t[0][2] * v[0] + t[1][2] * v[1] + t[2][2] * v[2],
    ]
}

/// Apply blockdiag(1, T₀, 1, T₀) to a state-sized vector.
pub fn rotate_state(t: &Mat3, v: &StateVec) -> StateVec {
    let a = mat3_vec(t, &v[1..4]);
    let b = mat3_vec(t, &v[5..8]);
    [v[0], a[0], a[1], a[2], v[4], b[0], b[1], b[2]]
}

/// Apply the inverse (transpose) block rotation.
pub fn unrotate_state(t: &Mat3, v: &StateVec) -> StateVec {
    let a = mat3t_vec(t, &v[1..4]);
    let b = mat3t_vec(t, &v[5..8]);
    [v[0], a[0], a[1], a[2], v[4], b[0], b[1], b[2]]
}

pub fn rotate_prim(t: &Mat3, w: &PrimState) -> PrimState {
    PrimState { v: mat3_vec(t, &w.v), b: mat3_vec(t, &w.b), ..*w }
}

/// H = ∂U/∂V from the Jacobians of U(w) and V(w) in primitive variables.
///
/// Hydrodynamic runs get an identity block in the magnetic slots so the
/// scaled variables never feed the field equations.
pub fn entropy_hessian_inverse(w: &PrimState, physics: Physics) -> Mat8 {
    // H = du dv⁻¹, so Hᵀ solves dvᵀ X = duᵀ.
    macro_rules! block {
        ($m:literal) => {{
            let (du, dv) = jacobians::<$m>(w);
            match dv.transpose().lu().solve(&du.transpose()) {
                Some(ht) => embed(&((ht + ht.transpose()) * 0.5)),
                None => Mat8::from_element(f64::NAN),
            }
        }};
    }
    match physics.ncomp() {
        5 => block!(5),
        _ => block!(8),
    }
}

/// Leading `M`×`M` blocks of ∂U/∂w and ∂V/∂w.
fn jacobians<const M: usize>(w: &PrimState) -> (SMatrix<f64, M, M>, SMatrix<f64, M, M>) {
    let (du, dv) = primitive_jacobians(w);
    (SMatrix::from_fn(|r, c| du[r][c]), SMatrix::from_fn(|r, c| dv[r][c]))
}

fn embed<const M: usize>(block: &SMatrix<f64, M, M>) -> Mat8 {
    let mut h = Mat8::identity();
    h.fixed_view_mut::<M, M>(0, 0).copy_from(block);
    h
}

/// R with R Rᵀ = H. Returns the matrix and whether the diagonal fallback was used.
pub fn scaling_matrix(h: &Mat8, kind: ScalingKind) -> (Mat8, bool) {
    let fallback = || {
        let mut r = Mat8::zeros();
        for i in 0..NVAR {
            r[(i, i)] = h[(i, i)].abs().sqrt();
        }
        (r, true)
    };
    if !h.as_slice().iter().all(|x| x.is_finite()) {
        return fallback();
    }
    // A hydrodynamic H has an identity magnetic block, whose factor is the identity.
    macro_rules! factor {
        ($m:literal) => {{
            let hb = h.fixed_view::<$m, $m>(0, 0).into_owned();
            let r = match kind {
                ScalingKind::Cholesky => hb.cholesky().map(|c| c.l()),
                ScalingKind::SymmetricSqrt => {
                    let eig = SymmetricEigen::new(hb);
                    if eig.eigenvalues.iter().all(|&l| l > 0.0) {
                        let s = eig.eigenvalues.map(f64::sqrt);
                        let q = eig.eigenvectors;
                        Some(q * SMatrix::<f64, $m, $m>::from_diagonal(&s) * q.transpose())
                    } else {
                        None
                    }
                }
            };
            r.map(|r| embed(&r))
        }};
    }
    let r = if has_identity_tail(h, 5) { factor!(5) } else { factor!(8) };
    match r {
        Some(r) => (r, false),
        None => fallback(),
    }
}

fn has_identity_tail(h: &Mat8, m: usize) -> bool {
    (0..NVAR).all(|r| (m.max(r)..NVAR).all(|c| h[(r, c)] == if r == c { 1.0 } else { 0.0 } && h[(c, r)] == h[(r, c)]))
}

/// Fifth-order linear (optimal-weight) interpolation to the midpoint of
/// `f[2]` and `f[3]` from the five values `f[0..5]`.
pub fn interp5_linear(f: &[f64; 5]) -> f64 {
    (3.0 * f[0] - 20.0 * f[1] + 90.0 * f[2] + 60.0 * f[3] - 5.0 * f[4]) / 128.0
}

/// WENO5 interpolation at x_{i+½} from f_{i−2..=i+2} (left-biased value).
pub fn weno5_point(f: &[f64; 5]) -> f64 {
    let q0 = 0.375 * f[0] - 1.25 * f[1] + 1.875 * f[2];
    let q1 = -0.125 * f[1] + 0.75 * f[2] + 0.375 * f[3];
    let q2 = 0.375 * f[2] + 0.75 * f[3] - 0.125 * f[4];
    let sq = |x: f64| x * x;
    let b0 = 13.0 / 12.0 * sq(f[0] - 2.0 * f[1] + f[2]) + 0.25 * sq(f[0] - 4.0 * f[1] + 3.0 * f[2]);
    let b1 = 13.0 / 12.0 * sq(f[1] - 2.0 * f[2] + f[3]) + 0.25 * sq(f[1] - f[3]);
    let b2 = 13.0 / 12.0 * sq(f[2] - 2.0 * f[3] + f[4]) + 0.25 * sq(3.0 * f[2] - 4.0 * f[3] + f[4]);
    let a0 = 0.0625 / sq(WENO_EPS + b0);
    let a1 = 0.625 / sq(WENO_EPS + b1);
    let a2 = 0.3125 / sq(WENO_EPS + b2);
    (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)
}

/// WENO3 interpolation at x_{i+½} from f_{i−1..=i+1} (left-biased value).
pub fn weno3_point(f: &[f64; 3]) -> f64 {
    let q0 = -0.5 * f[0] + 1.5 * f[1];
    let q1 = 0.5 * f[1] + 0.5 * f[2];
    let b0 = (f[1] - f[0]).powi(2);
    let b1 = (f[2] - f[1]).powi(2);
    let a0 = 0.25 / (WENO_EPS + b0).powi(2);
    let a1 = 0.75 / (WENO_EPS + b1).powi(2);
    (a0 * q0 + a1 * q1) / (a0 + a1)
}

/// Interface jumps (WENO, first-order) of a scalar line at the interface
/// between `i` and `i+1`.
pub fn weno_interface_jump(f: &[f64], i: usize, order: usize) -> (f64, f64) {
    let first = f[i + 1] - f[i];
    let weno = match order {
        5 => {
            let left = weno5_point(&[f[i - 2], f[i - 1], f[i], f[i + 1], f[i + 2]]);
            let right = weno5_point(&[f[i + 3], f[i + 2], f[i + 1], f[i], f[i - 1]]);
            right - left
        }
        3 => {
            let left = weno3_point(&[f[i - 1], f[i], f[i + 1]]);
            let right = weno3_point(&[f[i + 2], f[i + 1], f[i]]);
            right - left
        }
        _ => first,
    };
    (weno, first)
}

/// 1 where the two jumps agree in sign (a zero agrees with anything), else 0.
#[inline]
pub fn sign_switch(jump_weno: f64, jump_first: f64) -> f64 {
    if jump_weno * jump_first >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Everything needed to apply the dissipation at one interface.
#[derive(Clone, Debug)]
pub struct InterfaceDissipation {
    pub t0: Mat3,
    pub r: Mat8,
    pub lambda_hat: f64,
    pub y: StateVec,
    pub jump_weno: StateVec,
    pub jump_first: StateVec,
    pub vt_mean: StateVec,
    pub fallback: bool,
}

impl InterfaceDissipation {
    /// ½ λ̂ T⁻¹ R Y ⟦Ṽ⟧^WENO, subtracted from the EC flux.
    pub fn flux_correction(&self) -> StateVec {
        let mut yj = SVector::<f64, NVAR>::zeros();
        for c in 0..NVAR {
            yj[c] = self.y[c] * self.jump_weno[c];
        }
        let rv = self.r * yj;
        let mut out = [0.0; NVAR];
        for c in 0..NVAR {
            out[c] = rv[c];
        }
        let mut out = unrotate_state(&self.t0, &out);
        for o in out.iter_mut() {
            *o *= 0.5 * self.lambda_hat;
        }
        out
    }

    /// ½ λ̂ ⟨Ṽ⟩ᵀ Y ⟦Ṽ⟧^WENO, subtracted from the EC entropy flux.
    pub fn entropy_correction(&self) -> f64 {
        let mut s = 0.0;
        for c in 0..NVAR {
            s += self.vt_mean[c] * self.y[c] * self.jump_weno[c];
        }
        0.5 * self.lambda_hat * s
    }

    /// ⟦Ṽ⟧ᵀ Y ⟦Ṽ⟧^WENO, non-negative by construction of Y.
    pub fn sign_quantity(&self) -> f64 {
        (0..NVAR).map(|c| self.jump_first[c] * self.y[c] * self.jump_weno[c]).sum()
    }
}

/// Dissipation data at the interface between `i` and `i+1` of a line.
///
/// Needs `order/2 + 1` extra nodes on each side of the interface pair.
pub fn interface_dissipation(
    prims: &[PrimState],
    nodes: &[NodeVars],
    mets: &[Metric],
    i: usize,
    params: &DissipationParams,
) -> Option<InterfaceDissipation> {
    let ml = &mets[i];
    let mr = &mets[i + 1];
    let mt = 0.5 * (ml[0] + mr[0]);
    let n = [0.5 * (ml[1] + mr[1]), 0.5 * (ml[2] + mr[2]), 0.5 * (ml[3] + mr[3])];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let t0 = rotation_matrix(&n)?;
    let nhat = [n[0] / len, n[1] / len, n[2] / len];

    let (wl, wr) = (&prims[i], &prims[i + 1]);
    let mean = PrimState {
        rho: 0.5 * (wl.rho + wr.rho),
        v: [0.5 * (wl.v[0] + wr.v[0]), 0.5 * (wl.v[1] + wr.v[1]), 0.5 * (wl.v[2] + wr.v[2])],
        p: 0.5 * (wl.p + wr.p),
        b: [0.5 * (wl.b[0] + wr.b[0]), 0.5 * (wl.b[1] + wr.b[1]), 0.5 * (wl.b[2] + wr.b[2])],
        gamma: wl.gamma,
    };
    let mean = if mean.is_valid() { mean } else { *wl };
    let lambda_hat = spectral_radius(&mean, &nhat, mt, len, params.physics, params.bound);
    let h = entropy_hessian_inverse(&rotate_prim(&t0, &mean), params.physics);
    let (r, fallback) = scaling_matrix(&h, params.scaling);

    let half = params.order / 2 + 1;
    let lo = i + 1 - half;
    let width = 2 * half;
    // Rᵀ applied to the rotated entropy variables. For hydrodynamics R is block
    // diagonal with an identity tail and the tail of V is zero.
    let m = params.physics.ncomp();
    let mut vt = [[0.0; NVAR]; 6];
    for (s, slot) in vt.iter_mut().enumerate().take(width) {
        let v = rotate_state(&t0, &nodes[lo + s].ventropy);
        for c in 0..m {
            slot[c] = (0..m).map(|k| r[(k, c)] * v[k]).sum();
        }
    }
    let ic = i - lo;
    let mut y = [0.0; NVAR];
    let mut jump_weno = [0.0; NVAR];
    let mut jump_first = [0.0; NVAR];
    let mut vt_mean = [0.0; NVAR];
    let mut line = [0.0; 6];
    for c in 0..m {
        for s in 0..width {
            line[s] = vt[s][c];
        }
        let (jw, jf) = weno_interface_jump(&line[..width], ic, params.order);
        jump_weno[c] = jw;
        jump_first[c] = jf;
        y[c] = sign_switch(jw, jf);
        vt_mean[c] = 0.5 * (line[ic] + line[ic + 1]);
    }
    Some(InterfaceDissipation { t0, r, lambda_hat, y, jump_weno, jump_first, vt_mean, fallback })
}

/// Entropy-stable flux and its entropy flux at the interface `i`/`i+1`.
pub fn es_flux(
    prims: &[PrimState],
    nodes: &[NodeVars],
    mets: &[Metric],
    i: usize,
    coeffs: &CombinationCoeffs,
    params: &DissipationParams,
) -> (StateVec, f64) {
    let (mut f, mut q) = highorder_ec_flux_with_entropy(nodes, mets, i, coeffs);
    if let Some(d) = interface_dissipation(prims, nodes, mets, i, params) {
        let corr = d.flux_correction();
        for c in 0..NVAR {
            f[c] -= corr[c];
        }
        q -= d.entropy_correction();
    }
    (f, q)
}

/// q̂ = q̃ − ½ λ̂ ⟨Ṽ⟩ᵀ Y ⟦Ṽ⟧^WENO given the EC entropy flux.
pub fn num_entropy_flux_es(q_ec: f64, d: &InterfaceDissipation) -> f64 {
    q_ec - d.entropy_correction()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_examples() {
        let t = rotation_matrix(&[2.0, 0.0, 0.0]).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(t[r][c], if r == c { 1.0 } else { 0.0 });
            }
        }
        let t = rotation_matrix(&[0.0, 3.0, 0.0]).unwrap();
        let e = mat3_vec(&t, &[0.0, 1.0, 0.0]);
        assert!((e[0] - 1.0).abs() < 1e-15 && e[1].abs() < 1e-15 && e[2].abs() < 1e-15);
        assert!(rotation_matrix(&[0.0; 3]).is_none());
    }

    #[test]
    fn sign_switch_convention() {
        assert_eq!(sign_switch(1.0, 2.0), 1.0);
        assert_eq!(sign_switch(-1.0, 2.0), 0.0);
        assert_eq!(sign_switch(0.7, 0.0), 1.0);
    }

    #[test]
    fn weno_constant_and_linear() {
        let c = [2.0; 6];
        assert_eq!(weno_interface_jump(&c, 2, 5), (0.0, 0.0));
        let lin: Vec<f64> = (0..6).map(|i| 0.3 * i as f64 - 1.0).collect();
        let (jw, _) = weno_interface_jump(&lin, 2, 5);
        assert!(jw.abs() < 1e-14);
        let (jw, _) = weno_interface_jump(&lin[1..5], 1, 3);
        assert!(jw.abs() < 1e-14);
    }
}
