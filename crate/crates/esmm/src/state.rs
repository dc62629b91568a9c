//! Relativistic fluid states: primitive/conservative conversion, entropy
//! variables and potentials, physical fluxes and characteristic-speed bounds.
//!
//! Every state vector has eight slots `(D, m1, m2, m3, E, B1, B2, B3)`.
//! Hydrodynamic (RHD) runs carry `B = 0`; lower-dimensional runs carry
//! zero transverse components.

use crate::error::RecoveryError;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];
pub const NVAR: usize = 8;
pub type StateVec = [f64; NVAR];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm2(a: &Vec3) -> f64 {
    dot(a, a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Physics {
    Rhd,
    Rmhd,
}

impl Physics {
    /// Number of active conservative components.
    pub fn ncomp(self) -> usize {
        match self {
            Physics::Rhd => 5,
            Physics::Rmhd => 8,
        }
    }
}

/// Which upper bound on characteristic speeds to use for RMHD.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignalBound {
    /// |λ| ≤ 1.
    #[default]
    Light,
    /// Quadratic fast-magnetosonic estimate.
    Fast,
}

/// Primitive state (ρ, v, p, B) with adiabatic index Γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimState {
    pub rho: f64,
    pub v: Vec3,
    pub p: f64,
    pub b: Vec3,
    pub gamma: f64,
}

/// Conservative state (D, m, E, B).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsState {
    pub d: f64,
    pub m: Vec3,
    pub e: f64,
    pub b: Vec3,
}

impl ConsState {
    pub fn to_array(&self) -> StateVec {
        [self.d, self.m[0], self.m[1], self.m[2], self.e, self.b[0], self.b[1], self.b[2]]
    }

    pub fn from_array(u: &StateVec) -> Self {
        ConsState { d: u[0], m: [u[1], u[2], u[3]], e: u[4], b: [u[5], u[6], u[7]] }
    }
}

/// Entropy potential φ, flux potentials ψ_k, Godunov–Powell scalar Φ and Φ′(V).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSet {
    pub phi: f64,
    pub psi: Vec3,
    pub big_phi: f64,
    pub big_phi_prime: StateVec,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyQuantities {
    pub eta: f64,
    pub q: Vec3,
    pub v: StateVec,
    pub pots: PotentialSet,
}

impl PrimState {
    pub fn new(rho: f64, v: Vec3, p: f64, b: Vec3, gamma: f64) -> Self {
        PrimState { rho, v, p, b, gamma }
    }

    pub fn hydro(rho: f64, v: Vec3, p: f64, gamma: f64) -> Self {
        PrimState { rho, v, p, b: [0.0; 3], gamma }
    }

    pub fn is_valid(&self) -> bool {
        self.rho.is_finite()
            && self.p.is_finite()
            && self.rho > 0.0
            && self.p > 0.0
            && norm2(&self.v) < 1.0
            && self.b.iter().all(|x| x.is_finite())
    }

    #[inline]
    pub fn lorentz(&self) -> f64 {
        1.0 / (1.0 - norm2(&self.v)).sqrt()
    }

    /// Specific enthalpy h = 1 + Γp/((Γ−1)ρ).
    #[inline]
    pub fn enthalpy(&self) -> f64 {
        1.0 + self.gamma * self.p / ((self.gamma - 1.0) * self.rho)
    }

    /// Time component b⁰ = W (v·B) of the magnetic four-vector.
    #[inline]
    pub fn b0(&self) -> f64 {
        self.lorentz() * dot(&self.v, &self.b)
    }

    /// Invariant b² = |B|²/W² + (v·B)².
    #[inline]
    pub fn b_sq(&self) -> f64 {
        let vb = dot(&self.v, &self.b);
        norm2(&self.b) * (1.0 - norm2(&self.v)) + vb * vb
    }

    /// Specific entropy s = ln(p/ρ^Γ).
    #[inline]
    pub fn entropy(&self) -> f64 {
        self.p.ln() - self.gamma * self.rho.ln()
    }

    /// Squared sound speed Γp/(ρh).
    pub fn sound_speed_sq(&self) -> f64 {
        self.gamma * self.p / (self.rho * self.enthalpy())
    }
}

pub fn prim_to_cons(w: &PrimState) -> ConsState {
    let wl = w.lorentz();
    let h = w.enthalpy();
    let vb = dot(&w.v, &w.b);
    let b2 = norm2(&w.b);
    let bsq = w.b_sq();
    let rhohw2 = w.rho * h * wl * wl;
    let pt = w.p + 0.5 * bsq;
    let mut m = [0.0; 3];
    for k in 0..3 {
        m[k] = (rhohw2 + b2) * w.v[k] - vb * w.b[k];
    }
    ConsState { d: w.rho * wl, m, e: rhohw2 - pt + b2, b: w.b }
}

pub fn prim_to_cons_array(w: &PrimState) -> StateVec {
    prim_to_cons(w).to_array()
}

/// Flux vector F_k of the lab-frame system in direction `k` (0-based).
pub fn physical_flux(w: &PrimState, k: usize) -> StateVec {
    let u = prim_to_cons(w);
    let wl = w.lorentz();
    let vb = dot(&w.v, &w.b);
    let pt = w.p + 0.5 * w.b_sq();
    let vk = w.v[k];
    let bk = w.b[k];
    let mut f = [0.0; NVAR];
    f[0] = u.d * vk;
    for j in 0..3 {
        f[1 + j] = u.m[j] * vk - bk * (w.b[j] / (wl * wl) + vb * w.v[j]);
    }
    f[1 + k] += pt;
    f[4] = u.m[k];
    for j in 0..3 {
        f[5 + j] = vk * w.b[j] - bk * w.v[j];
    }
    f
}

pub fn entropy_quantities(w: &PrimState) -> EntropyQuantities {
    let g = w.gamma;
    let wl = w.lorentz();
    let beta = w.rho / w.p;
    let s = w.entropy();
    let b0 = w.b0();
    let bsq = w.b_sq();
    let eta = -w.rho * wl * s / (g - 1.0);
    let v = variables_from(w, wl, beta, s, b0);
    let phi = w.rho * wl + 0.5 * beta * wl * bsq;
    let psi = [phi * w.v[0], phi * w.v[1], phi * w.v[2]];
    let pp = godunov_powell_vector(w);
    EntropyQuantities {
        eta,
        q: [eta * w.v[0], eta * w.v[1], eta * w.v[2]],
        v,
        pots: PotentialSet { phi, psi, big_phi: beta * b0, big_phi_prime: pp },
    }
}

/// Entropy variables V alone.
pub fn entropy_variables(w: &PrimState) -> StateVec {
    variables_from(w, w.lorentz(), w.rho / w.p, w.entropy(), w.b0())
}

fn variables_from(w: &PrimState, wl: f64, beta: f64, s: f64, b0: f64) -> StateVec {
    let g = w.gamma;
    let mut v = [0.0; NVAR];
    v[0] = (g - s) / (g - 1.0) + beta;
    for k in 0..3 {
        v[1 + k] = beta * wl * w.v[k];
        v[5 + k] = beta * (w.b[k] / wl + b0 * w.v[k]);
    }
    v[4] = -beta * wl;
    v
}

/// Analytic ∂U/∂w and ∂V/∂w, with w = (ρ, v, p, B) and rows indexed by component.
pub fn primitive_jacobians(w: &PrimState) -> ([[f64; NVAR]; NVAR], [[f64; NVAR]; NVAR]) {
    let g = w.gamma;
    let kappa = g / (g - 1.0);
    let (rho, p, v, b) = (w.rho, w.p, w.v, w.b);
    let wl = w.lorentz();
    let w2 = wl * wl;
    let w3 = w2 * wl;
    let a = dot(&v, &b);
    let b2 = norm2(&b);
    let v2 = norm2(&v);
    let x = (rho + kappa * p) * w2;
    let dx_dv = |j: usize| 2.0 * (rho + kappa * p) * w2 * w2 * v[j];
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };

    let mut du = [[0.0; NVAR]; NVAR];
    du[0][0] = wl;
    for j in 0..3 {
        du[0][1 + j] = rho * w3 * v[j];
    }
    for k in 0..3 {
        let r = &mut du[1 + k];
        r[0] = w2 * v[k];
        r[4] = kappa * w2 * v[k];
        for j in 0..3 {
            r[1 + j] = dx_dv(j) * v[k] + (x + b2) * delta(j, k) - b[j] * b[k];
            r[5 + j] = 2.0 * b[j] * v[k] - v[j] * b[k] - a * delta(j, k);
        }
    }
    du[4][0] = w2;
    du[4][4] = kappa * w2 - 1.0;
    for j in 0..3 {
        du[4][1 + j] = dx_dv(j) + b2 * v[j] - a * b[j];
        du[4][5 + j] = b[j] * (1.0 + v2) - a * v[j];
        du[5 + j][5 + j] = 1.0;
    }

    let beta = rho / p;
    let mut dv = [[0.0; NVAR]; NVAR];
    dv[0][0] = g / (rho * (g - 1.0)) + 1.0 / p;
    dv[0][4] = -1.0 / (p * (g - 1.0)) - rho / (p * p);
    for k in 0..3 {
        let r = &mut dv[1 + k];
        r[0] = wl * v[k] / p;
        r[4] = -rho * wl * v[k] / (p * p);
        for j in 0..3 {
            r[1 + j] = beta * (w3 * v[j] * v[k] + wl * delta(j, k));
        }
    }
    dv[4][0] = -wl / p;
    dv[4][4] = rho * wl / (p * p);
    for j in 0..3 {
        dv[4][1 + j] = -beta * w3 * v[j];
    }
    for k in 0..3 {
        let q = b[k] / wl + wl * a * v[k];
        let r = &mut dv[5 + k];
        r[0] = q / p;
        r[4] = -rho * q / (p * p);
        for j in 0..3 {
            r[1 + j] = beta * (-b[k] * wl * v[j] + (w3 * a * v[j] + wl * b[j]) * v[k] + wl * a * delta(j, k));
            r[5 + j] = beta * (delta(j, k) / wl + wl * v[j] * v[k]);
        }
    }
    (du, dv)
}

/// Φ′(V): multiplies the discrete divergence of B in the Godunov–Powell source.
pub fn godunov_powell_vector(w: &PrimState) -> StateVec {
    let wl = w.lorentz();
    let vb = dot(&w.v, &w.b);
    let mut pp = [0.0; NVAR];
    for k in 0..3 {
        pp[1 + k] = w.b[k] / (wl * wl) + vb * w.v[k];
        pp[5 + k] = w.v[k];
    }
    pp[4] = vb;
    pp
}

/// Entropy η = −ρW s/(Γ−1).
pub fn entropy_density(w: &PrimState) -> f64 {
    -w.rho * w.lorentz() * w.entropy() / (w.gamma - 1.0)
}

/// Acoustic eigenvalues (λ−, λ+) of the RHD flux Jacobian along unit vector `n`.
pub fn acoustic_eigenvalues(w: &PrimState, n: &Vec3) -> (f64, f64) {
    let cs2 = w.sound_speed_sq();
    characteristic_pair(w, n, cs2)
}

fn characteristic_pair(w: &PrimState, n: &Vec3, a2: f64) -> (f64, f64) {
    let v2 = norm2(&w.v);
    let vn = dot(&w.v, n);
    let a = a2.sqrt();
    let disc = ((1.0 - v2) * (1.0 - v2 * a2 - vn * vn * (1.0 - a2))).max(0.0);
    let den = 1.0 - v2 * a2;
    let base = vn * (1.0 - a2);
    ((base - a * disc.sqrt()) / den, (base + a * disc.sqrt()) / den)
}

/// Upper bound on |λ| for the directional flux Jacobian along unit vector `n`.
pub fn max_signal_speed(w: &PrimState, n: &Vec3, physics: Physics, bound: SignalBound) -> f64 {
    match physics {
        Physics::Rhd => {
            let (lm, lp) = acoustic_eigenvalues(w, n);
            lm.abs().max(lp.abs()).max(dot(&w.v, n).abs())
        }
        Physics::Rmhd => match bound {
            SignalBound::Light => 1.0,
            SignalBound::Fast => {
                let (lm, lp) = characteristic_pair(w, n, fast_speed_sq(w));
                lm.abs().max(lp.abs()).max(dot(&w.v, n).abs()).min(1.0)
            }
        },
    }
}

/// Largest |mt + L λ_m| over the characteristic speeds along unit normal `n`.
pub fn spectral_radius(w: &PrimState, n: &Vec3, mt: f64, len: f64, physics: Physics, bound: SignalBound) -> f64 {
    let pair = match (physics, bound) {
        (Physics::Rhd, _) => Some(acoustic_eigenvalues(w, n)),
        (Physics::Rmhd, SignalBound::Fast) => Some(characteristic_pair(w, n, fast_speed_sq(w))),
        (Physics::Rmhd, SignalBound::Light) => None,
    };
    match pair {
        Some((lm, lp)) => {
            let lm = lm.max(-1.0);
            let lp = lp.min(1.0);
            let vn = dot(&w.v, n);
            (mt + len * lm).abs().max((mt + len * lp).abs()).max((mt + len * vn).abs())
        }
        None => mt.abs() + len,
    }
}

/// a² = c_s² + c_a² − c_s² c_a² with c_a² = b²/(ρh + b²).
fn fast_speed_sq(w: &PrimState) -> f64 {
    let cs2 = w.sound_speed_sq();
    let bsq = w.b_sq();
    let ca2 = bsq / (w.rho * w.enthalpy() + bsq);
    (cs2 + ca2 - cs2 * ca2).min(1.0)
}

const RECOVERY_MAX_ITER: usize = 200;
const RECOVERY_TOL: f64 = 1e-14;

/// Recover primitives from conservative variables.
///
/// Hydrodynamic states (B = 0) solve the pressure equation, magnetised states
/// the scalar equation in Q = ρhW². Both use Newton steps safeguarded by a
/// bracket with bisection fallback.
pub fn cons_to_prim(u: &ConsState, gamma: f64, guess: Option<&PrimState>) -> Result<PrimState, RecoveryError> {
    if !(u.d.is_finite() && u.e.is_finite() && u.m.iter().all(|x| x.is_finite()) && u.b.iter().all(|x| x.is_finite())) {
        return Err(RecoveryError::Unphysical { reason: "non-finite conservative state".into() });
    }
    if u.d <= 0.0 {
        return Err(RecoveryError::Unphysical { reason: format!("D = {} <= 0", u.d) });
    }
    if u.e < u.d {
        return Err(RecoveryError::Unphysical { reason: format!("E = {} < D = {}", u.e, u.d) });
    }
    if norm2(&u.b) == 0.0 {
        recover_hydro(u, gamma, guess)
    } else {
        recover_mhd(u, gamma, guess)
    }
}

fn finish(rho: f64, v: Vec3, p: f64, b: Vec3, gamma: f64) -> Result<PrimState, RecoveryError> {
    let w = PrimState { rho, v, p, b, gamma };
    if !(p > 0.0) || !p.is_finite() {
        return Err(RecoveryError::Unphysical { reason: format!("recovered p = {p}") });
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(RecoveryError::Unphysical { reason: format!("recovered rho = {rho}") });
    }
    if !(norm2(&v) < 1.0) {
        return Err(RecoveryError::Unphysical { reason: "recovered |v| >= 1".into() });
    }
    Ok(w)
}

/// Safeguarded Newton on an increasing function `f` with `f(lo) < 0 < f(hi)`.
fn safeguarded_newton<F>(f: F, mut lo: f64, mut hi: f64, x0: f64) -> Result<f64, RecoveryError>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = if x0 > lo && x0 < hi { x0 } else { 0.5 * (lo + hi) };
    for it in 0..RECOVERY_MAX_ITER {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut xn = x - fx / dfx;
        if !(xn > lo && xn < hi) || !dfx.is_finite() || dfx <= 0.0 {
            xn = 0.5 * (lo + hi);
        }
        if (xn - x).abs() <= RECOVERY_TOL * x.abs() || (hi - lo) <= RECOVERY_TOL * hi.abs() {
            // One more Newton correction polishes the last digits.
            let (fn_, dfn) = f(xn);
            let xp = xn - fn_ / dfn;
            return Ok(if xp.is_finite() && xp > lo && xp < hi { xp } else { xn });
        }
        x = xn;
        let _ = it;
    }
    Err(RecoveryError::NonConvergence { iterations: RECOVERY_MAX_ITER })
}

fn recover_hydro(u: &ConsState, gamma: f64, guess: Option<&PrimState>) -> Result<PrimState, RecoveryError> {
    let s2 = norm2(&u.m);
    let s = s2.sqrt();
    let (d, e) = (u.d, u.e);
    let c = (gamma - 1.0) / gamma;
    // f(p) = p − p_eos(p); increasing in p.
    let f = |p: f64| {
        let ep = e + p;
        let v2 = s2 / (ep * ep);
        let sq = (1.0 - v2).sqrt();
        // ρh − ρ = (E+p)(1−v²) − D√(1−v²)
        let g = ep - s2 / ep;
        let peos = c * (g - d * sq);
        let dg = 1.0 + s2 / (ep * ep);
        let dsq = s2 / (ep * ep * ep * sq);
        (p - peos, 1.0 - c * (dg - d * dsq))
    };
    let lo = (s - e).max(0.0);
    let mut hi = (gamma - 1.0) * e + 1.0;
    let mut n = 0;
    while f(hi).0 <= 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(RecoveryError::NonConvergence { iterations: n });
        }
    }
    let lo = if lo > 0.0 { lo * (1.0 + 1e-15) } else { 0.0 };
    if f(lo).0 >= 0.0 && lo > 0.0 {
        return Err(RecoveryError::Unphysical { reason: "no admissible pressure root".into() });
    }
    let p0 = guess.map(|w| w.p).unwrap_or_else(|| ((gamma - 1.0) * (e - d)).max(1e-8));
    let p = safeguarded_newton(f, lo, hi, p0)?;
    let ep = e + p;
    let v = [u.m[0] / ep, u.m[1] / ep, u.m[2] / ep];
    let wl = 1.0 / (1.0 - norm2(&v)).sqrt();
    finish(d / wl, v, p, [0.0; 3], gamma)
}

fn recover_mhd(u: &ConsState, gamma: f64, guess: Option<&PrimState>) -> Result<PrimState, RecoveryError> {
    let (d, e) = (u.d, u.e);
    let s2 = norm2(&u.m);
    let b2 = norm2(&u.b);
    let sb = dot(&u.m, &u.b);
    let sb2 = sb * sb;
    let c = (gamma - 1.0) / gamma;
    let v2_of = |q: f64| {
        let qb = q + b2;
        (q * q * s2 + sb2 * (b2 + 2.0 * q)) / (q * q * qb * qb)
    };
    let f = |q: f64| {
        let qb = q + b2;
        let t1 = s2 / (qb * qb);
        let t2 = if sb2 > 0.0 { sb2 * (b2 + 2.0 * q) / (q * q * qb * qb) } else { 0.0 };
        let v2 = t1 + t2;
        let dv2 = -2.0 * t1 / qb + if sb2 > 0.0 { t2 * (2.0 / (b2 + 2.0 * q) - 2.0 / q - 2.0 / qb) } else { 0.0 };
        let sq = (1.0 - v2).max(0.0).sqrt();
        let p = c * (q * (1.0 - v2) - d * sq);
        let dp = c * ((1.0 - v2) - q * dv2 + d * dv2 / (2.0 * sq));
        let fq = q - p + 0.5 * (1.0 + v2) * b2 - 0.5 * sb2 / (q * q) - e;
        let dfq = 1.0 - dp + 0.5 * b2 * dv2 + sb2 / (q * q * q);
        (fq, dfq)
    };
    // v²(Q) is strictly decreasing; bracket the light-cylinder limit v² = 1.
    let mut adm = (s2.sqrt() + e).max(1e-300);
    while v2_of(adm) >= 1.0 {
        adm *= 2.0;
    }
    let mut bad = adm;
    loop {
        bad *= 0.5;
        if v2_of(bad) >= 1.0 {
            break;
        }
        if bad < 1e-250 {
            bad = 0.0;
            break;
        }
    }
    if bad > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (bad + adm);
            if v2_of(mid) >= 1.0 {
                bad = mid;
            } else {
                adm = mid;
            }
            if adm - bad <= 4.0 * f64::EPSILON * adm {
                break;
            }
        }
    } else {
        adm = 1e-250;
    }
    let lo = adm;
    if f(lo).0 >= 0.0 {
        return Err(RecoveryError::Unphysical { reason: "no admissible Q root".into() });
    }
    let mut hi = 2.0 * (e + b2) + 1.0;
    let mut n = 0;
    while f(hi).0 <= 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(RecoveryError::NonConvergence { iterations: n });
        }
    }
    let q0 = guess
        .map(|w| {
            let wl = w.lorentz();
            w.rho * w.enthalpy() * wl * wl
        })
        .unwrap_or(0.5 * (lo + hi));
    let q = safeguarded_newton(f, lo, hi, q0)?;
    let v2 = v2_of(q);
    let sq = (1.0 - v2).sqrt();
    let qb = q + b2;
    let v = [
        (u.m[0] + sb / q * u.b[0]) / qb,
        (u.m[1] + sb / q * u.b[1]) / qb,
        (u.m[2] + sb / q * u.b[2]) / qb,
    ];
    let p = c * (q * (1.0 - v2) - d * sq);
    finish(d * sq, v, p, u.b, gamma)
}
