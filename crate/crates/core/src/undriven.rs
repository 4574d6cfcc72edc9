//! Exact evolution of the undriven optomechanical system.
//!
//! The Hamiltonian `ω_c n + ω_m N − G₀ n (b + b†)` closes a five-element Lie
//! algebra (`n`, `N`, `n b†`, `n b`, `n²`), so its propagator is exactly the
//! ordered product
//!
//! ```text
//! U(t) = e^{a₁ n} e^{a₂ N} e^{a₃ n b†} e^{a₄ n b} e^{a₅ n²}
//! ```
//!
//! with the scalar coefficients returned by [`alpha_coeffs`]. Acting on a
//! coherent product `|α⟩|Γ⟩`, each photon-number component `|k⟩` drags the
//! mirror into its own coherent state `|Γ_k(t)⟩` (see [`gamma_k`]), which is
//! what entangles the two oscillators.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, poisson_cutoff, FockDims, JointState, COHERENT_LOSS_TOL};
use crate::SystemParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Coefficients of the product-of-exponentials propagator at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaCoefficients {
    pub t: f64,
    pub a1: C64,
    pub a2: C64,
    pub a3: C64,
    pub a4: C64,
    pub a5: C64,
}

pub fn alpha_coeffs(p: &SystemParams, t: f64) -> AlphaCoefficients {
    let g = p.g_ratio;
    let wt = p.omega_m * t;
    let a3 = alpha3(p, t);
    AlphaCoefficients {
        t,
        a1: C64::new(0.0, -p.omega_c * t),
        a2: C64::new(0.0, -wt),
        a3,
        a4: -a3.conj(),
        a5: g * g * (I * wt - 1.0 + C64::from_polar(1.0, -wt)),
    }
}

/// `a₃(t) = −(G₀/ω_m)(1 − e^{iω_m t})`.
#[inline]
pub fn alpha3(p: &SystemParams, t: f64) -> C64 {
    -p.g_ratio * (1.0 - C64::from_polar(1.0, p.omega_m * t))
}

/// Mirror amplitude conditioned on `k` photons:
/// `Γ_k(t) = Γ e^{−iω_m t} − k (G₀/ω_m)(e^{−iω_m t} − 1)`.
pub fn gamma_k(p: &SystemParams, k: usize, t: f64) -> C64 {
    let rot = C64::from_polar(1.0, -p.omega_m * t);
    p.gamma0 * rot - k as f64 * p.g_ratio * (rot - 1.0)
}

/// Kerr-like phase `E(t) = (G₀/ω_m)² (ω_m t − sin ω_m t)` multiplying `k²`.
#[inline]
pub(crate) fn kerr_phase(p: &SystemParams, t: f64) -> f64 {
    let wt = p.omega_m * t;
    p.g_ratio * p.g_ratio * (wt - wt.sin())
}

/// Field amplitudes below this weight are dropped when assembling states.
const NEGLIGIBLE_WEIGHT: f64 = 1e-30;

/// Assembles `Σ_k c_k e^{−i(ω_c t − Im(a₃Γ*))k} e^{iE k²} |k, Γ_k(t)⟩` where
/// `c_k` are the coherent amplitudes of `field_amp`. Returns the state (not
/// normalized) and its norm.
///
/// Truncation is judged on the total weight lost, `Σ_k |c_k|² loss(Γ_k)` plus
/// the field tail, so large-`k` components that carry no weight do not force
/// an oversized mirror cutoff.
pub(crate) fn polaron_state(p: &SystemParams, t: f64, field_amp: C64, dims: FockDims) -> Result<(JointState, f64)> {
    let (field, field_loss) = coherent_amplitudes(dims.field_dim(), field_amp);
    if field_loss >= COHERENT_LOSS_TOL {
        return Err(Error::Truncation {
            amp: field_amp.norm(),
            dim: dims.field_dim(),
            loss: field_loss,
            required: poisson_cutoff(field_amp.norm_sqr(), COHERENT_LOSS_TOL),
        });
    }
    let linear = p.omega_c * t - (alpha3(p, t) * p.gamma0.conj()).im;
    let kerr = kerr_phase(p, t);
    let md = dims.mirror_dim();

    let mut amps = vec![C64::default(); dims.joint_dim()];
    let mut mirror_loss = 0.0;
    let mut worst: Option<(C64, f64)> = None;
    for (k, ck) in field.iter().enumerate() {
        let w = ck.norm_sqr();
        if w < NEGLIGIBLE_WEIGHT {
            continue;
        }
        let kf = k as f64;
        let coef = ck * C64::from_polar(1.0, -linear * kf + kerr * kf * kf);
        let gk = gamma_k(p, k, t);
        let (mirror, loss) = coherent_amplitudes(md, gk);
        mirror_loss += w * loss;
        if loss > 0.0 && worst.is_none_or(|(_, l)| w * loss > l) {
            worst = Some((gk, w * loss));
        }
        let block = &mut amps[dims.index(k, 0)..dims.index(k, 0) + md];
        for (a, m) in block.iter_mut().zip(&mirror) {
            *a = coef * m;
        }
    }
    if mirror_loss >= COHERENT_LOSS_TOL {
        let gk = worst.map(|(g, _)| g).unwrap_or(p.gamma0);
        return Err(Error::Truncation {
            amp: gk.norm(),
            dim: md,
            loss: mirror_loss,
            required: poisson_cutoff(gk.norm_sqr(), COHERENT_LOSS_TOL),
        });
    }
    let state = JointState::new(dims, amps)?;
    let norm = state.norm();
    Ok((state, norm))
}

/// Exact state at time `t` starting from `|α⟩|Γ⟩`, normalized.
pub fn evolve_undriven(p: &SystemParams, t: f64, dims: FockDims) -> Result<JointState> {
    let (mut state, _) = polaron_state(p, t, p.alpha0, dims)?;
    state.normalize();
    Ok(state)
}

/// Mean phonon number of the undriven evolution,
/// `|Γ|² + (a₃Γ* + a₃*Γ + |a₃|²)|α|² + |a₃|²|α|⁴`.
pub fn phonon_avg_closed_form(p: &SystemParams, t: f64) -> f64 {
    let a3 = alpha3(p, t);
    let n = p.alpha0.norm_sqr();
    let cross = 2.0 * (a3 * p.gamma0.conj()).re;
    p.gamma0.norm_sqr() + (cross + a3.norm_sqr()) * n + a3.norm_sqr() * n * n
}

/// Same quantity written in the quadratures `Γ = Γ_x + iΓ_y`.
pub fn phonon_avg_quadratures(p: &SystemParams, t: f64) -> f64 {
    let g = p.g_ratio;
    let n = p.alpha0.norm_sqr();
    let s2 = (0.5 * p.omega_m * t).sin().powi(2);
    let (gx, gy) = (p.gamma0.re, p.gamma0.im);
    p.gamma0.norm_sqr()
        + (2.0 * g).powi(2) * s2 * n * n
        + (((2.0 * g).powi(2) - 4.0 * g * gx) * s2 + 2.0 * g * gy * (p.omega_m * t).sin()) * n
}

/// Real-`Γ` reduction
/// `|Γ|² + 4 g |α|² sin²(ω_m t/2) [g(|α|² + 1) − Γ]`, `g = G₀/ω_m`.
pub fn phonon_avg_real_gamma(p: &SystemParams, t: f64) -> Result<f64> {
    require_real_gamma(p)?;
    let g = p.g_ratio;
    let n = p.alpha0.norm_sqr();
    let s2 = (0.5 * p.omega_m * t).sin().powi(2);
    Ok(p.gamma0.norm_sqr() + 4.0 * g * n * s2 * (g * (n + 1.0) - p.gamma0.re))
}

/// Photon numbers bounding the cooling region for real `Γ > 0`:
/// maximal cooling at `|α|² = ½(Γ/g − 1)`, no net change at `|α|² = Γ/g − 1`,
/// heating beyond.
pub fn cooling_threshold(p: &SystemParams) -> Result<(f64, f64)> {
    require_real_gamma(p)?;
    if p.gamma0.re <= 0.0 {
        return Err(Error::Domain(format!("Γ must be positive, got {}", p.gamma0.re)));
    }
    if p.g_ratio <= 0.0 {
        return Err(Error::Domain("cooling analysis needs G₀/ω_m > 0".into()));
    }
    let neutral = p.gamma0.re / p.g_ratio - 1.0;
    Ok((0.5 * neutral, neutral))
}

fn require_real_gamma(p: &SystemParams) -> Result<()> {
    if p.gamma0.im.abs() > 1e-12 * p.gamma0.norm().max(1.0) {
        return Err(Error::Domain(format!("analysis requires a real Γ, got {}", p.gamma0)));
    }
    Ok(())
}
