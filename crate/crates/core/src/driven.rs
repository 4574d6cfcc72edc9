//! Approximate propagator of the driven system.
//!
//! In the frame of the undriven propagator the drive `Ω cos(ω_p t)(a + a†)`
//! picks up operator-valued exponentials of `n` and `b + b†`. Replacing those
//! exponentials by their averages in the initial coherent states leaves
//!
//! ```text
//! H_I(t) = Ω cos(ω_p t) [φ(t) a† e^{iω_c t} + φ*(t) a e^{−iω_c t}]
//! ```
//!
//! whose propagator is exactly `e^{β₁ a†} e^{β₂ a} e^{β₃}`. The scalar
//! `φ(t)` is returned by [`phi`] and the β's come from [`integrate_betas`].
//! Since the full propagator is `U_opt · D_a(β₁) · (phase)`, the evolved state
//! is again a polaron sum like the undriven one, only with the field amplitude
//! shifted from `α` to `α + β₁`, and every observable below is a closed form
//! in `μ = |α + β₁|²` and `a₃(t)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{FockDims, JointState, PoissonIter};
use crate::undriven::{alpha3, kerr_phase, polaron_state};
use crate::SystemParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default number of RK4 steps per period of the fastest drive frequency.
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 80;

/// Coefficients of `e^{β₁ a†} e^{β₂ a} e^{β₃}` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BetaCoefficients {
    pub t: f64,
    pub b1: C64,
    pub b2: C64,
    pub b3: C64,
}

impl BetaCoefficients {
    pub fn zero(t: f64) -> Self {
        BetaCoefficients { t, ..Default::default() }
    }

    /// `|β₁ + β₂*|`, zero for an exactly unitary propagator.
    pub fn antisymmetry_defect(&self) -> f64 {
        (self.b1 + self.b2.conj()).norm()
    }

    /// `2 Re(β₃ + αβ₂) − |α|² + |α + β₁|²`, zero for an exactly unitary
    /// propagator.
    pub fn unitarity_defect(&self, alpha: C64) -> f64 {
        2.0 * (self.b3 + alpha * self.b2).re - alpha.norm_sqr() + (alpha + self.b1).norm_sqr()
    }
}

/// How the β's are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DriveProfile {
    /// RK4 integration of the full coefficient equations with `φ(t)`.
    FullNumericBeta,
    /// Rotating-wave solution with `φ = 1`.
    RwaClosedForm,
    /// Exact solution with `φ = 1`, counter-rotating terms kept.
    PhiToOneClosedForm,
}

/// `E(t) = g²(ω_m t − sin ω_m t)` and `F(t) = 2g sin(ω_m t/2)`.
pub fn envelope_ef(p: &SystemParams, t: f64) -> (f64, f64) {
    (kerr_phase(p, t), 2.0 * p.g_ratio * (0.5 * p.omega_m * t).sin())
}

/// Coherent-state average of the operator exponentials in the drive term,
///
/// `φ = e^{−F²/2} e^{−iF(Γ* e^{iω_m t/2} + Γ e^{−iω_m t/2})} e^{−iE} e^{|α|²(e^{−2iE} − 1)}`.
pub fn phi(p: &SystemParams, t: f64) -> C64 {
    let (e, f) = envelope_ef(p, t);
    let half = C64::from_polar(1.0, -0.5 * p.omega_m * t);
    // Γ* e^{iθ} + Γ e^{−iθ} = 2 Re(Γ e^{−iθ})
    let mirror_phase = 2.0 * (p.gamma0 * half).re;
    let kerr = p.alpha0.norm_sqr() * (C64::from_polar(1.0, -2.0 * e) - 1.0);
    (C64::new(-0.5 * f * f, -f * mirror_phase - e) + kerr).exp()
}

/// `∫₀ᵗ e^{iws} ds`, written with a sinc so it stays accurate as `w t → 0`.
fn osc_integral(w: f64, t: f64) -> C64 {
    let x = 0.5 * w * t;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    t * sinc * C64::from_polar(1.0, x)
}

/// `φ → 1` solution, literally
/// `Ω/(ω_p² − ω_c²) [e^{iω_c t}(ω_c cos ω_p t − iω_p sin ω_p t) − ω_c]`.
/// Singular on resonance; [`integrate_betas`] uses an equivalent
/// resonance-safe form.
pub fn beta1_phi_to_one(p: &SystemParams, t: f64) -> C64 {
    let (wc, wp) = (p.omega_c, p.omega_p);
    let k = p.drive_amp / (wp * wp - wc * wc);
    k * (C64::from_polar(1.0, wc * t) * C64::new(wc * (wp * t).cos(), -wp * (wp * t).sin()) - wc)
}

/// Same solution as `−iΩ/2 [∫e^{i(ω_c+ω_p)s} + ∫e^{i(ω_c−ω_p)s}]`.
fn beta1_phi_to_one_safe(p: &SystemParams, t: f64) -> C64 {
    -0.5 * I * p.drive_amp * (osc_integral(p.omega_c + p.omega_p, t) + osc_integral(p.omega_c - p.omega_p, t))
}

/// Rotating-wave solution `(Ω/2Δ)(e^{−iΔt} − 1)`, tending to `−iΩt/2` on
/// resonance.
pub fn beta1_rwa(p: &SystemParams, t: f64) -> C64 {
    -0.5 * I * p.drive_amp * osc_integral(-p.detuning(), t)
}

/// `β₃` of the rotating-wave solution, `(Ω/2Δ)²(e^{iΔt} − 1 − iΔt)`.
fn beta3_rwa(p: &SystemParams, t: f64) -> C64 {
    let x = p.detuning() * t;
    // (e^{ix} − 1 − ix)/x²
    let f = if x.abs() < 1e-3 {
        C64::new(-0.5 + x * x / 24.0, -x / 6.0)
    } else {
        (C64::from_polar(1.0, x) - 1.0 - I * x) / (x * x)
    };
    0.25 * p.drive_amp * p.drive_amp * t * t * f
}

/// Photon number of the rotating-wave solution for any complex `α`:
/// `|α|² + (Ω/Δ)(1 − cos Δt)(Ω/2Δ − Re α) − (Ω/Δ) Im α sin Δt`.
pub fn rwa_photon_avg(p: &SystemParams, t: f64) -> f64 {
    let d = p.detuning();
    let a = p.alpha0;
    if d == 0.0 {
        return (a + beta1_rwa(p, t)).norm_sqr();
    }
    let r = p.drive_amp / d;
    a.norm_sqr() + r * (1.0 - (d * t).cos()) * (0.5 * r - a.re) - r * a.im * (d * t).sin()
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        None => return Err(Error::Argument("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::Argument(format!("time grid must start at 0, starts at {t0}")))
        }
        _ => {}
    }
    if let Some(w) = t_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Argument(format!("time grid is not ascending at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// β coefficients on `t_grid` (which must start at 0 and ascend).
///
/// `FullNumericBeta` integrates with fixed-step RK4 at
/// [`DEFAULT_SAMPLES_PER_PERIOD`] steps per period of `ω_c + ω_p`; `β₂` is
/// integrated on its own so `β₁ + β₂*` measures the integration error.
/// The closed-form modes have `β₂ = −β₁*`; `β₃` is the exact RWA value in
/// `RwaClosedForm` and `−|β₁|²/2` (the unitarity value, no global phase) in
/// `PhiToOneClosedForm`.
pub fn integrate_betas(p: &SystemParams, t_grid: &[f64], mode: DriveProfile) -> Result<Vec<BetaCoefficients>> {
    integrate_betas_with(p, t_grid, mode, DEFAULT_SAMPLES_PER_PERIOD)
}

pub fn integrate_betas_with(
    p: &SystemParams,
    t_grid: &[f64],
    mode: DriveProfile,
    samples_per_period: usize,
) -> Result<Vec<BetaCoefficients>> {
    check_grid(t_grid)?;
    match mode {
        DriveProfile::RwaClosedForm => Ok(t_grid
            .iter()
            .map(|&t| {
                let b1 = beta1_rwa(p, t);
                BetaCoefficients { t, b1, b2: -b1.conj(), b3: beta3_rwa(p, t) }
            })
            .collect()),
        DriveProfile::PhiToOneClosedForm => Ok(t_grid
            .iter()
            .map(|&t| {
                let b1 = beta1_phi_to_one_safe(p, t);
                BetaCoefficients { t, b1, b2: -b1.conj(), b3: C64::new(-0.5 * b1.norm_sqr(), 0.0) }
            })
            .collect()),
        DriveProfile::FullNumericBeta => integrate_numeric(p, t_grid, samples_per_period),
    }
}

fn integrate_numeric(p: &SystemParams, t_grid: &[f64], samples_per_period: usize) -> Result<Vec<BetaCoefficients>> {
    if samples_per_period == 0 {
        return Err(Error::Argument("samples_per_period must be positive".into()));
    }
    let fastest = (p.omega_c + p.omega_p).max(p.omega_c).max(p.omega_m);
    let h_max = std::f64::consts::TAU / (samples_per_period as f64 * fastest);

    // y = (β₁, β₂, β₃)
    let rhs = |t: f64, y: [C64; 3]| -> [C64; 3] {
        let f = -I * p.drive_amp * (p.omega_p * t).cos();
        let ph = phi(p, t);
        let rot = C64::from_polar(1.0, p.omega_c * t);
        let d2 = f * ph.conj() * rot.conj();
        [f * ph * rot, d2, y[0] * d2]
    };
    let axpy = |y: [C64; 3], h: f64, k: [C64; 3]| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];

    let mut out = Vec::with_capacity(t_grid.len());
    out.push(BetaCoefficients::zero(0.0));
    let mut y = [C64::default(); 3];
    for w in t_grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let n = ((t1 - t0) / h_max).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        for s in 0..n {
            let t = t0 + s as f64 * h;
            let k1 = rhs(t, y);
            let k2 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k1));
            let k3 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k2));
            let k4 = rhs(t + h, axpy(y, h, k3));
            for i in 0..3 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(BetaCoefficients { t: t1, b1: y[0], b2: y[1], b3: y[2] });
    }
    Ok(out)
}

/// Analytic state together with the norm it had before renormalization.
#[derive(Clone, Debug)]
pub struct DrivenState {
    pub state: JointState,
    /// Norm of the assembled sum with its scalar prefactor; deviations from 1
    /// come from truncation and from how far the β's are from unitary.
    pub prenorm_norm: f64,
}

/// Evolved state `U_opt(t) e^{β₁a†} e^{β₂a} e^{β₃} |α, Γ⟩`, normalized.
pub fn evolve_driven(p: &SystemParams, t: f64, betas: &BetaCoefficients, dims: FockDims) -> Result<DrivenState> {
    let b1 = betas.b1;
    let shifted = p.alpha0 + b1;
    // e^{β₁a†}e^{β₂a}e^{β₃}|α⟩ = e^{β₂α + β₃ + (|α+β₁|² − |α|²)/2} |α + β₁⟩
    let pref = (betas.b2 * p.alpha0 + betas.b3 + 0.5 * (shifted.norm_sqr() - p.alpha0.norm_sqr())).exp();
    let (mut state, sum_norm) = polaron_state(p, t, shifted, dims)?;
    let prenorm_norm = pref.norm() * sum_norm;
    if (prenorm_norm - 1.0).abs() > 1e-6 {
        log::debug!("driven state at t={t:e}: pre-normalization norm {prenorm_norm:.9}");
    }
    state.normalize();
    // keep the global phase of the prefactor
    let phase = C64::from_polar(1.0, pref.arg());
    let amps: Vec<C64> = state.amplitudes().iter().map(|a| a * phase).collect();
    Ok(DrivenState { state: JointState::new(dims, amps)?, prenorm_norm })
}

/// `⟨n(t)⟩ = |α + β₁|²`.
pub fn photon_avg(p: &SystemParams, betas: &BetaCoefficients) -> f64 {
    (p.alpha0 + betas.b1).norm_sqr()
}

/// Mean phonon number from the Heisenberg-picture phonon operator,
/// `|Γ|² + 2Re(a₃Γ*)⟨n⟩ + |a₃|²(⟨n⟩ + ⟨n⟩²)`.
pub fn phonon_avg(p: &SystemParams, betas: &BetaCoefficients, t: f64) -> f64 {
    let mu = photon_avg(p, betas);
    let a3 = alpha3(p, t);
    p.gamma0.norm_sqr() + 2.0 * (a3 * p.gamma0.conj()).re * mu + a3.norm_sqr() * (mu + mu * mu)
}

/// Mean phonon number from the Fock sum over the evolved state,
/// `e^{2Re(β₃+αβ₂)} e^{−|α|²} e^{|α+β₁|²} [ … ]`; it equals [`phonon_avg`]
/// exactly when the unitarity defect of `betas` vanishes.
pub fn phonon_avg_summed(p: &SystemParams, betas: &BetaCoefficients, t: f64) -> f64 {
    let a = p.alpha0;
    let scale = (2.0 * (betas.b3 + a * betas.b2).re - a.norm_sqr() + (a + betas.b1).norm_sqr()).exp();
    scale * phonon_avg(p, betas, t)
}

/// Raw moments `⟨n^k⟩`, k = 1..4, of a Poisson distribution of mean `mu`.
pub fn poisson_moments(mu: f64) -> [f64; 4] {
    let (m2, m3, m4) = (mu * mu, mu * mu * mu, mu * mu * mu * mu);
    [mu, mu + m2, mu + 3.0 * m2 + m3, mu + 7.0 * m2 + 6.0 * m3 + m4]
}

/// `⟨N²(t)⟩` of the mirror:
///
/// ```text
/// ⟨N²⟩₀ + 4Re{a₃Γ*}(|Γ|² + ½)⟨n⟩ + 2(Re{(a₃Γ*)²} + |a₃|²(2|Γ|² + ½))⟨n²⟩
///       + 4|a₃|² Re{a₃Γ*}⟨n³⟩ + |a₃|⁴⟨n⁴⟩
/// ```
///
/// with Poisson photon moments of mean `|α + β₁|²` and `⟨N²⟩₀ = |Γ|² + |Γ|⁴`.
pub fn phonon_second_moment(p: &SystemParams, betas: &BetaCoefficients, t: f64) -> f64 {
    let [n1, n2, n3, n4] = poisson_moments(photon_avg(p, betas));
    let a3 = alpha3(p, t);
    let w = a3 * p.gamma0.conj();
    let g2 = p.gamma0.norm_sqr();
    let z = a3.norm_sqr();
    (g2 + g2 * g2)
        + 4.0 * w.re * (g2 + 0.5) * n1
        + 2.0 * ((w * w).re + z * (2.0 * g2 + 0.5)) * n2
        + 4.0 * z * w.re * n3
        + z * z * n4
}

/// Field Mandel parameter. Built from the Heisenberg photon operator
/// `n(t) = (a† − β₂)(a + β₁)`: with `u = α* − β₂`, `v = α + β₁`,
/// `⟨n⟩ = uv` and `⟨n²⟩ = u²v² + uv`, so the result is 1 for any β's.
pub fn mandel_field(p: &SystemParams, betas: &BetaCoefficients) -> Result<f64> {
    let u = p.alpha0.conj() - betas.b2;
    let v = p.alpha0 + betas.b1;
    let n1 = u * v;
    let n2 = u * u * v * v + u * v;
    if n1.norm() < 1e-300 {
        return Err(Error::Undefined("field Mandel parameter with zero mean photon number".into()));
    }
    Ok(((n2 - n1 * n1) / n1).re)
}

/// Mirror Mandel parameter `(⟨N²⟩ − ⟨N⟩²)/⟨N⟩`.
pub fn mandel_mirror(p: &SystemParams, betas: &BetaCoefficients, t: f64) -> Result<f64> {
    let n1 = phonon_avg(p, betas, t);
    if n1 <= 0.0 {
        return Err(Error::Undefined("mirror Mandel parameter with zero mean phonon number".into()));
    }
    Ok((phonon_second_moment(p, betas, t) - n1 * n1) / n1)
}

/// Default cutoff `ceil(μ + 10√μ + 10)` for the Poisson sums.
pub fn default_kmax(mu: f64) -> usize {
    (mu + 10.0 * mu.sqrt() + 10.0).ceil() as usize
}

/// Mirror linear entropy `1 − Tr ρ_m²` with
/// `Tr ρ_m² = Σ_{p,q} w_p w_q e^{−|Γ_p − Γ_q|²}`, `w` Poisson of mean
/// `|α + β₁|²`, and `|Γ_p − Γ_q|² = (p − q)²|a₃|²`.
pub fn linear_entropy_mirror(p: &SystemParams, betas: &BetaCoefficients, t: f64, kmax: usize) -> f64 {
    let mu = photon_avg(p, betas);
    let w: Vec<f64> = PoissonIter::new(mu).take(kmax + 1).collect();
    let z = alpha3(p, t).norm_sqr();
    // group by separation d = |p − q|
    let mut purity: f64 = w.iter().map(|x| x * x).sum();
    for d in 1..w.len() {
        let overlap = (-((d * d) as f64) * z).exp();
        if overlap == 0.0 {
            break;
        }
        let s: f64 = w.iter().zip(&w[d..]).map(|(a, b)| a * b).sum();
        purity += 2.0 * overlap * s;
    }
    1.0 - purity
}

/// All closed-form observables evaluated along a β series.
#[derive(Clone, Debug, Default)]
pub struct AnalyticObservables {
    pub t: Vec<f64>,
    pub photons: Vec<f64>,
    pub phonons: Vec<f64>,
    pub phonons_sq: Vec<f64>,
    pub mandel_field: Vec<f64>,
    pub mandel_mirror: Vec<f64>,
    pub entropy_mirror: Vec<f64>,
    pub unitarity_defect: Vec<f64>,
}

/// `NaN` where a ratio is undefined (zero mean), otherwise the value or error.
fn or_nan(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::Undefined(_)) => Ok(f64::NAN),
        other => other,
    }
}

impl AnalyticObservables {
    /// Mandel parameters are `NaN` at times where the mean they divide by is zero.
    pub fn evaluate(p: &SystemParams, betas: &[BetaCoefficients]) -> Result<Self> {
        let mut o = AnalyticObservables::default();
        for b in betas {
            let t = b.t;
            let mu = photon_avg(p, b);
            o.t.push(t);
            o.photons.push(mu);
            o.phonons.push(phonon_avg(p, b, t));
            o.phonons_sq.push(phonon_second_moment(p, b, t));
            o.mandel_field.push(or_nan(mandel_field(p, b))?);
            o.mandel_mirror.push(or_nan(mandel_mirror(p, b, t))?);
            o.entropy_mirror.push(linear_entropy_mirror(p, b, t, default_kmax(mu)));
            o.unitarity_defect.push(b.unitarity_defect(p.alpha0));
        }
        Ok(o)
    }
}
