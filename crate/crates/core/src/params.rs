//! Hamiltonian and initial-state constants.
//!
//! All frequencies are angular (rad/s), times are seconds and ħ = 1.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Constants of the driven optomechanical Hamiltonian
/// `H = ω_c n + ω_m N − G₀ n (b + b†) + Ω cos(ω_p t)(a + a†)`
/// together with the coherent amplitudes of the initial product state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Cavity frequency ω_c.
    pub omega_c: f64,
    /// Mechanical frequency ω_m.
    pub omega_m: f64,
    /// Drive frequency ω_p. Ignored when `drive_amp` is zero.
    pub omega_p: f64,
    /// Drive amplitude Ω.
    pub drive_amp: f64,
    /// Dimensionless coupling G₀/ω_m.
    pub g_ratio: f64,
    /// Field coherent amplitude α.
    pub alpha0: C64,
    /// Mirror coherent amplitude Γ.
    pub gamma0: C64,
}

impl SystemParams {
    /// Undriven system; the drive fields are zero.
    pub fn undriven(omega_c: f64, omega_m: f64, g_ratio: f64, alpha0: C64, gamma0: C64) -> Self {
        SystemParams {
            omega_c,
            omega_m,
            omega_p: 0.0,
            drive_amp: 0.0,
            g_ratio,
            alpha0,
            gamma0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega_c, self.omega_m, self.omega_p, self.drive_amp, self.g_ratio]
            .iter()
            .all(|v| v.is_finite())
            && self.alpha0.is_finite()
            && self.gamma0.is_finite();
        if !finite {
            return Err(Error::Argument("parameters must be finite".into()));
        }
        if self.omega_c <= 0.0 {
            return Err(Error::Argument(format!("omega_c must be > 0, got {}", self.omega_c)));
        }
        if self.omega_m <= 0.0 {
            return Err(Error::Argument(format!("omega_m must be > 0, got {}", self.omega_m)));
        }
        if self.g_ratio < 0.0 {
            return Err(Error::Argument(format!("g_ratio must be >= 0, got {}", self.g_ratio)));
        }
        if self.drive_amp < 0.0 {
            return Err(Error::Argument(format!(
                "drive amplitude must be >= 0, got {}",
                self.drive_amp
            )));
        }
        if self.omega_p < 0.0 {
            return Err(Error::Argument(format!("omega_p must be >= 0, got {}", self.omega_p)));
        }
        Ok(())
    }

    /// Coupling rate G₀ in rad/s.
    pub fn g0(&self) -> f64 {
        self.g_ratio * self.omega_m
    }

    /// Detuning Δ = ω_p − ω_c.
    pub fn detuning(&self) -> f64 {
        self.omega_p - self.omega_c
    }

    /// Mechanical period 2π/ω_m.
    pub fn mechanical_period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_m
    }

    /// Detuning period T_Δ = 2π/|Δ|; infinite on resonance.
    pub fn detuning_period(&self) -> f64 {
        std::f64::consts::TAU / self.detuning().abs()
    }

    /// Fastest frequency appearing in the driven dynamics.
    pub fn fastest_frequency(&self) -> f64 {
        let mut w = self.omega_c.max(self.omega_m);
        if self.drive_amp != 0.0 {
            w = w.max(self.omega_c + self.omega_p);
        }
        w
    }

    pub fn with_drive(mut self, drive_amp: f64, omega_p: f64) -> Self {
        self.drive_amp = drive_amp;
        self.omega_p = omega_p;
        self
    }

    pub fn with_alpha(mut self, alpha0: C64) -> Self {
        self.alpha0 = alpha0;
        self
    }

    pub fn with_g_ratio(mut self, g_ratio: f64) -> Self {
        self.g_ratio = g_ratio;
        self
    }
}
