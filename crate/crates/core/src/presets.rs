//! Named parameter sets for the standard runs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::SystemParams;

/// Cavity frequency shared by all presets.
pub const OMEGA_C: f64 = 1e9;
/// Weak and strong coupling ratios.
pub const G_WEAK: f64 = 0.033;
pub const G_STRONG: f64 = 0.33;
/// Time window of the strong-coupling runs.
pub const STRONG_T_END: f64 = 4e-6;
/// Field cutoff of the strong-coupling runs.
pub const STRONG_FIELD_DIM: usize = 30;

/// What a run computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Undriven,
    DrivenAnalytic,
    DrivenNumeric,
    Wigner,
    Compare,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Undriven, Mode::DrivenAnalytic, Mode::DrivenNumeric, Mode::Wigner, Mode::Compare];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Undriven => "undriven",
            Mode::DrivenAnalytic => "driven-analytic",
            Mode::DrivenNumeric => "driven-numeric",
            Mode::Wigner => "wigner",
            Mode::Compare => "compare",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown mode {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Undriven phonon number for several field amplitudes.
    Fig2,
    /// Three ways of computing β₁, weak coupling, red detuning.
    Fig3,
    /// Weak-coupling photon number, red and blue detuning.
    Fig4,
    /// Weak-coupling phonon number, red and blue detuning, with filtering.
    Fig5_6,
    /// Strong-coupling photons and phonons, red and blue detuning.
    Fig7_8,
    /// Mirror Mandel parameter, strong coupling.
    Fig9,
    /// Mirror linear entropy, strong coupling.
    Fig10,
    /// Field and mirror Wigner functions at `{0, π/ω_m, 2π/ω_m}`.
    WignerSnapshots,
}

/// Fully expanded run description.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetConfig {
    pub runs: Vec<(String, SystemParams)>,
    pub t_end: f64,
    pub n_samples: usize,
    pub modes: Vec<Mode>,
    pub filter: bool,
    /// Field cutoff; `None` lets the runner choose from the amplitudes.
    pub field_dim: Option<usize>,
    /// Snapshot times for the Wigner mode.
    pub snapshot_times: Vec<f64>,
}

/// Weak-coupling driven parameters with `ω_p = ratio · ω_c`.
pub fn weak(omega_p_ratio: f64) -> SystemParams {
    SystemParams {
        omega_c: OMEGA_C,
        omega_m: OMEGA_C / 100.0,
        omega_p: omega_p_ratio * OMEGA_C,
        drive_amp: PI / 20.0 * OMEGA_C,
        g_ratio: G_WEAK,
        alpha0: C64::new(2.0, 0.0),
        gamma0: C64::new(2.0, 0.0),
    }
}

/// Strong-coupling driven parameters with `ω_p = ratio · ω_c`.
pub fn strong(omega_p_ratio: f64) -> SystemParams {
    weak(omega_p_ratio).with_g_ratio(G_STRONG)
}

/// `n` evenly spaced times from 0 to `t_end` inclusive.
pub fn time_grid(t_end: f64, n: usize) -> Vec<f64> {
    let last = (n.max(2) - 1) as f64;
    (0..n).map(|i| t_end * i as f64 / last).collect()
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5_6,
        Preset::Fig7_8,
        Preset::Fig9,
        Preset::Fig10,
        Preset::WignerSnapshots,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5_6 => "fig5_6",
            Preset::Fig7_8 => "fig7_8",
            Preset::Fig9 => "fig9",
            Preset::Fig10 => "fig10",
            Preset::WignerSnapshots => "wigner_snapshots",
        }
    }

    pub fn expand(self) -> PresetConfig {
        let red_blue = |f: fn(f64) -> SystemParams| vec![("red".to_string(), f(0.8)), ("blue".to_string(), f(1.2))];
        let t_delta = weak(0.8).detuning_period();
        let t_m = weak(0.8).mechanical_period();
        let base = PresetConfig {
            runs: Vec::new(),
            t_end: STRONG_T_END,
            n_samples: 2001,
            modes: vec![Mode::DrivenAnalytic, Mode::DrivenNumeric, Mode::Compare],
            filter: false,
            field_dim: None,
            snapshot_times: Vec::new(),
        };
        match self {
            Preset::Fig2 => {
                let omega_m = 1e7;
                let runs = [0.0, 2.0, 29.8f64.sqrt(), 59.6f64.sqrt(), 8.0]
                    .into_iter()
                    .map(|a| {
                        let p = SystemParams::undriven(OMEGA_C, omega_m, G_WEAK, C64::new(a, 0.0), C64::new(2.0, 0.0));
                        (format!("alpha={a:.6}"), p)
                    })
                    .collect();
                PresetConfig {
                    runs,
                    t_end: std::f64::consts::TAU / omega_m,
                    n_samples: 200,
                    modes: vec![Mode::Undriven],
                    ..base
                }
            }
            Preset::Fig3 => PresetConfig {
                runs: vec![("red".into(), weak(0.8))],
                t_end: 4.0 * t_delta,
                n_samples: 401,
                modes: vec![Mode::DrivenAnalytic],
                ..base
            },
            Preset::Fig4 => PresetConfig { runs: red_blue(weak), t_end: 4.0 * t_delta, n_samples: 401, ..base },
            Preset::Fig5_6 => {
                PresetConfig { runs: red_blue(weak), t_end: 2.0 * t_m, n_samples: 2001, filter: true, ..base }
            }
            Preset::Fig7_8 => PresetConfig {
                runs: red_blue(strong),
                filter: true,
                field_dim: Some(STRONG_FIELD_DIM),
                ..base
            },
            Preset::Fig9 | Preset::Fig10 => {
                PresetConfig {
                    runs: vec![("red".into(), strong(0.8))],
                    filter: true,
                    field_dim: Some(STRONG_FIELD_DIM),
                    ..base
                }
            }
            Preset::WignerSnapshots => {
                let p = strong(0.8);
                PresetConfig {
                    runs: vec![("red".into(), p)],
                    t_end: 2.0 * PI / p.omega_m,
                    n_samples: 3,
                    modes: vec![Mode::Wigner],
                    field_dim: Some(STRONG_FIELD_DIM),
                    snapshot_times: vec![0.0, PI / p.omega_m, 2.0 * PI / p.omega_m],
                    ..base
                }
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::Argument(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
        })
    }
}
