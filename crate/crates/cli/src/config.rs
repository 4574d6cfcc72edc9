//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Frequencies (`omega_m`,
//! `omega_p`, `drive_amp`) may carry a `wc` suffix meaning "times omega_c",
//! e.g. `omega_p = 0.8wc`. A `preset` key (or `--preset`) expands to a full
//! configuration first; explicit keys then override it for every run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use optomech::fock::{poisson_cutoff, FockDims};
use optomech::presets::{Mode, Preset};
use optomech::wigner::GridSpec;
use optomech::SystemParams;

/// Fields required when no preset is given.
pub const REQUIRED: [&str; 7] = ["omega_c", "omega_m", "g_ratio", "alpha", "gamma", "t_end", "n_samples"];

const KNOWN: [&str; 25] = [
    "preset",
    "omega_c",
    "omega_m",
    "omega_p",
    "drive_amp",
    "g_ratio",
    "alpha",
    "alpha_im",
    "gamma",
    "gamma_im",
    "alpha_list",
    "t_end",
    "n_samples",
    "modes",
    "filter",
    "filter_window",
    "field_dim",
    "mirror_dim",
    "k_max",
    "dt",
    "output_dir",
    "snapshot_times",
    "grid_half_width",
    "grid_points",
    "wide",
];

/// Default `k_max` for the mirror recommendation.
pub const DEFAULT_K_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, field: &str, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), field: Some(field.to_string()), message: message.into() }
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError { line: None, field: Some(field.to_string()), message: message.into() }
    }

    fn general(message: impl Into<String>) -> Self {
        ConfigError { line: None, field: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.field {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Raw parsed entries, with the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError { line: Some(line), field: None, message: format!("expected `key = value`, got {content:?}") });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN.contains(&key) {
                return Err(ConfigError::at(line, key, "unknown key"));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, key, "missing value"));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line, value.to_string())) {
                return Err(ConfigError::at(line, key, format!("duplicate key (first set on line {first})")));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        match self.get(key) {
            Some((l, _)) if l > 0 => ConfigError::at(l, key, msg),
            _ => ConfigError::field(key, msg),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some((_, v)) = self.get(key) else { return Ok(None) };
        let x: f64 = v.parse().map_err(|_| self.err(key, format!("not a number: {v:?}")))?;
        if !x.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(Some(x))
    }

    /// Frequency in rad/s, accepting the `wc` suffix.
    fn frequency(&self, key: &str, omega_c: f64) -> Result<Option<f64>, ConfigError> {
        let Some((_, v)) = self.get(key) else { return Ok(None) };
        let (num, scale) = match v.strip_suffix("wc") {
            Some(n) => (n.trim(), omega_c),
            None => (v, 1.0),
        };
        let x: f64 = num.parse().map_err(|_| self.err(key, format!("not a frequency: {v:?}")))?;
        if !x.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(Some(x * scale))
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some((_, v)) = self.get(key) else { return Ok(None) };
        v.parse().map(Some).map_err(|_| self.err(key, format!("not a non-negative integer: {v:?}")))
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some((_, v)) = self.get(key) else { return Ok(None) };
        match v {
            "true" | "yes" | "1" => Ok(Some(true)),
            "false" | "no" | "0" => Ok(Some(false)),
            _ => Err(self.err(key, format!("expected true or false, got {v:?}"))),
        }
    }

    fn list<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<Vec<T>>, ConfigError> {
        let Some((_, v)) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| f(s.trim()).ok_or_else(|| self.err(key, format!("bad list entry {:?}", s.trim()))))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

/// Fully expanded configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub runs: Vec<(String, SystemParams)>,
    /// Explicit dimensions for every run; `None` means per-run recommendation.
    pub dims: Option<FockDims>,
    pub field_dim: Option<usize>,
    pub k_max: Option<usize>,
    pub t_end: f64,
    pub n_samples: usize,
    pub modes: Vec<Mode>,
    pub filter: bool,
    pub filter_window: Option<f64>,
    pub dt: Option<f64>,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    /// Fixed Wigner grid; `None` sizes grids from the states.
    pub grid: Option<GridSpec>,
    pub wide: bool,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub filter: bool,
    pub dims: Option<(usize, usize)>,
    pub modes: Option<Vec<Mode>>,
}

impl RunConfig {
    pub fn from_text(text: &str, ov: &Overrides) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::parse(text)?;
        if let Some(p) = &ov.preset {
            raw.set("preset", p.clone());
        }
        Self::from_raw(&raw, ov)
    }

    pub fn from_raw(raw: &RawConfig, ov: &Overrides) -> Result<Self, ConfigError> {
        let preset = match raw.get("preset") {
            Some((_, name)) => Some(name.parse::<Preset>().map_err(|e| raw.err("preset", strip_prefix(&e)))?),
            None => None,
        };
        if preset.is_none() {
            let missing: Vec<&str> = REQUIRED
                .iter()
                .copied()
                .filter(|k| !raw.has(k) && !(*k == "alpha" && raw.has("alpha_list")))
                .collect();
            if !missing.is_empty() {
                return Err(ConfigError::general(format!(
                    "missing required field{} {} (or set `preset`)",
                    if missing.len() > 1 { "s" } else { "" },
                    missing.join(", ")
                )));
            }
        }
        let expanded = preset.map(|p| p.expand());

        let mut runs = match &expanded {
            Some(e) => e.runs.clone(),
            None => vec![("run".to_string(), SystemParams::undriven(0.0, 0.0, 0.0, C64::default(), C64::default()))],
        };
        for (_, p) in runs.iter_mut() {
            apply_params(raw, p)?;
        }
        if let Some(alphas) = raw.list("alpha_list", |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))? {
            if alphas.is_empty() {
                return Err(raw.err("alpha_list", "empty list"));
            }
            let template = runs[0].1;
            runs = alphas.iter().map(|a| (format!("alpha={a:.6}"), template.with_alpha(C64::new(*a, 0.0)))).collect();
        }
        for (label, p) in &runs {
            p.validate().map_err(|e| param_error(raw, label, &e.to_string()))?;
        }

        let t_end = raw.float("t_end")?.or(expanded.as_ref().map(|e| e.t_end)).unwrap_or_default();
        if !(t_end > 0.0) {
            return Err(raw.err("t_end", format!("must be > 0, got {t_end}")));
        }
        let n_samples = raw.usize("n_samples")?.or(expanded.as_ref().map(|e| e.n_samples)).unwrap_or_default();
        if n_samples < 2 {
            return Err(raw.err("n_samples", format!("must be at least 2, got {n_samples}")));
        }
        let modes = match (&ov.modes, raw.list("modes", |s| s.parse::<Mode>().ok())?) {
            (Some(m), _) => m.clone(),
            (None, Some(m)) => m,
            (None, None) => expanded.as_ref().map(|e| e.modes.clone()).unwrap_or_else(|| default_modes(&runs)),
        };
        let mut modes = modes;
        modes.sort();
        modes.dedup();
        if modes.is_empty() {
            return Err(raw.err("modes", "no modes selected"));
        }

        let filter = ov.filter || raw.bool("filter")?.or(expanded.as_ref().map(|e| e.filter)).unwrap_or(false);
        let filter_window = raw.float("filter_window")?;
        if let Some(w) = filter_window {
            if !(w > 0.0) {
                return Err(raw.err("filter_window", "must be > 0"));
            }
        }
        if filter && filter_window.is_none() {
            if let Some((label, _)) = runs.iter().find(|(_, p)| p.drive_amp > 0.0 && p.detuning() == 0.0) {
                return Err(raw.err(
                    "filter_window",
                    format!("run {label} is on resonance, so the default window 2π/|ω_p − ω_c| is undefined; set filter_window"),
                ));
            }
        }

        let dims = match ov.dims {
            Some((f, m)) => Some(FockDims::new(f, m).map_err(|e| ConfigError::field("dims", strip_prefix(&e)))?),
            None => match (raw.usize("field_dim")?, raw.usize("mirror_dim")?) {
                (Some(f), Some(m)) => Some(FockDims::new(f, m).map_err(|e| raw.err("mirror_dim", strip_prefix(&e)))?),
                _ => None,
            },
        };
        let field_dim = raw.usize("field_dim")?.or(expanded.as_ref().and_then(|e| e.field_dim));
        let k_max = raw.usize("k_max")?;
        if raw.has("mirror_dim") && !raw.has("field_dim") && ov.dims.is_none() {
            return Err(raw.err("mirror_dim", "set together with field_dim"));
        }

        let dt = raw.float("dt")?;
        if let Some(dt) = dt {
            if !(dt > 0.0) {
                return Err(raw.err("dt", "must be > 0"));
            }
        }

        let output_dir = match (&ov.output_dir, raw.get("output_dir")) {
            (Some(d), _) => d.clone(),
            (None, Some((_, d))) => PathBuf::from(d),
            (None, None) => PathBuf::from("out"),
        };

        let snapshot_times = match raw.list("snapshot_times", |s| s.parse::<f64>().ok().filter(|x| *x >= 0.0))? {
            Some(mut t) => {
                t.sort_by(|a, b| a.total_cmp(b));
                t.dedup();
                t
            }
            None => match &expanded {
                Some(e) if !e.snapshot_times.is_empty() => e.snapshot_times.clone(),
                _ => {
                    let wm = runs[0].1.omega_m;
                    vec![0.0, PI / wm, 2.0 * PI / wm]
                }
            },
        };

        let grid = match (raw.float("grid_half_width")?, raw.usize("grid_points")?) {
            (None, None) => None,
            (h, n) => {
                let g = GridSpec::square(h.unwrap_or(6.0), n.unwrap_or(121));
                g.validate().map_err(|e| raw.err("grid_points", strip_prefix(&e)))?;
                Some(g)
            }
        };
        let wide = raw.bool("wide")?.unwrap_or(false);

        Ok(RunConfig {
            preset,
            runs,
            dims,
            field_dim,
            k_max,
            t_end,
            n_samples,
            modes,
            filter,
            filter_window,
            dt,
            output_dir,
            snapshot_times,
            grid,
            wide,
        })
    }

    /// Dimensions used for one run.
    pub fn dims_for(&self, p: &SystemParams) -> Result<FockDims, optomech::Error> {
        if let Some(d) = self.dims {
            return Ok(d);
        }
        let mu = field_amplitude_bound(p, self.t_end).powi(2);
        let field_dim = self.field_dim.unwrap_or_else(|| poisson_cutoff(mu, 1e-10).max(4));
        let k_max = self.k_max.unwrap_or_else(|| DEFAULT_K_MAX.max((mu + 4.0 * mu.sqrt()).ceil() as usize));
        FockDims::recommended(p, field_dim, k_max)
    }

    pub fn has(&self, m: Mode) -> bool {
        self.modes.contains(&m)
    }
}

/// Upper estimate of `|α + β₁|` over `[0, t_end]`: the rotating-wave bound
/// `Ω min(t/2, 1/|Δ|)` plus the counter-rotating amplitude `Ω/(ω_c + ω_p)`.
pub fn field_amplitude_bound(p: &SystemParams, t_end: f64) -> f64 {
    if p.drive_amp == 0.0 {
        return p.alpha0.norm();
    }
    let d = p.detuning().abs();
    let rwa = if d > 0.0 { (0.5 * t_end).min(1.0 / d) } else { 0.5 * t_end };
    p.alpha0.norm() + p.drive_amp * (rwa + 1.0 / (p.omega_c + p.omega_p))
}

fn default_modes(runs: &[(String, SystemParams)]) -> Vec<Mode> {
    if runs.iter().all(|(_, p)| p.drive_amp == 0.0) {
        vec![Mode::Undriven]
    } else {
        vec![Mode::DrivenAnalytic, Mode::DrivenNumeric, Mode::Compare]
    }
}

fn apply_params(raw: &RawConfig, p: &mut SystemParams) -> Result<(), ConfigError> {
    if let Some(wc) = raw.float("omega_c")? {
        p.omega_c = wc;
    }
    if let Some(wc) = raw.get("omega_c").map(|(_, v)| v) {
        if wc.ends_with("wc") {
            return Err(raw.err("omega_c", "omega_c must be absolute (rad/s)"));
        }
    }
    let wc = p.omega_c;
    if let Some(v) = raw.frequency("omega_m", wc)? {
        p.omega_m = v;
    }
    if let Some(v) = raw.frequency("omega_p", wc)? {
        p.omega_p = v;
    }
    if let Some(v) = raw.frequency("drive_amp", wc)? {
        p.drive_amp = v;
    }
    if let Some(v) = raw.float("g_ratio")? {
        p.g_ratio = v;
    }
    if let Some(v) = raw.float("alpha")? {
        p.alpha0.re = v;
    }
    if let Some(v) = raw.float("alpha_im")? {
        p.alpha0.im = v;
    }
    if let Some(v) = raw.float("gamma")? {
        p.gamma0.re = v;
    }
    if let Some(v) = raw.float("gamma_im")? {
        p.gamma0.im = v;
    }
    Ok(())
}

/// Maps a parameter validation message back onto the key it names.
fn param_error(raw: &RawConfig, label: &str, msg: &str) -> ConfigError {
    let key = ["omega_c", "omega_m", "omega_p", "g_ratio"]
        .into_iter()
        .find(|k| msg.contains(k))
        .or_else(|| msg.contains("drive amplitude").then_some("drive_amp"));
    let text = format!("{} (run {label})", msg.trim_start_matches("invalid argument: "));
    match key {
        Some(k) => raw.err(k, text),
        None => ConfigError::general(text),
    }
}

fn strip_prefix(e: &optomech::Error) -> String {
    e.to_string().trim_start_matches("invalid argument: ").to_string()
}
