use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use optomech::driven::{
    beta1_rwa, evolve_driven, integrate_betas, rwa_photon_avg, AnalyticObservables, BetaCoefficients, DriveProfile,
};
use optomech::fock::FockDims;
use optomech::oracle::{evolve_numeric_with, IntegratorConfig, NumericObservables};
use optomech::postproc::{compare, filter_fast, write_series_csv, write_wide_csv, ObservableSeries, Provenance};
use optomech::presets::{time_grid, Mode};
use optomech::undriven::{evolve_undriven, phonon_avg_closed_form};
use optomech::wigner::{snapshot_set, GridChoice, StateSource, WignerGrid};
use optomech::SystemParams;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: optomech::Error,
    },
}

impl RunError {
    /// Process exit status: 1 configuration, 2 numerical failure,
    /// 3 truncation inadequacy.
    pub fn exit_code(&self) -> i32 {
        use optomech::Error as E;
        match self {
            RunError::Config(_) => 1,
            RunError::Core { source, .. } => match source {
                E::Truncation { .. } => 3,
                E::Io(_) | E::Argument(_) | E::InvalidDimension { .. } => 1,
                E::Domain(_) | E::Integration(_) | E::Undefined(_) | E::Consistency(_) => 2,
            },
        }
    }
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError>;
}

impl<T> Context<T> for optomech::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|source| RunError::Core { context: what(), source })
    }
}

impl<T> Context<T> for io::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|e| RunError::Core { context: what(), source: e.into() })
    }
}

/// Deterministic `key = value` record of a run.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Writes `path` through a sibling temporary file and a rename.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<(), RunError>
where
    F: FnOnce(&mut BufWriter<File>) -> optomech::Result<()>,
{
    let ctx = || format!("writing {}", path.display());
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).context(ctx)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).context(ctx)?;
    let mut w = BufWriter::new(file);
    body(&mut w).context(ctx)?;
    w.flush().context(ctx)?;
    drop(w);
    fs::rename(&tmp, path).context(ctx)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}

/// Everything the runner writes for one config.
pub struct Runner<'a> {
    cfg: &'a RunConfig,
    manifest: Manifest,
}

struct RunState {
    label: String,
    p: SystemParams,
    dims: FockDims,
    dir: PathBuf,
    times: Vec<f64>,
    analytic: Option<Vec<ObservableSeries>>,
    numeric: Option<Vec<ObservableSeries>>,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Runner { cfg, manifest: config_manifest(cfg) }
    }

    /// Executes every selected mode for every run, then writes the manifest.
    pub fn run(mut self) -> Result<Manifest, RunError> {
        let cfg = self.cfg;
        fs::create_dir_all(&cfg.output_dir).context(|| format!("creating {}", cfg.output_dir.display()))?;
        for (label, p) in &cfg.runs {
            let dims = cfg.dims_for(p).context(|| format!("run {label}: choosing dimensions"))?;
            let key = |k: &str| format!("run.{label}.{k}");
            self.manifest.set(key("field_dim"), dims.field_dim());
            self.manifest.set(key("mirror_dim"), dims.mirror_dim());
            let mut st = RunState {
                label: label.clone(),
                p: *p,
                dims,
                dir: cfg.output_dir.join(label),
                times: time_grid(cfg.t_end, cfg.n_samples),
                analytic: None,
                numeric: None,
            };
            for &mode in &cfg.modes {
                log::info!("run {label}: {mode} ({}x{})", dims.field_dim(), dims.mirror_dim());
                match mode {
                    Mode::Undriven => self.undriven(&st)?,
                    Mode::DrivenAnalytic => self.driven_analytic(&mut st)?,
                    Mode::DrivenNumeric => self.driven_numeric(&mut st)?,
                    Mode::Wigner => self.wigner(&st)?,
                    Mode::Compare => self.compare(&mut st)?,
                }
            }
        }
        let path = cfg.output_dir.join("manifest.txt");
        let manifest = self.manifest;
        write_atomic(&path, |w| Ok(manifest.write(w)?))?;
        Ok(manifest)
    }

    fn write_series(&self, dir: &Path, series: &[ObservableSeries]) -> Result<(), RunError> {
        if self.cfg.wide {
            return write_atomic(&dir.join("series.csv"), |w| write_wide_csv(w, series));
        }
        for s in series {
            let name = match s.provenance() {
                Provenance::Filtered => format!("{}.filtered.csv", s.label()),
                _ => format!("{}.csv", s.label()),
            };
            write_atomic(&dir.join(name), |w| write_series_csv(w, s))?;
        }
        Ok(())
    }

    fn filter_window(&self, p: &SystemParams) -> f64 {
        self.cfg.filter_window.unwrap_or_else(|| p.detuning_period())
    }

    /// Filtered copies; series with undefined points are skipped and noted.
    fn filtered(&mut self, st: &RunState, series: &[ObservableSeries]) -> Result<Vec<ObservableSeries>, RunError> {
        let w = self.filter_window(&st.p);
        let mut out = Vec::with_capacity(series.len());
        for s in series {
            match filter_fast(s, w) {
                Ok(f) => out.push(f),
                Err(e @ optomech::Error::Undefined(_)) => {
                    log::warn!("run {}: not filtering {}: {e}", st.label, s.label());
                    self.manifest.set(format!("run.{}.unfiltered.{}", st.label, s.label()), "undefined points");
                }
                Err(e) => return Err(e).context(|| format!("run {}: filtering {}", st.label, s.label())),
            }
        }
        Ok(out)
    }

    fn undriven(&mut self, st: &RunState) -> Result<(), RunError> {
        let p = st.p.with_drive(0.0, st.p.omega_p);
        let ctx = || format!("run {}: undriven evolution", st.label);
        let (mut n_state, mut n_closed, mut photons) = (Vec::new(), Vec::new(), Vec::new());
        for &t in &st.times {
            let s = evolve_undriven(&p, t, st.dims).context(ctx)?;
            photons.push(s.field_populations().iter().enumerate().map(|(k, w)| k as f64 * w).sum::<f64>());
            n_state.push(s.mirror_populations().iter().enumerate().map(|(k, w)| k as f64 * w).sum::<f64>());
            n_closed.push(phonon_avg_closed_form(&p, t));
        }
        let mk = |y: Vec<f64>, l: &str| ObservableSeries::new(st.times.clone(), y, l, Provenance::Analytic).context(ctx);
        let dev = max_abs(n_state.iter().zip(&n_closed).map(|(a, b)| (a - b) / b.abs().max(1e-300)));
        let series = vec![mk(n_state, "phonons")?, mk(n_closed, "phonons_closed_form")?, mk(photons, "photons")?];
        self.manifest.set(format!("run.{}.undriven.max_rel_phonon_deviation", st.label), fmt_f(dev));
        self.write_series(&st.dir.join("undriven"), &series)
    }

    fn driven_analytic(&mut self, st: &mut RunState) -> Result<(), RunError> {
        let p = st.p;
        let label = st.label.clone();
        let ctx = |what: &str| format!("run {label}: {what}");
        let betas = integrate_betas(&p, &st.times, DriveProfile::FullNumericBeta).context(|| ctx("β integration"))?;
        let phi1 = integrate_betas(&p, &st.times, DriveProfile::PhiToOneClosedForm).context(|| ctx("β integration"))?;
        write_atomic(&st.dir.join("driven-analytic").join("betas.csv"), |w| write_betas(w, &p, &betas, &phi1))?;

        let obs = AnalyticObservables::evaluate(&p, &betas).context(|| ctx("analytic observables"))?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut prenorm = Vec::with_capacity(betas.len());
        for b in &betas {
            let n = evolve_driven(&p, b.t, b, st.dims).context(|| ctx(&format!("analytic state at t = {:e}", b.t)))?.prenorm_norm;
            lo = lo.min(n);
            hi = hi.max(n);
            prenorm.push(n);
        }
        let rwa: Vec<f64> = st.times.iter().map(|&t| rwa_photon_avg(&p, t)).collect();
        let key = |k: &str| format!("run.{label}.analytic.{k}");
        self.manifest.set(key("max_unitarity_defect"), fmt_f(max_abs(obs.unitarity_defect.iter().copied())));
        self.manifest.set(key("max_mandel_field_deviation"), fmt_f(max_abs(obs.mandel_field.iter().map(|q| q - 1.0))));
        self.manifest.set(key("prenorm_norm_min"), fmt_f(lo));
        self.manifest.set(key("prenorm_norm_max"), fmt_f(hi));

        let t = obs.t.clone();
        let mut series: Vec<ObservableSeries> = [
            ("photons", obs.photons),
            ("phonons", obs.phonons),
            ("mandel_field", obs.mandel_field),
            ("mandel_mirror", obs.mandel_mirror),
            ("entropy_mirror", obs.entropy_mirror),
            ("phonons_sq", obs.phonons_sq),
            ("unitarity_defect", obs.unitarity_defect),
            ("photons_rwa", rwa),
            ("prenorm_norm", prenorm),
        ]
        .into_iter()
        .map(|(l, y)| ObservableSeries::new(t.clone(), y, l, Provenance::Analytic))
        .collect::<optomech::Result<_>>()
        .context(|| ctx("analytic series"))?;
        st.analytic = Some(series[..5].to_vec());
        if self.cfg.filter {
            let f = self.filtered(st, &series[..5])?;
            series.extend(f);
        }
        self.write_series(&st.dir.join("driven-analytic"), &series)
    }

    fn integrator(&self, p: &SystemParams) -> IntegratorConfig {
        let c = IntegratorConfig::for_params(p);
        match self.cfg.dt {
            Some(dt) => c.with_dt(dt),
            None => c,
        }
    }

    fn driven_numeric(&mut self, st: &mut RunState) -> Result<(), RunError> {
        let p = st.p;
        let label = st.label.clone();
        let icfg = self.integrator(&p);
        preflight(&p, st.dims, &st.times).context(|| format!("run {label}: truncation preflight"))?;
        let mut obs = NumericObservables::default();
        let diag = evolve_numeric_with(&p, st.dims, &icfg, &st.times, |t, s| {
            obs.push(t, s);
            Ok(())
        })
        .context(|| format!("run {label}: numeric evolution"))?;
        let key = |k: &str| format!("run.{label}.numeric.{k}");
        self.manifest.set(key("dt"), fmt_f(icfg.dt));
        self.manifest.set(key("method"), format!("{:?}", icfg.method).to_lowercase());
        self.manifest.set(key("steps"), diag.steps);
        self.manifest.set(key("norm_check_every"), icfg.norm_check_every);
        self.manifest.set(key("norm_tolerance"), fmt_f(icfg.norm_tolerance));
        self.manifest.set(key("max_norm_drift"), fmt_f(diag.max_norm_drift));
        self.manifest.set(key("max_step_drift"), fmt_f(diag.max_step_drift));
        self.manifest.set(key("edge_population_field"), fmt_f(diag.max_edge_population.0));
        self.manifest.set(key("edge_population_mirror"), fmt_f(diag.max_edge_population.1));
        if let Some((f, m)) = diag.suggested_dims(st.dims) {
            self.manifest.set(key("suggested_dims"), format!("{f},{m}"));
        }
        let mut series = obs.series().context(|| format!("run {label}: numeric series"))?;
        st.numeric = Some(series.clone());
        if self.cfg.filter {
            let f = self.filtered(st, &series)?;
            series.extend(f);
        }
        self.write_series(&st.dir.join("driven-numeric"), &series)
    }

    fn compare(&mut self, st: &mut RunState) -> Result<(), RunError> {
        if st.analytic.is_none() {
            self.driven_analytic(st)?;
        }
        if st.numeric.is_none() {
            self.driven_numeric(st)?;
        }
        let (an, nu) = (st.analytic.clone().unwrap_or_default(), st.numeric.clone().unwrap_or_default());
        let mut rows = Vec::new();
        for a in &an {
            let Some(n) = nu.iter().find(|n| n.label() == a.label()) else { continue };
            let raw = match compare(a, n) {
                Err(optomech::Error::Undefined(_)) => continue,
                r => r.context(|| format!("run {}: comparing {}", st.label, a.label()))?,
            };
            rows.push((a.label().to_string(), "raw", raw));
            if self.cfg.filter {
                let f = self.filtered(st, &[a.clone(), n.clone()])?;
                if let [fa, fn_] = &f[..] {
                    let c = compare(fa, fn_).context(|| format!("run {}: comparing {}", st.label, a.label()))?;
                    rows.push((a.label().to_string(), "filtered", c));
                }
            }
        }
        for (label, kind, c) in &rows {
            self.manifest.set(format!("run.{}.compare.{label}.{kind}.relative_l2", st.label), fmt_f(c.relative_l2));
        }
        write_atomic(&st.dir.join("compare.csv"), |w| {
            writeln!(w, "observable,kind,rmse,max_abs,relative_l2,n_points")?;
            for (label, kind, c) in &rows {
                writeln!(
                    w,
                    "{label},{kind},{},{},{},{}",
                    fmt_f(c.rmse),
                    fmt_f(c.max_abs),
                    fmt_f(c.relative_l2),
                    c.n_points
                )?;
            }
            Ok(())
        })
    }

    fn wigner(&mut self, st: &RunState) -> Result<(), RunError> {
        let times = &self.cfg.snapshot_times;
        let grids = match self.cfg.grid {
            Some(g) => GridChoice::Fixed(g),
            None => GridChoice::Covering,
        };
        let dir = st.dir.join("wigner");
        let mut summary = Vec::new();
        for (source, name) in [(StateSource::AnalyticState, "analytic"), (StateSource::NumericState, "numeric")] {
            let snaps = snapshot_set(&st.p, st.dims, times, source, grids)
                .context(|| format!("run {}: {name} Wigner snapshots", st.label))?;
            for (i, s) in snaps.iter().enumerate() {
                for (sub, g) in [("field", &s.field), ("mirror", &s.mirror)] {
                    let stem = dir.join(name).join(format!("{sub}_{i}"));
                    write_grid(&stem, g)?;
                    summary.push((name, sub, i, s.t, g.clone()));
                }
            }
        }
        write_atomic(&dir.join("summary.csv"), |w| {
            writeln!(w, "source,subsystem,index,t,integral,min,max,purity,mean_q,mean_p,var_q,var_p,boundary_max")?;
            for (src, sub, i, t, g) in &summary {
                let (mq, mp, vq, vp) = g.moments();
                let v = [*t, g.integral(), g.min(), g.max(), g.purity(), mq, mp, vq, vp, g.boundary_max()];
                let cols: Vec<String> = v.iter().map(|x| fmt_f(*x)).collect();
                writeln!(w, "{src},{sub},{i},{}", cols.join(","))?;
            }
            Ok(())
        })?;
        for (src, sub, i, _, g) in &summary {
            self.manifest.set(format!("run.{}.wigner.{src}.{sub}_{i}.integral", st.label), fmt_f(g.integral()));
            self.manifest.set(format!("run.{}.wigner.{src}.{sub}_{i}.min", st.label), fmt_f(g.min()));
        }
        Ok(())
    }
}

fn write_grid(stem: &Path, g: &WignerGrid) -> Result<(), RunError> {
    let with = |ext: &str| stem.with_extension(ext);
    write_atomic(&with("csv"), |w| g.write_csv(w))?;
    write_atomic(&with("matrix"), |w| g.write_matrix(w))?;
    write_atomic(&with("pgm"), |w| g.write_pgm(w))
}

fn write_betas<W: Write>(
    w: &mut W,
    p: &SystemParams,
    full: &[BetaCoefficients],
    phi1: &[BetaCoefficients],
) -> optomech::Result<()> {
    writeln!(
        w,
        "t,b1_num_re,b1_num_im,b1_phi1_re,b1_phi1_im,b1_rwa_re,b1_rwa_im,b2_re,b2_im,b3_re,b3_im,unitarity_defect"
    )?;
    for (b, f) in full.iter().zip(phi1) {
        let r = beta1_rwa(p, b.t);
        let v = [
            b.t,
            b.b1.re,
            b.b1.im,
            f.b1.re,
            f.b1.im,
            r.re,
            r.im,
            b.b2.re,
            b.b2.im,
            b.b3.re,
            b.b3.im,
            b.unitarity_defect(p.alpha0),
        ];
        let cols: Vec<String> = v.iter().map(|x| fmt_f(*x)).collect();
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

/// Checks that the analytic state fits in `dims` at every output time, which
/// catches an inadequate cutoff before the expensive integration starts.
pub fn preflight(p: &SystemParams, dims: FockDims, times: &[f64]) -> optomech::Result<()> {
    let betas = integrate_betas(p, times, DriveProfile::FullNumericBeta)?;
    for b in &betas {
        evolve_driven(p, b.t, b, dims)?;
    }
    Ok(())
}

/// Fully expanded configuration as manifest entries.
pub fn config_manifest(cfg: &RunConfig) -> Manifest {
    let mut m = Manifest::default();
    m.set("version", env!("CARGO_PKG_VERSION"));
    if let Some(p) = cfg.preset {
        m.set("preset", p);
    }
    m.set("t_end", fmt_f(cfg.t_end));
    m.set("n_samples", cfg.n_samples);
    m.set("modes", cfg.modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(","));
    m.set("filter", cfg.filter);
    if let Some(w) = cfg.filter_window {
        m.set("filter_window", fmt_f(w));
    }
    if let Some(dt) = cfg.dt {
        m.set("dt", fmt_f(dt));
    }
    m.set("wide", cfg.wide);
    m.set("snapshot_times", cfg.snapshot_times.iter().map(|t| fmt_f(*t)).collect::<Vec<_>>().join(","));
    if let Some(g) = cfg.grid {
        m.set("grid", format!("{},{},{},{},{},{}", g.q_min, g.q_max, g.p_min, g.p_max, g.nq, g.np));
    }
    for (label, p) in &cfg.runs {
        let key = |k: &str| format!("run.{label}.{k}");
        m.set(key("omega_c"), fmt_f(p.omega_c));
        m.set(key("omega_m"), fmt_f(p.omega_m));
        m.set(key("omega_p"), fmt_f(p.omega_p));
        m.set(key("drive_amp"), fmt_f(p.drive_amp));
        m.set(key("g_ratio"), fmt_f(p.g_ratio));
        m.set(key("alpha"), format!("{},{}", fmt_f(p.alpha0.re), fmt_f(p.alpha0.im)));
        m.set(key("gamma"), format!("{},{}", fmt_f(p.gamma0.re), fmt_f(p.gamma0.im)));
        if cfg.filter {
            let w = cfg.filter_window.unwrap_or_else(|| p.detuning_period());
            m.set(key("filter_window"), fmt_f(w));
        }
    }
    m
}

/// Text report of what a config would run.
pub fn validate_report(cfg: &RunConfig) -> Result<String, RunError> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "config ok: {} run(s), modes {}", cfg.runs.len(), cfg.modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(","));
    for (label, p) in &cfg.runs {
        let dims = cfg.dims_for(p).context(|| format!("run {label}: choosing dimensions"))?;
        let joint = dims.joint_dim();
        // state, four stages and two scratch vectors of complex doubles
        let mem = joint as f64 * 16.0 * 7.0;
        let _ = writeln!(out, "run {label}: field_dim {} mirror_dim {} (joint {joint})", dims.field_dim(), dims.mirror_dim());
        if cfg.has(Mode::DrivenNumeric) || cfg.has(Mode::Compare) || cfg.has(Mode::Wigner) {
            let icfg = IntegratorConfig::for_params(p);
            let icfg = cfg.dt.map_or(icfg, |dt| icfg.with_dt(dt));
            icfg.validate(p).context(|| format!("run {label}: integrator"))?;
            let steps = (cfg.t_end / icfg.dt).ceil();
            let _ = writeln!(out, "  numeric: dt {:.3e} s, about {steps:.0} steps, about {:.1} MiB", icfg.dt, mem / 1048576.0);
        }
    }
    Ok(out)
}
