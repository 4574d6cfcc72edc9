//! Brute-force Schrödinger evolution of the full driven Hamiltonian on the
//! truncated joint Fock space.
//!
//! The diagonal of `h_static` produces phases up to `ω_c · k_max` that would
//! force a tiny RK4 step in the lab frame. Instead the state is carried in the
//! frame rotating with that diagonal, `ψ = e^{−iDt} ψ_I`, where
//!
//! ```text
//! dψ_I/dt = −i e^{iDt} [V_off + Ω cos(ω_p t) h_drive] e^{−iDt} ψ_I
//! ```
//!
//! and only the coupling and drive terms set the step size. The transformation
//! is exact, so this is still a solution of the untruncated-in-time equation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{ladder_ops, normalize, tensor, Csr, FockDims, JointState, SparseOperator};
use crate::postproc::{ObservableSeries, Provenance};
use crate::SystemParams;

/// Number of top Fock levels inspected by the truncation-leak check.
pub const EDGE_LEVELS: usize = 3;
/// Edge population above which a truncation warning is emitted.
pub const EDGE_LEAK_TOL: f64 = 1e-6;
/// Minimum RK4 steps per period of the fastest frequency.
pub const MIN_STEPS_PER_PERIOD: f64 = 40.0;
/// Steps per period used by [`IntegratorConfig::for_params`]; at 40 the
/// per-step norm drift of strong-coupling runs is around 1e-9.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 80.0;

/// `H(t) = h_static + Ω cos(ω_p t) h_drive` on the joint space.
#[derive(Clone, Debug)]
pub struct HamiltonianAssembly {
    pub h_static: SparseOperator,
    pub h_drive: SparseOperator,
    pub drive_amp: f64,
    pub drive_freq: f64,
    pub dims: FockDims,
}

/// Assembles `ω_c n + ω_m N − G₀ n(b + b†)` and `(a + a†) ⊗ 1`.
pub fn assemble_hamiltonian(p: &SystemParams, dims: FockDims) -> Result<HamiltonianAssembly> {
    let f = ladder_ops(dims.field_dim())?;
    let m = ladder_ops(dims.mirror_dim())?;
    let id_f = SparseOperator::identity(dims.field_dim());
    let id_m = SparseOperator::identity(dims.mirror_dim());
    let x_m = m.lower.add(&m.raise)?;
    let x_f = f.lower.add(&f.raise)?;

    let h_static = tensor(&f.number, &id_m)
        .scale(p.omega_c.into())
        .add(&tensor(&id_f, &m.number).scale(p.omega_m.into()))?
        .sub(&tensor(&f.number, &x_m).scale(p.g0().into()))?;
    let h_drive = tensor(&x_f, &id_m);
    Ok(HamiltonianAssembly { h_static, h_drive, drive_amp: p.drive_amp, drive_freq: p.omega_p, dims })
}

impl HamiltonianAssembly {
    /// `H(t)` as a sparse operator.
    pub fn at(&self, t: f64) -> Result<SparseOperator> {
        self.h_static.add(&self.h_drive.scale((self.drive_amp * (self.drive_freq * t).cos()).into()))
    }
}

/// `⟨h_static⟩`, conserved when the drive is off.
pub fn energy(h: &HamiltonianAssembly, state: &JointState) -> f64 {
    state.expect(&h.h_static).re
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Maximum step in seconds; intervals between outputs are split evenly.
    pub dt: f64,
    pub method: Method,
    /// Steps between norm checks.
    pub norm_check_every: usize,
    /// Largest tolerated cumulative `|‖ψ‖ − 1|`.
    pub norm_tolerance: f64,
}

impl IntegratorConfig {
    /// Largest step allowed for `p`: 40 steps per period of the fastest
    /// frequency.
    pub fn max_dt(p: &SystemParams) -> f64 {
        let w = (p.omega_c + p.omega_p).max(p.omega_c).max(p.omega_m);
        std::f64::consts::TAU / (MIN_STEPS_PER_PERIOD * w)
    }

    /// Default configuration with [`DEFAULT_STEPS_PER_PERIOD`] steps per
    /// period of the fastest frequency.
    pub fn for_params(p: &SystemParams) -> Self {
        let dt = Self::max_dt(p) * MIN_STEPS_PER_PERIOD / DEFAULT_STEPS_PER_PERIOD;
        IntegratorConfig { dt, method: Method::Rk4, norm_check_every: 64, norm_tolerance: 1e-6 }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        let max = Self::max_dt(p);
        if !(self.dt > 0.0) {
            return Err(Error::Argument(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.dt > max * (1.0 + 1e-12) {
            return Err(Error::Argument(format!("dt = {:e} s exceeds the stability bound {max:e} s", self.dt)));
        }
        if self.norm_check_every == 0 {
            return Err(Error::Argument("norm_check_every must be positive".into()));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(Error::Argument("norm_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Run statistics for the manifest.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumericDiagnostics {
    pub steps: usize,
    /// Largest `|‖ψ‖ − 1|` seen before each output renormalization.
    pub max_norm_drift: f64,
    /// Largest drift per step, estimated between norm checks.
    pub max_step_drift: f64,
    /// Largest (field, mirror) population in the top [`EDGE_LEVELS`] levels.
    pub max_edge_population: (f64, f64),
}

impl NumericDiagnostics {
    /// Dimensions that would push the observed edge population below the
    /// leak tolerance, or `None` if the current ones are adequate.
    pub fn suggested_dims(&self, dims: FockDims) -> Option<(usize, usize)> {
        let (ef, em) = self.max_edge_population;
        if ef <= EDGE_LEAK_TOL && em <= EDGE_LEAK_TOL {
            return None;
        }
        let grow = |d: usize, e: f64| if e > EDGE_LEAK_TOL { d + d / 4 + EDGE_LEVELS } else { d };
        Some((grow(dims.field_dim(), ef), grow(dims.mirror_dim(), em)))
    }
}

struct Propagator {
    diag: Vec<f64>,
    v_off: Csr,
    drive: Csr,
    drive_amp: f64,
    drive_freq: f64,
}

struct Workspace {
    lab: Vec<C64>,
    tmp: Vec<C64>,
    k: [Vec<C64>; 4],
    phase_mid: Vec<C64>,
    phase_end: Vec<C64>,
}

impl Propagator {
    fn new(h: &HamiltonianAssembly) -> Self {
        let (diag, off) = h.h_static.split_diagonal();
        Propagator {
            diag: diag.iter().map(|d| d.re).collect(),
            v_off: off.to_csr(),
            drive: h.h_drive.to_csr(),
            drive_amp: h.drive_amp,
            drive_freq: h.drive_freq,
        }
    }

    fn phases(&self, t: f64, out: &mut [C64]) {
        for (o, d) in out.iter_mut().zip(&self.diag) {
            *o = C64::from_polar(1.0, -d * t);
        }
    }

    /// `out = −i P* ∘ V(t)(P ∘ y)` with `P = e^{−iDt}`.
    fn rhs(&self, t: f64, phase: &[C64], y: &[C64], lab: &mut [C64], out: &mut [C64]) {
        for ((l, p), v) in lab.iter_mut().zip(phase).zip(y) {
            *l = p * v;
        }
        self.v_off.mul_into(lab, out);
        let s = self.drive_amp * (self.drive_freq * t).cos();
        if s != 0.0 {
            self.drive.mul_add_into(s.into(), lab, out);
        }
        for (o, p) in out.iter_mut().zip(phase) {
            // −i · conj(p) · o
            let v = p.conj() * *o;
            *o = C64::new(v.im, -v.re);
        }
    }

    /// One RK4 step of size `h` from `t`, where `phase` holds `e^{−iDt}` and
    /// `w_half` holds `e^{−iDh/2}`. On return `phase` holds `e^{−iD(t+h)}`.
    fn step(&self, t: f64, h: f64, y: &mut [C64], phase: &mut [C64], w_half: &[C64], ws: &mut Workspace) {
        for ((m, p), w) in ws.phase_mid.iter_mut().zip(phase.iter()).zip(w_half) {
            *m = p * w;
        }
        for ((e, m), w) in ws.phase_end.iter_mut().zip(&ws.phase_mid).zip(w_half) {
            *e = m * w;
        }
        let [k1, k2, k3, k4] = &mut ws.k;
        self.rhs(t, phase, y, &mut ws.lab, k1);
        axpy_into(&mut ws.tmp, y, 0.5 * h, k1);
        self.rhs(t + 0.5 * h, &ws.phase_mid, &ws.tmp, &mut ws.lab, k2);
        axpy_into(&mut ws.tmp, y, 0.5 * h, k2);
        self.rhs(t + 0.5 * h, &ws.phase_mid, &ws.tmp, &mut ws.lab, k3);
        axpy_into(&mut ws.tmp, y, h, k3);
        self.rhs(t + h, &ws.phase_end, &ws.tmp, &mut ws.lab, k4);
        let c = h / 6.0;
        for i in 0..y.len() {
            y[i] += c * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        phase.copy_from_slice(&ws.phase_end);
    }
}

fn axpy_into(out: &mut [C64], y: &[C64], a: f64, k: &[C64]) {
    for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
        *o = y + a * k;
    }
}

fn sq_norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Evolves `|α⟩ ⊗ |Γ⟩` and calls `observe(t, state)` at every time of
/// `t_grid` (non-negative, strictly ascending). States are normalized on
/// output; a norm drift beyond `cfg.norm_tolerance` is an error.
pub fn evolve_numeric_with<F>(
    p: &SystemParams,
    dims: FockDims,
    cfg: &IntegratorConfig,
    t_grid: &[f64],
    mut observe: F,
) -> Result<NumericDiagnostics>
where
    F: FnMut(f64, &JointState) -> Result<()>,
{
    p.validate()?;
    cfg.validate(p)?;
    if t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Argument("output times must be non-negative".into()));
    }
    if let Some(w) = t_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Argument(format!("output times not ascending at {} -> {}", w[0], w[1])));
    }

    let h = assemble_hamiltonian(p, dims)?;
    let prop = Propagator::new(&h);
    let n = dims.joint_dim();
    let mut y = JointState::coherent_product(dims, p.alpha0, p.gamma0)?.into_amplitudes();
    let mut phase = vec![C64::new(1.0, 0.0); n];
    let mut w_half = vec![C64::default(); n];
    let mut ws = Workspace {
        lab: vec![C64::default(); n],
        tmp: vec![C64::default(); n],
        k: std::array::from_fn(|_| vec![C64::default(); n]),
        phase_mid: vec![C64::default(); n],
        phase_end: vec![C64::default(); n],
    };

    let mut diag = NumericDiagnostics::default();
    let mut warned = false;
    let mut t = 0.0;
    let mut last_check = (0usize, 1.0f64);
    for &t_out in t_grid {
        let span = t_out - t;
        if span > 0.0 {
            let n_steps = (span / cfg.dt).ceil().max(1.0) as usize;
            let h_step = span / n_steps as f64;
            prop.phases(0.5 * h_step, &mut w_half);
            for s in 0..n_steps {
                prop.step(t + s as f64 * h_step, h_step, &mut y, &mut phase, &w_half, &mut ws);
                diag.steps += 1;
                if diag.steps % cfg.norm_check_every == 0 {
                    let nrm = sq_norm(&y).sqrt();
                    let per_step = (nrm - last_check.1).abs() / (diag.steps - last_check.0) as f64;
                    diag.max_step_drift = diag.max_step_drift.max(per_step);
                    last_check = (diag.steps, nrm);
                    if !nrm.is_finite() || (nrm - 1.0).abs() > cfg.norm_tolerance {
                        return Err(norm_failure(nrm, t + (s + 1) as f64 * h_step, cfg));
                    }
                }
            }
            t = t_out;
            // resync the accumulated phases
            prop.phases(t, &mut phase);
        }

        let nrm = sq_norm(&y).sqrt();
        if !nrm.is_finite() || (nrm - 1.0).abs() > cfg.norm_tolerance {
            return Err(norm_failure(nrm, t, cfg));
        }
        diag.max_norm_drift = diag.max_norm_drift.max((nrm - 1.0).abs());
        normalize(&mut y);
        last_check.1 = 1.0;

        let lab: Vec<C64> = y.iter().zip(&phase).map(|(v, p)| v * p).collect();
        let state = JointState::new(dims, lab)?;
        let edge = state.edge_population(EDGE_LEVELS);
        diag.max_edge_population = (diag.max_edge_population.0.max(edge.0), diag.max_edge_population.1.max(edge.1));
        if !warned && (edge.0 > EDGE_LEAK_TOL || edge.1 > EDGE_LEAK_TOL) {
            warned = true;
            let (sf, sm) = diag.suggested_dims(dims).unwrap_or((dims.field_dim(), dims.mirror_dim()));
            log::warn!(
                "truncation leak at t={t:e}: top-{EDGE_LEVELS} population field {:.2e}, mirror {:.2e}; \
                 try dims {sf},{sm}",
                edge.0,
                edge.1
            );
        }
        observe(t, &state)?;
    }
    Ok(diag)
}

fn norm_failure(nrm: f64, t: f64, cfg: &IntegratorConfig) -> Error {
    Error::Integration(format!(
        "norm drifted to {nrm:.9} at t={t:e} s (tolerance {:e}); reduce dt below {:e} s",
        cfg.norm_tolerance, cfg.dt
    ))
}

/// Collects every output state of [`evolve_numeric_with`].
pub fn evolve_numeric(
    p: &SystemParams,
    dims: FockDims,
    cfg: &IntegratorConfig,
    t_grid: &[f64],
) -> Result<(Vec<JointState>, NumericDiagnostics)> {
    let mut states = Vec::with_capacity(t_grid.len());
    let diag = evolve_numeric_with(p, dims, cfg, t_grid, |_, s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok((states, diag))
}

/// Observables of numerically evolved states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumericObservables {
    pub t: Vec<f64>,
    pub photons: Vec<f64>,
    pub phonons: Vec<f64>,
    pub mandel_field: Vec<f64>,
    pub mandel_mirror: Vec<f64>,
    pub entropy_mirror: Vec<f64>,
}

fn mandel(pop: &[f64]) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, w) in pop.iter().enumerate() {
        let k = k as f64;
        m1 += k * w;
        m2 += k * k * w;
    }
    let q = if m1 > 0.0 { (m2 - m1 * m1) / m1 } else { f64::NAN };
    (m1, q)
}

impl NumericObservables {
    /// Appends the observables of `state` at time `t`.
    pub fn push(&mut self, t: f64, state: &JointState) {
        let (n, qf) = mandel(&state.field_populations());
        let (nm, qm) = mandel(&state.mirror_populations());
        self.t.push(t);
        self.photons.push(n);
        self.phonons.push(nm);
        self.mandel_field.push(qf);
        self.mandel_mirror.push(qm);
        // purity of the mirror equals that of the field for a pure joint state
        self.entropy_mirror.push(state.partial_trace_mirror().linear_entropy());
    }

    /// Labelled series, in the order photons, phonons, Q, Q_M, entropy.
    pub fn series(&self) -> Result<Vec<ObservableSeries>> {
        [
            ("photons", &self.photons),
            ("phonons", &self.phonons),
            ("mandel_field", &self.mandel_field),
            ("mandel_mirror", &self.mandel_mirror),
            ("entropy_mirror", &self.entropy_mirror),
        ]
        .into_iter()
        .map(|(l, y)| ObservableSeries::new(self.t.clone(), y.clone(), l, Provenance::Numeric))
        .collect()
    }
}

/// `⟨n⟩`, `⟨N⟩`, `Q`, `Q_M` and the mirror linear entropy along a state series.
pub fn observables_numeric(times: &[f64], states: &[JointState]) -> Result<NumericObservables> {
    if times.len() != states.len() {
        return Err(Error::Argument(format!("{} times for {} states", times.len(), states.len())));
    }
    let mut o = NumericObservables::default();
    for (t, s) in times.iter().zip(states) {
        o.push(*t, s);
    }
    Ok(o)
}
