//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`). Failures are reported but do
//! not fail `cargo test` unless `ACCEPTANCE_STRICT=1` is set.

mod common;

use std::cell::RefCell;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use optomech::driven::{
    beta1_rwa, evolve_driven, integrate_betas, mandel_field, poisson_moments, rwa_photon_avg, AnalyticObservables,
    BetaCoefficients, DriveProfile,
};
use optomech::fock::{DensityMatrix, FockDims, JointState};
use optomech::oracle::{
    assemble_hamiltonian, energy, evolve_numeric, evolve_numeric_with, IntegratorConfig, NumericObservables,
};
use optomech::postproc::{compare, filter_fast, ObservableSeries, Provenance};
use optomech::presets::{self, time_grid, Preset, STRONG_FIELD_DIM};
use optomech::undriven::{cooling_threshold, evolve_undriven, phonon_avg_closed_form, phonon_avg_real_gamma};
use optomech::wigner::{wigner_continuous, GridSpec, WignerGrid};
use optomech::SystemParams;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use common::{brute_poisson_moments, dims_for, mean, std_dev};

const UNDRIVEN_REL_TOL: f64 = 1e-6;
const UNDRIVEN_RUNTIME: Duration = Duration::from_secs(10);
const THRESHOLDS: (f64, f64) = (29.8, 59.6);
const THRESHOLD_TOL: f64 = 0.05;
const RETURN_TOL: f64 = 1e-6;
const WEAK_PHOTON_REL_L2: f64 = 0.02;
const WEAK_RUNTIME: Duration = Duration::from_secs(300);
const BETA_VARIANT_FRACTION: f64 = 0.1;
const RWA_ENVELOPE_FACTOR: f64 = 1.3;
const PLATEAU_ONSET: (f64, f64) = (3e-7, 8e-7);
const PLATEAU_MEAN: (f64, f64) = (5.0, 7.0);
const PLATEAU_STD_FRACTION: f64 = 0.1;
const REVIVAL_STD_FRACTION: f64 = 0.5;
const PLATEAU_WINDOW: f64 = 2e-7;
const ONSET_AGREEMENT: f64 = 0.3;
const STRONG_RUNTIME: Duration = Duration::from_secs(1800);
const FILTERED_PHONON_REL_L2: f64 = 0.05;
const MANDEL_FIELD_TOL: f64 = 1e-10;
const MANDEL_MIRROR_POINTWISE: f64 = 0.1;
const ENTROPY_ZERO: f64 = 5e-3;
const ENTROPY_PEAK: f64 = 0.1;
const ENTROPY_COLLAPSE_TOL: f64 = 0.03;
const FIELD_NEGATIVITY: f64 = -1e-3;
const MIRROR_NEGATIVITY: f64 = -1e-6;
const WIGNER_NORM_TOL: f64 = 2e-2;
const STEP_HALVING_FIDELITY: f64 = 1e-8;
const ENERGY_REL_TOL: f64 = 1e-6;
const UNDRIVEN_FIDELITY: f64 = 1e-6;
const UNITARITY_TOL: f64 = 1e-6;
const POISSON_REL_TOL: f64 = 1e-9;

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel_l2(a: &ObservableSeries, b: &ObservableSeries) -> Result<f64, String> {
    compare(a, b).map(|c| c.relative_l2).map_err(err)
}

fn series(t: &[f64], y: &[f64], label: &str, prov: Provenance) -> Result<ObservableSeries, String> {
    ObservableSeries::new(t.to_vec(), y.to_vec(), label, prov).map_err(err)
}

fn field_mean(s: &JointState) -> f64 {
    s.field_populations().iter().enumerate().map(|(k, w)| k as f64 * w).sum()
}

fn mirror_mean(s: &JointState) -> f64 {
    s.mirror_populations().iter().enumerate().map(|(k, w)| k as f64 * w).sum()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = Preset::Fig2.expand();
    let times = time_grid(cfg.t_end, cfg.n_samples);
    let (mut worst_n, mut worst_photon) = (0.0f64, 0.0f64);
    for (_, p) in &cfg.runs {
        let dims = dims_for(p, cfg.t_end);
        let n0 = p.alpha0.norm_sqr();
        for &t in &times {
            let s = evolve_undriven(p, t, dims).map_err(err)?;
            let exact = phonon_avg_real_gamma(p, t).map_err(err)?;
            let general = phonon_avg_closed_form(p, t);
            let n = mirror_mean(&s);
            worst_n = worst_n.max((n - exact).abs() / exact).max((general - exact).abs() / exact);
            worst_photon = worst_photon.max((field_mean(&s) - n0).abs() / n0.max(1.0));
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_n < UNDRIVEN_REL_TOL && worst_photon < UNDRIVEN_REL_TOL && elapsed < UNDRIVEN_RUNTIME;
    Ok((
        pass,
        format!(
            "max rel |<N>-closed form| {worst_n:.2e}, max rel |<n>-|a|^2| {worst_photon:.2e}, {} runs x {} samples in {:.2} s",
            cfg.runs.len(),
            times.len(),
            elapsed.as_secs_f64()
        ),
    ))
}

fn criterion_2() -> Outcome {
    let cfg = Preset::Fig2.expand();
    let p = cfg.runs[0].1;
    let (lo, hi) = cooling_threshold(&p).map_err(err)?;
    let thresholds_ok = (lo - THRESHOLDS.0).abs() < THRESHOLD_TOL && (hi - THRESHOLDS.1).abs() < THRESHOLD_TOL;
    let heat = p.with_alpha(C64::new(THRESHOLDS.1.sqrt(), 0.0));
    let dims = dims_for(&heat, cfg.t_end);
    let mut devs = Vec::new();
    for t in [0.0, PI / heat.omega_m, 2.0 * PI / heat.omega_m] {
        let s = evolve_undriven(&heat, t, dims).map_err(err)?;
        devs.push((t, (mirror_mean(&s) - heat.gamma0.norm_sqr()).abs()));
    }
    let worst = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    let detail = devs.iter().map(|(t, d)| format!("t={t:.3e}: {d:.2e}")).collect::<Vec<_>>().join(", ");
    Ok((
        thresholds_ok && worst < RETURN_TOL,
        format!("thresholds ({lo:.4}, {hi:.4}); |<N>-4| at envelope extrema for |a|^2=59.6: {detail}"),
    ))
}

fn weak_photon_run(p: &SystemParams, t_end: f64, n: usize) -> Result<[ObservableSeries; 3], String> {
    let times = time_grid(t_end, n);
    let betas = integrate_betas(p, &times, DriveProfile::FullNumericBeta).map_err(err)?;
    let beta_route: Vec<f64> = betas.iter().map(|b| (p.alpha0 + b.b1).norm_sqr()).collect();
    let closed: Vec<f64> = times.iter().map(|&t| rwa_photon_avg(p, t)).collect();
    let (states, _) = evolve_numeric(p, dims_for(p, t_end), &IntegratorConfig::for_params(p), &times).map_err(err)?;
    let numeric: Vec<f64> = states.iter().map(field_mean).collect();
    Ok([
        series(&times, &beta_route, "photons", Provenance::Analytic)?,
        series(&times, &closed, "photons_rwa", Provenance::Analytic)?,
        series(&times, &numeric, "photons", Provenance::Numeric)?,
    ])
}

fn range(s: &ObservableSeries) -> (f64, f64) {
    s.y().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let cfg = Preset::Fig4.expand();
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, p) in &cfg.runs {
        let [beta_route, closed, numeric] = weak_photon_run(p, cfg.t_end, cfg.n_samples)?;
        let d_beta = rel_l2(&beta_route, &numeric)?;
        let d_closed = rel_l2(&closed, &numeric)?;
        let ranges = [range(&beta_route), range(&closed), range(&numeric)];
        let in_range = |(lo, hi): (f64, f64)| match label.as_str() {
            "red" => lo >= 4.0 - 1e-9 && hi < 9.5,
            _ => lo > 1.2 && hi <= 4.5,
        };
        let ok_ranges = ranges.iter().all(|r| in_range(*r));
        pass &= d_beta < WEAK_PHOTON_REL_L2 && d_closed < WEAK_PHOTON_REL_L2 && ok_ranges;
        parts.push(format!(
            "{label}: rel L2 |a+b1|^2 {d_beta:.2e}, RWA closed form {d_closed:.2e}, numeric range [{:.3}, {:.3}]",
            ranges[2].0, ranges[2].1
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < WEAK_RUNTIME;
    parts.push(format!("{:.1} s", elapsed.as_secs_f64()));
    Ok((pass, parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let cfg = Preset::Fig3.expand();
    let p = cfg.runs[0].1;
    let times = time_grid(cfg.t_end, cfg.n_samples);
    let num = integrate_betas(&p, &times, DriveProfile::FullNumericBeta).map_err(err)?;
    let phi1 = integrate_betas(&p, &times, DriveProfile::PhiToOneClosedForm).map_err(err)?;
    let scale = p.drive_amp / p.detuning().abs();
    let diff = num.iter().zip(&phi1).map(|(a, b)| (a.b1.re - b.b1.re).abs()).fold(0.0, f64::max);
    let envelope = times.iter().map(|&t| beta1_rwa(&p, t).norm()).fold(0.0, f64::max);
    let excursion = num.iter().chain(&phi1).map(|b| b.b1.re.abs()).fold(0.0, f64::max);
    let pass = diff < BETA_VARIANT_FRACTION * scale && excursion <= RWA_ENVELOPE_FACTOR * envelope;
    Ok((
        pass,
        format!(
            "max |Re b1(num) - Re b1(phi->1)| = {:.3} Omega/|Delta|; max |Re b1| = {:.3} x RWA envelope max",
            diff / scale,
            excursion / envelope
        ),
    ))
}

/// Sliding-window description of a collapse.
#[derive(Debug)]
struct Plateau {
    reference: f64,
    onset: f64,
    end: f64,
    mean: f64,
    revival: Option<(f64, f64)>,
}

fn window_std(t: &[f64], y: &[f64], start: usize, w: f64) -> f64 {
    let stop = t.partition_point(|&x| x < t[start] + w);
    std_dev(&y[start..stop])
}

/// Reference amplitude is the spread over the first window; the plateau is
/// the first run of windows whose spread is below `PLATEAU_STD_FRACTION` of
/// it; a revival is a later window above `REVIVAL_STD_FRACTION`.
fn find_plateau(t: &[f64], y: &[f64], w: f64) -> Option<Plateau> {
    let last = t.partition_point(|&x| x + w <= t[t.len() - 1]);
    let spread: Vec<f64> = (0..last).map(|i| window_std(t, y, i, w)).collect();
    let reference = spread[0];
    let first = spread.iter().position(|&s| s < PLATEAU_STD_FRACTION * reference)?;
    let end_idx = first + spread[first..].iter().take_while(|&&s| s < PLATEAU_STD_FRACTION * reference).count() - 1;
    let end = t[end_idx] + w;
    let stop = t.partition_point(|&x| x < end);
    let revival = spread[end_idx..]
        .iter()
        .position(|&s| s > REVIVAL_STD_FRACTION * reference)
        .map(|i| (t[end_idx + i], spread[end_idx + i]));
    Some(Plateau { reference, onset: t[first], end, mean: mean(&y[first..stop]), revival })
}

/// Strong-coupling red-detuned run shared by several criteria.
struct StrongRun {
    p: SystemParams,
    times: Vec<f64>,
    /// Whether each time belongs to the preset's own sample grid.
    on_preset: Vec<bool>,
    analytic: AnalyticObservables,
    betas: Vec<BetaCoefficients>,
    numeric: NumericObservables,
    snapshot_times: [f64; 3],
    numeric_snapshots: Vec<JointState>,
    dims: FockDims,
    elapsed: Duration,
}

impl StrongRun {
    fn compute() -> Result<Self, String> {
        let start = Instant::now();
        let cfg = Preset::Fig9.expand();
        let p = cfg.runs[0].1;
        let dims = FockDims::recommended(&p, STRONG_FIELD_DIM, 20).map_err(err)?;
        let wm = p.omega_m;
        let snapshot_times = [0.0, PI / wm, 2.0 * PI / wm];
        let preset_times = time_grid(cfg.t_end, cfg.n_samples);
        let mut times = preset_times.clone();
        times.extend((1..=6).map(|n| n as f64 * PI / wm));
        times.sort_by(f64::total_cmp);
        times.dedup();
        let on_preset = times.iter().map(|t| preset_times.contains(t)).collect();
        let betas = integrate_betas(&p, &times, DriveProfile::FullNumericBeta).map_err(err)?;
        let analytic = AnalyticObservables::evaluate(&p, &betas).map_err(err)?;
        let mut numeric = NumericObservables::default();
        let mut numeric_snapshots = Vec::new();
        evolve_numeric_with(&p, dims, &IntegratorConfig::for_params(&p), &times, |t, s| {
            numeric.push(t, s);
            if snapshot_times.contains(&t) {
                numeric_snapshots.push(s.clone());
            }
            Ok(())
        })
        .map_err(err)?;
        Ok(StrongRun {
            p,
            times,
            on_preset,
            analytic,
            betas,
            numeric,
            snapshot_times,
            numeric_snapshots,
            dims,
            elapsed: start.elapsed(),
        })
    }
}

fn criterion_5(run: &StrongRun) -> Outcome {
    let num = find_plateau(&run.times, &run.numeric.photons, PLATEAU_WINDOW).ok_or("numeric: no plateau")?;
    let an = find_plateau(&run.times, &run.analytic.photons, PLATEAU_WINDOW).ok_or("analytic: no plateau")?;
    let onset_ok = (PLATEAU_ONSET.0..=PLATEAU_ONSET.1).contains(&num.onset);
    let mean_ok = (PLATEAU_MEAN.0..=PLATEAU_MEAN.1).contains(&num.mean);
    let agree = (an.onset - num.onset).abs() <= ONSET_AGREEMENT * num.onset;
    let pass = onset_ok && mean_ok && num.revival.is_some() && an.revival.is_some() && agree && run.elapsed < STRONG_RUNTIME;
    let rev = |p: &Plateau| p.revival.map_or("none".to_string(), |(t, s)| format!("{t:.2e} s (std {s:.2})"));
    Ok((
        pass,
        format!(
            "numeric plateau [{:.2e}, {:.2e}] s mean {:.2} (reference std {:.2}), revival {}; analytic onset {:.2e} s mean {:.2}, revival {}; shared run {:.0} s at {}x{}",
            num.onset,
            num.end,
            num.mean,
            num.reference,
            rev(&num),
            an.onset,
            an.mean,
            rev(&an),
            run.elapsed.as_secs_f64(),
            run.dims.field_dim(),
            run.dims.mirror_dim()
        ),
    ))
}

fn criterion_6() -> Outcome {
    let cfg = Preset::Fig5_6.expand();
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, p) in &cfg.runs {
        let times = time_grid(cfg.t_end, cfg.n_samples);
        let betas = integrate_betas(p, &times, DriveProfile::FullNumericBeta).map_err(err)?;
        let an = AnalyticObservables::evaluate(p, &betas).map_err(err)?;
        let (states, _) =
            evolve_numeric(p, dims_for(p, cfg.t_end), &IntegratorConfig::for_params(p), &times).map_err(err)?;
        let numeric: Vec<f64> = states.iter().map(mirror_mean).collect();
        let a = series(&times, &an.phonons, "phonons", Provenance::Analytic)?;
        let n = series(&times, &numeric, "phonons", Provenance::Numeric)?;
        let fa = filter_fast(&a, p.detuning_period()).map_err(err)?;
        let raw = rel_l2(&a, &n)?;
        let filtered = rel_l2(&fa, &n)?;
        if label == "red" {
            pass &= filtered < FILTERED_PHONON_REL_L2 && filtered < raw;
        }
        parts.push(format!("{label}: filtered {filtered:.2e}, raw {raw:.2e}"));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_7(run: &StrongRun) -> Outcome {
    let mut worst_q = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = Vec::new();
    for preset in Preset::ALL {
        let cfg = preset.expand();
        let times = if cfg.snapshot_times.is_empty() { time_grid(cfg.t_end, cfg.n_samples) } else { cfg.snapshot_times };
        for (label, p) in &cfg.runs {
            if p.alpha0.norm() == 0.0 && p.drive_amp == 0.0 {
                skipped.push(format!("{preset}/{label}"));
                continue;
            }
            for b in integrate_betas(p, &times, DriveProfile::FullNumericBeta).map_err(err)? {
                worst_q = worst_q.max((mandel_field(p, &b).map_err(err)? - 1.0).abs());
                checked += 1;
            }
        }
    }
    let qm = &run.analytic.mandel_mirror;
    let min_excess = qm
        .iter()
        .zip(&run.on_preset)
        .skip(1)
        .filter(|(_, &on)| on)
        .map(|(q, _)| q - 1.0)
        .fold(f64::INFINITY, f64::min);
    let touches = (1..=3).map(|n| qm[run.times.iter().position(|&t| t == 2.0 * n as f64 * PI / run.p.omega_m).unwrap_or(0)] - 1.0);
    let touch = touches.map(f64::abs).fold(0.0, f64::max);
    let a = series(&run.times, qm, "mandel_mirror", Provenance::Analytic)?;
    let fa = filter_fast(&a, run.p.detuning_period()).map_err(err)?;
    let n = &run.numeric.mandel_mirror;
    let rel = fa.y().iter().zip(n).map(|(f, n)| (f - n).abs() / n.abs()).fold(0.0, f64::max);
    let fnum = filter_fast(&series(&run.times, n, "mandel_mirror", Provenance::Numeric)?, run.p.detuning_period())
        .map_err(err)?;
    let rel_ff = fa.y().iter().zip(fnum.y()).map(|(f, n)| (f - n).abs() / n.abs()).fold(0.0, f64::max);
    let pass = worst_q < MANDEL_FIELD_TOL && min_excess > 0.0 && rel < MANDEL_MIRROR_POINTWISE;
    Ok((
        pass,
        format!(
            "max |Q-1| {worst_q:.1e} over {checked} times (undefined at <n>=0: {}); min Q_M-1 on the preset grid for t>0 {min_excess:.1e} (Q_M(0)={:.12}, |Q_M-1| at 2 pi n/wm {touch:.1e}); max rel |filtered Q_M - numeric| {rel:.3} (both filtered {rel_ff:.3})",
            if skipped.is_empty() { "none".to_string() } else { skipped.join(",") },
            qm[0]
        ),
    ))
}

fn criterion_8(run: &StrongRun) -> Outcome {
    let wm = run.p.omega_m;
    let at = |t: f64| run.times.iter().position(|&x| x == t).ok_or(format!("time {t:e} not on grid"));
    let mut zeros = Vec::new();
    let mut peaks = Vec::new();
    for n in 1..=3 {
        zeros.push(run.analytic.entropy_mirror[at(2.0 * n as f64 * PI / wm)?]);
        peaks.push(run.analytic.entropy_mirror[at((2 * n - 1) as f64 * PI / wm)?]);
    }
    let num = find_plateau(&run.times, &run.numeric.photons, PLATEAU_WINDOW).ok_or("no collapse region")?;
    let (lo, hi) = (num.onset, num.end);
    let diff = run
        .times
        .iter()
        .zip(run.analytic.entropy_mirror.iter().zip(&run.numeric.entropy_mirror))
        .filter(|(t, _)| (lo..=hi).contains(*t))
        .map(|(_, (a, n))| (a - n).abs())
        .fold(0.0, f64::max);
    let zmax = zeros.iter().copied().fold(0.0, f64::max);
    let pmin = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = zmax < ENTROPY_ZERO && pmin > ENTROPY_PEAK && diff < ENTROPY_COLLAPSE_TOL;
    Ok((
        pass,
        format!(
            "S at 2 pi n/wm max {zmax:.1e}; S at (2n+1) pi/wm min {pmin:.3}; max |S_an - S_num| over [{lo:.2e}, {hi:.2e}] s = {diff:.3}"
        ),
    ))
}

fn widest(rhos: &[&DensityMatrix]) -> GridSpec {
    rhos.iter()
        .map(|r| GridSpec::covering(r, 1e-8))
        .fold(GridSpec::default(), |a, b| if b.q_max > a.q_max { b } else { a })
}

fn criterion_9(run: &StrongRun) -> Outcome {
    let mut analytic = Vec::new();
    for &t in &run.snapshot_times {
        let b = run.betas.iter().find(|b| b.t == t).ok_or("snapshot time missing")?;
        analytic.push(evolve_driven(&run.p, t, b, run.dims).map_err(err)?.state);
    }
    let sources = [("analytic", &analytic), ("numeric", &run.numeric_snapshots)];
    let reduced: Vec<Vec<(DensityMatrix, DensityMatrix)>> = sources
        .iter()
        .map(|(_, states)| states.iter().map(|s| (s.partial_trace_mirror(), s.partial_trace_field())).collect())
        .collect();
    let field_spec = widest(&reduced.iter().flatten().map(|r| &r.0).collect::<Vec<_>>());
    let mirror_spec = widest(&reduced.iter().flatten().map(|r| &r.1).collect::<Vec<_>>());
    let mut pass = true;
    let mut parts = Vec::new();
    let mut worst_norm = 0.0f64;
    for ((name, _), red) in sources.iter().zip(&reduced) {
        let grids: Vec<(WignerGrid, WignerGrid)> = red
            .iter()
            .map(|(f, m)| Ok((wigner_continuous(f, &field_spec)?, wigner_continuous(m, &mirror_spec)?)))
            .collect::<optomech::Result<_>>()
            .map_err(err)?;
        for (f, m) in &grids {
            worst_norm = worst_norm.max((f.integral() - 1.0).abs()).max((m.integral() - 1.0).abs());
        }
        let field_min = grids[1].0.min();
        let mirror_min = grids.iter().map(|g| g.1.min()).fold(f64::INFINITY, f64::min);
        let (_, _, vq, vp) = grids[1].1.moments();
        pass &= field_min < FIELD_NEGATIVITY && mirror_min >= MIRROR_NEGATIVITY && vp < vq;
        parts.push(format!(
            "{name}: field min at pi/wm {field_min:.3e}, mirror min {mirror_min:.1e}, mirror var (q, p) at pi/wm ({vq:.3}, {vp:.3})"
        ));
    }
    pass &= worst_norm < WIGNER_NORM_TOL;
    parts.push(format!("max |integral - 1| {worst_norm:.1e}"));
    Ok((pass, parts.join("; ")))
}

fn random_params() -> impl Strategy<Value = SystemParams> {
    (0.0..0.35f64, 0.75..1.25f64, 0.0..0.16f64, 0.5..2.0f64, 0.0..6.3f64, 0.5..2.0f64, 0.0..6.3f64).prop_map(
        |(g, wp, omega, ar, aphi, gr, gphi)| SystemParams {
            omega_c: presets::OMEGA_C,
            omega_m: presets::OMEGA_C / 100.0,
            omega_p: wp * presets::OMEGA_C,
            drive_amp: omega * presets::OMEGA_C,
            g_ratio: g,
            alpha0: C64::from_polar(ar, aphi),
            gamma0: C64::from_polar(gr, gphi),
        },
    )
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn criterion_10() -> Outcome {
    let worst = RefCell::new([0.0f64; 4]);
    let bump = |i: usize, v: f64| {
        let mut w = worst.borrow_mut();
        w[i] = w[i].max(v);
    };
    let mut failures = Vec::new();

    let r = runner(4).run(&(random_params(), 5e-9..2e-8f64), |(p, t)| {
        let dims = dims_for(&p, t);
        let cfg = IntegratorConfig::for_params(&p);
        let grid = [t];
        let (a, _) = evolve_numeric(&p, dims, &cfg, &grid).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (b, _) =
            evolve_numeric(&p, dims, &cfg.with_dt(cfg.dt / 2.0), &grid).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let defect = 1.0 - a[0].fidelity(&b[0]);
        bump(0, defect);
        prop_assert!(defect < STEP_HALVING_FIDELITY);
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("step halving: {e}"));
    }

    let r = runner(4).run(&(random_params(), 1e-8..5e-8f64), |(p, t)| {
        let p = p.with_drive(0.0, p.omega_p);
        let dims = dims_for(&p, t);
        let h = assemble_hamiltonian(&p, dims).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let grid = [0.0, t / 2.0, t];
        let (states, _) = evolve_numeric(&p, dims, &IntegratorConfig::for_params(&p), &grid)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let e0 = energy(&h, &states[0]);
        for (s, &tt) in states.iter().zip(&grid) {
            let rel = (energy(&h, s) - e0).abs() / e0.abs();
            bump(1, rel);
            prop_assert!(rel < ENERGY_REL_TOL, "t = {tt:e}: {rel:e}");
            let exact = evolve_undriven(&p, tt, dims).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let defect = 1.0 - s.fidelity(&exact);
            bump(2, defect);
            prop_assert!(defect < UNDRIVEN_FIDELITY, "t = {tt:e}: {defect:e}");
        }
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("undriven: {e}"));
    }

    let r = runner(16).run(&(random_params(), 1e-7..4e-6f64), |(p, t)| {
        let grid = time_grid(t, 101);
        let betas = integrate_betas(&p, &grid, DriveProfile::FullNumericBeta).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for b in &betas {
            let d = b.unitarity_defect(p.alpha0).abs();
            bump(3, d);
            prop_assert!(d < UNITARITY_TOL, "t = {:e}: {d:e}", b.t);
        }
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("unitarity: {e}"));
    }

    let w = worst.into_inner();
    let mut detail = format!(
        "worst 1-F step halving {:.1e}, energy drift {:.1e}, 1-F undriven {:.1e}, unitarity defect {:.1e}",
        w[0], w[1], w[2], w[3]
    );
    if !failures.is_empty() {
        detail.push_str("; ");
        detail.push_str(&failures.join("; "));
    }
    Ok((failures.is_empty(), detail))
}

fn criterion_11() -> Outcome {
    let mut worst = 0.0f64;
    for mu in [0.5, 1.0, 4.0, 9.0] {
        let closed = poisson_moments(mu);
        let brute = brute_poisson_moments(mu, 60);
        for k in 1..4 {
            worst = worst.max((closed[k] - brute[k]).abs() / brute[k]);
        }
    }
    Ok((worst < POISSON_REL_TOL, format!("max rel error of <n^2>, <n^3>, <n^4> {worst:.1e}")))
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut failed = Vec::new();
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        let (pass, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} [{n:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(n);
        }
    };

    report(1, "undriven exactness", criterion_1());
    report(2, "cooling and heating thresholds", criterion_2());
    report(3, "weak-coupling photon agreement", criterion_3());
    report(4, "beta1 variants", criterion_4());
    report(6, "filtered phonon agreement", criterion_6());
    report(10, "oracle self-checks", criterion_10());
    report(11, "Poisson moments", criterion_11());
    match StrongRun::compute() {
        Ok(run) => {
            report(5, "strong-coupling collapse and revival", criterion_5(&run));
            report(7, "Mandel invariants", criterion_7(&run));
            report(8, "entropy zeros and maxima", criterion_8(&run));
            report(9, "Wigner properties", criterion_9(&run));
        }
        Err(e) => {
            for (n, name) in [(5, "strong-coupling collapse and revival"), (7, "Mandel invariants"), (8, "entropy"), (9, "Wigner")] {
                report(n, name, Err(format!("shared strong run failed: {e}")));
            }
        }
    }

    failed.sort_unstable();
    if failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed: {failed:?}");
        if strict {
            std::process::exit(1);
        }
    }
}
