//! Wigner functions of single-mode density matrices.
//!
//! Quadratures follow `β = (q + ip)/√2`, so the coherent state `|α⟩` is a
//! Gaussian centered at `(√2 Re α, √2 Im α)` and the vacuum peaks at `1/π`.
//! The continuous function is
//! `W(q, p) = (1/π) ∫ dx e^{2ixp} ⟨q − x|ρ|q + x⟩ = (1/π) Tr[ρ D(β) Π D†(β)]`
//! with `Π` the parity operator; it is evaluated in the Fock basis with a
//! three-term recursion over the displaced-parity matrix elements, which needs
//! no Laguerre polynomials and stays finite for large cutoffs.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;

use crate::driven::{evolve_driven, integrate_betas, DriveProfile};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockDims, JointState};
use crate::oracle::{evolve_numeric, IntegratorConfig};
use crate::SystemParams;

/// Largest imaginary residue tolerated in the discrete Wigner function.
pub const IMAG_TOL: f64 = 1e-10;
/// Boundary magnitude above which the grid is reported as too small.
pub const BOUNDARY_TOL: f64 = 1e-4;

/// Rectangular phase-space grid, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::square(6.0, 121)
    }
}

impl GridSpec {
    /// `[−half_width, half_width]²` with `n × n` points.
    pub fn square(half_width: f64, n: usize) -> Self {
        GridSpec { q_min: -half_width, q_max: half_width, p_min: -half_width, p_max: half_width, nq: n, np: n }
    }

    /// Square grid large enough for `rho`: the radius reaches the phase-space
    /// extent `√(2n + 1)` of the highest Fock level that carries population
    /// above `tail`, plus a margin, with spacing at most `0.2`. Never smaller
    /// than the default grid.
    pub fn covering(rho: &DensityMatrix, tail: f64) -> Self {
        let diag = rho.diagonal();
        let mut n_max = 0;
        let mut acc = 0.0;
        for (n, w) in diag.iter().enumerate().rev() {
            acc += w;
            if acc > tail {
                n_max = n;
                break;
            }
        }
        let half = (((2 * n_max + 1) as f64).sqrt() + 3.0).max(6.0);
        let n = ((2.0 * half / 0.2).ceil() as usize + 1).max(121) | 1;
        GridSpec::square(half, n)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.q_min, self.q_max, self.p_min, self.p_max].iter().all(|v| v.is_finite())
            && self.q_max > self.q_min
            && self.p_max > self.p_min;
        if !ok {
            return Err(Error::Argument(format!("invalid grid bounds {self:?}")));
        }
        if self.nq < 2 || self.np < 2 {
            return Err(Error::Argument(format!("grid needs at least 2x2 points, got {}x{}", self.nq, self.np)));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.nq - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn q_axis(&self) -> Vec<f64> {
        (0..self.nq).map(|i| self.q_min + i as f64 * self.dq()).collect()
    }

    pub fn p_axis(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p_min + j as f64 * self.dp()).collect()
    }
}

/// Real values on a grid, stored q-major (`values[i * np + j]` at `(q_i, p_j)`).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    values: Vec<f64>,
}

impl WignerGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.nq * spec.np {
            return Err(Error::Argument(format!(
                "{} values for a {}x{} grid",
                values.len(),
                spec.nq,
                spec.np
            )));
        }
        Ok(WignerGrid { spec, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.np + j]
    }

    pub fn cell_area(&self) -> f64 {
        self.spec.dq() * self.spec.dp()
    }

    /// Riemann sum `Σ W · cell area`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(q, p)` of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (k, _) = self.values.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (k, &v)| {
            if v > best.1 {
                (k, v)
            } else {
                best
            }
        });
        let (i, j) = (k / self.spec.np, k % self.spec.np);
        (self.spec.q_min + i as f64 * self.spec.dq(), self.spec.p_min + j as f64 * self.spec.dp())
    }

    /// Largest `|W|` on the outer edge of the grid.
    pub fn boundary_max(&self) -> f64 {
        let (nq, np) = (self.spec.nq, self.spec.np);
        let mut m = 0.0f64;
        for i in 0..nq {
            for j in 0..np {
                if i == 0 || j == 0 || i == nq - 1 || j == np - 1 {
                    m = m.max(self.value(i, j).abs());
                }
            }
        }
        m
    }

    /// `2π Σ W² · cell area`, which estimates `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        2.0 * PI * self.values.iter().map(|v| v * v).sum::<f64>() * self.cell_area()
    }

    /// Means and variances `(⟨q⟩, ⟨p⟩, Var q, Var p)` with `W` as weight.
    pub fn moments(&self) -> (f64, f64, f64, f64) {
        let (q, p) = (self.spec.q_axis(), self.spec.p_axis());
        let (mut s, mut sq, mut sp, mut sqq, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, qi) in q.iter().enumerate() {
            for (j, pj) in p.iter().enumerate() {
                let w = self.value(i, j);
                s += w;
                sq += w * qi;
                sp += w * pj;
                sqq += w * qi * qi;
                spp += w * pj * pj;
            }
        }
        let (mq, mp) = (sq / s, sp / s);
        (mq, mp, sqq / s - mq * mq, spp / s - mp * mp)
    }

    /// `Σ |W_a − W_b| · cell area` on identical grids.
    pub fn l1_distance(&self, other: &WignerGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::Argument("grids differ".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.cell_area())
    }

    /// Rows `q,p,W`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "q,p,W")?;
        let (q, p) = (self.spec.q_axis(), self.spec.p_axis());
        for (i, qi) in q.iter().enumerate() {
            for (j, pj) in p.iter().enumerate() {
                writeln!(w, "{qi:.16e},{pj:.16e},{:.16e}", self.value(i, j))?;
            }
        }
        Ok(())
    }

    /// Plain whitespace-separated matrix, one row per `p` value from `p_max`
    /// down, columns in ascending `q`, preceded by `#` header lines with the
    /// bounds.
    pub fn write_matrix<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.spec;
        writeln!(w, "# q {:.16e} {:.16e} {}", s.q_min, s.q_max, s.nq)?;
        writeln!(w, "# p {:.16e} {:.16e} {}", s.p_min, s.p_max, s.np)?;
        for j in (0..s.np).rev() {
            let row: Vec<String> = (0..s.nq).map(|i| format!("{:.9e}", self.value(i, j))).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// ASCII PGM (P2) image with the same orientation as
    /// [`write_matrix`](Self::write_matrix); mid-gray is `W = 0`.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.spec;
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        writeln!(w, "P2\n{} {}\n255", s.nq, s.np)?;
        for j in (0..s.np).rev() {
            let row: Vec<String> = (0..s.nq)
                .map(|i| (127.5 * (1.0 + self.value(i, j) / scale)).round().clamp(0.0, 255.0).to_string())
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Continuous Wigner function on `spec`.
///
/// Uses `W = (1/π) Σ_{m,k} ρ_{m,m+k} (−1)^m e^{ikθ} f_m^{(k)}(x)` (off-diagonal
/// terms doubled and real part taken), `x = 4|β|²`, `θ = arg β`, where
/// `f_m^{(k)} = √(m!/(m+k)!) x^{k/2} e^{−x/2} L_m^{(k)}(x)` is built by its
/// upward recurrence in `m` with the exponent carried separately, so large
/// displacements neither underflow nor overflow.
pub fn wigner_continuous(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    // dropped coherences are bounded by the square root of the dropped population
    let rho = rho.truncated(rho.support_dim(1e-24).max(1));
    let d = rho.dim();
    let (qs, ps) = (spec.q_axis(), spec.p_axis());
    let mut ln_fact = vec![0.0; d + 1];
    for n in 1..=d {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    // rows[k][m] = ρ_{m, m+k}, with the parity sign folded in
    let rows: Vec<Vec<C64>> = (0..d)
        .map(|k| (0..d - k).map(|m| if m % 2 == 0 { rho.get(m, m + k) } else { -rho.get(m, m + k) }).collect())
        .collect();
    // recurrence coefficients per offset k: (2m + 1 + k, √(m(m+k)), 1/√((m+1)(m+k+1)))
    let coeffs: Vec<Vec<(f64, f64, f64)>> = (0..d)
        .map(|k| {
            let kf = k as f64;
            (0..d - k)
                .map(|m| {
                    let mf = m as f64;
                    (2.0 * mf + 1.0 + kf, (mf * (mf + kf)).sqrt(), 1.0 / ((mf + 1.0) * (mf + kf + 1.0)).sqrt())
                })
                .collect()
        })
        .collect();
    const BIG: f64 = 1e150;
    let ln_big = BIG.ln();
    let mut values = Vec::with_capacity(spec.nq * spec.np);
    for &q in &qs {
        for &p in &ps {
            let r2 = 0.5 * (q * q + p * p);
            let x = 4.0 * r2;
            let phase = if r2 > 0.0 { C64::new(q, p) / (2.0 * r2).sqrt() } else { C64::new(1.0, 0.0) };
            let ln_x = x.ln();
            let mut rot = C64::new(1.0, 0.0);
            let mut acc = 0.0;
            for (k, (row, coef)) in rows.iter().zip(&coeffs).enumerate() {
                let kf = k as f64;
                let mut scale = if k == 0 { -0.5 * x } else if x > 0.0 { 0.5 * kf * ln_x - 0.5 * x - 0.5 * ln_fact[k] } else { f64::NEG_INFINITY };
                if scale == f64::NEG_INFINITY {
                    rot *= phase;
                    continue;
                }
                let (mut prev, mut cur) = (0.0f64, 1.0f64);
                // true sum is `sum · e^{scale}`
                let mut sum = C64::default();
                for (r, &(c, b, a)) in row.iter().zip(coef) {
                    sum += r * cur;
                    let next = ((c - x) * cur - b * prev) * a;
                    prev = cur;
                    cur = next;
                    if cur.abs() > BIG {
                        prev /= BIG;
                        cur /= BIG;
                        sum /= BIG;
                        scale += ln_big;
                    }
                }
                let sum = sum * scale.exp();
                let term = (sum * rot).re;
                acc += if k == 0 { term } else { 2.0 * term };
                rot *= phase;
            }
            values.push(acc / PI);
        }
    }
    let grid = WignerGrid::new(*spec, values)?;
    let edge = grid.boundary_max();
    if edge > BOUNDARY_TOL {
        log::warn!("Wigner grid too small: |W| = {edge:.2e} on the boundary");
    }
    Ok(grid)
}

/// Discrete Wigner function on the `N × N` grid,
/// `W(q, p) = (1/N) Σ_n e^{−4πi np/N} ⟨q − n|ρ|q + n⟩` with indices mod `N`
/// and `ρ` zero-padded to dimension `N`.
///
/// The grid sums to 1 for odd `N`; for even `N` the term `n = N/2` aliases
/// onto `n = 0` and the sum is 2.
pub fn wigner_discrete(rho: &DensityMatrix, n: usize) -> Result<WignerGrid> {
    let d = rho.dim();
    if n < d.max(1) {
        return Err(Error::InvalidDimension { dim: n, reason: format!("discrete grid smaller than rho dimension {d}") });
    }
    let get = |i: usize, j: usize| if i < d && j < d { rho.get(i, j) } else { C64::default() };
    let mut values = Vec::with_capacity(n * n);
    let mut max_im = 0.0f64;
    for q in 0..n {
        let row: Vec<C64> = (0..n).map(|k| get((q + n - k) % n, (q + k) % n)).collect();
        for p in 0..n {
            let mut acc = C64::default();
            for (k, r) in row.iter().enumerate() {
                if *r != C64::default() {
                    let angle = -4.0 * PI * ((k * p) % n) as f64 / n as f64;
                    acc += C64::from_polar(1.0, angle) * r;
                }
            }
            acc /= n as f64;
            max_im = max_im.max(acc.im.abs());
            values.push(acc.re);
        }
    }
    if max_im > IMAG_TOL {
        return Err(Error::Consistency(format!("discrete Wigner has imaginary part {max_im:.2e}; rho is not Hermitian")));
    }
    let top = (n - 1) as f64;
    WignerGrid::new(GridSpec { q_min: 0.0, q_max: top, p_min: 0.0, p_max: top, nq: n, np: n }, values)
}

/// Position-grid spacing `√(2π/N)` paired with [`position_basis`].
pub fn position_spacing(n: usize) -> f64 {
    (2.0 * PI / n as f64).sqrt()
}

/// Represents `rho` on `N` position points `x_j = (j − (N−1)/2)·√(2π/N)`
/// using sampled Hermite functions, renormalized to unit trace.
pub fn position_basis(rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::InvalidDimension { dim: n, reason: "position grid needs at least 2 points".into() });
    }
    let d = rho.dim();
    let dx = position_spacing(n);
    // u[j][k] = √dx ψ_k(x_j)
    let u: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let x = (j as f64 - 0.5 * (n - 1) as f64) * dx;
            let mut psi = vec![0.0; d];
            psi[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
            if d > 1 {
                psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
            }
            for k in 1..d.saturating_sub(1) {
                psi[k + 1] = ((2.0 / (k + 1) as f64).sqrt() * x * psi[k]) - ((k as f64 / (k + 1) as f64).sqrt() * psi[k - 1]);
            }
            psi.iter().map(|v| v * dx.sqrt()).collect()
        })
        .collect();
    let mut out = vec![C64::default(); n * n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = C64::default();
            for k in 0..d {
                if u[a][k] == 0.0 {
                    continue;
                }
                for l in 0..d {
                    acc += u[a][k] * rho.get(k, l) * u[b][l];
                }
            }
            out[a * n + b] = acc;
        }
    }
    let tr: f64 = (0..n).map(|i| out[i * n + i].re).sum();
    if !(tr > 0.0) {
        return Err(Error::Undefined("state has no weight on the position grid".into()));
    }
    for v in &mut out {
        *v /= tr;
    }
    DensityMatrix::new(n, out)
}

/// Which evolution supplies the snapshot states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSource {
    AnalyticState,
    NumericState,
}

/// Field and mirror Wigner functions at one time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub field: WignerGrid,
    pub mirror: WignerGrid,
}

/// How snapshot grids are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridChoice {
    /// The same grid for both subsystems.
    Fixed(GridSpec),
    /// [`GridSpec::covering`] per subsystem, from the state at the first
    /// snapshot time that needs the widest grid.
    Covering,
}

/// `π/ω_m`-spaced snapshot times `{0, π/ω_m, 2π/ω_m}`.
pub fn default_snapshot_times(p: &SystemParams) -> [f64; 3] {
    [0.0, PI / p.omega_m, 2.0 * PI / p.omega_m]
}

/// Joint states at `times` (ascending, starting at or after 0) from `source`.
pub fn snapshot_states(p: &SystemParams, dims: FockDims, times: &[f64], source: StateSource) -> Result<Vec<JointState>> {
    match source {
        StateSource::NumericState => Ok(evolve_numeric(p, dims, &IntegratorConfig::for_params(p), times)?.0),
        StateSource::AnalyticState => {
            let mut grid = vec![0.0];
            grid.extend(times.iter().copied().filter(|&t| t > 0.0));
            let betas = integrate_betas(p, &grid, DriveProfile::FullNumericBeta)?;
            times
                .iter()
                .map(|&t| {
                    let b = betas.iter().find(|b| b.t == t).copied().unwrap_or_default();
                    Ok(evolve_driven(p, t, &b, dims)?.state)
                })
                .collect()
        }
    }
}

/// Field and mirror Wigner grids at each of `times`.
pub fn snapshot_set(
    p: &SystemParams,
    dims: FockDims,
    times: &[f64],
    source: StateSource,
    grids: GridChoice,
) -> Result<Vec<Snapshot>> {
    let states = snapshot_states(p, dims, times, source)?;
    let reduced: Vec<(DensityMatrix, DensityMatrix)> =
        states.iter().map(|s| (s.partial_trace_mirror(), s.partial_trace_field())).collect();
    let (field_spec, mirror_spec) = match grids {
        GridChoice::Fixed(g) => (g, g),
        GridChoice::Covering => {
            let widest = |specs: Vec<GridSpec>| {
                specs.into_iter().fold(GridSpec::default(), |a, b| if b.q_max > a.q_max { b } else { a })
            };
            (
                widest(reduced.iter().map(|r| GridSpec::covering(&r.0, 1e-8)).collect()),
                widest(reduced.iter().map(|r| GridSpec::covering(&r.1, 1e-8)).collect()),
            )
        }
    };
    times
        .iter()
        .zip(&reduced)
        .map(|(&t, (rf, rm))| {
            Ok(Snapshot { t, field: wigner_continuous(rf, &field_spec)?, mirror: wigner_continuous(rm, &mirror_spec)? })
        })
        .collect()
}
