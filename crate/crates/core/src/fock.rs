//! Truncated Fock-space linear algebra.
//!
//! Joint field⊗mirror states are stored field-major: the amplitude of
//! `|k⟩_f ⊗ |m⟩_m` lives at index `k * mirror_dim + m` (see
//! [`FockDims::index`]). Every other module goes through that method rather
//! than recomputing the layout.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest joint dimension accepted by [`FockDims::new`]: 2²² amplitudes,
/// i.e. 64 MiB per state vector.
pub const MAX_JOINT_DIM: usize = 1 << 22;

/// Norm loss tolerated when a coherent state is cut off at a finite dimension.
pub const COHERENT_LOSS_TOL: f64 = 1e-8;

/// Truncation dimensions of the field and mirror Fock spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockDims {
    field_dim: usize,
    mirror_dim: usize,
}

impl FockDims {
    pub fn new(field_dim: usize, mirror_dim: usize) -> Result<Self> {
        for d in [field_dim, mirror_dim] {
            if d < 2 {
                return Err(Error::InvalidDimension { dim: d, reason: "must be at least 2".into() });
            }
        }
        let joint = field_dim
            .checked_mul(mirror_dim)
            .filter(|&j| j <= MAX_JOINT_DIM)
            .ok_or_else(|| Error::InvalidDimension {
                dim: field_dim.saturating_mul(mirror_dim),
                reason: format!("joint dimension exceeds the budget of {MAX_JOINT_DIM} amplitudes"),
            })?;
        debug_assert!(joint >= 4);
        Ok(FockDims { field_dim, mirror_dim })
    }

    /// Dimensions sized for the coupling strength in `p`: the mirror cutoff
    /// covers every displaced amplitude `Γ_k` with `k ≤ k_max`.
    pub fn recommended(p: &crate::SystemParams, field_dim: usize, k_max: usize) -> Result<Self> {
        FockDims::new(field_dim, recommend_mirror_dim(p.gamma0.norm(), p.g_ratio, k_max))
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn mirror_dim(&self) -> usize {
        self.mirror_dim
    }

    pub fn joint_dim(&self) -> usize {
        self.field_dim * self.mirror_dim
    }

    /// Position of `|k⟩_f ⊗ |m⟩_m` in a joint amplitude vector.
    #[inline]
    pub fn index(&self, k: usize, m: usize) -> usize {
        k * self.mirror_dim + m
    }
}

/// Mirror cutoff needed to hold every `Γ_k`, `k ≤ k_max`.
///
/// With `x = |Γ| + 2 k_max G₀/ω_m` the largest expected displacement, this is
/// `ceil(x² + 5x)`, raised where needed so the Poisson tail of mean `x²` past
/// the cutoff stays below 1e-10 (the `5√mean` rule is too tight for small
/// means).
pub fn recommend_mirror_dim(gamma_abs: f64, g_ratio: f64, k_max: usize) -> usize {
    let x = gamma_abs + 2.0 * k_max as f64 * g_ratio;
    let by_width = (x * x + 5.0 * x).ceil() as usize;
    by_width.max(poisson_cutoff(x * x, 1e-10)).max(2)
}

/// Smallest `d` such that a Poisson distribution of mean `mean` puts less than
/// `tail` of its mass on `k ≥ d`.
pub fn poisson_cutoff(mean: f64, tail: f64) -> usize {
    let weights = PoissonIter::new(mean);
    let mut acc = 0.0;
    for (k, w) in weights.enumerate() {
        acc += w;
        if 1.0 - acc < tail && k as f64 >= mean {
            return k + 1;
        }
        if k > 100_000 {
            break;
        }
    }
    usize::MAX
}

/// Poisson probabilities `e^{-μ} μ^k / k!`, k = 0, 1, …, evaluated in log
/// space so large means do not underflow the first terms.
#[derive(Clone, Debug)]
pub(crate) struct PoissonIter {
    mean: f64,
    ln_mean: f64,
    ln_fact: f64,
    k: usize,
}

impl PoissonIter {
    pub(crate) fn new(mean: f64) -> Self {
        PoissonIter { mean, ln_mean: mean.ln(), ln_fact: 0.0, k: 0 }
    }
}

impl Iterator for PoissonIter {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let k = self.k;
        if k > 0 {
            self.ln_fact += (k as f64).ln();
        }
        self.k += 1;
        if self.mean == 0.0 {
            return Some(if k == 0 { 1.0 } else { 0.0 });
        }
        Some((-self.mean + k as f64 * self.ln_mean - self.ln_fact).exp())
    }
}

/// Poisson probabilities for k < n.
pub fn poisson_weights(mean: f64, n: usize) -> Vec<f64> {
    PoissonIter::new(mean).take(n).collect()
}

/// Sparse square operator in triplet form; entries are sorted by (row, col)
/// and unique.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    /// Builds an operator from triplets, summing duplicates and dropping
    /// exact zeros.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::Argument(format!("entry ({r}, {c}) out of range for dim {dim}")));
            }
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != C64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Ok(SparseOperator { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        SparseOperator { dim, entries: (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect() }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        SparseOperator {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, i, C64::new(*v, 0.0)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by(|(r, c, _)| (*r, *c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        SparseOperator { dim: self.dim, entries }
    }

    pub fn scale(&self, s: C64) -> Self {
        SparseOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Self::from_triplets(self.dim, self.entries.iter().chain(&other.entries).copied())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Operator product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let rhs = other.to_csr();
        let mut out = Vec::new();
        for &(r, k, a) in &self.entries {
            for idx in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                out.push((r, rhs.cols[idx], a * rhs.vals[idx]));
            }
        }
        Self::from_triplets(self.dim, out)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim, "vector length does not match operator dim");
        let mut y = vec![C64::default(); self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// `⟨x|A|x⟩` for a (not necessarily normalized) vector.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        assert_eq!(x.len(), self.dim, "vector length does not match operator dim");
        self.entries.iter().map(|&(r, c, v)| x[r].conj() * v * x[c]).sum()
    }

    /// Elementwise Hermiticity check.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries.iter().all(|&(r, c, v)| (v - self.get(c, r).conj()).norm() <= tol)
    }

    /// Splits into (diagonal values, off-diagonal part).
    pub fn split_diagonal(&self) -> (Vec<C64>, SparseOperator) {
        let mut diag = vec![C64::default(); self.dim];
        let mut off = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            if r == c {
                diag[r] = v;
            } else {
                off.push((r, c, v));
            }
        }
        (diag, SparseOperator { dim: self.dim, entries: off })
    }

    /// Dense row-major copy; intended for small operators and tests.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut m = vec![vec![C64::default(); self.dim]; self.dim];
        for &(r, c, v) in &self.entries {
            m[r][c] = v;
        }
        m
    }

    pub(crate) fn to_csr(&self) -> Csr {
        let mut row_ptr = vec![0usize; self.dim + 1];
        for &(r, _, _) in &self.entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        // entries are sorted by row, so the column/value arrays are already in CSR order
        Csr {
            row_ptr,
            cols: self.entries.iter().map(|e| e.1).collect(),
            vals: self.entries.iter().map(|e| e.2).collect(),
        }
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Argument(format!("dimension mismatch: {} vs {}", self.dim, other.dim)));
        }
        Ok(())
    }
}

/// Compressed-row copy used in hot matrix-vector loops.
#[derive(Clone, Debug)]
pub(crate) struct Csr {
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) cols: Vec<usize>,
    pub(crate) vals: Vec<C64>,
}

impl Csr {
    /// `y = A x`.
    #[inline]
    pub(crate) fn mul_into(&self, x: &[C64], y: &mut [C64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = C64::default();
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            *out = acc;
        }
    }

    /// `y += s A x`.
    #[inline]
    pub(crate) fn mul_add_into(&self, s: C64, x: &[C64], y: &mut [C64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = C64::default();
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            *out += s * acc;
        }
    }
}

/// Ladder operators of a single truncated mode.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub lower: SparseOperator,
    pub raise: SparseOperator,
    pub number: SparseOperator,
}

/// Annihilation, creation and number operators on `dim` levels.
pub fn ladder_ops(dim: usize) -> Result<Ladder> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, reason: "a ladder needs at least 2 levels".into() });
    }
    let lower = SparseOperator::from_triplets(
        dim,
        (1..dim).map(|m| (m - 1, m, C64::new((m as f64).sqrt(), 0.0))),
    )?;
    let raise = lower.adjoint();
    let number = SparseOperator::diagonal(&(0..dim).map(|m| m as f64).collect::<Vec<_>>());
    Ok(Ladder { lower, raise, number })
}

/// Kronecker product `a ⊗ b` in the field-major convention of [`FockDims`].
pub fn tensor(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    let db = b.dim;
    let mut entries = Vec::with_capacity(a.nnz() * b.nnz());
    for &(ra, ca, va) in &a.entries {
        for &(rb, cb, vb) in &b.entries {
            entries.push((ra * db + rb, ca * db + cb, va * vb));
        }
    }
    entries.sort_by_key(|&(r, c, _)| (r, c));
    SparseOperator { dim: a.dim * db, entries }
}

/// Truncated, unnormalized coherent-state amplitudes
/// `e^{-|z|²/2} z^k / √k!` for k < dim, together with the lost norm
/// `1 − Σ|c_k|²`.
pub fn coherent_amplitudes(dim: usize, amp: C64) -> (Vec<C64>, f64) {
    let mut out = vec![C64::default(); dim];
    let r2 = amp.norm_sqr();
    if r2 == 0.0 {
        if dim > 0 {
            out[0] = C64::new(1.0, 0.0);
        }
        return (out, if dim > 0 { 0.0 } else { 1.0 });
    }
    let ln_r = amp.norm().ln();
    let theta = amp.arg();
    let mut ln_fact = 0.0;
    let mut kept = 0.0;
    for (k, c) in out.iter_mut().enumerate() {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        let ln_mag = -0.5 * r2 + k as f64 * ln_r - 0.5 * ln_fact;
        let mag = ln_mag.exp();
        kept += mag * mag;
        *c = C64::from_polar(mag, k as f64 * theta);
    }
    (out, (1.0 - kept).max(0.0))
}

/// Normalized coherent state `|amp⟩` truncated to `dim` levels.
///
/// Fails when more than [`COHERENT_LOSS_TOL`] of the norm falls outside the
/// cutoff; the error names the dimension that would suffice.
pub fn coherent_state(dim: usize, amp: C64) -> Result<Vec<C64>> {
    if dim == 0 {
        return Err(Error::InvalidDimension { dim, reason: "empty space".into() });
    }
    let (mut v, loss) = coherent_amplitudes(dim, amp);
    if loss >= COHERENT_LOSS_TOL {
        return Err(Error::Truncation {
            amp: amp.norm(),
            dim,
            loss,
            required: poisson_cutoff(amp.norm_sqr(), COHERENT_LOSS_TOL),
        });
    }
    normalize(&mut v);
    Ok(v)
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|c| *c /= n);
    }
    n
}

/// Pure state on the joint field⊗mirror space.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    dims: FockDims,
    amplitudes: Vec<C64>,
}

impl JointState {
    pub fn new(dims: FockDims, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dims.joint_dim() {
            return Err(Error::Argument(format!(
                "expected {} amplitudes, got {}",
                dims.joint_dim(),
                amplitudes.len()
            )));
        }
        Ok(JointState { dims, amplitudes })
    }

    /// `|field⟩ ⊗ |mirror⟩`.
    pub fn product(dims: FockDims, field: &[C64], mirror: &[C64]) -> Result<Self> {
        if field.len() != dims.field_dim() || mirror.len() != dims.mirror_dim() {
            return Err(Error::Argument("factor lengths do not match dims".into()));
        }
        let amplitudes = field.iter().flat_map(|f| mirror.iter().map(move |m| f * m)).collect();
        Ok(JointState { dims, amplitudes })
    }

    /// Product of coherent states `|α⟩_f ⊗ |Γ⟩_m`.
    pub fn coherent_product(dims: FockDims, alpha: C64, gamma: C64) -> Result<Self> {
        let f = coherent_state(dims.field_dim(), alpha)?;
        let m = coherent_state(dims.mirror_dim(), gamma)?;
        Self::product(dims, &f, &m)
    }

    pub fn dims(&self) -> FockDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, k: usize, m: usize) -> C64 {
        self.amplitudes[self.dims.index(k, m)]
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        normalize(&mut self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &JointState) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &JointState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn expect(&self, op: &SparseOperator) -> C64 {
        op.expectation(&self.amplitudes)
    }

    /// Photon-number distribution P(k).
    pub fn field_populations(&self) -> Vec<f64> {
        self.amplitudes.chunks(self.dims.mirror_dim()).map(|row| row.iter().map(|c| c.norm_sqr()).sum()).collect()
    }

    /// Phonon-number distribution P(m).
    pub fn mirror_populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.dims.mirror_dim()];
        for row in self.amplitudes.chunks(self.dims.mirror_dim()) {
            for (pm, c) in p.iter_mut().zip(row) {
                *pm += c.norm_sqr();
            }
        }
        p
    }

    /// Reduced state of the mirror, `Tr_f |ψ⟩⟨ψ|`.
    pub fn partial_trace_field(&self) -> DensityMatrix {
        let d = self.dims.mirror_dim();
        let mut rho = vec![C64::default(); d * d];
        for row in self.amplitudes.chunks(d) {
            for (i, a) in row.iter().enumerate() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let out = &mut rho[i * d..(i + 1) * d];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b.conj();
                }
            }
        }
        DensityMatrix { dim: d, entries: rho }
    }

    /// Reduced state of the field, `Tr_m |ψ⟩⟨ψ|`.
    pub fn partial_trace_mirror(&self) -> DensityMatrix {
        let d = self.dims.field_dim();
        let rows: Vec<&[C64]> = self.amplitudes.chunks(self.dims.mirror_dim()).collect();
        let mut rho = vec![C64::default(); d * d];
        for i in 0..d {
            for j in i..d {
                let v: C64 = rows[i].iter().zip(rows[j]).map(|(a, b)| a * b.conj()).sum();
                rho[i * d + j] = v;
                rho[j * d + i] = v.conj();
            }
        }
        DensityMatrix { dim: d, entries: rho }
    }

    /// Population in the top `levels` Fock levels of (field, mirror).
    pub fn edge_population(&self, levels: usize) -> (f64, f64) {
        let tail = |p: Vec<f64>| p.iter().rev().take(levels).sum::<f64>();
        (tail(self.field_populations()), tail(self.mirror_populations()))
    }
}

/// Dense density matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(Error::Argument(format!("expected {} entries for dim {dim}", dim * dim)));
        }
        Ok(DensityMatrix { dim, entries })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &[C64]) -> Self {
        let d = psi.len();
        let mut entries = Vec::with_capacity(d * d);
        for a in psi {
            for b in psi {
                entries.push(a * b.conj());
            }
        }
        DensityMatrix { dim: d, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// `Tr ρ²`, using Hermiticity.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `1 − Tr ρ²`.
    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.purity()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (i..self.dim).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    /// `Tr[ρ A]` for a diagonal observable given by its eigenvalues.
    pub fn expect_diagonal(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.dim).map(|i| f(i) * self.get(i, i).re).sum()
    }

    /// Restriction to the leading `dim` levels (no renormalization).
    pub fn truncated(&self, dim: usize) -> DensityMatrix {
        let dim = dim.min(self.dim).max(1);
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            entries.extend_from_slice(&self.entries[i * self.dim..i * self.dim + dim]);
        }
        DensityMatrix { dim, entries }
    }

    /// Smallest leading block holding all but `tol` of the trace.
    pub fn support_dim(&self, tol: f64) -> usize {
        let diag = self.diagonal();
        let mut tail = 0.0;
        for (i, p) in diag.iter().enumerate().rev() {
            tail += p.max(0.0);
            if tail > tol {
                return (i + 1).max(1);
            }
        }
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn dims_validation() {
        assert!(FockDims::new(1, 5).is_err());
        assert!(FockDims::new(5, 0).is_err());
        assert!(FockDims::new(1 << 12, 1 << 12).is_err());
        let d = FockDims::new(3, 4).unwrap();
        assert_eq!(d.joint_dim(), 12);
        assert_eq!(d.index(2, 1), 9);
    }

    #[test]
    fn ladder_qubit() {
        let l = ladder_ops(2).unwrap();
        assert_eq!(l.lower.to_dense(), vec![vec![c(0.0), c(1.0)], vec![c(0.0), c(0.0)]]);
        assert!(matches!(ladder_ops(1), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn ladder_matrix_elements() {
        let l = ladder_ops(3).unwrap();
        assert_abs_diff_eq!(l.lower.get(1, 2).re, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(l.raise, l.lower.adjoint());
        let n = l.raise.matmul(&l.lower).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(n.get(i, i).re, i as f64, epsilon = 1e-12);
        }
        // [a, a†] = 1 except in the truncated corner
        let comm = l.lower.matmul(&l.raise).unwrap().sub(&n).unwrap();
        assert_abs_diff_eq!(comm.get(0, 0).re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(comm.get(1, 1).re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(comm.get(2, 2).re, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_vacuum_and_ratios() {
        let v = coherent_state(5, C64::default()).unwrap();
        assert_eq!(v[0], c(1.0));
        assert!(v[1..].iter().all(|x| x.norm() == 0.0));

        let v = coherent_state(40, c(2.0)).unwrap();
        assert_abs_diff_eq!((v[2] / v[0]).re, 4.0 / 2f64.sqrt(), epsilon = 1e-12);
        let mean: f64 = v.iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum();
        assert_abs_diff_eq!(mean, 4.0, epsilon = 1e-6);
    }

    #[test]
    fn coherent_truncation_error_names_dim() {
        match coherent_state(10, c(4.0)) {
            Err(Error::Truncation { required, dim, .. }) => {
                assert_eq!(dim, 10);
                let (_, loss) = coherent_amplitudes(required, c(4.0));
                assert!(loss < COHERENT_LOSS_TOL);
                assert!(coherent_state(required, c(4.0)).is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn tensor_examples() {
        let id2 = SparseOperator::identity(2);
        assert_eq!(tensor(&id2, &SparseOperator::identity(3)), SparseOperator::identity(6));

        let dims = FockDims::new(2, 2).unwrap();
        let l = ladder_ops(2).unwrap();
        let op = tensor(&l.number, &id2);
        let mut psi = vec![C64::default(); 4];
        psi[dims.index(1, 0)] = c(1.0);
        assert_eq!(op.apply(&psi), psi);

        // n ⊗ (b + b†) |1,0⟩ = |1,1⟩
        let dims = FockDims::new(3, 3).unwrap();
        let lf = ladder_ops(3).unwrap();
        let q = lf.lower.add(&lf.raise).unwrap();
        let op = tensor(&lf.number, &q);
        let mut psi = vec![C64::default(); 9];
        psi[dims.index(1, 0)] = c(1.0);
        let out = op.apply(&psi);
        let mut expected = vec![C64::default(); 9];
        expected[dims.index(1, 1)] = c(1.0);
        assert_eq!(out, expected);
        assert!(op.is_hermitian(0.0));
    }

    #[test]
    fn partial_traces_of_product_and_bell() {
        let dims = FockDims::new(20, 20).unwrap();
        let s = JointState::coherent_product(dims, c(1.5), C64::new(0.5, 1.0)).unwrap();
        for rho in [s.partial_trace_field(), s.partial_trace_mirror()] {
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-9);
            assert!(rho.is_hermitian(1e-12));
        }

        let dims = FockDims::new(2, 2).unwrap();
        let h = 0.5f64.sqrt();
        let bell = JointState::new(dims, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        for rho in [bell.partial_trace_field(), bell.partial_trace_mirror()] {
            assert_abs_diff_eq!(rho.get(0, 0).re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(rho.get(1, 1).re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(rho.get(0, 1).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn recommendation_formula() {
        // x = 2 + 2·20·0.33 = 15.2 → ceil(15.2² + 5·15.2) = 308
        let d = recommend_mirror_dim(2.0, 0.33, 20);
        assert!(d >= 308);
        // small means are governed by the Poisson tail bound
        let d = recommend_mirror_dim(2.0, 0.033, 20);
        let (_, loss) = coherent_amplitudes(d, c(3.32));
        assert!(loss < 1e-10);
    }

    #[test]
    fn duplicates_are_merged() {
        let op = SparseOperator::from_triplets(2, [(0, 1, c(1.0)), (0, 1, c(2.0))]).unwrap();
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1), c(3.0));
        assert!(SparseOperator::from_triplets(2, [(2, 0, c(1.0))]).is_err());
    }
}
