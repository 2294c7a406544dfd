//! Dense complex linear algebra over tensor powers `H^{⊗n}` of a
//! finite-dimensional one-particle space.
//!
//! Basis vectors `e_{i1} ⊗ … ⊗ e_{in}` are addressed by a big-endian
//! mixed-radix index: slot 1 is the most significant digit. Every module of
//! the crate uses this single convention, so `kron(A, B)` acts with `A` on
//! the leading slots and `B` on the trailing ones.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Environment variable overriding [`DEFAULT_MAX_ENTRIES`].
pub const MAX_DIM_ENV: &str = "WICKFOCK_MAX_DIM";
/// Default limit on the number of entries of any dense matrix we allocate.
pub const DEFAULT_MAX_ENTRIES: usize = 1_000_000;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Current dense-size limit, honouring `WICKFOCK_MAX_DIM`.
pub fn max_entries() -> usize {
    std::env::var(MAX_DIM_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_ENTRIES)
}

/// Fails with [`Error::SizeGuard`] if a `rows x cols` dense matrix is over the limit.
pub fn check_size(what: &str, rows: u128, cols: u128) -> Result<()> {
    let limit = max_entries();
    let entries = rows.saturating_mul(cols);
    if entries > limit as u128 {
        return Err(Error::SizeGuard {
            what: what.to_string(),
            rows: rows.min(usize::MAX as u128) as usize,
            cols: cols.min(usize::MAX as u128) as usize,
            entries,
            limit,
        });
    }
    Ok(())
}

/// `d^n` without overflow.
pub fn tensor_dim(d: usize, n: usize) -> u128 {
    (d as u128).saturating_pow(n as u32)
}

/// One-particle space `C^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    d: usize,
}

impl HilbertSpec {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("one-particle dimension must be >= 1".into()));
        }
        Ok(Self { d })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Dimension of the level-`n` tensor power.
    pub fn level_dim(&self, n: usize) -> usize {
        self.d.pow(n as u32)
    }
}

/// Basis label `(i1, …, in)` of `H^{⊗n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    digits: Vec<usize>,
}

impl MultiIndex {
    pub fn new(digits: Vec<usize>, d: usize) -> Result<Self> {
        if let Some(&bad) = digits.iter().find(|&&i| i >= d) {
            return Err(Error::InvalidParameter(format!("digit {bad} out of range for d = {d}")));
        }
        Ok(Self { digits })
    }

    pub fn decode(mut index: usize, d: usize, n: usize) -> Self {
        let mut digits = vec![0; n];
        for slot in (0..n).rev() {
            digits[slot] = index % d;
            index /= d;
        }
        Self { digits }
    }

    pub fn encode(&self, d: usize) -> usize {
        self.digits.iter().fold(0, |acc, &i| acc * d + i)
    }

    pub fn level(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Basis vector `e_{i1} ⊗ … ⊗ e_{in}`.
pub fn basis_tensor(digits: &[usize], d: usize) -> CVector {
    let n = digits.len();
    let mut v = CVector::zeros(d.pow(n as u32));
    v[digits.iter().fold(0, |acc, &i| acc * d + i)] = c(1.0);
    v
}

/// Kronecker product `(A⊗B)[(i1,i2),(j1,j2)] = A[i1,j1]·B[i2,j2]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for j1 in 0..ac {
        for i1 in 0..ar {
            let x = a[(i1, j1)];
            if x == C64::default() {
                continue;
            }
            for j2 in 0..bc {
                for i2 in 0..br {
                    out[(i1 * br + i2, j1 * bc + j2)] = x * b[(i2, j2)];
                }
            }
        }
    }
    out
}

/// `A^{⊗n}`; the empty power is the 1×1 identity.
pub fn kron_power(a: &CMatrix, n: usize) -> CMatrix {
    (0..n).fold(identity(1), |acc, _| kron(&acc, a))
}

fn two_slot_check(t: &CMatrix, slot: usize, n: usize, d: usize) -> Result<()> {
    if slot == 0 || slot + 1 > n {
        return Err(Error::SlotOutOfRange { slot, level: n });
    }
    if t.shape() != (d * d, d * d) {
        return Err(Error::Dimension(format!(
            "two-slot operator must be {0}x{0}, got {1}x{2}",
            d * d,
            t.nrows(),
            t.ncols()
        )));
    }
    Ok(())
}

/// `1^{⊗(i−1)} ⊗ T ⊗ 1^{⊗(n−1−i)}`, with `slot = i` 1-based.
pub fn embed_slot(t: &CMatrix, slot: usize, n: usize, d: usize) -> Result<CMatrix> {
    two_slot_check(t, slot, n, d)?;
    check_size("slot embedding", tensor_dim(d, n), tensor_dim(d, n))?;
    let left = identity(d.pow((slot - 1) as u32));
    let right = identity(d.pow((n - 1 - slot) as u32));
    Ok(kron(&kron(&left, t), &right))
}

fn nonzeros(t: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut nz = Vec::new();
    for col in 0..t.ncols() {
        for row in 0..t.nrows() {
            let v = t[(row, col)];
            if v != C64::default() {
                nz.push((row, col, v));
            }
        }
    }
    nz
}

/// Slot geometry: `index = (hi · d² + pair) · stride + lo`.
struct SlotLayout {
    d2: usize,
    stride: usize,
    blocks: usize,
}

impl SlotLayout {
    fn new(slot: usize, n: usize, d: usize) -> Self {
        Self {
            d2: d * d,
            stride: d.pow((n - 1 - slot) as u32),
            blocks: d.pow((slot - 1) as u32),
        }
    }

    fn index(&self, hi: usize, pair: usize, lo: usize) -> usize {
        (hi * self.d2 + pair) * self.stride + lo
    }
}

/// `T_slot · M` without materialising the embedded operator.
pub fn apply_slot_left(t: &CMatrix, slot: usize, n: usize, d: usize, m: &CMatrix) -> Result<CMatrix> {
    two_slot_check(t, slot, n, d)?;
    let layout = SlotLayout::new(slot, n, d);
    if m.nrows() != layout.blocks * layout.d2 * layout.stride {
        return Err(Error::Dimension(format!(
            "left operand has {} rows, level {n} needs {}",
            m.nrows(),
            d.pow(n as u32)
        )));
    }
    let nz = nonzeros(t);
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for col in 0..m.ncols() {
        let src = m.column(col);
        let mut dst = out.column_mut(col);
        for hi in 0..layout.blocks {
            for &(kl, ab, v) in &nz {
                for lo in 0..layout.stride {
                    dst[layout.index(hi, kl, lo)] += v * src[layout.index(hi, ab, lo)];
                }
            }
        }
    }
    Ok(out)
}

/// `M · T_slot` without materialising the embedded operator.
pub fn apply_slot_right(m: &CMatrix, t: &CMatrix, slot: usize, n: usize, d: usize) -> Result<CMatrix> {
    two_slot_check(t, slot, n, d)?;
    let layout = SlotLayout::new(slot, n, d);
    if m.ncols() != layout.blocks * layout.d2 * layout.stride {
        return Err(Error::Dimension(format!(
            "right operand has {} columns, level {n} needs {}",
            m.ncols(),
            d.pow(n as u32)
        )));
    }
    let nz = nonzeros(t);
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    // (M T)[:, (hi,kl,lo)] = Σ_ab T[ab,kl] · M[:, (hi,ab,lo)]
    for hi in 0..layout.blocks {
        for &(ab, kl, v) in &nz {
            for lo in 0..layout.stride {
                let src = layout.index(hi, ab, lo);
                let dst = layout.index(hi, kl, lo);
                for row in 0..m.nrows() {
                    out[(row, dst)] += m[(row, src)] * v;
                }
            }
        }
    }
    Ok(out)
}

/// Sparse operator `e_j ↦ coeff[j] · e_{target[j]}`: a permutation with
/// per-column weights. Flips, phase flips and products of them stay in this
/// form at any level.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedPermutation {
    target: Vec<usize>,
    coeff: Vec<C64>,
}

impl PhasedPermutation {
    pub fn identity(dim: usize) -> Self {
        Self {
            target: (0..dim).collect(),
            coeff: vec![c(1.0); dim],
        }
    }

    pub fn new(target: Vec<usize>, coeff: Vec<C64>) -> Result<Self> {
        let dim = target.len();
        if coeff.len() != dim {
            return Err(Error::Dimension(
                "target and coefficient arrays differ in length".into(),
            ));
        }
        let mut seen = vec![false; dim];
        for &t in &target {
            if t >= dim || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidParameter("index map is not a permutation".into()));
            }
        }
        Ok(Self { target, coeff })
    }

    /// Weighted swap of slots `slot, slot+1` on `H^{⊗n}`:
    /// `e_{…a b…} ↦ weight(a, b) · e_{…b a…}`.
    pub fn slot_swap(d: usize, n: usize, slot: usize, weight: impl Fn(usize, usize) -> C64) -> Result<Self> {
        if slot == 0 || slot + 1 > n {
            return Err(Error::SlotOutOfRange { slot, level: n });
        }
        let layout = SlotLayout::new(slot, n, d);
        let dim = d.pow(n as u32);
        let mut target = vec![0; dim];
        let mut coeff = vec![C64::default(); dim];
        for hi in 0..layout.blocks {
            for a in 0..d {
                for b in 0..d {
                    let w = weight(a, b);
                    for lo in 0..layout.stride {
                        let from = layout.index(hi, a * d + b, lo);
                        target[from] = layout.index(hi, b * d + a, lo);
                        coeff[from] = w;
                    }
                }
            }
        }
        Ok(Self { target, coeff })
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn coeff(&self) -> &[C64] {
        &self.coeff
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let target = other.target.iter().map(|&t| self.target[t]).collect();
        let coeff = other
            .target
            .iter()
            .zip(&other.coeff)
            .map(|(&t, &w)| self.coeff[t] * w)
            .collect();
        Self { target, coeff }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (j, (&t, &w)) in self.target.iter().zip(&self.coeff).enumerate() {
            m[(t, j)] += w;
        }
        m
    }

    /// Adds `scale · self` into `acc`.
    pub fn accumulate_into(&self, acc: &mut CMatrix, scale: C64) {
        for (j, (&t, &w)) in self.target.iter().zip(&self.coeff).enumerate() {
            acc[(t, j)] += scale * w;
        }
    }

    /// `M · self`, column moves only.
    pub fn apply_right(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for (j, (&t, &w)) in self.target.iter().zip(&self.coeff).enumerate() {
            // (M S)[:, j] = w · M[:, t]
            let src = m.column(t);
            out.column_mut(j).axpy(w, &src, c(0.0));
        }
        out
    }

    /// `self · M`, row moves only.
    pub fn apply_left(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for (j, (&t, &w)) in self.target.iter().zip(&self.coeff).enumerate() {
            for col in 0..m.ncols() {
                out[(t, col)] += w * m[(j, col)];
            }
        }
        out
    }
}

/// Relative Hermiticity defect `‖A − A*‖_F / ‖A‖_F` (0 for the zero matrix).
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let scale = a.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (a - a.adjoint()).norm() / scale
}

/// Ascending eigenvalues and orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V · diag(f(λ)) · V*`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for x in scaled.column_mut(k).iter_mut() {
                *x *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_spectrum(a: &CMatrix) -> Result<Spectrum> {
    hermitian_spectrum_tol(a, tol::HERMITIAN)
}

/// As [`hermitian_spectrum`] with a caller-chosen Hermiticity tolerance.
/// The input is symmetrised before diagonalisation.
pub fn hermitian_spectrum_tol(a: &CMatrix, tolerance: f64) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "spectrum of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("eigenvalue input".into()));
    }
    let defect = hermiticity_defect(a);
    if defect > tolerance {
        return Err(Error::NotHermitian { defect, tolerance });
    }
    let sym = (a + a.adjoint()) * c(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), a.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(Spectrum { values, vectors })
}

/// `e^{−βh}` by spectral calculus.
pub fn matrix_semigroup(h: &CMatrix, beta: f64) -> Result<CMatrix> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    let spec = hermitian_spectrum(h)?;
    let mut g = spec.apply_fn(|lam| c((-beta * lam).exp()));
    // exact Hermitian output
    g = (&g + g.adjoint()) * c(0.5);
    Ok(g)
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// Matrix dump `{"rows", "cols", "re", "im"}` with row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixDump {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { rows, cols, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Dimension(format!(
                "dump declares {}x{} but has {} real / {} imaginary entries",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |r, c| {
            C64::new(self.re[r * self.cols + c], self.im[r * self.cols + c])
        }))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
