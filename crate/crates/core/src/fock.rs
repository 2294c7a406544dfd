//! Truncated Fock modules of a Wick algebra.
//!
//! Level `n` carries the free tensor power `H^{⊗n}` with the sesquilinear
//! form `⟨x, y⟩_T = ⟨x, P_n(T) y⟩`. The metric follows the staircase
//! recursion
//!
//! ```text
//! P_0 = P_1 = 1,   P_{n+1} = (P_n ⊗ 1)(1 + T_n + T_n T_{n−1} + … + T_n ⋯ T_1).
//! ```
//!
//! Eigenvalues of `P_n` at or below `tol::KERNEL · λ_max` are treated as
//! kernel; the quotient by that kernel is what the ladder operators act on.

use nalgebra::SVD;

use crate::deformation::{check_anyonic, DeformationOp};
use crate::error::{Error, Result};
use crate::tensor::{
    c, check_size, hermitian_spectrum_tol, hermiticity_defect, identity, kron, kron_power, operator_norm, tensor_dim,
    CMatrix, CVector, HilbertSpec, C64,
};
use crate::tol;

/// Spectral data of one metric level.
#[derive(Debug, Clone)]
pub struct LevelData {
    /// `None` when `P_n` is not Hermitian (non-self-adjoint `T`).
    pub min_eig: Option<f64>,
    pub max_eig: Option<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct FockModule {
    spec: HilbertSpec,
    deformation: DeformationOp,
    cutoff: usize,
    p: Vec<CMatrix>,
    q_support: Vec<CMatrix>,
    quotient_bases: Vec<Option<CMatrix>>,
    levels: Vec<LevelData>,
}

impl FockModule {
    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn deformation(&self) -> &DeformationOp {
        &self.deformation
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn metric(&self, n: usize) -> &CMatrix {
        &self.p[n]
    }

    pub fn support_projector(&self, n: usize) -> &CMatrix {
        &self.q_support[n]
    }

    /// Columns `v_k / √λ_k`: orthonormal for the `P_n`-form and spanning the
    /// quotient. `None` for non-Hermitian metrics.
    pub fn quotient_basis(&self, n: usize) -> Option<&CMatrix> {
        self.quotient_bases[n].as_ref()
    }

    pub fn level(&self, n: usize) -> &LevelData {
        &self.levels[n]
    }

    pub fn quotient_dim(&self, n: usize) -> usize {
        self.levels[n].rank
    }

    pub fn free_dim(&self, n: usize) -> usize {
        self.spec.level_dim(n)
    }

    /// True when `P_n` has no kernel.
    pub fn strictly_positive(&self, n: usize) -> bool {
        self.levels[n].rank == self.free_dim(n) && self.levels[n].min_eig.is_some_and(|m| m > 0.0)
    }

    /// `‖(P_n/n!)² − P_n/n!‖ + ‖(P_n/n!)* − P_n/n!‖`, the projector defect of
    /// the normalised metric (zero for anyonic deformations).
    pub fn projector_residual(&self, n: usize) -> f64 {
        let scaled = &self.p[n] / c(factorial(n));
        operator_norm(&(&scaled * &scaled - &scaled)) + operator_norm(&(&scaled - scaled.adjoint()))
    }

    /// `⟨x, P_n y⟩`, conjugate-linear in `x`.
    pub fn inner_product(&self, x: &LevelTensor, y: &LevelTensor) -> Result<C64> {
        if x.level != y.level {
            return Err(Error::Dimension(format!("level mismatch: {} vs {}", x.level, y.level)));
        }
        if x.level > self.cutoff {
            return Err(Error::Dimension(format!(
                "level {} above cutoff {}",
                x.level, self.cutoff
            )));
        }
        Ok(x.coeffs.dotc(&(&self.p[x.level] * &y.coeffs)))
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Builds `P_0 … P_N`, their support projectors and quotient bases.
pub fn build_metric(t: &DeformationOp, cutoff: usize) -> Result<FockModule> {
    let d = t.d();
    let spec = HilbertSpec::new(d)?;
    check_size(
        &format!("metric P_{cutoff} (d = {d})"),
        tensor_dim(d, cutoff),
        tensor_dim(d, cutoff),
    )?;

    let mut p = vec![identity(1)];
    if cutoff >= 1 {
        p.push(identity(d));
    }
    for n in 1..cutoff {
        // (P_n ⊗ 1) · (1 + T_n + T_n T_{n−1} + … + T_n ⋯ T_1) on level n+1
        let lifted = kron(&p[n], &identity(d));
        let mut acc = lifted.clone();
        let mut word = lifted;
        for slot in (1..=n).rev() {
            word = t.apply_right(&word, slot, n + 1)?;
            acc += &word;
        }
        if acc.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("metric P_{}", n + 1)));
        }
        p.push(acc);
    }

    let mut q_support = Vec::with_capacity(p.len());
    let mut quotient_bases = Vec::with_capacity(p.len());
    let mut levels = Vec::with_capacity(p.len());
    for pn in &p {
        let (q, basis, data) = level_decomposition(pn)?;
        q_support.push(q);
        quotient_bases.push(basis);
        levels.push(data);
    }

    Ok(FockModule {
        spec,
        deformation: t.clone(),
        cutoff,
        p,
        q_support,
        quotient_bases,
        levels,
    })
}

fn level_decomposition(pn: &CMatrix) -> Result<(CMatrix, Option<CMatrix>, LevelData)> {
    let dim = pn.nrows();
    if hermiticity_defect(pn) <= tol::DEFAULT {
        let spec = hermitian_spectrum_tol(pn, tol::DEFAULT)?;
        let threshold = tol::KERNEL * spec.max().max(0.0);
        let kept: Vec<usize> = (0..dim).filter(|&k| spec.values[k] > threshold).collect();
        let mut support = CMatrix::zeros(dim, kept.len());
        let mut basis = CMatrix::zeros(dim, kept.len());
        for (col, &k) in kept.iter().enumerate() {
            let v = spec.vectors.column(k);
            support.set_column(col, &v);
            basis.set_column(col, &(v / c(spec.values[k].sqrt())));
        }
        let q = &support * support.adjoint();
        let data = LevelData {
            min_eig: Some(spec.min()),
            max_eig: Some(spec.max()),
            rank: kept.len(),
        };
        Ok((q, Some(basis), data))
    } else {
        // range projector from the left singular vectors
        let svd = SVD::new(pn.clone(), true, false);
        let u = svd.u.expect("requested U");
        let smax = svd.singular_values.max();
        let kept: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > tol::KERNEL * smax)
            .collect();
        let mut support = CMatrix::zeros(dim, kept.len());
        for (col, &k) in kept.iter().enumerate() {
            support.set_column(col, &u.column(k));
        }
        let data = LevelData {
            min_eig: None,
            max_eig: None,
            rank: kept.len(),
        };
        Ok((&support * support.adjoint(), None, data))
    }
}

/// Mirrored staircase `R̃_n = 1 + T_1 + T_1T_2 + … + T_1⋯T_{n−1}` on `H^{⊗n}`.
pub fn metric_left_factor(t: &DeformationOp, n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("left factor needs n >= 1".into()));
    }
    let d = t.d();
    check_size("left staircase", tensor_dim(d, n), tensor_dim(d, n))?;
    let dim = d.pow(n as u32);
    let mut acc = identity(dim);
    let mut word = identity(dim);
    for slot in 1..n {
        word = t.apply_right(&word, slot, n)?;
        acc += &word;
    }
    Ok(acc)
}

/// A vector of `H^{⊗n}` tagged with its level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTensor {
    pub level: usize,
    pub coeffs: CVector,
}

impl LevelTensor {
    pub fn new(level: usize, coeffs: CVector, d: usize) -> Result<Self> {
        if tensor_dim(d, level) != coeffs.len() as u128 {
            return Err(Error::Dimension(format!(
                "level-{level} tensor over d = {d} needs {} coefficients, got {}",
                tensor_dim(d, level),
                coeffs.len()
            )));
        }
        Ok(Self { level, coeffs })
    }

    /// The vacuum `Ω`.
    pub fn vacuum() -> Self {
        Self {
            level: 0,
            coeffs: CVector::from_element(1, c(1.0)),
        }
    }
}

/// `⟨x, y⟩_T` on module `m`.
pub fn inner_product_t(x: &LevelTensor, y: &LevelTensor, m: &FockModule) -> Result<C64> {
    m.inner_product(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Creation,
    Annihilation,
}

/// Block operator on the truncated tower: `blocks[n]` maps level `n` to
/// `n+1` (creation) or `n−1` (annihilation). Missing blocks are zero.
#[derive(Debug, Clone)]
pub struct LadderOp {
    pub direction: Direction,
    pub f: CVector,
    blocks: Vec<Option<CMatrix>>,
}

impl LadderOp {
    pub fn block(&self, n: usize) -> Option<&CMatrix> {
        self.blocks.get(n).and_then(Option::as_ref)
    }

    fn target(&self, n: usize) -> Option<usize> {
        match self.direction {
            Direction::Creation => Some(n + 1),
            Direction::Annihilation => n.checked_sub(1),
        }
    }

    /// Applies the operator to a single level; transitions leaving the
    /// truncated module return `None` (zero).
    pub fn apply(&self, x: &LevelTensor) -> Option<LevelTensor> {
        let block = self.block(x.level)?;
        Some(LevelTensor {
            level: self.target(x.level)?,
            coeffs: block * &x.coeffs,
        })
    }
}

fn check_one_particle(f: &CVector, m: &FockModule) -> Result<()> {
    if f.len() != m.spec.dim() {
        return Err(Error::Dimension(format!(
            "vector of length {} for d = {}",
            f.len(),
            m.spec.dim()
        )));
    }
    if m.cutoff == 0 {
        return Err(Error::InvalidParameter("ladder operators need cutoff >= 1".into()));
    }
    Ok(())
}

/// `a⁺(f)`: left tensoring `x ↦ f ⊗ x`; the top level maps to zero.
pub fn creation(f: &CVector, m: &FockModule) -> Result<LadderOp> {
    check_one_particle(f, m)?;
    let fcol = CMatrix::from_column_slice(f.len(), 1, f.as_slice());
    let mut blocks: Vec<Option<CMatrix>> = (0..m.cutoff)
        .map(|n| Some(kron(&fcol, &identity(m.spec.level_dim(n)))))
        .collect();
    blocks.push(None);
    Ok(LadderOp {
        direction: Direction::Creation,
        f: f.clone(),
        blocks,
    })
}

/// `a(f)`: first-slot contraction with `f̄` after the mirrored staircase,
/// `x ↦ (f* ⊗ 1) R̃_n x`. This is the adjoint of [`creation`] for the
/// `P`-form whenever `P_n = (1 ⊗ P_{n−1}) R̃_n`.
pub fn annihilation(f: &CVector, m: &FockModule) -> Result<LadderOp> {
    check_one_particle(f, m)?;
    let d = m.spec.dim();
    let mut blocks = vec![None];
    for n in 1..=m.cutoff {
        let stair = metric_left_factor(&m.deformation, n)?;
        let rest = m.spec.level_dim(n - 1);
        let mut block = CMatrix::zeros(rest, stair.ncols());
        for i in 0..d {
            let w = f[i].conj();
            if w == C64::default() {
                continue;
            }
            for r in 0..rest {
                for col in 0..stair.ncols() {
                    block[(r, col)] += w * stair[(i * rest + r, col)];
                }
            }
        }
        blocks.push(Some(block));
    }
    Ok(LadderOp {
        direction: Direction::Annihilation,
        f: f.clone(),
        blocks,
    })
}

/// Residuals of the three quadratic exchange relations on the quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationResiduals {
    /// `a(e_i)a⁺(e_j) − Σ t_{jl}^{ik} a⁺(e_k)a(e_l) − δ_ij`.
    pub mixed: f64,
    /// `a(e_i)a(e_j) − Σ t_{ij}^{kl} a(e_k)a(e_l)`.
    pub annihilation: f64,
    /// `a⁺(e_i)a⁺(e_j) − Σ t_{ij}^{kl} a⁺(e_k)a⁺(e_l)`.
    pub creation: f64,
    /// Mixed relation with the unshuffled coefficients `t_{ij}^{kl}`; agrees
    /// with `mixed` for real exchange phases, reported for comparison only.
    pub mixed_unshuffled: f64,
}

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        self.mixed.max(self.annihilation).max(self.creation)
    }
}

fn unit(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = c(1.0);
    v
}

/// Checks the exchange relations of an anyonic-type module, compressed to
/// the quotient and excluding transitions through the top level.
pub fn verify_anyonic_relations(m: &FockModule) -> Result<RelationResiduals> {
    let anyonic = check_anyonic(&m.deformation);
    if anyonic > tol::DEFAULT {
        return Err(Error::NotAnyonic(anyonic));
    }
    let d = m.spec.dim();
    let n_top = m.cutoff;
    let t = &m.deformation;
    let create: Vec<LadderOp> = (0..d).map(|i| creation(&unit(d, i), m)).collect::<Result<_>>()?;
    let annih: Vec<LadderOp> = (0..d).map(|i| annihilation(&unit(d, i), m)).collect::<Result<_>>()?;
    let blk = |op: &LadderOp, n: usize| op.block(n).expect("block inside truncation").clone();
    let q = |n: usize| &m.q_support[n];
    let compress = |target: usize, x: &CMatrix, source: usize| operator_norm(&(q(target) * x * q(source)));

    let mut res = RelationResiduals {
        mixed: 0.0,
        annihilation: 0.0,
        creation: 0.0,
        mixed_unshuffled: 0.0,
    };
    for i in 0..d {
        for j in 0..d {
            // mixed: level n → n, needs n + 1 ≤ N
            for n in 0..n_top {
                let dim = m.spec.level_dim(n);
                let base =
                    blk(&annih[i], n + 1) * blk(&create[j], n) - identity(dim) * c(if i == j { 1.0 } else { 0.0 });
                let mut shuffled = base.clone();
                let mut plain = base;
                if n >= 1 {
                    for k in 0..d {
                        for l in 0..d {
                            let term = blk(&create[k], n - 1) * blk(&annih[l], n);
                            shuffled -= &term * t.coefficient(j, l, i, k);
                            plain -= &term * t.coefficient(i, j, k, l);
                        }
                    }
                }
                res.mixed = res.mixed.max(compress(n, &shuffled, n));
                res.mixed_unshuffled = res.mixed_unshuffled.max(compress(n, &plain, n));
            }
            // annihilation pair: level n → n − 2
            for n in 2..=n_top {
                let mut x = blk(&annih[i], n - 1) * blk(&annih[j], n);
                for k in 0..d {
                    for l in 0..d {
                        let w = t.coefficient(i, j, k, l);
                        if w != C64::default() {
                            x -= blk(&annih[k], n - 1) * blk(&annih[l], n) * w;
                        }
                    }
                }
                res.annihilation = res.annihilation.max(compress(n - 2, &x, n));
            }
            // creation pair: level n → n + 2, needs n + 2 ≤ N
            for n in 0..n_top.saturating_sub(1) {
                let mut x = blk(&create[i], n + 1) * blk(&create[j], n);
                for k in 0..d {
                    for l in 0..d {
                        let w = t.coefficient(i, j, k, l);
                        if w != C64::default() {
                            x -= blk(&create[k], n + 1) * blk(&create[l], n) * w;
                        }
                    }
                }
                res.creation = res.creation.max(compress(n + 2, &x, n));
            }
        }
    }
    Ok(res)
}

/// Additive lift `dΓ(A)` level by level, with the symmetry indicator
/// `‖[T, 1⊗A + A⊗1]‖`.
#[derive(Debug, Clone)]
pub struct AdditiveLift {
    pub levels: Vec<CMatrix>,
    pub symmetry_indicator: f64,
}

/// Multiplicative lift `Γ(A) = ⊕ A^{⊗n}`.
#[derive(Debug, Clone)]
pub struct MultiplicativeLift {
    pub levels: Vec<CMatrix>,
    pub symmetry_indicator: f64,
    /// `max_n ‖Γ(A)* P_n Γ(A) − P_n‖ / ‖P_n‖`.
    pub isometry_residual: f64,
}

fn one_particle_check(a: &CMatrix, m: &FockModule) -> Result<()> {
    let d = m.spec.dim();
    if a.shape() != (d, d) {
        return Err(Error::Dimension(format!("one-particle operator must be {d}x{d}")));
    }
    Ok(())
}

fn symmetry_indicator(a: &CMatrix, t: &DeformationOp) -> f64 {
    let id = identity(a.nrows());
    let dgamma2 = kron(&id, a) + kron(a, &id);
    let m = t.matrix();
    operator_norm(&(m * &dgamma2 - &dgamma2 * m))
}

pub fn second_quantize_additive(a: &CMatrix, m: &FockModule) -> Result<AdditiveLift> {
    one_particle_check(a, m)?;
    let d = m.spec.dim();
    let levels = (0..=m.cutoff)
        .map(|n| {
            let dim = m.spec.level_dim(n);
            (1..=n).fold(CMatrix::zeros(dim, dim), |acc, k| {
                let left = identity(d.pow((k - 1) as u32));
                let right = identity(d.pow((n - k) as u32));
                acc + kron(&kron(&left, a), &right)
            })
        })
        .collect();
    Ok(AdditiveLift {
        levels,
        symmetry_indicator: symmetry_indicator(a, &m.deformation),
    })
}

pub fn second_quantize_multiplicative(a: &CMatrix, m: &FockModule) -> Result<MultiplicativeLift> {
    one_particle_check(a, m)?;
    let levels: Vec<CMatrix> = (0..=m.cutoff).map(|n| kron_power(a, n)).collect();
    let isometry_residual = levels
        .iter()
        .zip(&m.p)
        .map(|(g, pn)| operator_norm(&(g.adjoint() * pn * g - pn)) / operator_norm(pn).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(MultiplicativeLift {
        levels,
        symmetry_indicator: symmetry_indicator(a, &m.deformation),
        isometry_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{anyon_phase, q_flip};
    use crate::tensor::{basis_tensor, hermitian_spectrum};
    use crate::testutil::{max_abs, random_antisymmetric, random_hermitian, random_vector, rng};
    use std::f64::consts::PI;

    fn level(n: usize, v: CVector, d: usize) -> LevelTensor {
        LevelTensor::new(n, v, d).unwrap()
    }

    #[test]
    fn free_metric_is_identity() {
        let m = build_metric(&q_flip(0.0, 2).unwrap(), 4).unwrap();
        for n in 0..=4 {
            assert_eq!(m.metric(n), &identity(2usize.pow(n as u32)));
            assert_eq!(m.quotient_dim(n), 2usize.pow(n as u32));
            assert!(m.strictly_positive(n));
        }
    }

    /// 4×4 eigendecomposition oracle for `1 ± flip`.
    #[test]
    fn bosonic_and_fermionic_level_two() {
        let m = build_metric(&q_flip(1.0, 2).unwrap(), 2).unwrap();
        let flip = q_flip(1.0, 2).unwrap().matrix().clone();
        assert!(max_abs(m.metric(2), &(identity(4) + &flip)) < 1e-15);
        let s = hermitian_spectrum(m.metric(2)).unwrap();
        let expected = [0.0, 2.0, 2.0, 2.0];
        for (got, want) in s.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(m.quotient_dim(2), 3);

        let m = build_metric(&q_flip(-1.0, 2).unwrap(), 2).unwrap();
        assert_eq!(m.quotient_dim(2), 1);
    }

    #[test]
    fn left_factor_cases() {
        let t = q_flip(0.5, 2).unwrap();
        assert_eq!(metric_left_factor(&t, 1).unwrap(), identity(2));
        assert!(max_abs(&metric_left_factor(&t, 2).unwrap(), &(identity(4) + t.matrix())) < 1e-15);
        let m = build_metric(&t, 3).unwrap();
        let rhs = kron(&identity(2), m.metric(2)) * metric_left_factor(&t, 3).unwrap();
        assert!(max_abs(m.metric(3), &rhs) <= 1e-10 * operator_norm(m.metric(3)));
    }

    #[test]
    fn cross_recursion_for_braided_deformations() {
        let mut r = rng(21);
        let deformations = [
            q_flip(0.7, 2).unwrap(),
            q_flip(-0.4, 3).unwrap(),
            anyon_phase(&random_antisymmetric(&mut r, 2)).unwrap(),
            anyon_phase(&random_antisymmetric(&mut r, 3)).unwrap(),
        ];
        for t in &deformations {
            let m = build_metric(t, 4).unwrap();
            for n in 1..4 {
                let left = kron(&identity(t.d()), m.metric(n)) * metric_left_factor(t, n + 1).unwrap();
                assert!(max_abs(m.metric(n + 1), &left) <= 1e-10 * operator_norm(m.metric(n + 1)));
            }
        }
    }

    #[test]
    fn inner_product_cases() {
        let m = build_metric(&q_flip(0.6, 1).unwrap(), 3).unwrap();
        let omega = LevelTensor::vacuum();
        assert_eq!(m.inner_product(&omega, &omega).unwrap(), c(1.0));
        let x = level(2, basis_tensor(&[0, 0], 1), 1);
        assert!((m.inner_product(&x, &x).unwrap() - c(1.6)).norm() < 1e-15);
        let y = level(1, basis_tensor(&[0], 1), 1);
        assert!(m.inner_product(&x, &y).is_err());

        let free = build_metric(&q_flip(0.0, 2).unwrap(), 2).unwrap();
        let mut r = rng(22);
        let (a, b) = (random_vector(&mut r, 4), random_vector(&mut r, 4));
        let got = free
            .inner_product(&level(2, a.clone(), 2), &level(2, b.clone(), 2))
            .unwrap();
        assert!((got - a.dotc(&b)).norm() < 1e-14);
    }

    #[test]
    fn creation_cases() {
        let m = build_metric(&q_flip(0.0, 2).unwrap(), 3).unwrap();
        let a0 = creation(&unit(2, 0), &m).unwrap();
        let a1 = creation(&unit(2, 1), &m).unwrap();
        let once = a0.apply(&LevelTensor::vacuum()).unwrap();
        assert_eq!(once.coeffs, basis_tensor(&[0], 2));
        let twice = a1.apply(&once).unwrap();
        assert_eq!(twice.coeffs, basis_tensor(&[1, 0], 2));
        for n in 0..3 {
            let b = a0.block(n).unwrap();
            assert_eq!(b.shape(), (2usize.pow(n as u32 + 1), 2usize.pow(n as u32)));
            assert!((operator_norm(b) - 1.0).abs() < 1e-12);
        }
        // top level is truncated away
        assert!(a0.apply(&level(3, basis_tensor(&[0, 0, 0], 2), 2)).is_none());
    }

    #[test]
    fn annihilation_cases() {
        let m = build_metric(&q_flip(0.0, 2).unwrap(), 3).unwrap();
        let a = annihilation(&unit(2, 0), &m).unwrap();
        assert!(a.apply(&LevelTensor::vacuum()).is_none());
        let out = a.apply(&level(2, basis_tensor(&[0, 1], 2), 2)).unwrap();
        assert_eq!(out.coeffs, basis_tensor(&[1], 2));
    }

    #[test]
    fn annihilation_is_adjoint_for_p_form() {
        let mut r = rng(23);
        for t in [
            q_flip(0.5, 2).unwrap(),
            anyon_phase(&random_antisymmetric(&mut r, 2)).unwrap(),
        ] {
            let m = build_metric(&t, 4).unwrap();
            let f = random_vector(&mut r, 2);
            let up = creation(&f, &m).unwrap();
            let down = annihilation(&f, &m).unwrap();
            for n in 0..4 {
                let x = level(n, random_vector(&mut r, 2usize.pow(n as u32)), 2);
                let y = level(n + 1, random_vector(&mut r, 2usize.pow(n as u32 + 1)), 2);
                let lhs = m.inner_product(&up.apply(&x).unwrap(), &y).unwrap();
                let rhs = m.inner_product(&x, &down.apply(&y).unwrap()).unwrap();
                assert!(
                    (lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0),
                    "level {n}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn relations_hold_for_bosons_fermions_and_anyons() {
        let bosons = anyon_phase(&[vec![0.0; 2], vec![0.0; 2]]).unwrap();
        let fermions = q_flip(-1.0, 2).unwrap();
        let anyons = anyon_phase(&[vec![0.0, PI / 3.0], vec![-PI / 3.0, 0.0]]).unwrap();
        for t in [&bosons, &fermions] {
            let res = verify_anyonic_relations(&build_metric(t, 4).unwrap()).unwrap();
            assert!(res.max() <= 1e-10, "{res:?}");
            assert!(res.mixed_unshuffled <= 1e-10);
        }
        let res = verify_anyonic_relations(&build_metric(&anyons, 4).unwrap()).unwrap();
        assert!(res.max() <= 1e-10, "{res:?}");
        // the unshuffled mixed relation only holds for real exchange phases
        assert!(res.mixed_unshuffled > 0.1);
    }

    #[test]
    fn relations_reject_non_anyonic() {
        let m = build_metric(&q_flip(0.5, 2).unwrap(), 2).unwrap();
        assert!(matches!(verify_anyonic_relations(&m), Err(Error::NotAnyonic(_))));
    }

    #[test]
    fn anyonic_projector_and_kernel() {
        let mut r = rng(24);
        let t = anyon_phase(&random_antisymmetric(&mut r, 3)).unwrap();
        let m = build_metric(&t, 4).unwrap();
        for n in 0..=4 {
            assert!(m.projector_residual(n) <= 1e-10);
            let normalised = m.metric(n) / c(factorial(n));
            let complement = identity(normalised.nrows()) - &normalised;
            let rank = complement.singular_values().iter().filter(|&&s| s > 1e-8).count();
            assert_eq!(rank, m.free_dim(n) - m.quotient_dim(n));
        }
        // two-particle vectors in the quotient are T-symmetric
        let q2 = m.support_projector(2);
        let x = q2 * (identity(9) - t.matrix()) * q2;
        assert!(operator_norm(&x) <= 1e-10);
    }

    #[test]
    fn quotient_basis_is_p_orthonormal() {
        let m = build_metric(&q_flip(0.3, 2).unwrap(), 3).unwrap();
        for n in 0..=3 {
            let w = m.quotient_basis(n).unwrap();
            let gram = w.adjoint() * m.metric(n) * w;
            assert!(max_abs(&gram, &identity(w.ncols())) < 1e-10);
            let q = m.support_projector(n);
            assert!(max_abs(&(q * q), q) < 1e-10);
        }
    }

    #[test]
    fn metric_hermitian_and_positive_for_small_norm() {
        let mut r = rng(25);
        let h = random_hermitian(&mut r, 9);
        let t = DeformationOp::new(3, &h * c(0.45 / operator_norm(&h))).unwrap();
        let m = build_metric(&t, 4).unwrap();
        for n in 0..=4 {
            assert!(hermiticity_defect(m.metric(n)) <= 1e-10);
            assert!(m.level(n).min_eig.unwrap() > 0.0);
        }
    }

    #[test]
    fn second_quantization_additive_cases() {
        let m = build_metric(&q_flip(1.0, 2).unwrap(), 3).unwrap();
        let lift = second_quantize_additive(&identity(2), &m).unwrap();
        for n in 0..=3 {
            assert_eq!(lift.levels[n], identity(2usize.pow(n as u32)) * c(n as f64));
        }
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(2.0)]));
        let lift = second_quantize_additive(&a, &m).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0), c(3.0), c(3.0), c(4.0)]));
        assert_eq!(lift.levels[2], expected);

        let t = anyon_phase(&[vec![0.0, 0.8], vec![-0.8, 0.0]]).unwrap();
        let m = build_metric(&t, 2).unwrap();
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.3), c(-1.1)]));
        assert!(second_quantize_additive(&a, &m).unwrap().symmetry_indicator <= 1e-12);
    }

    #[test]
    fn second_quantization_multiplicative_cases() {
        let t = anyon_phase(&[vec![0.0, 0.8], vec![-0.8, 0.0]]).unwrap();
        let m = build_metric(&t, 3).unwrap();
        let lift = second_quantize_multiplicative(&identity(2), &m).unwrap();
        assert!(lift
            .levels
            .iter()
            .enumerate()
            .all(|(n, g)| *g == identity(2usize.pow(n as u32))));

        let (x, y) = (C64::new(0.3, 0.1), C64::new(-2.0, 0.5));
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![x, y]));
        let lift = second_quantize_multiplicative(&a, &m).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![x * x, x * y, y * x, y * y]));
        assert_eq!(lift.levels[2], expected);

        let u = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::from_polar(1.0, 0.4),
            C64::from_polar(1.0, -1.3),
        ]));
        assert!(second_quantize_multiplicative(&u, &m).unwrap().isometry_residual <= 1e-10);
    }

    #[test]
    fn size_guard_and_errors() {
        let t = q_flip(0.2, 3).unwrap();
        assert!(build_metric(&t, 7).unwrap_err().is_size_guard());
        let m = build_metric(&t, 0).unwrap();
        assert_eq!(m.metric(0), &identity(1));
        assert!(creation(&unit(3, 0), &m).is_err());
    }
}
