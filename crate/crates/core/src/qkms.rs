//! Gauge-invariant quasi-free functionals on the q-relations
//! `a(f)a⁺(g) − q a⁺(g)a(f) = ⟨f, g⟩`.
//!
//! The two-point functions of the β-KMS state for `α_t(a⁺(f)) = a⁺(e^{ith}f)`
//! are
//!
//! ```text
//! ω(a(f) a⁺(g)) = ⟨f, (1 − q e^{−βh})^{-1} g⟩
//! ω(a⁺(f) a(g)) = ⟨g, e^{−βh} (1 − q e^{−βh})^{-1} f⟩
//! ```
//!
//! and higher moments are sums over pair partitions weighted by
//! `q^{#crossings}`.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{hermitian_spectrum_tol, hermiticity_defect, CMatrix, CVector, C64};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sigma {
    /// Creation `a⁺(f)`.
    Plus,
    /// Annihilation `a(f)`.
    Minus,
}

impl Sigma {
    pub fn flip(self) -> Self {
        match self {
            Sigma::Plus => Sigma::Minus,
            Sigma::Minus => Sigma::Plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub sigma: Sigma,
    pub f: CVector,
}

impl Factor {
    pub fn create(f: CVector) -> Self {
        Self { sigma: Sigma::Plus, f }
    }

    pub fn annihilate(f: CVector) -> Self {
        Self { sigma: Sigma::Minus, f }
    }
}

/// Ordered product of ladder operators; the empty word is the identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Monomial {
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn new(factors: Vec<Factor>) -> Self {
        Self { factors }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `(a^{σ_1}(f_1) ⋯ a^{σ_n}(f_n))* = a^{−σ_n}(f_n) ⋯ a^{−σ_1}(f_1)`.
    pub fn adjoint(&self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .rev()
                .map(|x| Factor {
                    sigma: x.sigma.flip(),
                    f: x.f.clone(),
                })
                .collect(),
        }
    }

    pub fn then(&self, other: &Monomial) -> Self {
        Self {
            factors: self.factors.iter().chain(&other.factors).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QKMSParams {
    q: f64,
    beta: f64,
    h: CMatrix,
    /// `(1 − q e^{−βh})^{-1}`
    resolvent: CMatrix,
    /// `e^{−βh} (1 − q e^{−βh})^{-1}`
    thermal: CMatrix,
    boltzmann: CMatrix,
    inverse_boltzmann: CMatrix,
    min_eig: f64,
}

impl QKMSParams {
    pub fn new(q: f64, beta: f64, h: CMatrix) -> Result<Self> {
        if !(-1.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("q must lie in [-1, 1], got {q}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let spec = hermitian_spectrum_tol(&h, tol::HERMITIAN)?;
        let min_eig = spec.min();
        if !(min_eig > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "generator must be strictly positive, smallest eigenvalue is {min_eig}"
            )));
        }
        let resolvent = spec.apply_fn(|e| C64::from(1.0 / (1.0 - q * (-beta * e).exp())));
        let thermal = spec.apply_fn(|e| {
            let x = (-beta * e).exp();
            C64::from(x / (1.0 - q * x))
        });
        let boltzmann = spec.apply_fn(|e| C64::from((-beta * e).exp()));
        let inverse_boltzmann = spec.apply_fn(|e| C64::from((beta * e).exp()));
        Ok(Self {
            q,
            beta,
            h,
            resolvent,
            thermal,
            boltzmann,
            inverse_boltzmann,
            min_eig,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    /// Same generator and `q` at a different inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.q, beta, self.h.clone())
    }

    fn check(&self, f: &CVector) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "vector of length {} for d = {}",
                f.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `ω(left · right)` for two ladder operators.
pub fn two_point(p: &QKMSParams, left: &Factor, right: &Factor) -> C64 {
    match (left.sigma, right.sigma) {
        (Sigma::Minus, Sigma::Plus) => left.f.dotc(&(&p.resolvent * &right.f)),
        (Sigma::Plus, Sigma::Minus) => right.f.dotc(&(&p.thermal * &left.f)),
        _ => C64::default(),
    }
}

/// Fock vacuum two-point function: `⟨f, g⟩` for `a(f)a⁺(g)`, zero otherwise.
pub fn vacuum_two_point(left: &Factor, right: &Factor) -> C64 {
    match (left.sigma, right.sigma) {
        (Sigma::Minus, Sigma::Plus) => left.f.dotc(&right.f),
        _ => C64::default(),
    }
}

/// Pairs `(α, β)` with `α < β`, 0-based, sorted by `α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    pub pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Checks the exact-cover and ordering invariants.
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = 2 * pairs.len();
        let mut seen = vec![false; n];
        for &(a, b) in &pairs {
            if a >= b || b >= n || seen[a] || seen[b] {
                return Err(Error::InvalidParameter(format!(
                    "{pairs:?} is not a pair partition of 0..{n}"
                )));
            }
            seen[a] = true;
            seen[b] = true;
        }
        pairs.sort_unstable();
        Ok(Self { pairs })
    }
}

/// All `(2k − 1)!!` pair partitions of `{0, …, 2k−1}`.
pub fn enumerate_pair_partitions(k: usize) -> Result<Vec<PairPartition>> {
    if k > 8 {
        return Err(Error::InvalidParameter(format!(
            "pair partitions of 2k = {} points: k exceeds 8",
            2 * k
        )));
    }
    let mut out = Vec::new();
    let mut pairs = Vec::with_capacity(k);
    extend_partitions(&mut vec![false; 2 * k], &mut pairs, &mut out);
    Ok(out)
}

fn extend_partitions(used: &mut [bool], pairs: &mut Vec<(usize, usize)>, out: &mut Vec<PairPartition>) {
    let Some(i) = used.iter().position(|&u| !u) else {
        out.push(PairPartition { pairs: pairs.clone() });
        return;
    };
    used[i] = true;
    for j in i + 1..used.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        pairs.push((i, j));
        extend_partitions(used, pairs, out);
        pairs.pop();
        used[j] = false;
    }
    used[i] = false;
}

/// Number of pairs of pairs with `α_i < α_j < β_i < β_j`.
pub fn crossing_number(mu: &PairPartition) -> usize {
    mu.pairs
        .iter()
        .tuple_combinations()
        .filter(|&(&(a1, b1), &(a2, b2))| (a1 < a2 && a2 < b1 && b1 < b2) || (a2 < a1 && a1 < b2 && b2 < b1))
        .count()
}

fn pair_sum(m: &Monomial, q: f64, pair: &(dyn Fn(&Factor, &Factor) -> C64 + Sync)) -> C64 {
    let n = m.len();
    if n % 2 == 1 {
        return C64::default();
    }
    if n == 0 {
        return C64::from(1.0);
    }
    // first unpaired index i is matched with j; every index already used
    // inside (i, j) is the right end of an earlier pair that crosses (i, j)
    fn recurse(
        m: &Monomial,
        q: f64,
        pair: &(dyn Fn(&Factor, &Factor) -> C64 + Sync),
        used: u32,
        crossings: i32,
    ) -> C64 {
        let n = m.len();
        let full = (1u32 << n) - 1;
        if used == full {
            return C64::from(q.powi(crossings));
        }
        let i = (!used).trailing_zeros() as usize;
        let mut total = C64::default();
        for j in i + 1..n {
            if used & (1 << j) != 0 {
                continue;
            }
            let value = pair(&m.factors[i], &m.factors[j]);
            if value == C64::default() {
                continue;
            }
            let between = used & ((1u32 << j) - 1) & !((1u32 << (i + 1)) - 1);
            let added = between.count_ones() as i32;
            if q == 0.0 && crossings + added > 0 {
                continue;
            }
            total += value * recurse(m, q, pair, used | (1 << i) | (1 << j), crossings + added);
        }
        total
    }
    recurse(m, q, pair, 0, 0)
}

fn check_monomial(p: &QKMSParams, m: &Monomial, limit: usize) -> Result<()> {
    if m.len() > limit {
        return Err(Error::InvalidParameter(format!(
            "monomial has {} factors, limit is {limit}",
            m.len()
        )));
    }
    m.factors.iter().try_for_each(|x| p.check(&x.f))
}

/// `Σ_μ q^{#μ} Π_{(α,β)∈μ} ω(a^{σ_α}(f_α) a^{σ_β}(f_β))`.
pub fn moment(p: &QKMSParams, m: &Monomial) -> Result<C64> {
    check_monomial(p, m, 16)?;
    Ok(pair_sum(m, p.q, &|l, r| two_point(p, l, r)))
}

/// Same pair sum with the Fock vacuum two-point function.
pub fn vacuum_moment(p: &QKMSParams, m: &Monomial) -> Result<C64> {
    check_monomial(p, m, 16)?;
    Ok(pair_sum(m, p.q, &vacuum_two_point))
}

/// `α_{iβ}`: `a⁺(f) ↦ a⁺(e^{−βh}f)`, `a(f) ↦ a(e^{βh}f)`.
pub fn imaginary_time_shift(p: &QKMSParams, m: &Monomial) -> Monomial {
    Monomial {
        factors: m
            .factors
            .iter()
            .map(|x| Factor {
                sigma: x.sigma,
                f: match x.sigma {
                    Sigma::Plus => &p.boltzmann * &x.f,
                    Sigma::Minus => &p.inverse_boltzmann * &x.f,
                },
            })
            .collect(),
    }
}

/// `|ω(A α_{iβ}(B)) − ω(B A)|`.
pub fn kms_residual(p: &QKMSParams, a: &Monomial, b: &Monomial) -> Result<f64> {
    if a.len() + b.len() > 12 {
        return Err(Error::InvalidParameter(format!(
            "KMS check on {} factors, limit is 12",
            a.len() + b.len()
        )));
    }
    let lhs = moment(p, &a.then(&imaginary_time_shift(p, b)))?;
    let rhs = moment(p, &b.then(a))?;
    Ok((lhs - rhs).norm())
}

/// `|ω_β(m) − ω_vacuum(m)|`.
pub fn vacuum_limit_check(p: &QKMSParams, m: &Monomial) -> Result<f64> {
    Ok((moment(p, m)? - vacuum_moment(p, m)?).norm())
}

/// Exponential rate of the approach to the vacuum: minus the least-squares
/// slope of `ln |ω_β(m) − ω_vacuum(m)|` against `β`.
pub fn vacuum_decay_rate(p: &QKMSParams, m: &Monomial, betas: &[f64]) -> Result<f64> {
    if betas.len() < 2 {
        return Err(Error::InvalidParameter(
            "decay fit needs at least two temperatures".into(),
        ));
    }
    let points = betas
        .iter()
        .map(|&b| {
            let r = vacuum_limit_check(&p.with_beta(b)?, m)?;
            if !(r > 0.0) {
                return Err(Error::Verification(format!("no vacuum deviation left at beta = {b}")));
            }
            Ok((b, r.ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// All words of length `0..=degree` over `{a(v), a⁺(v)}`.
pub fn gram_words(vectors: &[CVector], degree: usize) -> Vec<Monomial> {
    let letters: Vec<Factor> = vectors
        .iter()
        .flat_map(|v| [Factor::annihilate(v.clone()), Factor::create(v.clone())])
        .collect();
    let mut words = vec![Monomial::default()];
    for len in 1..=degree {
        words.extend(
            (0..len)
                .map(|_| letters.iter())
                .multi_cartesian_product()
                .map(|w| Monomial::new(w.into_iter().cloned().collect())),
        );
    }
    words
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramEvidence {
    pub min_eig: f64,
    pub hermiticity_defect: f64,
    pub size: usize,
}

/// Smallest eigenvalue of `M_uv = ω(u* v)` over [`gram_words`].
pub fn gram_psd_evidence(p: &QKMSParams, degree: usize, vectors: &[CVector]) -> Result<GramEvidence> {
    if degree > 3 {
        return Err(Error::InvalidParameter(format!("gram degree {degree} exceeds 3")));
    }
    vectors.iter().try_for_each(|v| p.check(v))?;
    let words = gram_words(vectors, degree);
    let size = words.len();
    let adjoints: Vec<Monomial> = words.iter().map(Monomial::adjoint).collect();
    let entries: Vec<C64> = (0..size * size)
        .into_par_iter()
        .map(|k| moment(p, &adjoints[k / size].then(&words[k % size])))
        .collect::<Result<_>>()?;
    let gram = CMatrix::from_fn(size, size, |i, j| entries[i * size + j]);
    let defect = hermiticity_defect(&gram);
    if defect > tol::DEFAULT {
        return Err(Error::NotHermitian {
            defect,
            tolerance: tol::DEFAULT,
        });
    }
    let spec = hermitian_spectrum_tol(&gram, tol::DEFAULT)?;
    Ok(GramEvidence {
        min_eig: spec.min(),
        hermiticity_defect: defect,
        size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, identity, kron, matrix_semigroup};
    use crate::testutil::{random_hermitian, random_vector, rng};
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn one_mode(q: f64) -> QKMSParams {
        QKMSParams::new(q, 1.0, CMatrix::from_element(1, 1, c(LN_2))).unwrap()
    }

    fn e0() -> CVector {
        CVector::from_element(1, c(1.0))
    }

    fn positive_h(seed: u64, d: usize) -> CMatrix {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, d);
        &a * a.adjoint() + identity(d) * c(0.5)
    }

    fn word(r: &mut impl rand::Rng, d: usize, len: usize) -> Monomial {
        Monomial::new(
            (0..len)
                .map(|_| {
                    let f = random_vector(r, d);
                    if r.random_bool(0.5) {
                        Factor::create(f)
                    } else {
                        Factor::annihilate(f)
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn two_point_single_mode() {
        let p = one_mode(0.5);
        let (a, ad) = (Factor::annihilate(e0()), Factor::create(e0()));
        assert!((two_point(&p, &a, &ad) - c(4.0 / 3.0)).norm() < 1e-15);
        assert!((two_point(&p, &ad, &a) - c(2.0 / 3.0)).norm() < 1e-15);
        assert_eq!(two_point(&p, &ad, &ad), C64::default());
        assert!((two_point(&one_mode(1.0), &a, &ad) - c(2.0)).norm() < 1e-15);
        assert!((two_point(&one_mode(-1.0), &a, &ad) - c(2.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn two_point_matches_resolvent_formulas() {
        let h = positive_h(61, 3);
        let (q, beta) = (0.3, 0.9);
        let p = QKMSParams::new(q, beta, h.clone()).unwrap();
        let g = matrix_semigroup(&h, beta).unwrap();
        let res = (identity(3) - &g * c(q)).try_inverse().unwrap();
        let mut r = rng(62);
        let (f, v) = (random_vector(&mut r, 3), random_vector(&mut r, 3));
        let eq1 = f.dotc(&(&res * &v));
        let eq2 = v.dotc(&(&g * &res * &f));
        assert!((two_point(&p, &Factor::annihilate(f.clone()), &Factor::create(v.clone())) - eq1).norm() < 1e-12);
        assert!((two_point(&p, &Factor::create(f), &Factor::annihilate(v)) - eq2).norm() < 1e-12);
    }

    #[test]
    fn partition_enumeration() {
        assert_eq!(enumerate_pair_partitions(0).unwrap().len(), 1);
        assert_eq!(enumerate_pair_partitions(1).unwrap()[0].pairs, vec![(0, 1)]);
        let k2: Vec<Vec<(usize, usize)>> = enumerate_pair_partitions(2)
            .unwrap()
            .into_iter()
            .map(|p| p.pairs)
            .collect();
        assert_eq!(
            k2,
            vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(0, 3), (1, 2)]]
        );
        for k in 0..=6 {
            let all = enumerate_pair_partitions(k).unwrap();
            let double_factorial: usize = (1..2 * k).step_by(2).product();
            assert_eq!(all.len(), double_factorial.max(1));
            assert_eq!(all.iter().unique().count(), all.len());
            for mu in &all {
                PairPartition::new(mu.pairs.clone()).unwrap();
            }
        }
        assert!(enumerate_pair_partitions(9).is_err());
    }

    #[test]
    fn crossings() {
        assert_eq!(crossing_number(&PairPartition::new(vec![(0, 1), (2, 3)]).unwrap()), 0);
        assert_eq!(crossing_number(&PairPartition::new(vec![(0, 2), (1, 3)]).unwrap()), 1);
        assert_eq!(crossing_number(&PairPartition::new(vec![(0, 3), (1, 2)]).unwrap()), 0);
        assert_eq!(
            crossing_number(&PairPartition::new(vec![(0, 3), (1, 4), (2, 5)]).unwrap()),
            3
        );
        // crossing count equals the inversion count of the right ends read in left-end order
        for mu in enumerate_pair_partitions(4).unwrap() {
            let inversions = mu
                .pairs
                .iter()
                .tuple_combinations()
                .filter(|(x, y)| x.1 > y.0 && x.1 < y.1)
                .count();
            assert_eq!(crossing_number(&mu), inversions);
        }
        assert!(PairPartition::new(vec![(1, 0)]).is_err());
    }

    /// Direct sum over enumerated partitions, independent of the recursion.
    fn moment_by_enumeration(p: &QKMSParams, m: &Monomial) -> C64 {
        if m.len() % 2 == 1 {
            return C64::default();
        }
        enumerate_pair_partitions(m.len() / 2)
            .unwrap()
            .iter()
            .map(|mu| {
                let weight = p.q().powi(crossing_number(mu) as i32);
                mu.pairs.iter().fold(C64::from(weight), |acc, &(a, b)| {
                    acc * two_point(p, &m.factors[a], &m.factors[b])
                })
            })
            .sum()
    }

    #[test]
    fn four_point_single_mode() {
        let (a, ad) = (Factor::annihilate(e0()), Factor::create(e0()));
        let m = Monomial::new(vec![a.clone(), a.clone(), ad.clone(), ad.clone()]);
        let cc = 4.0 / 3.0;
        assert!((moment(&one_mode(0.5), &m).unwrap() - c(1.5 * cc * cc)).norm() < 1e-12);
        // at q = 0 the two-point value is 1 / (1 − 0) = 1
        assert!((moment(&one_mode(0.0), &m).unwrap() - c(1.0)).norm() < 1e-12);
        assert_eq!(
            moment(&one_mode(0.5), &Monomial::new(vec![a.clone()])).unwrap(),
            C64::default()
        );
        assert_eq!(
            moment(&one_mode(0.5), &Monomial::new(vec![a.clone(), ad.clone(), a])).unwrap(),
            C64::default()
        );
        assert_eq!(moment(&one_mode(0.5), &Monomial::default()).unwrap(), c(1.0));
    }

    #[test]
    fn recursion_matches_enumeration() {
        let mut r = rng(63);
        let h = positive_h(64, 2);
        for q in [-0.9, -0.3, 0.0, 0.6, 1.0] {
            let p = QKMSParams::new(q, 0.8, h.clone()).unwrap();
            for len in [2, 4, 6, 8] {
                let m = word(&mut r, 2, len);
                let a = moment(&p, &m).unwrap();
                let b = moment_by_enumeration(&p, &m);
                assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
            }
        }
    }

    /// Thermal state of one bosonic oscillator, truncated far above the
    /// thermal occupation.
    #[test]
    fn bosonic_limit_matches_oscillator_trace() {
        let (beta, eps, levels) = (1.0, 1.3, 80);
        let a = CMatrix::from_fn(
            levels,
            levels,
            |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) },
        );
        let rho = CMatrix::from_fn(levels, levels, |i, j| {
            if i == j {
                c((-beta * eps * i as f64).exp())
            } else {
                c(0.0)
            }
        });
        let z = rho.trace();
        let ad = a.adjoint();
        let p = QKMSParams::new(1.0, beta, CMatrix::from_element(1, 1, c(eps))).unwrap();
        let (fa, fad) = (Factor::annihilate(e0()), Factor::create(e0()));
        let cases = [
            (
                vec![&a, &a, &ad, &ad],
                vec![fa.clone(), fa.clone(), fad.clone(), fad.clone()],
            ),
            (
                vec![&a, &ad, &a, &ad],
                vec![fa.clone(), fad.clone(), fa.clone(), fad.clone()],
            ),
            (
                vec![&ad, &a, &ad, &a],
                vec![fad.clone(), fa.clone(), fad.clone(), fa.clone()],
            ),
        ];
        for (ops, factors) in cases {
            let product = ops.iter().fold(identity(levels), |acc, op| acc * *op);
            let direct = (&rho * product).trace() / z;
            let formula = moment(&p, &Monomial::new(factors)).unwrap();
            assert!((direct - formula).norm() <= 1e-12 * direct.norm());
        }
    }

    /// Two fermionic modes in the Jordan–Wigner representation.
    #[test]
    fn fermionic_limit_matches_car_trace() {
        let h = positive_h(65, 2);
        let beta = 0.7;
        let p = QKMSParams::new(-1.0, beta, h.clone()).unwrap();
        let lower = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let modes = [kron(&lower, &identity(2)), kron(&z, &lower)];
        let mut dgamma = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                dgamma += modes[i].adjoint() * &modes[j] * h[(i, j)];
            }
        }
        let rho = matrix_semigroup(&dgamma, beta).unwrap();
        let trace = rho.trace();
        let op = |factor: &Factor| -> CMatrix {
            let annihilator = modes[0].clone() * factor.f[0].conj() + modes[1].clone() * factor.f[1].conj();
            match factor.sigma {
                Sigma::Minus => annihilator,
                Sigma::Plus => annihilator.adjoint(),
            }
        };
        let mut r = rng(66);
        for len in [2, 4, 6] {
            for _ in 0..5 {
                let m = word(&mut r, 2, len);
                let product = m.factors.iter().fold(identity(4), |acc, f| acc * op(f));
                let direct = (&rho * product).trace() / trace;
                let formula = moment(&p, &m).unwrap();
                assert!(
                    (direct - formula).norm() <= 1e-12 * direct.norm().max(1.0),
                    "{direct} vs {formula}"
                );
            }
        }
    }

    #[test]
    fn gauge_invariance_is_exact() {
        let p = QKMSParams::new(0.4, 1.0, positive_h(67, 2)).unwrap();
        let mut r = rng(68);
        let mut v = || random_vector(&mut r, 2);
        let m = Monomial::new(vec![
            Factor::create(v()),
            Factor::annihilate(v()),
            Factor::create(v()),
            Factor::create(v()),
        ]);
        assert_eq!(moment(&p, &m).unwrap(), C64::default());
        let m = Monomial::new(vec![Factor::annihilate(v()), Factor::annihilate(v())]);
        assert_eq!(moment(&p, &m).unwrap(), C64::default());
    }

    #[test]
    fn kms_condition_holds() {
        let h = positive_h(69, 2);
        let mut r = rng(70);
        for q in [-0.9, -0.4, 0.0, 0.7, 0.9] {
            let p = QKMSParams::new(q, 1.1, h.clone()).unwrap();
            for (la, lb) in [(1, 1), (2, 2), (1, 3), (3, 3), (2, 4)] {
                let (a, b) = (word(&mut r, 2, la), word(&mut r, 2, lb));
                let scale = moment(&p, &b.then(&a)).unwrap().norm().max(1.0);
                assert!(kms_residual(&p, &a, &b).unwrap() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn vacuum_limit() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(2.5)]);
        let p = QKMSParams::new(0.5, 50.0, h.clone()).unwrap();
        let mut r = rng(71);
        let (f, g) = (random_vector(&mut r, 2), random_vector(&mut r, 2));
        let bound = (-50.0f64).exp() / (1.0 - 0.5 * (-50.0f64).exp()) * f.norm() * g.norm();
        let adag_a = Monomial::new(vec![Factor::create(f.clone()), Factor::annihilate(g.clone())]);
        assert!(vacuum_limit_check(&p, &adag_a).unwrap() <= bound);
        let a_adag = Monomial::new(vec![Factor::annihilate(f.clone()), Factor::create(g)]);
        assert!(vacuum_limit_check(&p, &a_adag).unwrap() <= 1.01 * bound);
        assert_eq!(
            vacuum_limit_check(&p, &Monomial::new(vec![Factor::create(f.clone())])).unwrap(),
            0.0
        );

        let rate = vacuum_decay_rate(&p, &adag_a, &[10.0, 20.0, 40.0]).unwrap();
        assert!((rate - 1.0).abs() < 0.05);
    }

    #[test]
    fn gram_matrices_are_psd_in_proven_cases() {
        for q in [-1.0, 0.0, 1.0] {
            let p = one_mode(q);
            let ev = gram_psd_evidence(&p, 2, &[e0()]).unwrap();
            assert_eq!(ev.size, 7);
            assert!(ev.min_eig >= -1e-10, "q = {q}: {}", ev.min_eig);
        }
        assert!(gram_psd_evidence(&one_mode(0.0), 4, &[e0()]).is_err());
    }

    #[test]
    fn adjoint_flips_and_reverses() {
        let m = Monomial::new(vec![Factor::create(e0()), Factor::annihilate(e0() * c(2.0))]);
        let adj = m.adjoint();
        assert_eq!(adj.factors[0], Factor::create(e0() * c(2.0)));
        assert_eq!(adj.factors[1], Factor::annihilate(e0()));
        assert_eq!(adj.adjoint(), m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Creators enter linearly and annihilators conjugate-linearly.
        #[test]
        fn moment_linearity(seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0, slot in 0usize..4) {
            let p = QKMSParams::new(0.35, 0.9, positive_h(72, 2)).unwrap();
            let mut r = rng(seed);
            let m = word(&mut r, 2, 4);
            let lambda = C64::new(re, im);
            let mut scaled = m.clone();
            scaled.factors[slot].f *= lambda;
            let expected = match m.factors[slot].sigma {
                Sigma::Plus => lambda,
                Sigma::Minus => lambda.conj(),
            } * moment(&p, &m).unwrap();
            let got = moment(&p, &scaled).unwrap();
            prop_assert!((got - expected).norm() <= 1e-12 * expected.norm().max(1.0));
        }
    }
}
