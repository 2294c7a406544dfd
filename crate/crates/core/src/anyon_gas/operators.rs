use itertools::Itertools;

use super::lattice::LatticeSpec;
use super::phase::PhaseFn;
use crate::error::{Error, Result};
use crate::fock::factorial;
use crate::tensor::{
    c, check_size, hermiticity_defect, identity, kron, operator_norm, tensor_dim, CMatrix, MultiIndex,
    PhasedPermutation, C64,
};
use crate::tol;

/// `w[a][b] = e^{ir(b,a)}`, the coefficient of `R(e_a⊗e_b) = w · e_b⊗e_a`.
pub(super) fn exchange_weights(spec: &LatticeSpec, r: &PhaseFn) -> Result<Vec<Vec<C64>>> {
    r.validate(spec)?;
    let table = r.table(spec);
    let n = spec.sites();
    Ok((0..n)
        .map(|a| (0..n).map(|b| C64::from_polar(1.0, table[b][a])).collect())
        .collect())
}

fn tau(weights: &[Vec<C64>], n: usize, slot: usize) -> Result<PhasedPermutation> {
    PhasedPermutation::slot_swap(weights.len(), n, slot, |a, b| weights[a][b])
}

fn sparse_defect(a: &PhasedPermutation, b: &PhasedPermutation) -> f64 {
    if a.target() != b.target() {
        return f64::INFINITY;
    }
    a.coeff()
        .iter()
        .zip(b.coeff())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `R: f(x, y) ↦ e^{ir(x,y)} f(y, x)` on `ℓ²(Λ)⊗ℓ²(Λ)`, checked for
/// `R² = 1`, `R = R*` and the braid relation before returning.
pub fn phase_exchange_operator(spec: &LatticeSpec, r: &PhaseFn) -> Result<CMatrix> {
    let sites = spec.sites();
    check_size("phase exchange operator", tensor_dim(sites, 2), tensor_dim(sites, 2))?;
    let w = exchange_weights(spec, r)?;
    let rr = tau(&w, 2, 1)?;

    let square = sparse_defect(&rr.compose(&rr), &PhasedPermutation::identity(rr.dim()));
    let self_adjoint = (0..rr.dim())
        .map(|y| (rr.coeff()[rr.target()[y]] - rr.coeff()[y].conj()).norm())
        .fold(0.0, f64::max);
    let (t1, t2) = (tau(&w, 3, 1)?, tau(&w, 3, 2)?);
    let braid = sparse_defect(&t1.compose(&t2).compose(&t1), &t2.compose(&t1).compose(&t2));
    let worst = square.max(self_adjoint).max(braid);
    if worst > tol::BOUNDARY {
        return Err(Error::Verification(format!(
            "phase exchange operator: R^2 - 1 = {square:e}, R - R* = {self_adjoint:e}, braid = {braid:e}"
        )));
    }
    Ok(rr.to_dense())
}

fn check_permutation(pi: &[usize]) -> Result<()> {
    let mut seen = vec![false; pi.len()];
    for &p in pi {
        if p >= pi.len() || seen[p] {
            return Err(Error::InvalidParameter(format!(
                "{pi:?} is not a permutation of 0..{}",
                pi.len()
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Reduced word `[j_1, …, j_k]` (1-based slots) with `π = s_{j_1} ∘ ⋯ ∘ s_{j_k}`,
/// where `π` is given in one-line notation `π[i] = π(i)`.
pub fn reduced_word(pi: &[usize]) -> Result<Vec<usize>> {
    check_permutation(pi)?;
    Ok(sort_word(pi, false))
}

/// Bubble sort of the one-line array; `right_first` scans descents from the
/// right, giving a different reduced word for the same permutation.
pub(super) fn sort_word(pi: &[usize], right_first: bool) -> Vec<usize> {
    let mut line = pi.to_vec();
    let mut swaps = Vec::new();
    loop {
        let mut descents = (0..line.len().saturating_sub(1)).filter(|&i| line[i] > line[i + 1]);
        let next = if right_first {
            descents.next_back()
        } else {
            descents.next()
        };
        let Some(i) = next else { break };
        line.swap(i, i + 1);
        swaps.push(i + 1);
    }
    // π ∘ s_{a_1} ∘ ⋯ ∘ s_{a_k} = id, so π = s_{a_k} ∘ ⋯ ∘ s_{a_1}
    swaps.reverse();
    swaps
}

pub(super) fn word_product(weights: &[Vec<C64>], n: usize, word: &[usize]) -> Result<PhasedPermutation> {
    let dim = weights.len().pow(n as u32);
    word.iter().try_fold(PhasedPermutation::identity(dim), |acc, &j| {
        Ok(acc.compose(&tau(weights, n, j)?))
    })
}

/// `R(π)` as a phased permutation of `ℓ²(Λ)^{⊗n}`.
pub fn permutation_rep_sparse(spec: &LatticeSpec, r: &PhaseFn, pi: &[usize]) -> Result<PhasedPermutation> {
    let n = pi.len();
    check_size("permutation operator", tensor_dim(spec.sites(), n), 1)?;
    let w = exchange_weights(spec, r)?;
    let rep = word_product(&w, n, &reduced_word(pi)?)?;
    if n <= 4 {
        let other = word_product(&w, n, &sort_word(pi, true))?;
        let defect = sparse_defect(&rep, &other);
        if defect > 1e-12 {
            return Err(Error::Verification(format!(
                "reduced words for {pi:?} disagree by {defect:e}"
            )));
        }
    }
    Ok(rep)
}

/// Dense `R(π)` on `ℓ²(Λ)^{⊗n}`, a product of phased adjacent swaps
/// `τ_i e_y = e^{ir(y_{i+1}, y_i)} e_{s_i y}` along a reduced word.
pub fn permutation_rep(spec: &LatticeSpec, r: &PhaseFn, pi: &[usize], n: usize) -> Result<CMatrix> {
    if pi.len() != n {
        return Err(Error::Dimension(format!(
            "permutation of length {} for n = {n}",
            pi.len()
        )));
    }
    let dim = tensor_dim(spec.sites(), n);
    check_size("permutation operator", dim, dim)?;
    Ok(permutation_rep_sparse(spec, r, pi)?.to_dense())
}

/// `R_n = (1/n!) Σ_π R(π)`.
pub fn r_projector(spec: &LatticeSpec, r: &PhaseFn, n: usize) -> Result<CMatrix> {
    if n > 5 {
        return Err(Error::InvalidParameter(format!(
            "r-projector sums n! terms; n = {n} exceeds 5"
        )));
    }
    let dim = tensor_dim(spec.sites(), n);
    check_size("r-projector", dim, dim)?;
    let w = exchange_weights(spec, r)?;
    let size = dim as usize;
    let mut acc = CMatrix::zeros(size, size);
    let scale = c(1.0 / factorial(n));
    for pi in (0..n).permutations(n) {
        word_product(&w, n, &sort_word(&pi, false))?.accumulate_into(&mut acc, scale);
    }
    Ok(acc)
}

/// Residuals of the lattice exchange relations on the r-module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderResiduals {
    /// `a(x)a⁺(y) − e^{ir(x,y)} a⁺(y)a(x) − δ_xy / a^dim`.
    pub mixed: f64,
    /// `a(x)a(y) − e^{ir(y,x)} a(y)a(x)`.
    pub annihilation: f64,
    /// `a⁺(x)a⁺(y) − e^{ir(y,x)} a⁺(y)a⁺(x)`.
    pub creation: f64,
    /// Pair relations with the phase `e^{ir(x,y)}` instead; agrees with the
    /// above only for real exchange phases.
    pub pair_conjugate_phase: f64,
}

impl LadderResiduals {
    pub fn max(&self) -> f64 {
        self.mixed.max(self.annihilation).max(self.creation)
    }
}

/// Builds `a⁺_r(δ_x) = a^{−dim/2} √(n+1) R_{n+1}(e_x ⊗ ·)R_n` and its adjoint
/// on levels `0..=n_max`, and returns the relation residuals compressed to
/// the range of `R_n`, excluding transitions through the top level.
pub fn anyonic_ladder_check(spec: &LatticeSpec, r: &PhaseFn, n_max: usize) -> Result<LadderResiduals> {
    if !(1..=3).contains(&n_max) {
        return Err(Error::InvalidParameter(format!(
            "ladder check needs 1 <= n_max <= 3, got {n_max}"
        )));
    }
    let sites = spec.sites();
    let dim_top = tensor_dim(sites, n_max);
    check_size("ladder check", dim_top, dim_top)?;
    let table = r.table(spec);
    let proj: Vec<CMatrix> = (0..=n_max).map(|n| r_projector(spec, r, n)).collect::<Result<_>>()?;
    let norm = spec.spacing().powf(-(spec.dimension() as f64) / 2.0);

    // create[n][x]: level n → n + 1, for n < n_max
    let create: Vec<Vec<CMatrix>> = (0..n_max)
        .map(|n| {
            (0..sites)
                .map(|x| {
                    let mut e = CMatrix::zeros(sites, 1);
                    e[(x, 0)] = c(1.0);
                    let lift = kron(&e, &identity(sites.pow(n as u32)));
                    &proj[n + 1] * lift * &proj[n] * c(norm * ((n + 1) as f64).sqrt())
                })
                .collect()
        })
        .collect();
    // annih[n][x]: level n → n − 1, for 1 ≤ n ≤ n_max
    let annih = |n: usize, x: usize| create[n - 1][x].adjoint();
    let compress = |target: usize, m: &CMatrix, source: usize| operator_norm(&(&proj[target] * m * &proj[source]));
    let phase = |x: usize, y: usize| C64::from_polar(1.0, table[x][y]);
    let delta = spec.spacing().powi(-(spec.dimension() as i32));

    let mut res = LadderResiduals {
        mixed: 0.0,
        annihilation: 0.0,
        creation: 0.0,
        pair_conjugate_phase: 0.0,
    };
    for x in 0..sites {
        for y in 0..sites {
            for n in 0..n_max {
                let dim = sites.pow(n as u32);
                let mut m = annih(n + 1, x) * &create[n][y];
                if x == y {
                    m -= identity(dim) * c(delta);
                }
                if n >= 1 {
                    m -= &create[n - 1][y] * annih(n, x) * phase(x, y);
                }
                res.mixed = res.mixed.max(compress(n, &m, n));
            }
            for n in 2..=n_max {
                let xy = annih(n - 1, x) * annih(n, y);
                let yx = annih(n - 1, y) * annih(n, x);
                res.annihilation = res.annihilation.max(compress(n - 2, &(&xy - &yx * phase(y, x)), n));
                res.pair_conjugate_phase = res
                    .pair_conjugate_phase
                    .max(compress(n - 2, &(&xy - &yx * phase(x, y)), n));
            }
            for n in 0..n_max.saturating_sub(1) {
                let xy = &create[n + 1][x] * &create[n][y];
                let yx = &create[n + 1][y] * &create[n][x];
                res.creation = res.creation.max(compress(n + 2, &(&xy - &yx * phase(y, x)), n));
                res.pair_conjugate_phase = res
                    .pair_conjugate_phase
                    .max(compress(n + 2, &(&xy - &yx * phase(x, y)), n));
            }
        }
    }
    Ok(res)
}

/// Diagonal unitary `D_n e_y = Π_{i<j} e^{−(i/2) r(y_i, y_j)} e_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dressing {
    pub diagonal: Vec<C64>,
    /// Set for sign-kind phases, whose gradients are distributional.
    pub distributional: bool,
}

impl Dressing {
    pub fn to_dense(&self) -> CMatrix {
        CMatrix::from_diagonal(&crate::CVector::from_vec(self.diagonal.clone()))
    }

    /// `D M D^{-1}`.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            self.diagonal[i] * m[(i, j)] * self.diagonal[j].conj()
        })
    }
}

pub fn dressing_transform(spec: &LatticeSpec, r: &PhaseFn, n: usize) -> Result<Dressing> {
    let sites = spec.sites();
    check_size("dressing transform", tensor_dim(sites, n), 1)?;
    r.validate(spec)?;
    let table = r.table(spec);
    let dim = sites.pow(n as u32);
    let diagonal = (0..dim)
        .map(|index| {
            let y = MultiIndex::decode(index, sites, n);
            let y = y.digits();
            let mut angle = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    angle -= 0.5 * table[y[i]][y[j]];
                }
            }
            C64::from_polar(1.0, angle)
        })
        .collect();
    Ok(Dressing {
        diagonal,
        distributional: !r.is_smooth(),
    })
}

/// Statistics turned into interaction by the dressing.
#[derive(Debug, Clone)]
pub struct EffectiveInteraction {
    /// `Sym (D K D^{-1} − K) Sym` with `K = Σ_k h_k`.
    pub v: CMatrix,
    /// Deviation from the link-by-link gauge assembly
    /// `h[s, s'] (e^{iA} − 1)`, `A` the phase picked up along the hop.
    pub oracle_residual: f64,
    /// Deviation from the second-order assembly `h[s, s'] (iA − A²/2)`.
    pub leading_order_deviation: f64,
    /// Relative deviation of `Re(V_full 𝟙)` from `Σ_i |∇_i φ|²`, `φ = −½ Σ_{i<j} r`.
    pub potential_deviation: f64,
    /// Relative deviation of `Re(V_full 𝟙)` from the two-body `¼(∇r)²` plus
    /// cyclic three-body `(1/12) ∇r·∇r` potential.
    pub printed_deviation: f64,
}

fn slot_sum(h: &CMatrix, n: usize) -> CMatrix {
    let d = h.nrows();
    let dim = d.pow(n as u32);
    (1..=n).fold(CMatrix::zeros(dim, dim), |acc, k| {
        acc + kron(
            &kron(&identity(d.pow((k - 1) as u32)), h),
            &identity(d.pow((n - k) as u32)),
        )
    })
}

/// Central-difference gradient of `r` in its first argument at offset `δ`.
fn gradient(r: &PhaseFn, delta: &[i64], spacing: f64) -> Vec<f64> {
    (0..delta.len())
        .map(|axis| {
            let mut plus = delta.to_vec();
            let mut minus = delta.to_vec();
            plus[axis] += 1;
            minus[axis] -= 1;
            (r.at_offset(&plus) - r.at_offset(&minus)) / (2.0 * spacing)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn effective_hamiltonian_gap(
    spec: &LatticeSpec,
    r: &PhaseFn,
    n: usize,
    h: &CMatrix,
) -> Result<EffectiveInteraction> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "effective interaction needs n in {{2, 3}}, got {n}"
        )));
    }
    if !r.is_smooth() {
        return Err(Error::NonSmoothPhase);
    }
    let sites = spec.sites();
    if h.shape() != (sites, sites) {
        return Err(Error::Dimension(format!(
            "one-particle operator must be {sites}x{sites}"
        )));
    }
    let defect = hermiticity_defect(h);
    if defect > tol::HERMITIAN {
        return Err(Error::NotHermitian {
            defect,
            tolerance: tol::HERMITIAN,
        });
    }
    let dim = tensor_dim(sites, n);
    check_size("effective interaction", dim, dim)?;

    let dressing = dressing_transform(spec, r, n)?;
    let k = slot_sum(h, n);
    let v_full = dressing.conjugate(&k) - &k;
    let sym = r_projector(spec, &PhaseFn::zero(), n)?;
    let v = &sym * &v_full * &sym;

    // link-by-link assembly
    let table = r.table(spec);
    let dim = dim as usize;
    let mut v_exact = CMatrix::zeros(dim, dim);
    let mut v_lin = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let source = MultiIndex::decode(col, sites, n);
        let y = source.digits();
        for slot in 0..n {
            for s in 0..sites {
                let hop = h[(s, y[slot])];
                if s == y[slot] || hop == C64::default() {
                    continue;
                }
                let a: f64 = -0.5
                    * (0..n)
                        .filter(|&j| j != slot)
                        .map(|j| {
                            let sgn = if j > slot { 1.0 } else { -1.0 };
                            sgn * (table[s][y[j]] - table[y[slot]][y[j]])
                        })
                        .sum::<f64>();
                let mut target = y.to_vec();
                target[slot] = s;
                let row = MultiIndex::new(target, sites)?.encode(sites);
                v_exact[(row, col)] += hop * (C64::from_polar(1.0, a) - c(1.0));
                v_lin[(row, col)] += hop * C64::new(-0.5 * a * a, a);
            }
        }
    }
    let oracle_residual = max_abs_diff(&v, &(&sym * &v_exact * &sym));
    let leading_order_deviation = max_abs_diff(&v, &(&sym * &v_lin * &sym));

    // potentials on configurations: lattice row sums against continuum forms
    let mut worst_exact = 0.0f64;
    let mut worst_printed = 0.0f64;
    let mut scale = 0.0f64;
    for row in 0..dim {
        let lattice: f64 = v_full.row(row).iter().map(|z| z.re).sum();
        let y = MultiIndex::decode(row, sites, n);
        let y = y.digits();
        let g = |i: usize, j: usize| gradient(r, &spec.offset(y[i], y[j]), spec.spacing());
        let mut exact = 0.0;
        for i in 0..n {
            let mut grad = vec![0.0; spec.dimension()];
            for j in (0..n).filter(|&j| j != i) {
                let sgn = if j > i { 1.0 } else { -1.0 };
                for (acc, v) in grad.iter_mut().zip(g(i, j)) {
                    *acc += -0.5 * sgn * v;
                }
            }
            exact += dot(&grad, &grad);
        }
        let mut printed = 0.0;
        for (i, j) in (0..n).tuple_combinations().flat_map(|(i, j)| [(i, j), (j, i)]) {
            printed += 0.25 * dot(&g(i, j), &g(i, j));
        }
        for t in (0..n).permutations(3) {
            let (i, j, l) = (t[0], t[1], t[2]);
            printed += (dot(&g(i, j), &g(j, l)) + dot(&g(j, l), &g(l, i)) + dot(&g(l, i), &g(i, j))) / 12.0;
        }
        worst_exact = worst_exact.max((lattice - exact).abs());
        worst_printed = worst_printed.max((lattice - printed).abs());
        scale = scale.max(exact.abs()).max(lattice.abs());
    }
    let scale = scale.max(f64::MIN_POSITIVE);

    Ok(EffectiveInteraction {
        v,
        oracle_residual,
        leading_order_deviation,
        potential_deviation: worst_exact / scale,
        printed_deviation: worst_printed / scale,
    })
}
