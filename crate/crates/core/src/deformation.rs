//! Deformation operators `T` on `H⊗H` and the conditions they are tested
//! against.
//!
//! Coefficients follow `T(e_i⊗e_j) = Σ_{kl} t_{ij}^{kl} e_k⊗e_l`, i.e.
//! `t_{ij}^{kl}` is the matrix entry at row `(k,l)`, column `(i,j)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{
    apply_slot_left, apply_slot_right, c, embed_slot, hermitian_spectrum, hermiticity_defect, identity, operator_norm,
    CMatrix, PhasedPermutation, C64,
};
use crate::tol;

/// A deformation operator together with an optional sparse "weighted flip"
/// form `T(e_a⊗e_b) = w[a][b] · e_b⊗e_a`, detected on construction.
#[derive(Debug, Clone)]
pub struct DeformationOp {
    d: usize,
    t: CMatrix,
    exchange: Option<Vec<Vec<C64>>>,
}

impl DeformationOp {
    pub fn new(d: usize, t: CMatrix) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("one-particle dimension must be >= 1".into()));
        }
        if t.shape() != (d * d, d * d) {
            return Err(Error::Dimension(format!(
                "deformation for d = {d} must be {0}x{0}, got {1}x{2}",
                d * d,
                t.nrows(),
                t.ncols()
            )));
        }
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("deformation operator".into()));
        }
        let exchange = detect_exchange(d, &t);
        Ok(Self { d, t, exchange })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.t
    }

    /// `t_{ij}^{kl}`.
    pub fn coefficient(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.t[(k * self.d + l, i * self.d + j)]
    }

    /// Weights of the weighted-flip form, when `T` has one.
    pub fn exchange_weights(&self) -> Option<&[Vec<C64>]> {
        self.exchange.as_deref()
    }

    pub fn is_self_adjoint(&self) -> bool {
        hermiticity_defect(&self.t) <= tol::HERMITIAN
    }

    /// `T_slot` on `H^{⊗n}` as a dense matrix.
    pub fn slot_operator(&self, slot: usize, n: usize) -> Result<CMatrix> {
        embed_slot(&self.t, slot, n, self.d)
    }

    /// `M · T_slot`, using the sparse form when available.
    pub fn apply_right(&self, m: &CMatrix, slot: usize, n: usize) -> Result<CMatrix> {
        match &self.exchange {
            Some(w) => Ok(PhasedPermutation::slot_swap(self.d, n, slot, |a, b| w[a][b])?.apply_right(m)),
            None => apply_slot_right(m, &self.t, slot, n, self.d),
        }
    }

    /// `T_slot · M`, using the sparse form when available.
    pub fn apply_left(&self, m: &CMatrix, slot: usize, n: usize) -> Result<CMatrix> {
        match &self.exchange {
            Some(w) => Ok(PhasedPermutation::slot_swap(self.d, n, slot, |a, b| w[a][b])?.apply_left(m)),
            None => apply_slot_left(&self.t, slot, n, self.d, m),
        }
    }
}

fn detect_exchange(d: usize, t: &CMatrix) -> Option<Vec<Vec<C64>>> {
    let mut w = vec![vec![C64::default(); d]; d];
    for a in 0..d {
        for b in 0..d {
            let col = a * d + b;
            let swapped = b * d + a;
            for row in 0..d * d {
                if row != swapped && t[(row, col)] != C64::default() {
                    return None;
                }
            }
            w[a][b] = t[(swapped, col)];
        }
    }
    Some(w)
}

/// `T(e_i⊗e_j) = q · e_j⊗e_i`.
pub fn q_flip(q: f64, d: usize) -> Result<DeformationOp> {
    if !(q.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!("|q| must be <= 1, got {q}")));
    }
    let mut t = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            t[(j * d + i, i * d + j)] = c(q);
        }
    }
    DeformationOp::new(d, t)
}

/// Phase flip `T(e_i⊗e_j) = e^{iθ_ij} · e_j⊗e_i` for antisymmetric real `θ`.
pub fn anyon_phase(theta: &[Vec<f64>]) -> Result<DeformationOp> {
    let d = theta.len();
    if d == 0 || theta.iter().any(|row| row.len() != d) {
        return Err(Error::Dimension("theta must be a non-empty square matrix".into()));
    }
    for i in 0..d {
        for j in 0..d {
            if !theta[i][j].is_finite() {
                return Err(Error::NonFinite("theta".into()));
            }
            if (theta[i][j] + theta[j][i]).abs() > tol::BOUNDARY {
                return Err(Error::InvalidParameter(format!(
                    "theta is not antisymmetric at ({i}, {j}): {} vs {}",
                    theta[i][j], theta[j][i]
                )));
            }
        }
    }
    let mut t = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let phase = if i == j {
                c(1.0)
            } else {
                C64::from_polar(1.0, theta[i][j].rem_euclid(2.0 * PI))
            };
            t[(j * d + i, i * d + j)] = phase;
        }
    }
    DeformationOp::new(d, t)
}

/// `‖T₁T₂T₁ − T₂T₁T₂‖` on `H^{⊗3}`.
pub fn check_ybe(t: &DeformationOp) -> f64 {
    let d = t.d();
    let id = identity(d * d * d);
    let (t1, t2) = (|m: &CMatrix| t.apply_left(m, 1, 3), |m: &CMatrix| t.apply_left(m, 2, 3));
    let chain = |first: &dyn Fn(&CMatrix) -> Result<CMatrix>, second: &dyn Fn(&CMatrix) -> Result<CMatrix>| {
        first(&id).and_then(|m| second(&m)).and_then(|m| first(&m))
    };
    let lhs = chain(&t1, &t2).expect("level-3 slots are in range");
    let rhs = chain(&t2, &t1).expect("level-3 slots are in range");
    operator_norm(&(lhs - rhs))
}

/// `T̂` with `t̂_{ij}^{kl} = t_{ik}^{jl}` (exchange of the two middle indices).
pub fn hat_operator(t: &DeformationOp) -> CMatrix {
    let d = t.d();
    let mut hat = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    hat[(k * d + l, i * d + j)] = t.coefficient(i, k, j, l);
                }
            }
        }
    }
    hat
}

/// `max(‖T₁T₂T₁ − T₂T₁T₂‖, ‖(1−T)(1+T̂)‖, ‖T−T*‖)`.
pub fn check_anyonic(t: &DeformationOp) -> f64 {
    let id = identity(t.d() * t.d());
    let m = t.matrix();
    let product = (&id - m) * (&id + hat_operator(t));
    check_ybe(t)
        .max(operator_norm(&product))
        .max(operator_norm(&(m - m.adjoint())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub selfadjoint: bool,
    pub positive: bool,
    pub norm: f64,
    pub ybe_residual: f64,
    pub anyonic_residual: f64,
    pub applicable_conditions: Vec<u8>,
}

/// Evaluates the three sufficient conditions for `P_n(T) ≥ 0`:
/// 1. `T ≥ 0`; 2. `‖T‖ ≤ 1/2`; 3. braid relation with `‖T‖ ≤ 1`.
pub fn classify(t: &DeformationOp) -> ConditionReport {
    let selfadjoint = t.is_self_adjoint();
    let positive = selfadjoint
        && hermitian_spectrum(t.matrix())
            .map(|s| s.min() >= -tol::BOUNDARY)
            .unwrap_or(false);
    let norm = operator_norm(t.matrix());
    let ybe_residual = check_ybe(t);
    let anyonic_residual = check_anyonic(t);
    let mut applicable_conditions = Vec::new();
    if positive {
        applicable_conditions.push(1);
    }
    if norm <= 0.5 + tol::BOUNDARY {
        applicable_conditions.push(2);
    }
    if ybe_residual <= tol::DEFAULT * norm.powi(3) && norm <= 1.0 + tol::BOUNDARY {
        applicable_conditions.push(3);
    }
    ConditionReport {
        selfadjoint,
        positive,
        norm,
        ybe_residual,
        anyonic_residual,
        applicable_conditions,
    }
}
