#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wickfock::tensor::{hermitian_spectrum, identity};
use wickfock::{CMatrix, CVector, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(r: &mut impl Rng, n: usize) -> CMatrix {
    let a = random_matrix(r, n, n);
    (&a + a.adjoint()) * c(0.5)
}

pub fn random_positive(r: &mut impl Rng, n: usize) -> CMatrix {
    let a = random_matrix(r, n, n);
    &a * a.adjoint()
}

/// `h = A A* + shift`, strictly positive.
pub fn positive_h(r: &mut impl Rng, n: usize, shift: f64) -> CMatrix {
    random_positive(r, n) + identity(n) * c(shift)
}

pub fn random_vector(r: &mut impl Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn random_antisymmetric(r: &mut impl Rng, d: usize) -> Vec<Vec<f64>> {
    let mut theta = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let x = r.random_range(-PI..PI);
            theta[i][j] = x;
            theta[j][i] = -x;
        }
    }
    theta
}

pub fn unit(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = c(1.0);
    v
}

pub fn max_abs(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `e^{iA}` for Hermitian `A`.
pub fn unitary_exp(a: &CMatrix) -> CMatrix {
    hermitian_spectrum(a).unwrap().apply_fn(|x| C64::from_polar(1.0, x))
}

/// Complete and elementary symmetric polynomials of degree `n`.
pub fn symmetric_polynomials(values: &[f64], n: usize) -> (f64, f64) {
    use itertools::Itertools;
    let complete = (0..values.len())
        .combinations_with_replacement(n)
        .map(|s| s.iter().map(|&i| values[i]).product::<f64>())
        .sum();
    let elementary = (0..values.len())
        .combinations(n)
        .map(|s| s.iter().map(|&i| values[i]).product::<f64>())
        .sum();
    (complete, elementary)
}
