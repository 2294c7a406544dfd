use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{c, CMatrix, CVector, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
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

pub fn random_vector(r: &mut impl Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn random_antisymmetric(r: &mut impl Rng, d: usize) -> Vec<Vec<f64>> {
    let mut theta = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let x = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            theta[i][j] = x;
            theta[j][i] = -x;
        }
    }
    theta
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
