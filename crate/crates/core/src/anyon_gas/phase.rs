use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use super::lattice::LatticeSpec;
use crate::error::{Error, Result};
use crate::tol;

/// Value of a sign-kind phase at coincident points, where `sign(0)` is
/// otherwise undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coincidence {
    /// `r(x, x) = 0`: doubly occupied sites are symmetric.
    #[default]
    Symmetric,
    /// `r(x, x) = π`: doubly occupied sites are antisymmetric, so `θ = π`
    /// reproduces the free Fermi gas.
    Exclusion,
}

/// Statistics phase `r(x, y)`, a function of the offset `x − y` in lattice
/// units.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseFn {
    /// `r = −θ sign((x − y)·u)`.
    LmSign {
        theta: f64,
        u: Vec<f64>,
        coincident: Coincidence,
    },
    /// `r = −θ tanh((x − y)·u / w)`, `w` in sites.
    Mollified { theta: f64, u: Vec<f64>, width: f64 },
    /// Tabulated values; offsets absent from the table read as zero.
    Table(BTreeMap<Vec<i64>, f64>),
}

fn unit(u: &[f64]) -> Result<Vec<f64>> {
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "direction vector must be finite and nonzero, got {u:?}"
        )));
    }
    Ok(u.iter().map(|x| x / norm).collect())
}

impl PhaseFn {
    pub fn lm_sign(theta: f64, u: &[f64], coincident: Coincidence) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("statistics parameter".into()));
        }
        Ok(PhaseFn::LmSign {
            theta,
            u: unit(u)?,
            coincident,
        })
    }

    pub fn mollified(theta: f64, u: &[f64], width: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("statistics parameter".into()));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mollifier width must be positive, got {width}"
            )));
        }
        Ok(PhaseFn::Mollified {
            theta,
            u: unit(u)?,
            width,
        })
    }

    pub fn zero() -> Self {
        PhaseFn::Table(BTreeMap::new())
    }

    /// `r(δ) = ε Σ_k sin(2π δ_k / L_k)` tabulated over every offset of `dims`.
    pub fn sine_profile(dims: &[usize], eps: f64) -> Self {
        let mut table = BTreeMap::new();
        let ranges: Vec<Vec<i64>> = dims.iter().map(|&l| (-(l as i64) + 1..l as i64).collect()).collect();
        let mut offset = vec![0i64; dims.len()];
        fill_offsets(&ranges, 0, &mut offset, &mut |delta| {
            let v: f64 = delta
                .iter()
                .zip(dims)
                .map(|(&d, &l)| (TAU * d as f64 / l as f64).sin())
                .sum();
            table.insert(delta.to_vec(), eps * v);
        });
        PhaseFn::Table(table)
    }

    /// Value at an integer offset `x − y`.
    pub fn at_offset(&self, delta: &[i64]) -> f64 {
        match self {
            PhaseFn::LmSign { theta, u, coincident } => {
                if delta.iter().all(|&d| d == 0) {
                    return match coincident {
                        Coincidence::Symmetric => 0.0,
                        Coincidence::Exclusion => PI,
                    };
                }
                let proj = dot(delta, u);
                let sign = if proj > 0.0 {
                    1.0
                } else if proj < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                // θ and θ + 2π give identical tables
                -theta.rem_euclid(TAU) * sign
            }
            PhaseFn::Mollified { theta, u, width } => -theta * (dot(delta, u) / width).tanh(),
            PhaseFn::Table(table) => table.get(delta).copied().unwrap_or(0.0),
        }
    }

    pub fn value(&self, spec: &LatticeSpec, x: usize, y: usize) -> f64 {
        self.at_offset(&spec.offset(x, y))
    }

    /// `r(x_i, x_j)` for every pair of sites.
    pub fn table(&self, spec: &LatticeSpec) -> Vec<Vec<f64>> {
        let n = spec.sites();
        (0..n)
            .map(|x| (0..n).map(|y| self.value(spec, x, y)).collect())
            .collect()
    }

    /// Sign-kind phases with `θ ≢ 0 (mod 2π)` have distributional gradients.
    pub fn is_smooth(&self) -> bool {
        match self {
            PhaseFn::LmSign { theta, .. } => theta.rem_euclid(TAU) == 0.0,
            _ => true,
        }
    }

    /// Checks `r(x, y) + r(y, x) ∈ 2πℤ` on every site pair.
    pub fn validate(&self, spec: &LatticeSpec) -> Result<()> {
        let dirs = match self {
            PhaseFn::LmSign { u, .. } | PhaseFn::Mollified { u, .. } => Some(u.len()),
            PhaseFn::Table(t) => t.keys().next().map(Vec::len),
        };
        if dirs.is_some_and(|k| k != spec.dimension()) {
            return Err(Error::Dimension(format!(
                "phase is defined on dimension {} but the lattice has dimension {}",
                dirs.unwrap_or(0),
                spec.dimension()
            )));
        }
        let n = spec.sites();
        for x in 0..n {
            for y in x..n {
                let s = self.value(spec, x, y) + self.value(spec, y, x);
                if !s.is_finite() {
                    return Err(Error::NonFinite("phase function".into()));
                }
                let off = (s - TAU * (s / TAU).round()).abs();
                if off > tol::BOUNDARY {
                    return Err(Error::PhaseAntisymmetry(format!(
                        "sites {:?}, {:?} (sum {s})",
                        spec.coords(x),
                        spec.coords(y)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn dot(delta: &[i64], u: &[f64]) -> f64 {
    delta.iter().zip(u).map(|(&d, &w)| d as f64 * w).sum()
}

fn fill_offsets(ranges: &[Vec<i64>], axis: usize, current: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
    if axis == ranges.len() {
        f(current);
        return;
    }
    for &v in &ranges[axis] {
        current[axis] = v;
        fill_offsets(ranges, axis + 1, current, f);
    }
}
