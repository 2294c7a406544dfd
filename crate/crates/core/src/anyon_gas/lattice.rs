use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::{c, check_size, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Dirichlet,
    Neumann,
    /// Boundary weights `σ ≥ 0`: one value for all boundary sites, or one per
    /// boundary site in site order.
    Robin(Vec<f64>),
    Periodic,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Neumann => "neumann",
            Boundary::Robin(_) => "robin",
            Boundary::Periodic => "periodic",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Box `L_1 × … × L_dim` of lattice spacing `a`. Sites are numbered with the
/// first axis most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    dims: Vec<usize>,
    spacing: f64,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(dims: Vec<usize>, spacing: f64, boundary: Boundary) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "lattice dims must be non-empty and positive, got {dims:?}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lattice spacing must be positive, got {spacing}"
            )));
        }
        let spec = Self {
            dims,
            spacing,
            boundary,
        };
        if let Boundary::Robin(sigma) = &spec.boundary {
            if sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return Err(Error::InvalidParameter(
                    "robin weights must be finite and nonnegative".into(),
                ));
            }
            let count = spec.boundary_sites().len();
            if sigma.len() != 1 && sigma.len() != count {
                return Err(Error::InvalidParameter(format!(
                    "robin needs 1 or {count} weights (one per boundary site), got {}",
                    sigma.len()
                )));
            }
        }
        Ok(spec)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn sites(&self) -> usize {
        self.dims.iter().product()
    }

    /// `|Λ| · a^dim`.
    pub fn volume(&self) -> f64 {
        self.sites() as f64 * self.spacing.powi(self.dimension() as i32)
    }

    pub fn coords(&self, mut site: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &len) in self.dims.iter().enumerate().rev() {
            out[k] = site % len;
            site /= len;
        }
        out
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.dims).fold(0, |acc, (&x, &len)| acc * len + x)
    }

    /// Integer offset `x − y` in lattice units.
    pub fn offset(&self, x: usize, y: usize) -> Vec<i64> {
        self.coords(x)
            .iter()
            .zip(self.coords(y))
            .map(|(&a, b)| a as i64 - b as i64)
            .collect()
    }

    /// Sites with at least one face on the box boundary, in site order.
    pub fn boundary_sites(&self) -> Vec<usize> {
        (0..self.sites())
            .filter(|&s| {
                self.coords(s)
                    .iter()
                    .zip(&self.dims)
                    .any(|(&x, &len)| x == 0 || x + 1 == len)
            })
            .collect()
    }

    fn robin_weight(&self, site: usize, boundary_sites: &[usize]) -> f64 {
        match &self.boundary {
            Boundary::Robin(sigma) if sigma.len() == 1 => sigma[0],
            Boundary::Robin(sigma) => {
                let k = boundary_sites
                    .binary_search(&site)
                    .expect("missing face implies boundary site");
                sigma[k]
            }
            _ => 0.0,
        }
    }
}

/// Second-difference `−Δ` on the box with the spec's boundary condition.
///
/// Each missing neighbour contributes `+1/a²` (Dirichlet), nothing
/// (Neumann) or `σ(x)/a` (Robin) to the diagonal; periodic boxes wrap.
pub fn lattice_laplacian(spec: &LatticeSpec) -> Result<CMatrix> {
    let n = spec.sites();
    check_size("lattice Laplacian", n as u128, n as u128)?;
    let inv_a2 = 1.0 / (spec.spacing * spec.spacing);
    let boundary_sites = spec.boundary_sites();
    let mut lap = CMatrix::zeros(n, n);
    for site in 0..n {
        let coords = spec.coords(site);
        for (axis, &len) in spec.dims.iter().enumerate() {
            for step in [-1i64, 1] {
                let moved = coords[axis] as i64 + step;
                let inside = (0..len as i64).contains(&moved);
                let neighbour = if inside {
                    Some(moved as usize)
                } else if spec.boundary == Boundary::Periodic {
                    Some(moved.rem_euclid(len as i64) as usize)
                } else {
                    None
                };
                match neighbour {
                    Some(x) => {
                        let mut nc = coords.clone();
                        nc[axis] = x;
                        let other = spec.site_index(&nc);
                        lap[(site, site)] += c(inv_a2);
                        lap[(site, other)] -= c(inv_a2);
                    }
                    None => match spec.boundary {
                        Boundary::Dirichlet => lap[(site, site)] += c(inv_a2),
                        Boundary::Robin(_) => {
                            lap[(site, site)] += c(spec.robin_weight(site, &boundary_sites) / spec.spacing)
                        }
                        _ => {}
                    },
                }
            }
        }
    }
    Ok(lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{hermitian_spectrum, hermiticity_defect};

    fn spec(dims: &[usize], boundary: Boundary) -> LatticeSpec {
        LatticeSpec::new(dims.to_vec(), 1.0, boundary).unwrap()
    }

    #[test]
    fn dirichlet_two_sites() {
        let lap = lattice_laplacian(&spec(&[2], Boundary::Dirichlet)).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(2.0), c(-1.0), c(-1.0), c(2.0)]);
        assert_eq!(lap, expected);
    }

    #[test]
    fn periodic_ring_spectrum() {
        for len in [3usize, 5, 6] {
            let lap = lattice_laplacian(&spec(&[len], Boundary::Periodic)).unwrap();
            let got = hermitian_spectrum(&lap).unwrap().values;
            let mut want: Vec<f64> = (0..len)
                .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / len as f64).cos())
                .collect();
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_chain_spectrum() {
        let len = 7;
        let a = 0.5;
        let lap = lattice_laplacian(&LatticeSpec::new(vec![len], a, Boundary::Dirichlet).unwrap()).unwrap();
        let got = hermitian_spectrum(&lap).unwrap().values;
        for (k, g) in got.iter().enumerate() {
            let theta = std::f64::consts::PI * (k + 1) as f64 / (len + 1) as f64;
            assert!((g - (2.0 - 2.0 * theta.cos()) / (a * a)).abs() < 1e-11);
        }
    }

    #[test]
    fn robin_zero_is_neumann() {
        let neumann = lattice_laplacian(&spec(&[3, 2], Boundary::Neumann)).unwrap();
        let robin = lattice_laplacian(&spec(&[3, 2], Boundary::Robin(vec![0.0]))).unwrap();
        assert_eq!(neumann, robin);
        let s = hermitian_spectrum(&neumann).unwrap();
        assert!(s.min().abs() < 1e-12);
    }

    #[test]
    fn robin_adds_boundary_weight_per_face() {
        let a = 0.5;
        let s = LatticeSpec::new(vec![3], a, Boundary::Robin(vec![0.4, 0.8])).unwrap();
        let lap = lattice_laplacian(&s).unwrap();
        assert!((lap[(0, 0)].re - (4.0 + 0.8)).abs() < 1e-15);
        assert!((lap[(2, 2)].re - (4.0 + 1.6)).abs() < 1e-15);
        assert!((lap[(1, 1)].re - 8.0).abs() < 1e-15);
        assert!(hermitian_spectrum(&lap).unwrap().min() > 0.0);
    }

    #[test]
    fn two_dimensional_boxes_are_hermitian_psd() {
        for b in [
            Boundary::Dirichlet,
            Boundary::Neumann,
            Boundary::Periodic,
            Boundary::Robin(vec![0.3]),
        ] {
            let lap = lattice_laplacian(&spec(&[3, 4], b.clone())).unwrap();
            assert_eq!(hermiticity_defect(&lap), 0.0);
            let min = hermitian_spectrum(&lap).unwrap().min();
            assert!(min > -1e-12, "{b}: {min}");
            if matches!(b, Boundary::Dirichlet | Boundary::Robin(_)) {
                assert!(min > 1e-3);
            }
        }
    }

    #[test]
    fn periodic_single_site_is_zero() {
        assert_eq!(
            lattice_laplacian(&spec(&[1], Boundary::Periodic)).unwrap(),
            CMatrix::zeros(1, 1)
        );
    }

    #[test]
    fn geometry_and_validation() {
        let s = LatticeSpec::new(vec![2, 3], 0.5, Boundary::Neumann).unwrap();
        assert_eq!(s.sites(), 6);
        assert!((s.volume() - 1.5).abs() < 1e-15);
        for site in 0..6 {
            assert_eq!(s.site_index(&s.coords(site)), site);
        }
        assert_eq!(s.coords(4), vec![1, 1]);
        assert_eq!(s.offset(0, 4), vec![-1, -1]);
        assert_eq!(spec(&[3, 3], Boundary::Neumann).boundary_sites().len(), 8);
        assert!(LatticeSpec::new(vec![], 1.0, Boundary::Neumann).is_err());
        assert!(LatticeSpec::new(vec![2], 0.0, Boundary::Neumann).is_err());
        assert!(LatticeSpec::new(vec![3], 1.0, Boundary::Robin(vec![-1.0])).is_err());
        assert!(LatticeSpec::new(vec![3], 1.0, Boundary::Robin(vec![1.0; 3])).is_err());
    }
}
