use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic hypercubic lattice `[-L/2, L/2)^D` with `N` sites per axis
/// carrying `K` real field components.
///
/// Sites sit at `x_i = (i - N/2) h` so the origin is a lattice site and the
/// reflection `x_D -> -x_D` is an exact index permutation. Flat site indices
/// are row-major with the last axis varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub sites: usize,
    pub length: f64,
    pub components: usize,
}

impl LatticeSpec {
    /// Validated constructor. `N` must be even so the momentum grid is
    /// symmetric under `p -> -p` apart from the Nyquist row.
    pub fn new(dim: usize, sites: usize, length: f64, components: usize) -> Result<Self> {
        let spec = LatticeSpec {
            dim,
            sites,
            length,
            components,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if self.sites < 2 {
            return Err(Error::InvalidLattice("need at least 2 sites per axis".into()));
        }
        if !self.sites.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!(
                "sites per axis must be even (got {}); odd grids have an asymmetric momentum grid",
                self.sites
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "side length must be positive (got {})",
                self.length
            )));
        }
        if self.components == 0 {
            return Err(Error::InvalidLattice("need at least one field component".into()));
        }
        u32::try_from(self.dim)
            .ok()
            .and_then(|d| self.sites.checked_pow(d))
            .and_then(|n| n.checked_mul(self.components))
            .ok_or_else(|| Error::InvalidLattice("lattice too large".into()))?;
        Ok(())
    }

    /// Lattice spacing `h = L / N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.sites as f64
    }

    /// `h^D`, the Riemann-sum weight of one site.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `L^D`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Number of sites `N^D`.
    pub fn num_sites(&self) -> usize {
        self.sites.pow(self.dim as u32)
    }

    /// Number of real degrees of freedom `K N^D`.
    pub fn num_dof(&self) -> usize {
        self.num_sites() * self.components
    }

    /// Momentum step `2 pi / L`.
    pub fn momentum_step(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest grid momentum magnitude along one axis, `pi N / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.sites as f64 / self.length
    }

    /// Signed mode number `k in [-N/2, N/2)` of FFT-ordered index `j`.
    pub fn mode_number(&self, j: usize) -> i64 {
        let n = self.sites as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Physical coordinate of axis index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.sites / 2) as f64) * self.spacing()
    }

    /// Axis index of the site nearest to physical coordinate `x` (periodic).
    pub fn axis_index(&self, x: f64) -> usize {
        let n = self.sites as i64;
        let i = (x / self.spacing()).round() as i64 + n / 2;
        i.rem_euclid(n) as usize
    }

    /// Multi-index of flat site index `flat`.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.dim);
        for axis in (0..self.dim).rev() {
            out[axis] = flat % self.sites;
            flat /= self.sites;
        }
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        self.unravel(flat, &mut idx);
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.sites + i)
    }

    /// Position of flat site index `flat`.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim];
        self.unravel(flat, &mut idx);
        idx.iter().map(|&i| self.coordinate(i)).collect()
    }

    /// Momentum of flat spectral (FFT-ordered) index `flat`.
    pub fn momentum(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim];
        self.unravel(flat, &mut idx);
        let dp = self.momentum_step();
        idx.iter().map(|&j| dp * self.mode_number(j) as f64).collect()
    }

    /// All grid momenta in FFT order.
    pub fn momenta(&self) -> Vec<Vec<f64>> {
        (0..self.num_sites()).map(|j| self.momentum(j)).collect()
    }

    /// `|p|^2` for every spectral index, FFT order.
    pub fn momentum_squared(&self) -> Vec<f64> {
        (0..self.num_sites())
            .map(|j| self.momentum(j).iter().map(|p| p * p).sum())
            .collect()
    }

    /// Minimum-image displacement `x - c` on the torus.
    pub fn displacement(&self, x: &[f64], c: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(c)
            .map(|(&xi, &ci)| {
                let mut d = xi - ci;
                d -= self.length * (d / self.length).round();
                d
            })
            .collect()
    }
}

/// Real `K`-component field sampled on the lattice.
///
/// Storage is component-major: component `k` occupies
/// `data[k * N^D .. (k + 1) * N^D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    spec: LatticeSpec,
    data: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(spec: LatticeSpec) -> Self {
        LatticeField {
            data: vec![0.0; spec.num_dof()],
            spec,
        }
    }

    pub fn from_vec(spec: LatticeSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.num_dof() {
            return Err(Error::DimensionMismatch {
                expected: spec.num_dof(),
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lattice field"));
        }
        Ok(LatticeField { spec, data })
    }

    /// Builds a field by evaluating `f(position, component)` at every site.
    pub fn from_fn(spec: LatticeSpec, mut f: impl FnMut(&[f64], usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(spec.num_dof());
        let positions: Vec<Vec<f64>> = (0..spec.num_sites()).map(|s| spec.position(s)).collect();
        for k in 0..spec.components {
            for x in &positions {
                data.push(f(x, k));
            }
        }
        LatticeField { spec, data }
    }

    pub(crate) fn from_raw(spec: LatticeSpec, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), spec.num_dof());
        LatticeField { spec, data }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, k: usize) -> &[f64] {
        let n = self.spec.num_sites();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.spec.num_sites();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `<u, v>_h = h^D sum_x u(x) . v(x)`.
    pub fn inner(&self, other: &LatticeField) -> f64 {
        debug_assert_eq!(self.spec, other.spec);
        self.spec.cell_volume() * crate::stats::pairwise_dot(&self.data, &other.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_grid() {
        let spec = LatticeSpec::new(1, 8, 8.0, 1).unwrap();
        assert_eq!(spec.spacing(), 1.0);
        assert_eq!(spec.num_sites(), 8);
        let mut ks: Vec<f64> = spec.momenta().into_iter().map(|p| p[0]).collect();
        ks.sort_by(f64::total_cmp);
        let step = PI / 4.0;
        for (i, p) in ks.iter().enumerate() {
            assert!((p - (i as f64 - 4.0) * step).abs() < 1e-15);
        }
        assert!((ks[0] + PI).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_grid() {
        let spec = LatticeSpec::new(2, 16, 4.0, 2).unwrap();
        assert_eq!(spec.spacing(), 0.25);
        assert_eq!(spec.num_sites(), 256);
        assert_eq!(spec.num_dof(), 512);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            LatticeSpec::new(0, 8, 8.0, 1),
            Err(Error::InvalidLattice(_))
        ));
        assert!(LatticeSpec::new(1, 7, 8.0, 1).is_err());
        assert!(LatticeSpec::new(1, 8, 0.0, 1).is_err());
        assert!(LatticeSpec::new(1, 8, -1.0, 1).is_err());
        assert!(LatticeSpec::new(1, 8, 8.0, 0).is_err());
    }

    #[test]
    fn origin_is_a_site_and_ravel_roundtrips() {
        let spec = LatticeSpec::new(3, 6, 3.0, 1).unwrap();
        let mut idx = vec![0; 3];
        for flat in 0..spec.num_sites() {
            spec.unravel(flat, &mut idx);
            assert_eq!(spec.ravel(&idx), flat);
        }
        let origin = spec.ravel(&[3, 3, 3]);
        assert_eq!(spec.position(origin), vec![0.0, 0.0, 0.0]);
        assert_eq!(spec.axis_index(0.0), 3);
        assert_eq!(spec.axis_index(-1.5), 0);
        assert_eq!(spec.axis_index(1.5), 0);
    }

    #[test]
    fn displacement_uses_minimum_image() {
        let spec = LatticeSpec::new(1, 8, 8.0, 1).unwrap();
        let d = spec.displacement(&[3.5], &[-3.5]);
        assert!((d[0] + 1.0).abs() < 1e-15);
    }
}
