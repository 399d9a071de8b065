//! Conditional independence across a separating band for a Gaussian with
//! local lattice precision `h^D (-Delta_h + 1)`.
//!
//! On the torus a slab along the last axis does not disconnect anything,
//! so the band is two slabs of `w` sites: one starting at the origin plane
//! (index `N/2`) and one at the wrap-around plane (index `0`). The two
//! sides are the remaining half-open slabs.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{apply_multiplier, LatticeField, LatticeSpec};

/// Largest lattice accepted by the dense solver.
pub const MARKOV_MAX_SITES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionSymbol {
    /// Nearest-neighbour `-Delta_h + 1`, stencil radius one.
    DiscreteLaplacian,
    /// Spectral `p^2 + 1`, dense in position space.
    Continuum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Probes {
    /// Sites adjacent to the band on both sides, all cross pairs.
    Boundary,
    Pairs { pairs: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovResult {
    /// Largest `|Cov(phi(x), phi(y) | band)|` over the probe pairs.
    pub max_conditional: f64,
    /// Largest unconditional `|Cov(phi(x), phi(y))|` over the same pairs.
    pub max_unconditional: f64,
    pub pairs: usize,
    pub band_sites: usize,
}

fn precision(spec: &LatticeSpec, symbol: PrecisionSymbol) -> DMatrix<f64> {
    let n = spec.num_sites();
    let h = spec.spacing();
    let cell = spec.cell_volume();
    let mut q = DMatrix::zeros(n, n);
    match symbol {
        PrecisionSymbol::DiscreteLaplacian => {
            let hop = cell / (h * h);
            for s in 0..n {
                q[(s, s)] += cell + 2.0 * spec.dim as f64 * hop;
                let idx = spec.multi_index(s);
                for axis in 0..spec.dim {
                    for step in [1, spec.sites - 1] {
                        let mut nb = idx.clone();
                        nb[axis] = (nb[axis] + step) % spec.sites;
                        q[(s, spec.ravel(&nb))] -= hop;
                    }
                }
            }
        }
        PrecisionSymbol::Continuum => {
            let mult: Vec<f64> = spec.momentum_squared().iter().map(|p2| cell * (p2 + 1.0)).collect();
            let scalar = LatticeSpec { components: 1, ..*spec };
            let mut e = LatticeField::zeros(scalar);
            for s in 0..n {
                e.data_mut()[s] = 1.0;
                let mut col = e.clone();
                apply_multiplier(&mut col, &mult);
                q.column_mut(s).copy_from_slice(col.data());
                e.data_mut()[s] = 0.0;
            }
            q = (&q + q.transpose()) * 0.5;
        }
    }
    q
}

/// `-1` in the band, `0` on the lower side, `1` on the upper side, by the
/// last-axis index `t`.
fn side_of(t: usize, n: usize, width: usize) -> i8 {
    let half = n / 2;
    if (half..half + width).contains(&t) || t < width {
        -1
    } else if t < half {
        0
    } else {
        1
    }
}

/// Maximum conditional covariance between probe sites on opposite sides of
/// a band of `width` sites per slab.
pub fn markov_check(spec: &LatticeSpec, width: usize, probes: &Probes, symbol: PrecisionSymbol) -> Result<MarkovResult> {
    spec.validate()?;
    let n = spec.num_sites();
    if n > MARKOV_MAX_SITES {
        return Err(Error::InvalidLattice(format!(
            "{n} sites exceed the dense limit {MARKOV_MAX_SITES}"
        )));
    }
    let sites = spec.sites;
    if width >= sites / 2 {
        return Err(Error::BandDoesNotSeparate(format!(
            "band of width {width} leaves an empty side on {sites} sites"
        )));
    }
    let last = spec.dim - 1;
    let t_of = |s: usize| spec.multi_index(s)[last];
    let side: Vec<i8> = (0..n).map(|s| side_of(t_of(s), sites, width)).collect();
    let pairs: Vec<(usize, usize)> = match probes {
        Probes::Boundary => {
            let half = sites / 2;
            let lower = [width, half - 1];
            let upper = [half + width, sites - 1];
            let a: Vec<usize> = (0..n).filter(|&s| lower.contains(&t_of(s))).collect();
            let b: Vec<usize> = (0..n).filter(|&s| upper.contains(&t_of(s))).collect();
            a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
        }
        Probes::Pairs { pairs } => {
            for &(x, y) in pairs {
                if x >= n || y >= n {
                    return Err(Error::InvalidParameter {
                        name: "probes",
                        reason: format!("site index out of range in ({x}, {y})"),
                    });
                }
                if side[x] < 0 || side[y] < 0 || side[x] == side[y] {
                    return Err(Error::BandDoesNotSeparate(format!(
                        "probes {x} and {y} are not on opposite sides of the band"
                    )));
                }
            }
            pairs.clone()
        }
    };
    let q = precision(spec, symbol);
    let free: Vec<usize> = (0..n).filter(|&s| side[s] >= 0).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in free.iter().enumerate() {
        pos[s] = i;
    }
    let qff = DMatrix::from_fn(free.len(), free.len(), |i, j| q[(free[i], free[j])]);
    let singular = || Error::SolverNonConvergence {
        iterations: 0,
        residual: f64::NAN,
    };
    let cond = Cholesky::new(qff).ok_or_else(singular)?;
    let full = Cholesky::new(q).ok_or_else(singular)?;
    let mut ys: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    ys.sort_unstable();
    ys.dedup();
    let (mut max_c, mut max_u) = (0.0f64, 0.0f64);
    for y in ys {
        let mut e = DVector::zeros(free.len());
        e[pos[y]] = 1.0;
        let col_c = cond.solve(&e);
        let mut e = DVector::zeros(n);
        e[y] = 1.0;
        let col_u = full.solve(&e);
        for &(x, _) in pairs.iter().filter(|p| p.1 == y) {
            max_c = max_c.max(col_c[pos[x]].abs());
            max_u = max_u.max(col_u[x].abs());
        }
    }
    Ok(MarkovResult {
        max_conditional: max_c,
        max_unconditional: max_u,
        pairs: pairs.len(),
        band_sites: side.iter().filter(|&&s| s < 0).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Conditional covariance by the Schur complement of the covariance
    /// matrix, `S_AA - S_AB S_BB^{-1} S_BA`.
    fn schur_oracle(spec: &LatticeSpec, width: usize, x: usize, y: usize) -> f64 {
        let q = precision(spec, PrecisionSymbol::DiscreteLaplacian);
        let sigma = q.try_inverse().unwrap();
        let n = spec.num_sites();
        let band: Vec<usize> = (0..n)
            .filter(|&s| side_of(spec.multi_index(s)[spec.dim - 1], spec.sites, width) < 0)
            .collect();
        let sbb = DMatrix::from_fn(band.len(), band.len(), |i, j| sigma[(band[i], band[j])]);
        let sxb = DVector::from_fn(band.len(), |i, _| sigma[(x, band[i])]);
        let syb = DVector::from_fn(band.len(), |i, _| sigma[(y, band[i])]);
        let inv = sbb.try_inverse().unwrap();
        sigma[(x, y)] - sxb.dot(&(inv * syb))
    }

    #[test]
    fn one_dimensional_band_separates() {
        let spec = LatticeSpec::new(1, 32, 16.0, 1).unwrap();
        let r = markov_check(&spec, 1, &Probes::Boundary, PrecisionSymbol::DiscreteLaplacian).unwrap();
        assert!(r.max_conditional < 1e-10);
        assert!(r.max_unconditional > 1e-3);
        assert_eq!(r.band_sites, 2);
        // Oracle agreement on one pair straddling the origin slab.
        assert!(schur_oracle(&spec, 1, 15, 17).abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_band_separates() {
        let spec = LatticeSpec::new(2, 16, 8.0, 1).unwrap();
        let r = markov_check(&spec, 1, &Probes::Boundary, PrecisionSymbol::DiscreteLaplacian).unwrap();
        assert!(r.max_conditional < 1e-10);
        assert_eq!(r.pairs, 32 * 32);
    }

    #[test]
    fn zero_width_band_leaves_correlation() {
        let spec = LatticeSpec::new(1, 32, 16.0, 1).unwrap();
        let r = markov_check(&spec, 0, &Probes::Boundary, PrecisionSymbol::DiscreteLaplacian).unwrap();
        assert!(r.max_conditional > 1e-3);
        let (x, y) = (15, 16);
        let ours = markov_check(&spec, 0, &Probes::Pairs { pairs: vec![(x, y)] }, PrecisionSymbol::DiscreteLaplacian)
            .unwrap()
            .max_conditional;
        assert!((ours - schur_oracle(&spec, 0, x, y).abs()).abs() < 1e-12);
    }

    #[test]
    fn spectral_symbol_is_not_local() {
        let spec = LatticeSpec::new(1, 32, 16.0, 1).unwrap();
        let r = markov_check(&spec, 1, &Probes::Boundary, PrecisionSymbol::Continuum).unwrap();
        assert!(r.max_conditional > 1e-6);
    }

    #[test]
    fn probes_on_one_side_are_rejected() {
        let spec = LatticeSpec::new(1, 32, 16.0, 1).unwrap();
        let same = Probes::Pairs { pairs: vec![(3, 5)] };
        assert!(matches!(
            markov_check(&spec, 1, &same, PrecisionSymbol::DiscreteLaplacian),
            Err(Error::BandDoesNotSeparate(_))
        ));
        let in_band = Probes::Pairs { pairs: vec![(16, 20)] };
        assert!(markov_check(&spec, 1, &in_band, PrecisionSymbol::DiscreteLaplacian).is_err());
    }
}
