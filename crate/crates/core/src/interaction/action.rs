//! Cutoff action integrals `int_region L(jet of phi_Lambda)(x) dx` on the
//! lattice.

use num_complex::Complex64;

use super::lagrangian::{Features, Lagrangian};
use super::region::Region;
use crate::constraints::grid_symbol;
use crate::error::Result;
use crate::free_measure::Mollifier;
use crate::spectral::{apply_matrix_multiplier, apply_multiplier, LatticeField, LatticeSpec};
use crate::stats::pairwise_sum;

enum Channels {
    /// One multiplier `sigma^(p/Lambda) (-p^2)^j` per jet order.
    Jets(Vec<Vec<f64>>),
    Linear { rows: usize, symbol: Vec<Complex64> },
}

/// Precomputed multipliers and region sites for repeated action
/// evaluation on one lattice.
pub struct ActionPlan {
    spec: LatticeSpec,
    lagrangian: Lagrangian,
    region: Region,
    mollifier: Mollifier,
    sites: Vec<usize>,
    channels: Channels,
}

impl ActionPlan {
    pub fn new(spec: &LatticeSpec, lagrangian: &Lagrangian, region: &Region, mollifier: &Mollifier) -> Result<Self> {
        spec.validate()?;
        lagrangian.validate()?;
        mollifier.check_lattice(spec)?;
        region.check_fits(spec, mollifier.support_radius())?;
        let sig = mollifier.grid_multiplier(spec);
        let channels = match lagrangian.features() {
            Features::JetNorms(l) => {
                let p2 = spec.momentum_squared();
                Channels::Jets(
                    (0..=l)
                        .map(|j| {
                            sig.iter()
                                .zip(&p2)
                                .map(|(s, q)| s * (-q).powi(j as i32))
                                .collect()
                        })
                        .collect(),
                )
            }
            Features::Linear(set) => {
                set.check_shape(spec.dim, spec.components)?;
                let rows = set.rows();
                let k = spec.components;
                let mut symbol = grid_symbol(set, spec);
                for (i, v) in symbol.iter_mut().enumerate() {
                    *v *= sig[i / (rows * k)];
                }
                Channels::Linear { rows, symbol }
            }
        };
        Ok(ActionPlan {
            spec: *spec,
            lagrangian: lagrangian.clone(),
            region: region.clone(),
            mollifier: mollifier.clone(),
            sites: region.sites(spec),
            channels,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    /// Number of sites in the region.
    pub fn region_sites(&self) -> usize {
        self.sites.len()
    }

    /// `h^D * #sites`.
    pub fn region_volume(&self) -> f64 {
        self.spec.cell_volume() * self.sites.len() as f64
    }

    /// Per-site feature vectors in region order, flattened with the given
    /// stride (returned alongside).
    fn features(&self, field: &LatticeField) -> Result<(Vec<f64>, usize)> {
        let n = self.spec.num_sites();
        match &self.channels {
            Channels::Jets(mults) => {
                let width = mults.len();
                let mut out = vec![0.0; self.sites.len() * width];
                for (j, m) in mults.iter().enumerate() {
                    let mut g = field.clone();
                    apply_multiplier(&mut g, m);
                    let data = g.data();
                    for (s, &site) in self.sites.iter().enumerate() {
                        let norm2: f64 = (0..self.spec.components).map(|k| data[k * n + site].powi(2)).sum();
                        out[s * width + j] = norm2;
                    }
                }
                Ok((out, width))
            }
            Channels::Linear { rows, symbol } => {
                let kappa = apply_matrix_multiplier(field, *rows, symbol)?;
                let data = kappa.data();
                let mut out = vec![0.0; self.sites.len() * rows];
                for (s, &site) in self.sites.iter().enumerate() {
                    for r in 0..*rows {
                        out[s * rows + r] = data[r * n + site];
                    }
                }
                Ok((out, *rows))
            }
        }
    }

    /// `L` at every region site.
    pub fn site_values(&self, field: &LatticeField) -> Result<Vec<f64>> {
        let (feat, width) = self.features(field)?;
        if width == 0 {
            let v = self.lagrangian.eval(&[]);
            return Ok(vec![v; self.sites.len()]);
        }
        Ok(feat.chunks_exact(width).map(|f| self.lagrangian.eval(f)).collect())
    }

    /// `h^D sum_{x in region} L(x)`.
    pub fn action(&self, field: &LatticeField) -> Result<f64> {
        Ok(self.spec.cell_volume() * pairwise_sum(&self.site_values(field)?))
    }
}

/// One-shot action integral; build an [`ActionPlan`] for repeated use.
pub fn action_integral(field: &LatticeField, lagrangian: &Lagrangian, region: &Region, mollifier: &Mollifier) -> Result<f64> {
    ActionPlan::new(field.spec(), lagrangian, region, mollifier)?.action(field)
}
