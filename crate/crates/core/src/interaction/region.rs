//! Integration regions built from balls and half-spaces.
//!
//! Membership is decided at site centres with strict inequalities, so ties
//! on a boundary are excluded and the rule commutes with axis permutations
//! and flips.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::LatticeSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Region {
    /// `|x - center| < radius`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `sign * x_axis > offset`, `sign` is `+1` or `-1`.
    HalfSpace { axis: usize, sign: i8, offset: f64 },
    Intersection { parts: Vec<Region> },
    Union { parts: Vec<Region> },
    Difference { base: Box<Region>, minus: Box<Region> },
}

impl Region {
    pub fn ball(dim: usize, radius: f64) -> Self {
        Region::Ball {
            center: vec![0.0; dim],
            radius,
        }
    }

    /// `x_D > delta` (sign `+1`) or `x_D < -delta` (sign `-1`).
    pub fn half_space(dim: usize, sign: i8, delta: f64) -> Self {
        Region::HalfSpace {
            axis: dim - 1,
            sign,
            offset: delta,
        }
    }

    /// `B(0, r)` intersected with `x_D > delta` or `x_D < -delta`.
    pub fn half_ball(dim: usize, radius: f64, sign: i8, delta: f64) -> Self {
        Region::Intersection {
            parts: vec![Self::ball(dim, radius), Self::half_space(dim, sign, delta)],
        }
    }

    /// The slab `|x_D| <= delta` inside `B(0, r)`.
    pub fn equatorial_band(dim: usize, radius: f64, delta: f64) -> Self {
        Region::Difference {
            base: Box::new(Self::ball(dim, radius)),
            minus: Box::new(Region::Union {
                parts: vec![Self::half_space(dim, 1, delta), Self::half_space(dim, -1, delta)],
            }),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 < radius * radius
            }
            Region::HalfSpace { axis, sign, offset } => f64::from(*sign) * x[*axis] > *offset,
            Region::Intersection { parts } => parts.iter().all(|p| p.contains(x)),
            Region::Union { parts } => parts.iter().any(|p| p.contains(x)),
            Region::Difference { base, minus } => base.contains(x) && !minus.contains(x),
        }
    }

    /// Per-axis bound on `|x_j|` over the region, if bounded.
    pub fn extent(&self) -> Option<Vec<f64>> {
        match self {
            Region::Ball { center, radius } => Some(center.iter().map(|c| c.abs() + radius).collect()),
            Region::HalfSpace { .. } => None,
            Region::Intersection { parts } => parts
                .iter()
                .filter_map(|p| p.extent())
                .reduce(|a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect()),
            Region::Union { parts } => {
                let ext: Option<Vec<Vec<f64>>> = parts.iter().map(|p| p.extent()).collect();
                ext?.into_iter()
                    .reduce(|a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
            }
            Region::Difference { base, .. } => base.extent(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Region::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: center.len(),
                    });
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "radius",
                        reason: format!("must be positive, got {radius}"),
                    });
                }
                Ok(())
            }
            Region::HalfSpace { axis, sign, offset } => {
                if *axis >= dim || (*sign != 1 && *sign != -1) || !offset.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "half-space",
                        reason: format!("axis {axis} < {dim}, sign +-1 and finite offset required"),
                    });
                }
                Ok(())
            }
            Region::Intersection { parts } | Region::Union { parts } => {
                parts.iter().try_for_each(|p| p.validate(dim))
            }
            Region::Difference { base, minus } => {
                base.validate(dim)?;
                minus.validate(dim)
            }
        }
    }

    /// Region plus a `margin` collar must stay inside `[-L/2, L/2)^D`.
    pub fn check_fits(&self, spec: &LatticeSpec, margin: f64) -> Result<()> {
        self.validate(spec.dim)?;
        let ext = self
            .extent()
            .ok_or_else(|| Error::RegionOutOfBounds("region is unbounded".into()))?;
        let half = 0.5 * spec.length;
        for (j, e) in ext.iter().enumerate() {
            if e + margin >= half {
                return Err(Error::RegionOutOfBounds(format!(
                    "axis {j}: extent {e} plus margin {margin} reaches L/2 = {half}"
                )));
            }
        }
        Ok(())
    }

    /// Flat indices of the sites inside the region.
    pub fn sites(&self, spec: &LatticeSpec) -> Vec<usize> {
        (0..spec.num_sites())
            .filter(|&i| self.contains(&spec.position(i)))
            .collect()
    }

    pub fn reflected(&self) -> Region {
        match self {
            Region::Ball { center, radius } => {
                let mut c = center.clone();
                if let Some(last) = c.last_mut() {
                    *last = -*last;
                }
                Region::Ball { center: c, radius: *radius }
            }
            Region::HalfSpace { axis, sign, offset } => Region::HalfSpace {
                axis: *axis,
                sign: -sign,
                offset: *offset,
            },
            Region::Intersection { parts } => Region::Intersection {
                parts: parts.iter().map(|p| p.reflected()).collect(),
            },
            Region::Union { parts } => Region::Union {
                parts: parts.iter().map(|p| p.reflected()).collect(),
            },
            Region::Difference { base, minus } => Region::Difference {
                base: Box::new(base.reflected()),
                minus: Box::new(minus.reflected()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn site_count_approximates_disc_area() {
        // Oracle: h^2 #{sites} -> pi r^2 with error O(h r).
        for (n, l) in [(64, 16.0), (128, 16.0), (256, 16.0)] {
            let spec = LatticeSpec::new(2, n, l, 1).unwrap();
            let r = 5.0;
            let h = spec.spacing();
            let area = h * h * Region::ball(2, r).sites(&spec).len() as f64;
            assert!((area - PI * r * r).abs() < 4.0 * h * r, "n {n}: {area}");
        }
    }

    #[test]
    fn pieces_partition_the_ball() {
        let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
        let (r, d) = (3.0, 0.4);
        let ball = Region::ball(2, r).sites(&spec).len();
        let up = Region::half_ball(2, r, 1, d).sites(&spec).len();
        let down = Region::half_ball(2, r, -1, d).sites(&spec).len();
        let band = Region::equatorial_band(2, r, d).sites(&spec).len();
        assert_eq!(ball, up + down + band);
        assert_eq!(up, down);
        assert_eq!(Region::half_ball(2, r, 1, d).reflected(), Region::half_ball(2, r, -1, d));
    }

    #[test]
    fn fit_checks() {
        let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
        assert!(Region::ball(2, 3.0).check_fits(&spec, 0.5).is_ok());
        assert!(Region::ball(2, 3.6).check_fits(&spec, 0.5).is_err());
        assert!(Region::half_space(2, 1, 0.1).check_fits(&spec, 0.0).is_err());
        assert!(Region::half_ball(2, 3.0, 1, 0.1).check_fits(&spec, 0.5).is_ok());
    }
}
