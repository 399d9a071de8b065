//! Catalog of local interaction densities and the bounded transform
//! `L -> L / (eps L + 1)`.
//!
//! A density is evaluated from per-site features of the mollified field:
//! either the squared jet norms `s_j = |(nabla^2)^j phi_Lambda(x)|^2`,
//! `j = 0..=l`, or the stacked constraint values `kappa_i(x)`.

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};

/// `coefficient * prod_j s_j^{powers[j]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ConstraintForm {
    /// Linear constant-coefficient constraints applied to `phi_Lambda`.
    Linear { set: ConstraintSet },
    /// `kappa = |phi_Lambda|^2 - radius^2`.
    SigmaModel { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Lagrangian {
    /// `clamp(offset + sum_m monomial_m, floor, clip)`.
    ClippedPolynomial {
        monomials: Vec<Monomial>,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        floor: Option<f64>,
        #[serde(default)]
        clip: Option<f64>,
    },
    /// `strength * s_0 / (s_0 + scale^2)`.
    BoundedRational { strength: f64, scale: f64 },
    /// `strength * sum_i t(kappa_i)^2` with `t(k) = k` or, when `bounded`,
    /// `t(k) = k / (1 + k^2)`.
    ConstraintQuadratic {
        strength: f64,
        constraint: ConstraintForm,
        #[serde(default)]
        bounded: bool,
    },
    /// `v / (eps v + 1)` with `v = L - inf L`.
    Bounded { inner: Box<Lagrangian>, epsilon: f64 },
}

/// Per-site inputs a density needs.
#[derive(Debug, Clone, PartialEq)]
pub enum Features<'a> {
    /// Squared jet norms up to order `l`.
    JetNorms(usize),
    /// Stacked linear constraint values.
    Linear(&'a ConstraintSet),
}

impl Lagrangian {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Lagrangian::ClippedPolynomial {
            monomials: vec![],
            offset: c,
            floor: None,
            clip: None,
        }
    }

    /// `coupling * |phi_Lambda|^2`.
    pub fn mass(coupling: f64) -> Self {
        Lagrangian::ClippedPolynomial {
            monomials: vec![Monomial {
                coefficient: coupling,
                powers: vec![1],
            }],
            offset: 0.0,
            floor: None,
            clip: None,
        }
    }

    /// `min(coupling * |phi_Lambda|^4, clip)`.
    pub fn clipped_quartic(coupling: f64, clip: f64) -> Self {
        Lagrangian::ClippedPolynomial {
            monomials: vec![Monomial {
                coefficient: coupling,
                powers: vec![2],
            }],
            offset: 0.0,
            floor: None,
            clip: Some(clip),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidParameter {
            name: "lagrangian",
            reason: reason.into(),
        };
        match self {
            Lagrangian::ClippedPolynomial {
                monomials,
                offset,
                floor,
                clip,
            } => {
                if !offset.is_finite() || monomials.iter().any(|m| !m.coefficient.is_finite()) {
                    return Err(Error::NonFinite("lagrangian coefficient"));
                }
                if floor.is_none() && monomials.iter().any(|m| m.coefficient < 0.0 && m.powers.iter().any(|&p| p > 0)) {
                    return Err(bad("negative monomials need an explicit floor to stay semibounded"));
                }
                if let (Some(f), Some(c)) = (floor, clip) {
                    if f > c {
                        return Err(bad("floor exceeds clip"));
                    }
                }
                Ok(())
            }
            Lagrangian::BoundedRational { strength, scale } => {
                if !(strength.is_finite() && *strength >= 0.0 && *scale > 0.0) {
                    return Err(bad("bounded rational needs strength >= 0 and scale > 0"));
                }
                Ok(())
            }
            Lagrangian::ConstraintQuadratic { strength, constraint, .. } => {
                if !(strength.is_finite() && *strength >= 0.0) {
                    return Err(bad("constraint strength must be non-negative"));
                }
                match constraint {
                    ConstraintForm::Linear { set } => set.validate(),
                    ConstraintForm::SigmaModel { radius } if !radius.is_finite() => {
                        Err(Error::NonFinite("sigma-model radius"))
                    }
                    _ => Ok(()),
                }
            }
            Lagrangian::Bounded { inner, epsilon } => {
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return Err(bad("epsilon must be non-negative"));
                }
                inner.validate()
            }
        }
    }

    /// Jet order `l`.
    pub fn jet_order(&self) -> usize {
        match self {
            Lagrangian::ClippedPolynomial { monomials, .. } => monomials
                .iter()
                .filter_map(|m| m.powers.iter().rposition(|&p| p > 0))
                .max()
                .unwrap_or(0),
            Lagrangian::Bounded { inner, .. } => inner.jet_order(),
            _ => 0,
        }
    }

    pub fn features(&self) -> Features<'_> {
        match self {
            Lagrangian::ConstraintQuadratic {
                constraint: ConstraintForm::Linear { set },
                ..
            } => Features::Linear(set),
            Lagrangian::Bounded { inner, .. } => inner.features(),
            _ => Features::JetNorms(self.jet_order()),
        }
    }

    /// `inf L` over all feature values.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Lagrangian::ClippedPolynomial {
                monomials,
                offset,
                floor,
                clip,
            } => {
                let base = match floor {
                    Some(f) => *f,
                    None => {
                        let constant: f64 = monomials
                            .iter()
                            .filter(|m| m.powers.iter().all(|&p| p == 0))
                            .map(|m| m.coefficient)
                            .sum();
                        offset + constant
                    }
                };
                clip.map_or(base, |c| base.min(c))
            }
            _ => 0.0,
        }
    }

    /// `sup L` when the catalog form is bounded above.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Lagrangian::ClippedPolynomial { monomials, offset, clip, .. } => {
                let constant = monomials.iter().all(|m| m.powers.iter().all(|&p| p == 0));
                if constant {
                    let v = offset + monomials.iter().map(|m| m.coefficient).sum::<f64>();
                    Some(clip.map_or(v, |c| v.min(c)))
                } else if monomials.iter().all(|m| m.coefficient <= 0.0) {
                    let v = *offset;
                    Some(clip.map_or(v, |c| v.min(c)))
                } else {
                    *clip
                }
            }
            Lagrangian::BoundedRational { strength, .. } => Some(*strength),
            Lagrangian::ConstraintQuadratic {
                strength,
                constraint,
                bounded,
            } => {
                if !bounded {
                    return None;
                }
                let rows = match constraint {
                    ConstraintForm::Linear { set } => set.rows(),
                    ConstraintForm::SigmaModel { .. } => 1,
                };
                Some(strength * rows as f64 / 4.0)
            }
            Lagrangian::Bounded { inner, epsilon } => {
                let span = inner.sup_bound().map(|s| s - inner.lower_bound());
                match (span, *epsilon > 0.0) {
                    (Some(s), true) => Some(s / (epsilon * s + 1.0)),
                    (Some(s), false) => Some(s),
                    (None, true) => Some(1.0 / epsilon),
                    (None, false) => None,
                }
            }
        }
    }

    /// Density at one site.
    pub fn eval(&self, features: &[f64]) -> f64 {
        match self {
            Lagrangian::ClippedPolynomial {
                monomials,
                offset,
                floor,
                clip,
            } => {
                let mut v = *offset;
                for m in monomials {
                    let mut t = m.coefficient;
                    for (j, &p) in m.powers.iter().enumerate() {
                        if p > 0 {
                            t *= features[j].powi(p as i32);
                        }
                    }
                    v += t;
                }
                if let Some(f) = floor {
                    v = v.max(*f);
                }
                if let Some(c) = clip {
                    v = v.min(*c);
                }
                v
            }
            Lagrangian::BoundedRational { strength, scale } => {
                let s = features[0];
                strength * s / (s + scale * scale)
            }
            Lagrangian::ConstraintQuadratic {
                strength,
                constraint,
                bounded,
            } => {
                let t = |k: f64| if *bounded { k / (1.0 + k * k) } else { k };
                let sum: f64 = match constraint {
                    ConstraintForm::Linear { .. } => features.iter().map(|&k| t(k) * t(k)).sum(),
                    ConstraintForm::SigmaModel { radius } => {
                        let k = t(features[0] - radius * radius);
                        k * k
                    }
                };
                strength * sum
            }
            Lagrangian::Bounded { inner, epsilon } => {
                let v = inner.eval(features) - inner.lower_bound();
                v / (epsilon * v + 1.0)
            }
        }
    }
}

/// `L~ = v / (eps v + 1)` with `v = L - inf L >= 0`; bounded by `1 / eps`
/// and increasing to `v` as `eps` decreases to zero.
pub fn bound_lagrangian(l: &Lagrangian, epsilon: f64) -> Result<Lagrangian> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be a finite non-negative number, got {epsilon}"),
        });
    }
    l.validate()?;
    Ok(Lagrangian::Bounded {
        inner: Box::new(l.clone()),
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Lagrangian {
        // L(x) = x^2 with x = |phi|, i.e. one power of s_0.
        Lagrangian::mass(1.0)
    }

    #[test]
    fn bounded_transform_examples() {
        let b = bound_lagrangian(&square(), 1.0).unwrap();
        assert!((b.eval(&[4.0]) - 4.0 / 5.0).abs() < 1e-15);
        let id = bound_lagrangian(&square(), 0.0).unwrap();
        for s in [0.0, 0.3, 7.0, 1e6] {
            assert_eq!(id.eval(&[s]), s);
        }
        assert_eq!(b.sup_bound(), Some(1.0));
        assert!(b.eval(&[1e12]) < 1.0 && b.eval(&[1e12]) > 1.0 - 1e-11);
        assert!(bound_lagrangian(&square(), -0.5).is_err());
    }

    #[test]
    fn bounded_transform_increases_as_epsilon_shrinks() {
        let mut last = 0.0;
        for eps in [10.0, 1.0, 0.1, 0.01, 0.0] {
            let v = bound_lagrangian(&square(), eps).unwrap().eval(&[3.0]);
            assert!(v > last);
            last = v;
        }
        assert_eq!(last, 3.0);
    }

    #[test]
    fn catalog_bounds() {
        let q = Lagrangian::clipped_quartic(2.0, 1.0);
        assert_eq!(q.sup_bound(), Some(1.0));
        assert_eq!(q.lower_bound(), 0.0);
        assert_eq!(q.eval(&[0.5]), 0.5);
        assert_eq!(q.eval(&[3.0]), 1.0);
        let r = Lagrangian::BoundedRational {
            strength: 2.0,
            scale: 1.0,
        };
        assert!(r.eval(&[1e9]) < 2.0);
        assert_eq!(Lagrangian::constant(3.0).sup_bound(), Some(3.0));
        assert_eq!(Lagrangian::mass(1.0).sup_bound(), None);
        let neg = Lagrangian::ClippedPolynomial {
            monomials: vec![Monomial {
                coefficient: -1.0,
                powers: vec![1],
            }],
            offset: 0.0,
            floor: None,
            clip: None,
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn jet_order_and_features() {
        let l = Lagrangian::ClippedPolynomial {
            monomials: vec![Monomial {
                coefficient: 1.0,
                powers: vec![0, 0, 1],
            }],
            offset: 0.0,
            floor: None,
            clip: Some(5.0),
        };
        assert_eq!(l.jet_order(), 2);
        assert_eq!(l.features(), Features::JetNorms(2));
        let sigma = Lagrangian::ConstraintQuadratic {
            strength: 3.0,
            constraint: ConstraintForm::SigmaModel { radius: 1.0 },
            bounded: true,
        };
        assert_eq!(sigma.eval(&[1.0]), 0.0);
        assert!(sigma.eval(&[10.0]) <= sigma.sup_bound().unwrap());
    }
}
