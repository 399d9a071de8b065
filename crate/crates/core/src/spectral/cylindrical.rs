//! Cylindrical functionals `F[phi] = f(<g_1, phi>, ..., <g_k, phi>)`.

use serde::{Deserialize, Serialize};

use super::lattice::{LatticeField, LatticeSpec};
use super::test_function::TestFunction;
use crate::error::{Error, Result};

/// Bounded continuous outer function from a closed catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OuterFunction {
    /// `cos(sum_i k_i u_i)`.
    Cosine { frequencies: Vec<f64> },
    /// `1 / (1 + |u|^2 / s^2)`.
    BoundedRational { scale: f64 },
    /// `clamp(sum_j c_j t^j, -clip, clip)` with `t = sum_i w_i u_i`.
    ClippedPolynomial {
        weights: Vec<f64>,
        coefficients: Vec<f64>,
        clip: f64,
    },
    /// Product of factors, each consuming the next `arity` arguments.
    Product { factors: Vec<(OuterFunction, usize)> },
}

impl OuterFunction {
    pub fn arity(&self) -> Option<usize> {
        match self {
            OuterFunction::Cosine { frequencies } => Some(frequencies.len()),
            OuterFunction::BoundedRational { .. } => None,
            OuterFunction::ClippedPolynomial { weights, .. } => Some(weights.len()),
            OuterFunction::Product { factors } => Some(factors.iter().map(|(_, a)| a).sum()),
        }
    }

    /// `||f||_inf`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            OuterFunction::Cosine { .. } | OuterFunction::BoundedRational { .. } => 1.0,
            OuterFunction::ClippedPolynomial { clip, .. } => clip.abs(),
            OuterFunction::Product { factors } => factors.iter().map(|(f, _)| f.sup_norm()).product(),
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            OuterFunction::Cosine { frequencies } => {
                frequencies.iter().zip(u).map(|(k, x)| k * x).sum::<f64>().cos()
            }
            OuterFunction::BoundedRational { scale } => {
                let r2: f64 = u.iter().map(|x| x * x).sum();
                1.0 / (1.0 + r2 / (scale * scale))
            }
            OuterFunction::ClippedPolynomial {
                weights,
                coefficients,
                clip,
            } => {
                let t: f64 = weights.iter().zip(u).map(|(w, x)| w * x).sum();
                let v = coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c);
                v.clamp(-clip.abs(), clip.abs())
            }
            OuterFunction::Product { factors } => {
                let mut offset = 0;
                let mut acc = 1.0;
                for (f, a) in factors {
                    acc *= f.eval(&u[offset..offset + a]);
                    offset += a;
                }
                acc
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OuterFunction::BoundedRational { scale } if !(*scale > 0.0) => Err(Error::InvalidParameter {
                name: "scale",
                reason: "must be positive".into(),
            }),
            OuterFunction::ClippedPolynomial { clip, .. } if !clip.is_finite() => {
                Err(Error::NonFinite("clip"))
            }
            OuterFunction::Product { factors } => {
                for (f, a) in factors {
                    f.validate()?;
                    if let Some(n) = f.arity() {
                        if n != *a {
                            return Err(Error::DimensionMismatch {
                                expected: n,
                                actual: *a,
                            });
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylindricalFunction {
    pub outer: OuterFunction,
    pub inner: Vec<TestFunction>,
}

impl CylindricalFunction {
    pub fn new(outer: OuterFunction, inner: Vec<TestFunction>) -> Result<Self> {
        let f = CylindricalFunction { outer, inner };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        if let Some(n) = self.outer.arity() {
            if n != self.inner.len() {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: self.inner.len(),
                });
            }
        }
        Ok(())
    }

    /// Constant functional `F = 1`.
    pub fn one() -> Self {
        CylindricalFunction {
            outer: OuterFunction::Product { factors: vec![] },
            inner: vec![],
        }
    }

    /// `cos(<g, phi>)`.
    pub fn cosine(g: TestFunction) -> Self {
        CylindricalFunction {
            outer: OuterFunction::Cosine {
                frequencies: vec![1.0],
            },
            inner: vec![g],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.outer.sup_norm()
    }

    /// Pointwise product, itself cylindrical over the concatenated inner list.
    pub fn product(&self, other: &CylindricalFunction) -> CylindricalFunction {
        let mut inner = self.inner.clone();
        inner.extend(other.inner.iter().cloned());
        CylindricalFunction {
            outer: OuterFunction::Product {
                factors: vec![
                    (self.outer.clone(), self.inner.len()),
                    (other.outer.clone(), other.inner.len()),
                ],
            },
            inner,
        }
    }

    pub fn check_fits(&self, spec: &LatticeSpec, margin: f64) -> Result<()> {
        self.inner.iter().try_for_each(|g| g.check_fits(spec, margin))
    }

    /// Evaluates `F` from precomputed pairings `<g_i, phi>`.
    pub fn eval_pairings(&self, pairings: &[f64]) -> f64 {
        self.outer.eval(pairings)
    }

    /// Evaluates `F[phi]` by sampling the inner test functions.
    pub fn eval(&self, field: &LatticeField) -> f64 {
        let u: Vec<f64> = self
            .inner
            .iter()
            .map(|g| g.sample(field.spec()).inner(field))
            .collect();
        self.eval_pairings(&u)
    }
}

/// Inner test functions of a set of cylindrical functionals, sampled once on
/// a lattice, with an index map from each functional to its pairings.
#[derive(Debug, Clone)]
pub struct SampledCylindricals {
    functions: Vec<CylindricalFunction>,
    sampled: Vec<LatticeField>,
    offsets: Vec<usize>,
}

impl SampledCylindricals {
    pub fn new(spec: &LatticeSpec, functions: &[CylindricalFunction]) -> Self {
        let mut sampled = Vec::new();
        let mut offsets = Vec::with_capacity(functions.len() + 1);
        offsets.push(0);
        for f in functions {
            for g in &f.inner {
                sampled.push(g.sample(spec));
            }
            offsets.push(sampled.len());
        }
        SampledCylindricals {
            functions: functions.to_vec(),
            sampled,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// `F_i[phi]` for every functional.
    pub fn eval(&self, field: &LatticeField) -> Vec<f64> {
        let pairings: Vec<f64> = self.sampled.iter().map(|g| g.inner(field)).collect();
        self.functions
            .iter()
            .enumerate()
            .map(|(i, f)| f.eval_pairings(&pairings[self.offsets[i]..self.offsets[i + 1]]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_functions_respect_their_bounds() {
        let fs = [
            OuterFunction::Cosine {
                frequencies: vec![1.0, -2.0],
            },
            OuterFunction::BoundedRational { scale: 0.5 },
            OuterFunction::ClippedPolynomial {
                weights: vec![1.0, 1.0],
                coefficients: vec![0.0, 1.0, 0.0, 3.0],
                clip: 2.0,
            },
        ];
        for f in &fs {
            for u in [[0.0, 0.0], [1.0, -3.0], [10.0, 7.0], [-100.0, 0.1]] {
                assert!(f.eval(&u).abs() <= f.sup_norm() + 1e-15);
            }
        }
    }

    #[test]
    fn product_evaluates_factors_on_their_arguments() {
        let spec = LatticeSpec::new(1, 32, 16.0, 1).unwrap();
        let a = CylindricalFunction::cosine(TestFunction::scalar_gaussian(vec![-2.0], 0.5));
        let b = CylindricalFunction::cosine(TestFunction::scalar_gaussian(vec![2.0], 0.5));
        let phi = LatticeField::from_fn(spec, |x, _| x[0].sin());
        let ab = a.product(&b);
        assert!((ab.eval(&phi) - a.eval(&phi) * b.eval(&phi)).abs() < 1e-14);
        assert_eq!(ab.sup_norm(), 1.0);
    }

    #[test]
    fn pairing_is_riemann_sum() {
        let spec = LatticeSpec::new(1, 64, 16.0, 1).unwrap();
        let g = TestFunction::scalar_gaussian(vec![0.0], 1.0);
        let phi = LatticeField::from_fn(spec, |_, _| 1.0);
        let u = g.sample(&spec).inner(&phi);
        assert!((u - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let r = CylindricalFunction::new(
            OuterFunction::Cosine {
                frequencies: vec![1.0, 1.0],
            },
            vec![TestFunction::scalar_gaussian(vec![0.0], 1.0)],
        );
        assert!(r.is_err());
    }
}
