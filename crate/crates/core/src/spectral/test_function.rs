//! Smooth localized `R^K`-valued test functions with known Fourier transforms.
//!
//! Two radial families are provided. The truncated bump
//! `A exp(-r^2 / 2w^2) exp(-s^2 / (1 - s^2))`, `s = r / R`, is smooth and
//! vanishes identically outside `B(c, R)`; it is the compactly supported
//! family. The Gaussian bump `A exp(-r^2 / 2w^2)` is not compactly supported
//! but has a closed-form transform, which makes it the workhorse for
//! quadrature oracles.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lattice::{LatticeField, LatticeSpec};
use super::radial::{self, RadialKey};
use crate::error::{Error, Result};

/// Absolute accuracy demanded from the truncated-bump transform quadrature.
pub const TRANSFORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum BumpFamily {
    GaussianBump,
    TruncatedBump { support_radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    #[serde(flatten)]
    pub family: BumpFamily,
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Unit vector in component space.
    pub direction: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl TestFunction {
    pub fn gaussian(center: Vec<f64>, width: f64, amplitude: f64, direction: Vec<f64>) -> Self {
        TestFunction {
            family: BumpFamily::GaussianBump,
            center,
            width,
            amplitude,
            direction,
        }
    }

    pub fn truncated(
        center: Vec<f64>,
        width: f64,
        support_radius: f64,
        amplitude: f64,
        direction: Vec<f64>,
    ) -> Self {
        TestFunction {
            family: BumpFamily::TruncatedBump { support_radius },
            center,
            width,
            amplitude,
            direction,
        }
    }

    /// Scalar unit-direction helper for `K = 1`.
    pub fn scalar_gaussian(center: Vec<f64>, width: f64) -> Self {
        Self::gaussian(center, width, 1.0, vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self, dim: usize, components: usize) -> Result<()> {
        if self.center.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.center.len(),
            });
        }
        if self.direction.len() != components {
            return Err(Error::DimensionMismatch {
                expected: components,
                actual: self.direction.len(),
            });
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "width",
                reason: format!("must be positive, got {}", self.width),
            });
        }
        if !self.amplitude.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("test function"));
        }
        let norm: f64 = self.direction.iter().map(|e| e * e).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "direction",
                reason: format!("must be a unit vector, |e| = {norm}"),
            });
        }
        if let BumpFamily::TruncatedBump { support_radius } = self.family {
            if !(support_radius.is_finite() && support_radius > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "support_radius",
                    reason: format!("must be positive, got {support_radius}"),
                });
            }
        }
        Ok(())
    }

    /// Radius beyond which the function is treated as negligible: the
    /// support radius for truncated bumps and `3w` for Gaussian bumps.
    pub fn effective_radius(&self) -> f64 {
        match self.family {
            BumpFamily::GaussianBump => 3.0 * self.width,
            BumpFamily::TruncatedBump { support_radius } => support_radius,
        }
    }

    /// Checks that `B(c, effective_radius + margin)` lies strictly inside
    /// `[-L/2, L/2)^D`.
    pub fn check_fits(&self, spec: &LatticeSpec, margin: f64) -> Result<()> {
        self.validate(spec.dim, spec.components)?;
        let reach = self.effective_radius() + margin;
        let half = 0.5 * spec.length;
        for (axis, c) in self.center.iter().enumerate() {
            if c.abs() + reach >= half {
                return Err(Error::SupportViolation(format!(
                    "test function centred at {:?} with reach {reach} leaves the torus along axis {axis} (half side {half})",
                    self.center
                )));
            }
        }
        Ok(())
    }

    /// Radial profile without amplitude, as a function of `r = |x - c|`.
    pub fn profile(&self, r: f64) -> f64 {
        let w2 = self.width * self.width;
        match self.family {
            BumpFamily::GaussianBump => (-r * r / (2.0 * w2)).exp(),
            BumpFamily::TruncatedBump { support_radius } => truncated_profile(r, self.width, support_radius),
        }
    }

    /// Scalar value `A u(|x - c|)` on the torus (minimum-image distance).
    pub fn scalar_at(&self, spec: &LatticeSpec, x: &[f64]) -> f64 {
        let d = spec.displacement(x, &self.center);
        let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.amplitude * self.profile(r)
    }

    /// Samples the function on the lattice.
    pub fn sample(&self, spec: &LatticeSpec) -> LatticeField {
        let n = spec.num_sites();
        let scalars: Vec<f64> = (0..n).map(|s| self.scalar_at(spec, &spec.position(s))).collect();
        let mut data = Vec::with_capacity(spec.num_dof());
        for k in 0..spec.components {
            let e = self.direction.get(k).copied().unwrap_or(0.0);
            data.extend(scalars.iter().map(|v| v * e));
        }
        LatticeField::from_raw(*spec, data)
    }

    /// `int A u(|x|) e^{-i p x} dx` at `|p| = q` (transform of the profile
    /// centred at the origin).
    pub fn radial_transform(&self, q: f64) -> Result<f64> {
        let d = self.dim();
        match self.family {
            BumpFamily::GaussianBump => {
                let w2 = self.width * self.width;
                Ok(self.amplitude * (2.0 * PI * w2).powf(d as f64 / 2.0) * (-w2 * q * q / 2.0).exp())
            }
            BumpFamily::TruncatedBump { support_radius } => {
                let w = self.width;
                let key = RadialKey {
                    family: 1,
                    dim: d,
                    params: [w.to_bits(), support_radius.to_bits()],
                    level: 0,
                };
                let profile = move |r: f64| truncated_profile(r, w, support_radius);
                let v = radial::eval_converged(key, support_radius, &profile, q, TRANSFORM_TOLERANCE)?;
                Ok(self.amplitude * v)
            }
        }
    }

    /// Scalar transform `A u^(p) e^{-i p c}`.
    pub fn scalar_fourier(&self, p: &[f64]) -> Result<Complex64> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("momentum"));
        }
        let q = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radial = self.radial_transform(q)?;
        let phase: f64 = p.iter().zip(&self.center).map(|(a, b)| a * b).sum();
        Ok(Complex64::from_polar(radial, -phase))
    }

    /// Vector transform `g^(p)` in `C^K`.
    pub fn eval_fourier(&self, p: &[f64]) -> Result<Vec<Complex64>> {
        let s = self.scalar_fourier(p)?;
        Ok(self.direction.iter().map(|e| s * *e).collect())
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for (c, s) in out.center.iter_mut().zip(shift) {
            *c += s;
        }
        out
    }
}

fn truncated_profile(r: f64, width: f64, support: f64) -> f64 {
    let s = r / support;
    if s >= 1.0 {
        return 0.0;
    }
    let s2 = s * s;
    (-r * r / (2.0 * width * width) - s2 / (1.0 - s2)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::quadrature::integrate_adaptive;

    #[test]
    fn gaussian_transform_at_zero_is_root_two_pi() {
        // Oracle: adaptive quadrature of int exp(-x^2/2) dx over R.
        let oracle = integrate_adaptive(
            |x: f64| (-x * x / 2.0).exp(),
            &[-40.0, -5.0, 0.0, 5.0, 40.0],
            1e-15,
            1e-14,
            1000,
        )
        .value;
        let tf = TestFunction::scalar_gaussian(vec![0.0], 1.0);
        let v = tf.eval_fourier(&[0.0]).unwrap()[0];
        assert!((v.re - oracle).abs() < 1e-12);
        assert!((v.re - 2.506_628_274_631).abs() < 1e-11);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn centred_transform_is_real_positive() {
        let tf = TestFunction::scalar_gaussian(vec![0.0, 0.0], 0.7);
        for p in [[0.3, -1.0], [4.0, 2.0], [-0.1, 0.0]] {
            let v = tf.eval_fourier(&p).unwrap()[0];
            assert!(v.re > 0.0 && v.im == 0.0);
        }
    }

    #[test]
    fn shifting_centre_is_a_phase() {
        let a = TestFunction::truncated(vec![0.0, 0.0], 0.5, 1.5, 2.0, vec![0.6, 0.8]);
        let b = a.translated(&[0.7, -1.3]);
        for p in [[0.3, -1.0], [4.0, 2.0], [7.5, 0.0]] {
            let va = a.eval_fourier(&p).unwrap();
            let vb = b.eval_fourier(&p).unwrap();
            for (x, y) in va.iter().zip(&vb) {
                assert!((x.norm() - y.norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_bump_vanishes_outside_support() {
        let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
        let tf = TestFunction::truncated(vec![0.5, -0.5], 0.6, 1.25, 1.0, vec![1.0]);
        let f = tf.sample(&spec);
        for s in 0..spec.num_sites() {
            let x = spec.position(s);
            let r = ((x[0] - 0.5).powi(2) + (x[1] + 0.5).powi(2)).sqrt();
            if r >= 1.25 {
                assert_eq!(f.data()[s], 0.0);
            } else {
                assert!(f.data()[s] > 0.0);
            }
        }
    }

    #[test]
    fn truncated_transform_matches_brute_force_product_quadrature() {
        // Oracle: direct 2-D tensor Gauss-Legendre over the square [-R, R]^2.
        use crate::spectral::quadrature::GaussLegendre;
        let tf = TestFunction::truncated(vec![0.0, 0.0], 0.5, 1.0, 1.0, vec![1.0]);
        let rule = GaussLegendre::compute(20);
        let (xs, ws) = rule.composite(-1.0, 1.0, 24);
        for p in [[0.0, 0.0], [1.5, -2.0], [6.0, 3.0]] {
            let mut acc = 0.0;
            for (x, wx) in xs.iter().zip(&ws) {
                for (y, wy) in xs.iter().zip(&ws) {
                    let r = (x * x + y * y).sqrt();
                    acc += wx * wy * tf.profile(r) * (p[0] * x + p[1] * y).cos();
                }
            }
            let v = tf.eval_fourier(&p).unwrap()[0];
            assert!((v.re - acc).abs() < 1e-9, "p {p:?}: {} vs {acc}", v.re);
        }
    }

    #[test]
    fn truncated_converges_to_gaussian_as_support_grows() {
        let g = TestFunction::scalar_gaussian(vec![0.0], 0.5);
        for q in [0.0, 1.0, 3.0] {
            let exact = g.radial_transform(q).unwrap();
            let mut last = f64::INFINITY;
            for radius in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
                let t = TestFunction::truncated(vec![0.0], 0.5, radius, 1.0, vec![1.0]);
                let delta = (t.radial_transform(q).unwrap() - exact).abs();
                assert!(delta < last, "q {q} radius {radius}: {delta} !< {last}");
                last = delta;
            }
            assert!(last < 1e-3);
        }
    }

    #[test]
    fn fit_check_enforces_guard_margin() {
        let spec = LatticeSpec::new(1, 16, 8.0, 1).unwrap();
        let ok = TestFunction::scalar_gaussian(vec![0.5], 1.0);
        assert!(ok.check_fits(&spec, 0.0).is_ok());
        let bad = TestFunction::scalar_gaussian(vec![1.5], 1.0);
        assert!(matches!(bad.check_fits(&spec, 0.0), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn validation_rejects_non_unit_direction() {
        let tf = TestFunction::gaussian(vec![0.0], 1.0, 1.0, vec![1.0, 1.0]);
        assert!(tf.validate(1, 2).is_err());
    }
}
