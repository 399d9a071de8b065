//! The bump mollifier `sigma(x) = c_D exp(-1 / (1 - |x|^2))` on `B(0, 1)`,
//! its rescalings `sigma_L(x) = L^D sigma(L x)` and its tabulated transform.

use std::collections::HashMap;
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::spectral::dft::apply_multiplier;
use crate::spectral::radial::RadialTransform;
use crate::spectral::{LatticeField, LatticeSpec};

/// Radial nodes in the transform table.
pub const TABLE_NODES: usize = 4096;
/// Table range in units of the unscaled momentum `|p| / Lambda`.
pub const TABLE_RANGE: f64 = 256.0;
const TRANSFORM_PANELS: usize = 128;

fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Transform of the unit-mass bump on a uniform radial grid, with cubic
/// Hermite interpolation between nodes (derivatives are exact).
#[derive(Debug)]
pub struct MollifierTable {
    dim: usize,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    transform: RadialTransform,
    mass: f64,
}

impl MollifierTable {
    fn build(dim: usize) -> Self {
        let transform = RadialTransform::new(dim, 1.0, TRANSFORM_PANELS, &bump);
        let mass = transform.eval(0.0);
        let step = TABLE_RANGE / (TABLE_NODES - 1) as f64;
        let (values, slopes) = (0..TABLE_NODES)
            .map(|i| {
                let q = i as f64 * step;
                (transform.eval(q) / mass, transform.eval_derivative(q) / mass)
            })
            .unzip();
        MollifierTable {
            dim,
            step,
            values,
            slopes,
            transform,
            mass,
        }
    }

    /// Shared table for dimension `dim`, built on first use.
    pub fn for_dim(dim: usize) -> Arc<MollifierTable> {
        static TABLES: Lazy<RwLock<HashMap<usize, Arc<MollifierTable>>>> =
            Lazy::new(|| RwLock::new(HashMap::new()));
        if let Some(t) = TABLES.read().get(&dim) {
            return t.clone();
        }
        let t = Arc::new(Self::build(dim));
        TABLES.write().entry(dim).or_insert(t).clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `sigma^(q)` for the unscaled mollifier, interpolated inside the table
    /// and evaluated directly beyond it.
    pub fn sigma_hat(&self, q: f64) -> f64 {
        let q = q.abs();
        let t = q / self.step;
        let i = t.floor() as usize;
        if i + 1 >= TABLE_NODES {
            return self.direct(q);
        }
        let s = t - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }

    /// `sigma^(q)` by direct quadrature, bypassing the table.
    pub fn direct(&self, q: f64) -> f64 {
        self.transform.eval(q) / self.mass
    }

    /// Unit-mass profile `sigma(r)` of the unscaled mollifier.
    pub fn profile(&self, r: f64) -> f64 {
        bump(r) / self.mass
    }
}

/// `sigma_Lambda` at cutoff scale `Lambda`: support radius `1 / Lambda`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    lambda: f64,
    table: Arc<MollifierTable>,
}

impl Mollifier {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("cutoff scale must be positive, got {lambda}"),
            });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        Ok(Mollifier {
            lambda,
            table: MollifierTable::for_dim(dim),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn support_radius(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn table(&self) -> &MollifierTable {
        &self.table
    }

    /// `sigma^_Lambda(p) = sigma^(|p| / Lambda)`.
    pub fn multiplier(&self, p_norm: f64) -> f64 {
        self.table.sigma_hat(p_norm / self.lambda)
    }

    /// `sigma_Lambda(x) = Lambda^D sigma(Lambda |x|)`.
    pub fn kernel(&self, r: f64) -> f64 {
        self.lambda.powi(self.table.dim as i32) * self.table.profile(self.lambda * r)
    }

    /// Multiplier values on every grid mode, FFT order.
    pub fn grid_multiplier(&self, spec: &LatticeSpec) -> Vec<f64> {
        spec.momentum_squared()
            .into_iter()
            .map(|p2| self.multiplier(p2.sqrt()))
            .collect()
    }

    pub fn check_lattice(&self, spec: &LatticeSpec) -> Result<()> {
        if spec.dim != self.table.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                actual: self.table.dim,
            });
        }
        if self.support_radius() >= 0.5 * spec.length {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!(
                    "mollifier support 1/Lambda = {} must be below L/2 = {}",
                    self.support_radius(),
                    0.5 * spec.length
                ),
            });
        }
        Ok(())
    }
}

/// `phi * sigma_Lambda` on the torus, computed spectrally.
pub fn mollify(field: &LatticeField, mollifier: &Mollifier) -> Result<LatticeField> {
    mollifier.check_lattice(field.spec())?;
    let mut out = field.clone();
    apply_multiplier(&mut out, &mollifier.grid_multiplier(field.spec()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::quadrature::GaussLegendre;
    use crate::spectral::TestFunction;

    #[test]
    fn unit_mass_and_bounded_transform() {
        for dim in 1..=3 {
            let m = Mollifier::new(dim, 1.0).unwrap();
            assert!((m.multiplier(0.0) - 1.0).abs() < 1e-14);
            for i in 0..2000 {
                let q = i as f64 * 0.37;
                assert!(m.multiplier(q).abs() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn table_interpolation_error_budget() {
        for dim in 1..=3 {
            let t = MollifierTable::for_dim(dim);
            let mut worst: f64 = 0.0;
            for i in 0..5000 {
                let q = 0.0123 + i as f64 * (TABLE_RANGE - 0.1) / 5000.0;
                worst = worst.max((t.sigma_hat(q) - t.direct(q)).abs());
            }
            assert!(worst < 1e-8, "dim {dim}: {worst}");
        }
    }

    #[test]
    fn one_dimensional_transform_matches_cosine_oracle() {
        // Oracle: dense Gauss-Legendre on the raw bump, normalised separately.
        let t = MollifierTable::for_dim(1);
        let rule = GaussLegendre::compute(32);
        let (xs, ws) = rule.composite(-1.0, 1.0, 64);
        let mass: f64 = xs.iter().zip(&ws).map(|(x, w)| w * bump(x.abs())).sum();
        for q in [0.0, 0.5, 2.0, 10.0, 40.0] {
            let oracle: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(x, w)| w * bump(x.abs()) * (q * x).cos())
                .sum::<f64>()
                / mass;
            assert!((t.sigma_hat(q) - oracle).abs() < 1e-9, "q {q}");
        }
    }

    #[test]
    fn constant_field_is_unchanged() {
        let spec = LatticeSpec::new(2, 16, 4.0, 2).unwrap();
        let m = Mollifier::new(2, 3.0).unwrap();
        let f = LatticeField::from_fn(spec, |_, k| 1.5 + k as f64);
        let g = mollify(&f, &m).unwrap();
        for (a, b) in g.data().iter().zip(f.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn spectral_mollification_matches_direct_convolution() {
        // Oracle: periodic real-space convolution with the sampled kernel.
        let spec = LatticeSpec::new(1, 256, 32.0, 1).unwrap();
        // Support radius 4 keeps the aliased tail of the multiplier negligible.
        let m = Mollifier::new(1, 0.25).unwrap();
        let g = TestFunction::scalar_gaussian(vec![0.0], 1.0).sample(&spec);
        let spectral = mollify(&g, &m).unwrap();
        let h = spec.spacing();
        let n = spec.num_sites();
        let scale = spectral.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            let xi = spec.coordinate(i);
            let mut acc = 0.0;
            for j in 0..n {
                let d = spec.displacement(&[xi], &[spec.coordinate(j)])[0];
                acc += h * m.kernel(d.abs()) * g.data()[j];
            }
            let err = (acc - spectral.data()[i]).abs();
            assert!(err < 1e-6 * scale, "site {i}: {err}");
        }
    }

    #[test]
    fn large_cutoff_approaches_identity() {
        let spec = LatticeSpec::new(1, 64, 8.0, 1).unwrap();
        let f = TestFunction::scalar_gaussian(vec![0.0], 0.3).sample(&spec);
        let mut last = f64::INFINITY;
        for lambda in [10.0, 100.0, 1000.0, 10000.0] {
            let m = Mollifier::new(1, lambda).unwrap();
            let g = mollify(&f, &m).unwrap();
            let err = g
                .data()
                .iter()
                .zip(f.data())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn rejects_bad_cutoffs() {
        assert!(Mollifier::new(1, 0.0).is_err());
        assert!(Mollifier::new(1, -2.0).is_err());
        let spec = LatticeSpec::new(1, 8, 1.0, 1).unwrap();
        let m = Mollifier::new(1, 1.0).unwrap();
        assert!(mollify(&LatticeField::zeros(spec), &m).is_err());
    }
}
