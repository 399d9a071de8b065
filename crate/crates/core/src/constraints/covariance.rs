//! Projected and penalized covariances in the infinite-volume limit.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::operator::ConstraintSet;
use crate::error::{Error, Result};
use crate::free_measure::covariance::{check_pair, spectral_integral};
use crate::free_measure::{free_covariance, Mollifier, QuadratureConfig};
use crate::spectral::TestFunction;

fn hat(f: &TestFunction, p: &[f64]) -> Result<DVector<Complex64>> {
    Ok(DVector::from_vec(f.eval_fourier(p)?))
}

fn check(f: &TestFunction, g: &TestFunction, cs: &ConstraintSet) -> Result<(usize, usize)> {
    let (dim, k) = check_pair(f, g)?;
    cs.validate()?;
    cs.check_shape(dim, k)?;
    Ok((dim, k))
}

/// `(2 pi)^{-D} int (Pi f^)^dagger (Pi g^) / (p^2 + 1) dp` with `Pi(p)` the
/// kernel projector of the constraint symbols.
pub fn constrained_covariance(
    f: &TestFunction,
    g: &TestFunction,
    cs: &ConstraintSet,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let (dim, k) = check(f, g, cs)?;
    if cs.is_empty() {
        return free_covariance(f, g, quad);
    }
    spectral_integral(dim, quad, |p| {
        let pi = cs.projection(p, k).matrix;
        let (fh, gh) = (hat(f, p)?, hat(g, p)?);
        let p2: f64 = p.iter().map(|x| x * x).sum();
        Ok((&pi * fh).dotc(&(&pi * gh)).re / (p2 + 1.0))
    })
}

/// Penalized symbol `(p^2 + 1) I + a sigma^_Lambda(p)^2 sum_i D_i^dagger D_i`.
pub fn penalized_symbol(cs: &ConstraintSet, a: f64, mollifier: &Mollifier, p: &[f64], k: usize) -> DMatrix<Complex64> {
    let p2: f64 = p.iter().map(|x| x * x).sum();
    let s = mollifier.multiplier(p2.sqrt());
    let mut m = cs.gram(p, k) * Complex64::new(a * s * s, 0.0);
    for i in 0..k {
        m[(i, i)] += p2 + 1.0;
    }
    m
}

/// `(2 pi)^{-D} int f^^dagger M(p)^{-1} g^ dp` with `M` the penalized symbol,
/// inverted per node by a Cholesky solve.
pub fn penalized_covariance(
    f: &TestFunction,
    g: &TestFunction,
    cs: &ConstraintSet,
    a: f64,
    mollifier: &Mollifier,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let (dim, k) = check(f, g, cs)?;
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            reason: format!("penalty must be non-negative, got {a}"),
        });
    }
    if mollifier.table().dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: mollifier.table().dim(),
        });
    }
    if a == 0.0 || cs.is_empty() {
        return free_covariance(f, g, quad);
    }
    spectral_integral(dim, quad, |p| {
        let m = penalized_symbol(cs, a, mollifier, p, k);
        let chol = Cholesky::new(m).ok_or_else(|| Error::SolverFailure { momentum: p.to_vec() })?;
        let (fh, gh) = (hat(f, p)?, hat(g, p)?);
        Ok(fh.dotc(&chol.solve(&gh)).re)
    })
}
