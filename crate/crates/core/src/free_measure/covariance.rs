//! Deterministic quadrature of spectral pairings
//! `(2 pi)^{-D} int m(p) dp` and the free covariance built on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::quadrature::{integrate_adaptive, GaussLegendre};
use crate::spectral::{dft_forward, LatticeField, LatticeSpec, TestFunction};
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    /// `L^{-D} sum_p` over the momentum grid of an `N^D` box of side `L`.
    LatticeMomentumSum,
    /// Adaptive radial Gauss-Kronrod with refined angular rules (`D <= 3`).
    RadialAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub scheme: QuadratureScheme,
    /// Grid sites per axis for the momentum sum.
    pub sites: usize,
    /// Box side for the momentum sum.
    pub length: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Radial segment cap.
    pub max_segments: usize,
    /// Initial angular resolution; doubled until converged.
    pub angular_nodes: usize,
    pub max_angular_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            scheme: QuadratureScheme::RadialAdaptive,
            sites: 64,
            length: 16.0,
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_segments: 4000,
            angular_nodes: 16,
            max_angular_nodes: 1024,
        }
    }
}

impl QuadratureConfig {
    pub fn lattice(sites: usize, length: f64) -> Self {
        QuadratureConfig {
            scheme: QuadratureScheme::LatticeMomentumSum,
            sites,
            length,
            ..Default::default()
        }
    }

    pub fn radial() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                })
            }
        };
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        if self.max_segments == 0 || self.angular_nodes < 2 || self.max_angular_nodes < self.angular_nodes {
            return Err(Error::InvalidParameter {
                name: "quadrature",
                reason: "node counts must satisfy 2 <= angular_nodes <= max_angular_nodes and max_segments > 0".into(),
            });
        }
        if self.scheme == QuadratureScheme::LatticeMomentumSum {
            positive("length", self.length)?;
            if self.sites < 4 || self.sites % 2 == 1 {
                return Err(Error::InvalidParameter {
                    name: "sites",
                    reason: format!("need an even count >= 4, got {}", self.sites),
                });
            }
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// `(2 pi)^{-D} int density(p) dp` by the configured scheme. The density
/// must be real (callers pass the real part of a hermitian form).
pub fn spectral_integral<F>(dim: usize, quad: &QuadratureConfig, mut density: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    quad.validate()?;
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: "must be at least 1".into(),
        });
    }
    match quad.scheme {
        QuadratureScheme::LatticeMomentumSum => lattice_sum(dim, quad, &mut density),
        QuadratureScheme::RadialAdaptive => radial_adaptive(dim, quad, &mut density),
    }
}

fn lattice_sum<F>(dim: usize, quad: &QuadratureConfig, density: &mut F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let spec = LatticeSpec::new(dim, quad.sites, quad.length, 1)?;
    let shell = (quad.sites / 4) as i64;
    let mut terms = Vec::with_capacity(spec.num_sites());
    let mut tail = Vec::new();
    let mut idx = vec![0usize; dim];
    for flat in 0..spec.num_sites() {
        let p = spec.momentum(flat);
        let v = density(&p)?;
        if !v.is_finite() {
            return Err(Error::NonFinite("spectral density"));
        }
        spec.unravel(flat, &mut idx);
        if idx.iter().any(|&j| spec.mode_number(j).abs() >= shell) {
            tail.push(v.abs());
        }
        terms.push(v);
    }
    let inv_vol = 1.0 / spec.volume();
    let value = pairwise_sum(&terms) * inv_vol;
    let achieved = pairwise_sum(&tail) * inv_vol;
    if achieved > quad.target(value) {
        return Err(Error::ToleranceNotMet {
            estimate: value,
            achieved,
        });
    }
    Ok(value)
}

/// Unit directions and weights of an angular rule on `S^{D-1}` at
/// resolution `n`.
fn angular_rule(dim: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    match dim {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / n as f64)
            })
            .collect(),
        _ => {
            let gl = GaussLegendre::get(n);
            let m = 2 * n;
            let mut out = Vec::with_capacity(n * m);
            for (u, wu) in gl.nodes.iter().zip(&gl.weights) {
                let s = (1.0 - u * u).max(0.0).sqrt();
                for j in 0..m {
                    let t = 2.0 * PI * j as f64 / m as f64;
                    out.push((vec![s * t.cos(), s * t.sin(), *u], wu * 2.0 * PI / m as f64));
                }
            }
            out
        }
    }
}

fn radial_adaptive<F>(dim: usize, quad: &QuadratureConfig, density: &mut F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if dim > 3 {
        return Err(Error::UnsupportedDimension {
            dim,
            what: "radial-adaptive quadrature",
        });
    }
    let norm = (2.0 * PI).powi(dim as i32);
    // Compactify p = t / (1 - t); breakpoints cluster near the origin where
    // low-dimensional integrands can vary on short scales.
    let mut breaks: Vec<f64> = (0..6).map(|k| 10f64.powi(k - 6)).collect();
    breaks.insert(0, 0.0);
    breaks.extend((2..=10).map(|k| k as f64 / 10.0));

    let mut integrate_at = |n: usize| -> Result<(f64, f64, bool)> {
        let rule = angular_rule(dim, n);
        let mut failure = None;
        let mut p = vec![0.0; dim];
        let r = integrate_adaptive(
            |t| {
                if failure.is_some() || t >= 1.0 {
                    return 0.0;
                }
                let q = t / (1.0 - t);
                let jac = q.powi(dim as i32 - 1) / ((1.0 - t) * (1.0 - t));
                let mut acc = 0.0;
                for (w, wt) in &rule {
                    for (pi, wi) in p.iter_mut().zip(w) {
                        *pi = q * wi;
                    }
                    match density(&p) {
                        Ok(v) if v.is_finite() => acc += wt * v,
                        Ok(_) => failure = Some(Error::NonFinite("spectral density")),
                        Err(e) => failure = Some(e),
                    }
                }
                acc * jac
            },
            &breaks,
            quad.abs_tol * norm,
            quad.rel_tol,
            quad.max_segments,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((r.value / norm, r.error / norm, r.converged))
    };

    let (mut prev, mut err, mut ok) = integrate_at(quad.angular_nodes)?;
    if dim == 1 {
        return finish(quad, prev, err, ok);
    }
    let mut n = quad.angular_nodes;
    while n * 2 <= quad.max_angular_nodes {
        n *= 2;
        let (cur, cur_err, cur_ok) = integrate_at(n)?;
        let delta = (cur - prev).abs();
        if delta <= quad.target(cur) {
            return finish(quad, cur, cur_err.max(delta), cur_ok);
        }
        prev = cur;
        err = cur_err.max(delta);
        ok = false;
    }
    finish(quad, prev, err, ok)
}

fn finish(quad: &QuadratureConfig, value: f64, achieved: f64, converged: bool) -> Result<f64> {
    if converged && achieved <= quad.target(value) {
        Ok(value)
    } else {
        Err(Error::ToleranceNotMet {
            estimate: value,
            achieved,
        })
    }
}

pub(crate) fn check_pair(f: &TestFunction, g: &TestFunction) -> Result<(usize, usize)> {
    let dim = f.dim();
    let k = f.direction.len();
    f.validate(dim, k)?;
    g.validate(dim, k)?;
    Ok((dim, k))
}

/// `conj(f^(p)) . g^(p)` summed over components, real part.
pub(crate) fn pairing_density(f: &TestFunction, g: &TestFunction, p: &[f64]) -> Result<f64> {
    let fh = f.eval_fourier(p)?;
    let gh = g.eval_fourier(p)?;
    Ok(fh
        .iter()
        .zip(&gh)
        .map(|(a, b)| (a.conj() * b).re)
        .sum())
}

/// `C(f, g) = (2 pi)^{-D} int conj(f^(p)) g^(p) / (p^2 + 1) dp`.
pub fn free_covariance(f: &TestFunction, g: &TestFunction, quad: &QuadratureConfig) -> Result<f64> {
    let (dim, _) = check_pair(f, g)?;
    if g.amplitude == 0.0 || f.amplitude == 0.0 {
        return Ok(0.0);
    }
    spectral_integral(dim, quad, |p| {
        let p2: f64 = p.iter().map(|x| x * x).sum();
        Ok(pairing_density(f, g, p)? / (p2 + 1.0))
    })
}

/// `(2 pi)^{-D} int |f^(p)|^2 dp`, the bound dominating every covariance
/// with a symbol that is at most one.
pub fn l2_bound(f: &TestFunction, quad: &QuadratureConfig) -> Result<f64> {
    let (dim, _) = check_pair(f, f)?;
    spectral_integral(dim, quad, |p| pairing_density(f, f, p))
}

/// `L^{-D} sum_p conj(f^_lat) weight(p) g^_lat` for sampled fields, with
/// `weight` in FFT order. The weight multiplies every component.
pub fn lattice_pairing(f: &LatticeField, g: &LatticeField, weight: &[f64]) -> Result<f64> {
    let spec = *f.spec();
    if spec != *g.spec() {
        return Err(Error::InvalidLattice("pairing fields live on different lattices".into()));
    }
    let n = spec.num_sites();
    if weight.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: weight.len(),
        });
    }
    let fh = dft_forward(f)?;
    let gh = dft_forward(g)?;
    let terms: Vec<f64> = fh
        .data()
        .iter()
        .zip(gh.data())
        .enumerate()
        .map(|(i, (a, b)): (usize, (&Complex64, &Complex64))| (a.conj() * b).re * weight[i % n])
        .collect();
    Ok(pairwise_sum(&terms) / spec.volume())
}

/// Lattice covariance of the sampler, `L^{-D} sum_p conj(f^) g^ / (p^2 + 1)`,
/// from the discrete transforms of the sampled test functions.
pub fn lattice_covariance(spec: &LatticeSpec, f: &TestFunction, g: &TestFunction) -> Result<f64> {
    check_pair(f, g)?;
    f.validate(spec.dim, spec.components)?;
    let weight: Vec<f64> = spec.momentum_squared().iter().map(|p2| 1.0 / (p2 + 1.0)).collect();
    lattice_pairing(&f.sample(spec), &g.sample(spec), &weight)
}
