//! Fourier transforms of compactly supported radial profiles.
//!
//! For a radial `u(|x|)` supported in `B(0, R)` the transform depends only on
//! `q = |p|` and equals the one-dimensional cosine transform of the
//! projection `P(x) = int_{R^{D-1}} u(sqrt(x^2 + |y|^2)) dy`. Both integrals
//! are evaluated with composite Gauss-Legendre rules over the support ball in
//! cylindrical coordinates.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::RwLock;

use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};

const RULE_ORDER: usize = 16;
const INNER_PANELS: usize = 16;
const BASE_PANELS: usize = 16;
const MAX_LEVEL: u32 = 6;

/// Surface area of the unit sphere `S^{k}` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Projected profile tabulated on outer quadrature nodes.
#[derive(Debug)]
pub struct RadialTransform {
    xs: Vec<f64>,
    /// `2 * w_i * P(x_i)`
    weighted: Vec<f64>,
}

impl RadialTransform {
    pub fn new(dim: usize, radius: f64, panels: usize, profile: &dyn Fn(f64) -> f64) -> Self {
        let rule = GaussLegendre::get(RULE_ORDER);
        let (xs, ws) = rule.composite(0.0, radius, panels);
        let weighted = xs
            .iter()
            .zip(&ws)
            .map(|(&x, &w)| 2.0 * w * projection(dim, radius, x, profile, &rule))
            .collect();
        RadialTransform { xs, weighted }
    }

    /// `int u(|x|) e^{-i p x} dx` at `|p| = q`.
    pub fn eval(&self, q: f64) -> f64 {
        if q == 0.0 {
            return crate::stats::pairwise_sum(&self.weighted);
        }
        self.xs
            .iter()
            .zip(&self.weighted)
            .map(|(x, w)| w * (q * x).cos())
            .sum()
    }

    /// Derivative of [`eval`](Self::eval) with respect to `q`.
    pub fn eval_derivative(&self, q: f64) -> f64 {
        -self
            .xs
            .iter()
            .zip(&self.weighted)
            .map(|(x, w)| w * x * (q * x).sin())
            .sum::<f64>()
    }
}

fn projection(dim: usize, radius: f64, x: f64, profile: &dyn Fn(f64) -> f64, rule: &GaussLegendre) -> f64 {
    if dim == 1 {
        return profile(x.abs());
    }
    let top = (radius * radius - x * x).max(0.0).sqrt();
    if top == 0.0 {
        return 0.0;
    }
    let (rs, ws) = rule.composite(0.0, top, INNER_PANELS);
    let k = dim - 2;
    let s: f64 = rs
        .iter()
        .zip(&ws)
        .map(|(&rho, &w)| w * profile((x * x + rho * rho).sqrt()) * rho.powi(k as i32))
        .sum();
    sphere_area(k) * s
}

/// Identifies a cached transform: profile family, dimension and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RadialKey {
    pub family: u8,
    pub dim: usize,
    pub params: [u64; 2],
    pub level: u32,
}

static CACHE: Lazy<RwLock<HashMap<RadialKey, Arc<RadialTransform>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

pub fn cached(
    key: RadialKey,
    radius: f64,
    profile: &dyn Fn(f64) -> f64,
) -> Arc<RadialTransform> {
    if let Some(t) = CACHE.read().get(&key) {
        return t.clone();
    }
    let panels = BASE_PANELS << key.level;
    let t = Arc::new(RadialTransform::new(key.dim, radius, panels, profile));
    CACHE.write().entry(key).or_insert(t).clone()
}

/// Transform at `q` with the error estimated by panel doubling; fails when
/// the finest level still misses `abs_target`.
pub fn eval_converged(
    key: RadialKey,
    radius: f64,
    profile: &dyn Fn(f64) -> f64,
    q: f64,
    abs_target: f64,
) -> Result<f64> {
    let mut coarse = cached(RadialKey { level: 0, ..key }, radius, profile).eval(q);
    let mut achieved = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let fine = cached(RadialKey { level, ..key }, radius, profile).eval(q);
        achieved = (fine - coarse).abs();
        if achieved <= abs_target {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: coarse,
        achieved,
        target: abs_target,
    })
}
