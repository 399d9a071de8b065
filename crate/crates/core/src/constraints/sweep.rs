//! Penalty-limit sweeps: finite-volume penalized, infinite-volume penalized
//! and projected covariances along a cutoff schedule.

use serde::{Deserialize, Serialize};

use super::covariance::{constrained_covariance, penalized_covariance};
use super::lattice::{lattice_penalized_exact, SolverConfig};
use super::operator::ConstraintSet;
use crate::error::{Error, Result};
use crate::free_measure::{free_covariance, Mollifier, QuadratureConfig};
use crate::interaction::{extract_limit, CutoffSchedule, EstimatorResult, LimitResult};
use crate::spectral::{LatticeSpec, TestFunction};

/// Relative slack keeping a capped ball strictly inside the torus.
const CAP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub spec: LatticeSpec,
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub first: u64,
    pub last: u64,
    /// Limit tolerance on the total gap, relative to `|C(f, g)|`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-3
}

/// One schedule index; field names match the CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub a: f64,
    pub lambda: f64,
    /// Ball radius actually used, after capping to the torus.
    pub r: f64,
    pub radius_capped: bool,
    #[serde(rename = "C_aLr")]
    pub c_alr: f64,
    #[serde(rename = "C_aLinf")]
    pub c_alinf: f64,
    #[serde(rename = "C_kappa")]
    pub c_kappa: f64,
    /// `|C_aLr - C_aLinf|`, the finite-volume part.
    pub gap_volume: f64,
    /// `|C_aLinf - C_kappa|`, the penalty part.
    pub gap_penalty: f64,
    /// `|C_aLr - C_kappa|`.
    pub gap: f64,
    pub solver_iterations: usize,
    pub solver_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub free: f64,
    /// Limit diagnostic of the total gap.
    pub limit: LimitResult,
    /// Total gap strictly decreasing over the sweep.
    pub monotone: bool,
    /// Limit diagnostic converged to a gap within tolerance.
    pub pass: bool,
}

/// Largest ball radius the lattice solve accepts for this cutoff.
pub fn max_radius(spec: &LatticeSpec, cs: &ConstraintSet, mollifier: &Mollifier) -> f64 {
    let order = cs.ops.iter().map(|o| o.order()).max().unwrap_or(0) as f64;
    (0.5 * spec.length - mollifier.support_radius() - order * spec.spacing()) * (1.0 - CAP_SLACK)
}

/// Tabulates `C_{a_n, Lambda_n, r_n}`, `C_{a_n, Lambda_n, inf}` and `C^kappa`
/// for `n` in `first..=last`. Radii beyond the torus are capped and flagged.
pub fn penalty_sweep(
    f: &TestFunction,
    g: &TestFunction,
    cs: &ConstraintSet,
    schedule: &CutoffSchedule,
    config: &SweepConfig,
) -> Result<SweepTable> {
    let spec = &config.spec;
    spec.validate()?;
    config.quadrature.validate()?;
    if schedule.dim != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            actual: schedule.dim,
        });
    }
    let penalty = schedule
        .penalty
        .ok_or_else(|| Error::InvalidSchedule("sweep needs a penalty law a_n".into()))?;
    if config.first == 0 || config.last < config.first {
        return Err(Error::InvalidParameter {
            name: "sweep range",
            reason: format!("need 1 <= first <= last, got {}..={}", config.first, config.last),
        });
    }
    let free = free_covariance(f, g, &config.quadrature)?;
    let c_kappa = constrained_covariance(f, g, cs, &config.quadrature)?;
    let mut rows = Vec::new();
    for n in config.first..=config.last {
        let e = schedule.entry(n)?;
        let a = penalty.value(n);
        let mollifier = Mollifier::new(spec.dim, e.lambda)?;
        let cap = max_radius(spec, cs, &mollifier);
        let (r, radius_capped) = if e.radius < cap { (e.radius, false) } else { (cap, true) };
        let solve = lattice_penalized_exact(f, g, cs, a, &mollifier, r, spec, &config.solver)?;
        let c_alinf = penalized_covariance(f, g, cs, a, &mollifier, &config.quadrature)?;
        rows.push(SweepRow {
            n,
            a,
            lambda: e.lambda,
            r,
            radius_capped,
            c_alr: solve.value,
            c_alinf,
            c_kappa,
            gap_volume: (solve.value - c_alinf).abs(),
            gap_penalty: (c_alinf - c_kappa).abs(),
            gap: (solve.value - c_kappa).abs(),
            solver_iterations: solve.iterations,
            solver_residual: solve.residual,
        });
    }
    let tolerance = config.tolerance * free.abs().max(f64::MIN_POSITIVE);
    let gaps: Vec<EstimatorResult> = rows.iter().map(|r| EstimatorResult::exact(r.gap)).collect();
    let limit = extract_limit(&gaps, tolerance);
    let monotone = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let pass = limit.value.is_some_and(|v| v.abs() <= tolerance);
    Ok(SweepTable {
        rows,
        free,
        limit,
        monotone,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::DiffOperator;
    use crate::interaction::GrowthLaw;

    fn schedule(dim: usize) -> CutoffSchedule {
        CutoffSchedule {
            dim,
            radius: GrowthLaw::power(2.0, 1.0),
            lambda: GrowthLaw::power(4.0, 1.0),
            sup_bound: GrowthLaw::constant(1.0),
            penalty: Some(GrowthLaw::geometric(1.0, 10.0)),
        }
    }

    #[test]
    fn empty_set_gives_free_covariance_in_every_column() {
        let spec = LatticeSpec::new(1, 64, 16.0, 1).unwrap();
        let f = TestFunction::scalar_gaussian(vec![0.0], 1.0);
        let cfg = SweepConfig {
            spec,
            quadrature: QuadratureConfig::lattice(64, 16.0),
            solver: SolverConfig::default(),
            first: 1,
            last: 3,
            tolerance: 1e-3,
        };
        let t = penalty_sweep(&f, &f, &ConstraintSet::empty(), &schedule(1), &cfg).unwrap();
        for r in &t.rows {
            assert!((r.c_alr - t.free).abs() < 1e-12);
            assert!((r.c_alinf - t.free).abs() < 1e-12);
            assert_eq!(r.c_kappa, t.free);
        }
    }

    #[test]
    fn identity_constraint_drives_everything_to_zero() {
        let spec = LatticeSpec::new(1, 64, 16.0, 1).unwrap();
        let f = TestFunction::scalar_gaussian(vec![0.0], 1.0);
        let cs = ConstraintSet::new(vec![DiffOperator::identity(1, 1)]).unwrap();
        let cfg = SweepConfig {
            spec,
            quadrature: QuadratureConfig::radial(),
            solver: SolverConfig::default(),
            first: 1,
            last: 7,
            tolerance: 1e-3,
        };
        let t = penalty_sweep(&f, &f, &cs, &schedule(1), &cfg).unwrap();
        assert_eq!(t.rows[0].c_kappa, 0.0);
        let last = t.rows.last().unwrap();
        assert!(last.gap < 1e-3 * t.free, "{last:?}");
        assert!(t.monotone);
        assert!(t.pass);
        // The requested radius 2n outgrows the torus at n = 4.
        assert!(last.radius_capped);
        assert!(!t.rows[0].radius_capped);
    }

    #[test]
    fn sweep_needs_a_penalty_law() {
        let spec = LatticeSpec::new(1, 32, 16.0, 1).unwrap();
        let f = TestFunction::scalar_gaussian(vec![0.0], 1.0);
        let mut s = schedule(1);
        s.penalty = None;
        let cfg = SweepConfig {
            spec,
            quadrature: QuadratureConfig::radial(),
            solver: SolverConfig::default(),
            first: 1,
            last: 2,
            tolerance: 1e-3,
        };
        assert!(matches!(
            penalty_sweep(&f, &f, &ConstraintSet::empty(), &s, &cfg),
            Err(Error::InvalidSchedule(_))
        ));
    }
}
