//! Choice of the bounding parameter `eps_n` so that replacing `L` by
//! `L / (eps L + 1)` perturbs the partition function by less than `1/n`.

use serde::{Deserialize, Serialize};

use super::estimator::ball_plan;
use super::lagrangian::Lagrangian;
use super::schedule::ScheduleEntry;
use crate::error::{Error, Result};
use crate::free_measure::map_samples;
use crate::spectral::LatticeSpec;
use crate::stats::{jackknife_block_size, BlockSums};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonConfig {
    /// Initial sample count, doubled while the confidence bound is too wide.
    pub samples: usize,
    pub max_samples: usize,
    pub seed: u64,
    pub eps_min: f64,
    pub eps_max: f64,
    /// Bisection steps in `ln eps`.
    pub iterations: usize,
    /// One-sided normal quantile of the confidence bound.
    pub z: f64,
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        EpsilonConfig {
            samples: 1000,
            max_samples: 64_000,
            seed: 0,
            eps_min: 1e-12,
            eps_max: 1e6,
            iterations: 40,
            z: 1.645,
        }
    }
}

impl EpsilonConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidParameter { name: "epsilon config", reason });
        if self.samples < 2 || self.max_samples < self.samples {
            return bad(format!("need 2 <= samples ({}) <= max_samples ({})", self.samples, self.max_samples));
        }
        if !(self.eps_min > 0.0 && self.eps_max > self.eps_min && self.eps_max.is_finite()) {
            return bad(format!("need 0 < eps_min < eps_max, got {} and {}", self.eps_min, self.eps_max));
        }
        if !(self.z >= 0.0 && self.z.is_finite()) {
            return bad(format!("z must be finite and non-negative, got {}", self.z));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSelection {
    pub epsilon: f64,
    /// Estimated `(Z(eps) - Z) / Z`, non-negative.
    pub discrepancy: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Per-sample site values of `L - inf L` in a ball, for repeated
/// evaluation of bounded actions.
pub struct DiscrepancyEnsemble {
    cell: f64,
    sites: usize,
    values: Vec<f64>,
    actions: Vec<f64>,
}

impl DiscrepancyEnsemble {
    pub fn generate(
        spec: &LatticeSpec,
        lagrangian: &Lagrangian,
        entry: &ScheduleEntry,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let plan = ball_plan(spec, lagrangian, entry)?;
        let lb = lagrangian.lower_bound();
        let rows = map_samples(spec, seed, 0, samples, |_, field| {
            plan.site_values(field)
                .map(|v| v.into_iter().map(|x| (x - lb).max(0.0)).collect::<Vec<f64>>())
        });
        let sites = plan.region_sites();
        let mut values = Vec::with_capacity(samples * sites);
        for r in rows {
            values.extend(r?);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Lagrangian site value"));
        }
        let cell = spec.cell_volume();
        let actions = values
            .chunks(sites.max(1))
            .map(|c| cell * c.iter().sum::<f64>())
            .collect();
        Ok(DiscrepancyEnsemble {
            cell,
            sites,
            values,
            actions,
        })
    }

    pub fn samples(&self) -> usize {
        self.actions.len()
    }

    fn bounded_actions(&self, eps: f64) -> Vec<f64> {
        if self.sites == 0 {
            return vec![0.0; self.actions.len()];
        }
        self.values
            .chunks(self.sites)
            .map(|c| self.cell * c.iter().map(|v| v / (eps * v + 1.0)).sum::<f64>())
            .collect()
    }

    /// `(Z(eps) - Z) / Z` with its jackknife error. Both partition
    /// functions are shifted by the smallest unbounded action.
    pub fn discrepancy(&self, eps: f64) -> (f64, f64) {
        let bounded = self.bounded_actions(eps);
        let shift = self.actions.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.actions.iter().map(|a| (shift - a).exp()).collect();
        // exp(-A~) - exp(-A) = exp(-A) expm1(A - A~), exact for small gaps.
        let diff: Vec<f64> = bounded
            .iter()
            .zip(&self.actions)
            .zip(&w)
            .map(|((b, a), w)| w * (a - b).max(0.0).exp_m1())
            .collect();
        let blocks = BlockSums::new(&[&diff, &w], jackknife_block_size(w.len()));
        let d = blocks.totals[0] / blocks.totals[1];
        if d == 0.0 {
            return (0.0, 0.0);
        }
        (d, blocks.jackknife(|t| t[0] / t[1]))
    }
}

fn passes(d: f64, se: f64, z: f64, target: f64) -> bool {
    d + z * se < target
}

/// Largest `eps` in `[eps_min, eps_max]` (to bisection resolution) whose
/// discrepancy is below `1/n` at the configured one-sided confidence.
/// The sample count doubles until `eps_min` itself is accepted.
pub fn select_epsilon(
    n: u64,
    lagrangian: &Lagrangian,
    entry: &ScheduleEntry,
    spec: &LatticeSpec,
    config: &EpsilonConfig,
) -> Result<EpsilonSelection> {
    config.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "the 1/n criterion needs n >= 2".into(),
        });
    }
    let target = 1.0 / n as f64;
    let mut samples = config.samples;
    let ens = loop {
        let ens = DiscrepancyEnsemble::generate(spec, lagrangian, entry, samples, config.seed)?;
        let (d, se) = ens.discrepancy(config.eps_min);
        if passes(d, se, config.z, target) {
            break ens;
        }
        if samples >= config.max_samples {
            return Err(Error::BudgetExhausted {
                samples,
                reason: format!("discrepancy {d} +- {se} at eps = {} not below {target}", config.eps_min),
            });
        }
        samples = (samples * 2).min(config.max_samples);
    };
    let select = |eps: f64| {
        let (d, se) = ens.discrepancy(eps);
        EpsilonSelection {
            epsilon: eps,
            discrepancy: d,
            std_error: se,
            samples: ens.samples(),
        }
    };
    let top = select(config.eps_max);
    if passes(top.discrepancy, top.std_error, config.z, target) {
        return Ok(top);
    }
    let (mut lo, mut hi) = (config.eps_min.ln(), config.eps_max.ln());
    for _ in 0..config.iterations {
        let mid = 0.5 * (lo + hi);
        let (d, se) = ens.discrepancy(mid.exp());
        if passes(d, se, config.z, target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(select(lo.exp()))
}
