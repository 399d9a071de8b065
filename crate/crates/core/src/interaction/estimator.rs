//! Reweighted Monte Carlo ratio estimates
//! `E[F e^{-A}] / E[e^{-A}]` over free-field samples, and limit extraction
//! along a schedule.

use serde::{Deserialize, Serialize};

use super::action::ActionPlan;
use super::lagrangian::Lagrangian;
use super::region::Region;
use super::schedule::ScheduleEntry;
use crate::error::{Error, Result};
use crate::free_measure::{map_samples, Mollifier};
use crate::spectral::{CylindricalFunction, LatticeSpec, SampledCylindricals};
use crate::stats::{effective_sample_size, jackknife_block_size, BlockSums};

/// `-ln(f64::MIN_POSITIVE)`: larger actions underflow `exp(-A)` to zero.
const UNDERFLOW_ACTION: f64 = 708.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub value: f64,
    /// Delete-one-block jackknife error; zero for exact values.
    pub std_error: f64,
    /// Kish effective sample size of the weights.
    pub ess: f64,
    pub samples: usize,
    pub min_action: f64,
    pub max_action: f64,
    pub exact: bool,
}

impl EstimatorResult {
    pub fn exact(value: f64) -> Self {
        EstimatorResult {
            value,
            std_error: 0.0,
            ess: f64::INFINITY,
            samples: 0,
            min_action: 0.0,
            max_action: 0.0,
            exact: true,
        }
    }
}

/// Per-sample actions (one series per interaction) and functional values
/// (one series per functional) on a common set of free-field samples.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub seed: u64,
    pub actions: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

impl Ensemble {
    /// Draws samples `0..samples` of the stream rooted at `seed`.
    pub fn generate(
        spec: &LatticeSpec,
        plans: &[&ActionPlan],
        functionals: &[CylindricalFunction],
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: format!("need at least 2, got {samples}"),
            });
        }
        for p in plans {
            if p.spec() != spec {
                return Err(Error::InvalidLattice("action plan built for a different lattice".into()));
            }
        }
        for f in functionals {
            f.validate()?;
            for g in &f.inner {
                g.validate(spec.dim, spec.components)?;
            }
        }
        let sampled = SampledCylindricals::new(spec, functionals);
        let rows = map_samples(spec, seed, 0, samples, |_, field| -> Result<(Vec<f64>, Vec<f64>)> {
            let actions = plans.iter().map(|p| p.action(field)).collect::<Result<Vec<_>>>()?;
            Ok((actions, sampled.eval(field)))
        });
        let mut actions = vec![Vec::with_capacity(samples); plans.len()];
        let mut values = vec![Vec::with_capacity(samples); functionals.len()];
        for row in rows {
            let (a, v) = row?;
            for (dst, x) in actions.iter_mut().zip(a) {
                if !x.is_finite() {
                    return Err(Error::NonFinite("action"));
                }
                dst.push(x);
            }
            for (dst, x) in values.iter_mut().zip(v) {
                dst.push(x);
            }
        }
        Ok(Ensemble { seed, actions, values })
    }

    pub fn samples(&self) -> usize {
        self.values
            .first()
            .or(self.actions.first())
            .map_or(0, |v| v.len())
    }

    /// Weights `exp(-(A_s - min A))` for interaction `k`, with the minimum
    /// action. Fails when every unshifted weight underflows.
    pub fn weights(&self, k: usize) -> Result<(Vec<f64>, f64, f64)> {
        let a = &self.actions[k];
        let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min > UNDERFLOW_ACTION {
            return Err(Error::DegenerateWeights { min_action: min });
        }
        Ok((a.iter().map(|x| (min - x).exp()).collect(), min, max))
    }

    /// Ratio estimate for a per-sample series under interaction `k`.
    pub fn ratio_of(&self, k: usize, series: &[f64]) -> Result<EstimatorResult> {
        let (w, min, max) = self.weights(k)?;
        Ok(weighted_ratio(series, &w, min, max))
    }

    /// Ratio estimate of functional `i` under interaction `k`.
    pub fn ratio(&self, k: usize, i: usize) -> Result<EstimatorResult> {
        self.ratio_of(k, &self.values[i])
    }

    /// Series `values[i] * values[j]`, the product functional.
    pub fn product(&self, i: usize, j: usize) -> Vec<f64> {
        self.values[i].iter().zip(&self.values[j]).map(|(a, b)| a * b).collect()
    }
}

fn weighted_ratio(series: &[f64], w: &[f64], min: f64, max: f64) -> EstimatorResult {
    let fw: Vec<f64> = series.iter().zip(w).map(|(f, w)| f * w).collect();
    let blocks = BlockSums::new(&[&fw, w], jackknife_block_size(w.len()));
    let value = blocks.totals[0] / blocks.totals[1];
    EstimatorResult {
        value,
        std_error: blocks.jackknife(|t| t[0] / t[1]),
        ess: effective_sample_size(w),
        samples: w.len(),
        min_action: min,
        max_action: max,
        exact: false,
    }
}

/// `sum_s F[phi_s] W_s / sum_s W_s` with `W_s = exp(-int_{B(0, r_n)} L)`
/// at cutoff `Lambda_n`, over `samples` free-field draws from `seed`.
pub fn estimate_ratio(
    f: &CylindricalFunction,
    lagrangian: &Lagrangian,
    entry: &ScheduleEntry,
    spec: &LatticeSpec,
    samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    let plan = plan_for_entry(spec, lagrangian, entry)?;
    let ens = Ensemble::generate(spec, &[&plan], std::slice::from_ref(f), samples, seed)?;
    ens.ratio(0, 0)
}

/// Action plan on the ball `B(0, r_n)` at mollifier scale `Lambda_n`.
pub fn plan_for_entry(spec: &LatticeSpec, lagrangian: &Lagrangian, entry: &ScheduleEntry) -> Result<ActionPlan> {
    if let Some(sup) = lagrangian.sup_bound() {
        let span = sup - lagrangian.lower_bound();
        if span > entry.sup_bound * (1.0 + 1e-12) {
            return Err(Error::InvalidSchedule(format!(
                "Lagrangian oscillation {span} exceeds M_{} = {}",
                entry.n, entry.sup_bound
            )));
        }
    }
    ball_plan(spec, lagrangian, entry)
}

/// Action plan on `B(0, r_n)` at `Lambda_n` without the `M_n` check.
pub fn ball_plan(spec: &LatticeSpec, lagrangian: &Lagrangian, entry: &ScheduleEntry) -> Result<ActionPlan> {
    let mollifier = Mollifier::new(spec.dim, entry.lambda)?;
    ActionPlan::new(spec, lagrangian, &Region::ball(spec.dim, entry.radius), &mollifier)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitStatus {
    Converged,
    NonConvergent,
    /// Fewer than four entries.
    TooShort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitResult {
    pub status: LimitStatus,
    /// Average of the last three entries when converged.
    pub value: Option<f64>,
    /// Largest successive difference over the tail.
    pub cauchy: f64,
    pub tail: Vec<f64>,
}

/// Declares convergence when each of the last three successive
/// differences is at most `max(tolerance, sqrt(se_i^2 + se_j^2))`.
pub fn extract_limit(sequence: &[EstimatorResult], tolerance: f64) -> LimitResult {
    let values: Vec<f64> = sequence.iter().map(|r| r.value).collect();
    if sequence.len() < 4 {
        return LimitResult {
            status: LimitStatus::TooShort,
            value: None,
            cauchy: f64::NAN,
            tail: values,
        };
    }
    let tail = &sequence[sequence.len() - 4..];
    let se = |r: &EstimatorResult| if r.std_error.is_finite() { r.std_error } else { 0.0 };
    let mut cauchy: f64 = 0.0;
    let mut ok = true;
    for w in tail.windows(2) {
        let d = (w[1].value - w[0].value).abs();
        cauchy = cauchy.max(d);
        let allowed = tolerance.max((se(&w[0]).powi(2) + se(&w[1]).powi(2)).sqrt());
        if !(d <= allowed) {
            ok = false;
        }
    }
    if ok {
        let last3 = &tail[1..];
        LimitResult {
            status: LimitStatus::Converged,
            value: Some(last3.iter().map(|r| r.value).sum::<f64>() / 3.0),
            cauchy,
            tail: tail.iter().map(|r| r.value).collect(),
        }
    } else {
        LimitResult {
            status: LimitStatus::NonConvergent,
            value: None,
            cauchy,
            tail: values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{OuterFunction, TestFunction};

    fn spec1() -> LatticeSpec {
        LatticeSpec::new(1, 64, 16.0, 1).unwrap()
    }

    fn entry(r: f64, lambda: f64, m: f64) -> ScheduleEntry {
        ScheduleEntry {
            n: 1,
            radius: r,
            lambda,
            sup_bound: m,
            penalty: None,
            delta: 1.0 / lambda,
        }
    }

    fn cosine() -> CylindricalFunction {
        CylindricalFunction::cosine(TestFunction::scalar_gaussian(vec![0.0], 1.0))
    }

    #[test]
    fn zero_interaction_is_plain_mean() {
        let spec = spec1();
        let f = cosine();
        let r = estimate_ratio(&f, &Lagrangian::zero(), &entry(3.0, 2.0, 1.0), &spec, 500, 9).unwrap();
        let gs = f.inner[0].sample(&spec);
        let direct: Vec<f64> = map_samples(&spec, 9, 0, 500, |_, phi| gs.inner(phi).cos());
        assert_eq!(r.value, crate::stats::mean(&direct));
        assert_eq!(r.ess, 500.0);
    }

    #[test]
    fn constant_functional_is_exactly_one() {
        let spec = spec1();
        let one = CylindricalFunction::one();
        let l = Lagrangian::clipped_quartic(1.0, 1.0);
        let r = estimate_ratio(&one, &l, &entry(3.0, 2.0, 1.0), &spec, 200, 1).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(r.std_error < 1e-15);
    }

    #[test]
    fn shift_invariance() {
        let spec = spec1();
        let f = cosine();
        let e = entry(3.0, 2.0, 10.0);
        let base = Lagrangian::clipped_quartic(2.0, 1.0);
        let shifted = Lagrangian::ClippedPolynomial {
            monomials: vec![crate::interaction::Monomial {
                coefficient: 2.0,
                powers: vec![2],
            }],
            offset: 5.0,
            floor: None,
            clip: Some(6.0),
        };
        let a = estimate_ratio(&f, &base, &e, &spec, 300, 4).unwrap();
        let b = estimate_ratio(&f, &shifted, &e, &spec, 300, 4).unwrap();
        assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs());
    }

    #[test]
    fn bounded_functional_stays_bounded_and_weights_positive() {
        let spec = spec1();
        let f = CylindricalFunction::new(
            OuterFunction::ClippedPolynomial {
                weights: vec![1.0],
                coefficients: vec![0.0, 3.0],
                clip: 0.5,
            },
            vec![TestFunction::scalar_gaussian(vec![0.5], 0.7)],
        )
        .unwrap();
        let plan = plan_for_entry(&spec, &Lagrangian::clipped_quartic(5.0, 1.0), &entry(3.0, 2.0, 1.0)).unwrap();
        let ens = Ensemble::generate(&spec, &[&plan], &[f], 400, 2).unwrap();
        let (w, _, _) = ens.weights(0).unwrap();
        assert!(w.iter().all(|&x| x > 0.0 && x <= 1.0));
        let r = ens.ratio(0, 0).unwrap();
        assert!(r.value.abs() <= 0.5);
    }

    #[test]
    fn huge_actions_are_degenerate() {
        let spec = spec1();
        let e = entry(3.0, 2.0, 1e6);
        let big = Lagrangian::constant(1000.0);
        match estimate_ratio(&cosine(), &big, &e, &spec, 10, 0) {
            Err(Error::DegenerateWeights { min_action }) => assert!(min_action > 700.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schedule_bound_is_enforced() {
        let spec = spec1();
        let l = Lagrangian::clipped_quartic(1.0, 2.0);
        assert!(plan_for_entry(&spec, &l, &entry(3.0, 2.0, 1.0)).is_err());
    }

    fn seq(values: &[f64], se: f64) -> Vec<EstimatorResult> {
        values
            .iter()
            .map(|&v| EstimatorResult {
                std_error: se,
                exact: false,
                ..EstimatorResult::exact(v)
            })
            .collect()
    }

    #[test]
    fn limit_examples() {
        let c = extract_limit(&seq(&[2.5; 6], 0.0), 1e-9);
        assert_eq!(c.status, LimitStatus::Converged);
        assert_eq!(c.value, Some(2.5));
        let v: Vec<f64> = (1..=2000).map(|n| 1.0 + 1.0 / n as f64).collect();
        let h = extract_limit(&seq(&v, 1e-12), 1e-3);
        assert_eq!(h.status, LimitStatus::Converged);
        assert!((h.value.unwrap() - 1.0).abs() < 1e-3);
        let alt: Vec<f64> = (1..=10).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = extract_limit(&seq(&alt, 0.01), 1e-3);
        assert_eq!(a.status, LimitStatus::NonConvergent);
        assert_eq!(a.tail.len(), 10);
        assert_eq!(extract_limit(&seq(&[1.0, 1.0], 0.0), 1.0).status, LimitStatus::TooShort);
    }
}
