//! Reflection-positivity Gram matrices `G_ij = <Theta(F_i) F_j>`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::transform::{apply_transform, transform_test_function, EuclideanTransform};
use crate::error::{Error, Result};
use crate::interaction::{plan_for_entry, ActionPlan, Ensemble, Lagrangian, Region, ScheduleEntry};
use crate::spectral::{CylindricalFunction, LatticeSpec, TestFunction};
use crate::stats::{effective_sample_size, jackknife_block_size, BlockSums};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `x_D > delta`.
    Plus,
    /// `x_D < -delta`.
    Minus,
    /// `|x_D| <= delta`.
    Band,
}

/// Half-spaces `Pi^+-_delta` and the band between them, with `delta = 1/Lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceRegion {
    pub delta: f64,
    pub side: Side,
}

impl HalfSpaceRegion {
    pub fn from_lambda(lambda: f64, side: Side) -> Self {
        HalfSpaceRegion {
            delta: 1.0 / lambda,
            side,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let t = x[x.len() - 1];
        match self.side {
            Side::Plus => t > self.delta,
            Side::Minus => t < -self.delta,
            Side::Band => t.abs() <= self.delta,
        }
    }

    /// Intersection with `B(0, r)`.
    pub fn ball_region(&self, dim: usize, radius: f64) -> Region {
        match self.side {
            Side::Plus => Region::half_ball(dim, radius, 1, self.delta),
            Side::Minus => Region::half_ball(dim, radius, -1, self.delta),
            Side::Band => Region::equatorial_band(dim, radius, self.delta),
        }
    }

    /// The support `B(c, effective_radius)` lies in the half-space with the
    /// margin scaled by `factor` (`Pi^+_{2 delta}` for `factor = 2`).
    pub fn check_support(&self, tf: &TestFunction, factor: f64) -> Result<()> {
        let t = tf.center[tf.dim() - 1];
        let reach = tf.effective_radius();
        let margin = factor * self.delta;
        let ok = match self.side {
            Side::Plus => t - reach > margin,
            Side::Minus => t + reach < -margin,
            Side::Band => t.abs() + reach <= margin,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SupportViolation(format!(
                "test function at {:?} with radius {reach} is not inside the {:?} region with margin {margin}",
                tf.center, self.side
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpGram {
    /// Raw estimates `G_ij`.
    pub raw: Vec<Vec<f64>>,
    /// `(G + G^T) / 2`.
    pub matrix: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    /// Jackknife error of the smallest eigenvalue.
    pub std_error: f64,
    pub ess: f64,
    pub samples: usize,
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigen().eigenvalues.min()
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Gram matrix over an explicit action plan. Every inner test function
/// must lie in `Pi^+_{2 delta}` with `delta = 1/Lambda` of the plan.
pub fn rp_gram_with_plan(
    functionals: &[CylindricalFunction],
    plan: &ActionPlan,
    samples: usize,
    seed: u64,
) -> Result<RpGram> {
    let spec = plan.spec();
    let upper = HalfSpaceRegion::from_lambda(plan.mollifier().lambda(), Side::Plus);
    for f in functionals {
        for g in &f.inner {
            g.check_fits(spec, 0.0)?;
            upper.check_support(g, 2.0)?;
        }
    }
    let m = functionals.len();
    let mut all: Vec<CylindricalFunction> = functionals.to_vec();
    for f in functionals {
        all.push(apply_transform(f, &EuclideanTransform::TimeReflection, spec)?);
    }
    let ens = Ensemble::generate(spec, &[plan], &all, samples, seed)?;
    let (w, _, _) = ens.weights(0)?;
    let mut series: Vec<Vec<f64>> = Vec::with_capacity(m * m + 1);
    for i in 0..m {
        for j in 0..m {
            series.push(ens.product(m + i, j).iter().zip(&w).map(|(v, w)| v * w).collect());
        }
    }
    series.push(w.clone());
    let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
    let blocks = BlockSums::new(&refs, jackknife_block_size(w.len()));
    let gram = |t: &[f64]| DMatrix::from_fn(m, m, |i, j| t[i * m + j] / t[m * m]);
    let sym = |g: DMatrix<f64>| (&g + g.transpose()) * 0.5;
    let raw = gram(&blocks.totals);
    let matrix = sym(raw.clone());
    let std_errors = DMatrix::from_fn(m, m, |i, j| blocks.jackknife(|t| t[i * m + j] / t[m * m]));
    Ok(RpGram {
        raw: to_rows(&raw),
        matrix: to_rows(&matrix),
        std_errors: to_rows(&std_errors),
        min_eigenvalue: min_eigenvalue(&matrix),
        std_error: blocks.jackknife(|t| min_eigenvalue(&sym(gram(t)))),
        ess: effective_sample_size(&w),
        samples: w.len(),
    })
}

/// Gram matrix with the interaction on the full ball `B(0, r_n)` at
/// cutoff `Lambda_n`.
pub fn rp_gram(
    functionals: &[CylindricalFunction],
    lagrangian: &Lagrangian,
    entry: &ScheduleEntry,
    spec: &LatticeSpec,
    samples: usize,
    seed: u64,
) -> Result<RpGram> {
    let plan = plan_for_entry(spec, lagrangian, entry)?;
    rp_gram_with_plan(functionals, &plan, samples, seed)
}

/// Closed-form Gram of `F_i = cos <f_i, phi>` under a centred Gaussian with
/// covariance `cov`: `G_ij = (e^{-V(Theta f_i + f_j)/2} + e^{-V(Theta f_i - f_j)/2}) / 2`.
pub fn free_cosine_gram<C>(tests: &[TestFunction], spec: &LatticeSpec, mut cov: C) -> Result<(Vec<Vec<f64>>, f64)>
where
    C: FnMut(&TestFunction, &TestFunction) -> Result<f64>,
{
    let m = tests.len();
    let reflected: Vec<TestFunction> = tests
        .iter()
        .map(|f| transform_test_function(f, &EuclideanTransform::TimeReflection, spec))
        .collect::<Result<_>>()?;
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        let tt = cov(&reflected[i], &reflected[i])?;
        for j in 0..m {
            let ff = cov(&tests[j], &tests[j])?;
            let tf = cov(&reflected[i], &tests[j])?;
            g[(i, j)] = 0.5 * ((-(tt + 2.0 * tf + ff) / 2.0).exp() + (-(tt - 2.0 * tf + ff) / 2.0).exp());
        }
    }
    let g = (&g + g.transpose()) * 0.5;
    Ok((to_rows(&g), min_eigenvalue(&g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_measure::{lattice_covariance, Mollifier};

    fn entry(r: f64, lambda: f64) -> ScheduleEntry {
        ScheduleEntry {
            n: 1,
            radius: r,
            lambda,
            sup_bound: 1.0,
            penalty: None,
            delta: 1.0 / lambda,
        }
    }

    fn upper_bumps() -> Vec<TestFunction> {
        vec![
            TestFunction::truncated(vec![0.0, 1.5], 0.5, 0.75, 1.0, vec![1.0]),
            TestFunction::truncated(vec![0.75, 2.0], 0.5, 0.75, 1.5, vec![1.0]),
            TestFunction::truncated(vec![-0.75, 1.75], 0.4, 0.75, 1.0, vec![1.0]),
        ]
    }

    #[test]
    fn support_checks() {
        let up = HalfSpaceRegion::from_lambda(4.0, Side::Plus);
        let inside = TestFunction::truncated(vec![0.0, 1.5], 0.5, 0.75, 1.0, vec![1.0]);
        let touching = TestFunction::truncated(vec![0.0, 1.0], 0.5, 0.75, 1.0, vec![1.0]);
        assert!(up.check_support(&inside, 2.0).is_ok());
        assert!(matches!(up.check_support(&touching, 2.0), Err(Error::SupportViolation(_))));
        assert!(up.contains(&[0.0, 0.3]) && !up.contains(&[0.0, 0.25]));
    }

    #[test]
    fn free_closed_form_is_psd_and_matches_monte_carlo() {
        let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
        let tests = upper_bumps();
        let (g, min) = free_cosine_gram(&tests, &spec, |a, b| lattice_covariance(&spec, a, b)).unwrap();
        assert!(min >= -1e-12);
        let fs: Vec<CylindricalFunction> = tests.into_iter().map(CylindricalFunction::cosine).collect();
        let mc = rp_gram(&fs, &Lagrangian::zero(), &entry(2.5, 4.0), &spec, 4000, 5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let se = mc.std_errors[i][j];
                assert!((mc.raw[i][j] - g[i][j]).abs() <= 4.0 * se, "{i}{j}: {} vs {} +- {se}", mc.raw[i][j], g[i][j]);
            }
        }
    }

    #[test]
    fn split_interaction_gives_a_square() {
        let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
        let lambda = 4.0;
        let m = Mollifier::new(2, lambda).unwrap();
        let region = Region::Union {
            parts: vec![
                HalfSpaceRegion::from_lambda(lambda, Side::Plus).ball_region(2, 3.0),
                HalfSpaceRegion::from_lambda(lambda, Side::Minus).ball_region(2, 3.0),
            ],
        };
        let plan = ActionPlan::new(&spec, &Lagrangian::clipped_quartic(1.0, 2.0), &region, &m).unwrap();
        let f = CylindricalFunction::cosine(upper_bumps()[0].clone());
        let g = rp_gram_with_plan(&[f], &plan, 1000, 8).unwrap();
        assert!(g.matrix[0][0] >= -3.0 * g.std_errors[0][0]);
    }

    #[test]
    fn lower_supports_are_rejected() {
        let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
        let low = TestFunction::truncated(vec![0.0, -1.5], 0.5, 0.75, 1.0, vec![1.0]);
        let r = rp_gram(&[CylindricalFunction::cosine(low)], &Lagrangian::zero(), &entry(2.5, 4.0), &spec, 10, 0);
        assert!(matches!(r, Err(Error::SupportViolation(_))));
    }
}
