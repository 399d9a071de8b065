//! Invariance gaps `|<F_T> - <F>|` on shared samples, against the bound
//! `c0 ||F||_inf M_n r_n^{D-1} / Lambda_n`.

use serde::{Deserialize, Serialize};

use super::transform::{apply_transform, EuclideanTransform};
use crate::error::Result;
use crate::interaction::{plan_for_entry, Ensemble, Lagrangian, ScheduleEntry};
use crate::spectral::{CylindricalFunction, LatticeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceGap {
    pub value: f64,
    pub value_transformed: f64,
    pub gap: f64,
    /// Jackknife error of the paired difference.
    pub std_error: f64,
    /// `||F||_inf M_n r_n^{D-1} / Lambda_n`.
    pub scale: f64,
    pub c0: Option<f64>,
    /// `c0 * scale` when `c0` is known.
    pub bound: Option<f64>,
    pub samples: usize,
}

impl InvarianceGap {
    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = Some(c0);
        self.bound = Some(c0 * self.scale);
        self
    }
}

/// `c0 = gap / scale` from a calibration run.
pub fn calibrate_c0(calibration: &InvarianceGap) -> f64 {
    if calibration.scale > 0.0 {
        calibration.gap / calibration.scale
    } else {
        0.0
    }
}

/// Estimates `<F>` and `<F_T>` on the same free-field samples, both with
/// the interaction on `B(0, r_n)`.
#[allow(clippy::too_many_arguments)]
pub fn invariance_gap(
    f: &CylindricalFunction,
    t: &EuclideanTransform,
    lagrangian: &Lagrangian,
    entry: &ScheduleEntry,
    spec: &LatticeSpec,
    samples: usize,
    seed: u64,
    c0: Option<f64>,
) -> Result<InvarianceGap> {
    f.check_fits(spec, 0.0)?;
    let ft = apply_transform(f, t, spec)?;
    let plan = plan_for_entry(spec, lagrangian, entry)?;
    let ens = Ensemble::generate(spec, &[&plan], &[f.clone(), ft], samples, seed)?;
    let diff: Vec<f64> = ens.values[1].iter().zip(&ens.values[0]).map(|(a, b)| a - b).collect();
    let d = ens.ratio_of(0, &diff)?;
    let out = InvarianceGap {
        value: ens.ratio(0, 0)?.value,
        value_transformed: ens.ratio(0, 1)?.value,
        gap: d.value.abs(),
        std_error: d.std_error,
        scale: f.sup_norm() * entry.ratio(spec.dim),
        c0: None,
        bound: None,
        samples,
    };
    Ok(match c0 {
        Some(c) => out.with_c0(c),
        None => out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TestFunction;

    fn entry() -> ScheduleEntry {
        ScheduleEntry {
            n: 1,
            radius: 2.5,
            lambda: 4.0,
            sup_bound: 1.0,
            penalty: None,
            delta: 0.25,
        }
    }

    fn spec() -> LatticeSpec {
        LatticeSpec::new(2, 32, 8.0, 1).unwrap()
    }

    #[test]
    fn identity_has_zero_gap() {
        let f = CylindricalFunction::cosine(TestFunction::scalar_gaussian(vec![0.5, 0.25], 0.5));
        let g = invariance_gap(&f, &EuclideanTransform::Identity, &Lagrangian::clipped_quartic(1.0, 1.0), &entry(), &spec(), 200, 1, None)
            .unwrap();
        assert_eq!(g.gap, 0.0);
        assert_eq!(g.value, g.value_transformed);
    }

    #[test]
    fn symmetric_setups_are_exact_symmetries() {
        // Centred radial F, radial interaction region: flips and swaps are
        // exact lattice symmetries, so only rounding separates the values.
        let f = CylindricalFunction::cosine(TestFunction::scalar_gaussian(vec![0.0, 0.0], 0.6));
        let l = Lagrangian::clipped_quartic(2.0, 1.0);
        for t in [
            EuclideanTransform::AxisFlip { axis: 0 },
            EuclideanTransform::TimeReflection,
            EuclideanTransform::AxisPermutation { perm: vec![1, 0] },
        ] {
            let g = invariance_gap(&f, &t, &l, &entry(), &spec(), 300, 2, None).unwrap();
            assert!(g.gap <= 1e-12, "{t:?}: {}", g.gap);
        }
    }

    #[test]
    fn shifted_functional_gap_is_resolved() {
        let f = CylindricalFunction::cosine(TestFunction::scalar_gaussian(vec![0.0, 0.0], 0.6));
        let t = EuclideanTransform::translation(vec![2, 0]);
        let g = invariance_gap(&f, &t, &Lagrangian::clipped_quartic(2.0, 1.0), &entry(), &spec(), 400, 3, None).unwrap();
        assert!(g.std_error.is_finite() && g.std_error > 0.0);
        let c0 = calibrate_c0(&g);
        let again = g.with_c0(c0);
        assert!((again.bound.unwrap() - g.gap).abs() <= 1e-15);
    }
}
