//! Lattice-exact Euclidean transforms: translations by lattice vectors and
//! the hyperoctahedral group generated by axis permutations and flips.
//!
//! Components rotate with the axes when `K == D >= 2` (vector fields) and
//! are left alone otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{CylindricalFunction, LatticeField, LatticeSpec, TestFunction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EuclideanTransform {
    Identity,
    /// Shift by `steps[j] * h` along each axis.
    Translation { steps: Vec<i64> },
    /// `(T x)_{perm[j]} = x_j`.
    AxisPermutation { perm: Vec<usize> },
    AxisFlip { axis: usize },
    /// Flip of the last coordinate.
    TimeReflection,
}

fn vector_components(spec: &LatticeSpec) -> bool {
    spec.dim >= 2 && spec.components == spec.dim
}

impl EuclideanTransform {
    pub fn translation(steps: Vec<i64>) -> Self {
        EuclideanTransform::Translation { steps }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidParameter { name: "transform", reason });
        match self {
            EuclideanTransform::Translation { steps } if steps.len() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                actual: steps.len(),
            }),
            EuclideanTransform::AxisPermutation { perm } => {
                let mut seen = vec![false; dim];
                if perm.len() != dim {
                    return bad(format!("permutation of length {} for dimension {dim}", perm.len()));
                }
                for &p in perm {
                    if p >= dim || seen[p] {
                        return bad(format!("{perm:?} is not a permutation of 0..{dim}"));
                    }
                    seen[p] = true;
                }
                Ok(())
            }
            EuclideanTransform::AxisFlip { axis } if *axis >= dim => bad(format!("axis {axis} out of range")),
            _ => Ok(()),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            EuclideanTransform::Translation { steps } => EuclideanTransform::Translation {
                steps: steps.iter().map(|s| -s).collect(),
            },
            EuclideanTransform::AxisPermutation { perm } => {
                let mut inv = vec![0; perm.len()];
                for (j, &p) in perm.iter().enumerate() {
                    inv[p] = j;
                }
                EuclideanTransform::AxisPermutation { perm: inv }
            }
            t => t.clone(),
        }
    }

    /// Linear part applied to a vector.
    fn rotate(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        match self {
            EuclideanTransform::AxisPermutation { perm } => {
                for (j, &p) in perm.iter().enumerate() {
                    out[p] = v[j];
                }
            }
            EuclideanTransform::AxisFlip { axis } => out[*axis] = -v[*axis],
            EuclideanTransform::TimeReflection => {
                if let Some(last) = out.last_mut() {
                    *last = -*last;
                }
            }
            _ => {}
        }
        out
    }

    /// Image of a point, with translations measured in units of `spacing`.
    pub fn map_point(&self, x: &[f64], spacing: f64) -> Vec<f64> {
        match self {
            EuclideanTransform::Translation { steps } => {
                x.iter().zip(steps).map(|(v, s)| v + *s as f64 * spacing).collect()
            }
            t => t.rotate(x),
        }
    }

    /// Image of lattice multi-index `idx` on `n` sites per axis, the origin
    /// sitting at index `n/2`.
    fn map_index(&self, idx: &[usize], n: usize) -> Vec<usize> {
        let flip = |i: usize| (n - i) % n;
        match self {
            EuclideanTransform::Identity => idx.to_vec(),
            EuclideanTransform::Translation { steps } => idx
                .iter()
                .zip(steps)
                .map(|(&i, &s)| (i as i64 + s).rem_euclid(n as i64) as usize)
                .collect(),
            EuclideanTransform::AxisPermutation { perm } => {
                let mut out = idx.to_vec();
                for (j, &p) in perm.iter().enumerate() {
                    out[p] = idx[j];
                }
                out
            }
            EuclideanTransform::AxisFlip { axis } => {
                let mut out = idx.to_vec();
                out[*axis] = flip(idx[*axis]);
                out
            }
            EuclideanTransform::TimeReflection => {
                let mut out = idx.to_vec();
                let d = out.len() - 1;
                out[d] = flip(idx[d]);
                out
            }
        }
    }
}

/// `T g`: centre mapped by `T`, direction rotated for vector fields. Fails
/// when the image no longer fits the torus.
pub fn transform_test_function(tf: &TestFunction, t: &EuclideanTransform, spec: &LatticeSpec) -> Result<TestFunction> {
    t.validate(spec.dim)?;
    tf.validate(spec.dim, spec.components)?;
    let mut out = tf.clone();
    out.center = t.map_point(&tf.center, spec.spacing());
    if vector_components(spec) {
        out.direction = t.rotate(&tf.direction);
    }
    out.check_fits(spec, 0.0)?;
    Ok(out)
}

/// `F_T[phi] = F[T^{-1} phi]`, realized by transforming every inner test
/// function.
pub fn apply_transform(f: &CylindricalFunction, t: &EuclideanTransform, spec: &LatticeSpec) -> Result<CylindricalFunction> {
    Ok(CylindricalFunction {
        outer: f.outer.clone(),
        inner: f
            .inner
            .iter()
            .map(|g| transform_test_function(g, t, spec))
            .collect::<Result<_>>()?,
    })
}

/// `(T phi)(x) = R phi(T^{-1} x)`, an exact permutation of lattice values.
pub fn transform_field(field: &LatticeField, t: &EuclideanTransform) -> Result<LatticeField> {
    let spec = *field.spec();
    t.validate(spec.dim)?;
    let n = spec.num_sites();
    let k = spec.components;
    let rotate = vector_components(&spec);
    let mut out = vec![0.0; spec.num_dof()];
    let src = field.data();
    let mut comp = vec![0.0; k];
    for site in 0..n {
        let to = spec.ravel(&t.map_index(&spec.multi_index(site), spec.sites));
        for (c, v) in comp.iter_mut().enumerate() {
            *v = src[c * n + site];
        }
        let img = if rotate { t.rotate(&comp) } else { comp.clone() };
        for (c, v) in img.into_iter().enumerate() {
            out[c * n + to] = v;
        }
    }
    LatticeField::from_vec(spec, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_measure::sample_gff;
    use crate::spectral::OuterFunction;

    fn all(dim: usize) -> Vec<EuclideanTransform> {
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.rotate_left(1);
        vec![
            EuclideanTransform::Identity,
            EuclideanTransform::translation((0..dim).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect()),
            EuclideanTransform::AxisPermutation { perm },
            EuclideanTransform::AxisFlip { axis: 0 },
            EuclideanTransform::TimeReflection,
        ]
    }

    #[test]
    fn reflection_is_an_involution() {
        let spec = LatticeSpec::new(2, 16, 8.0, 2).unwrap();
        let tf = TestFunction::gaussian(vec![0.5, 1.25], 0.4, 2.0, vec![0.6, 0.8]);
        let theta = EuclideanTransform::TimeReflection;
        let once = transform_test_function(&tf, &theta, &spec).unwrap();
        assert_eq!(once.center, vec![0.5, -1.25]);
        assert_eq!(once.direction, vec![0.6, -0.8]);
        assert_eq!(transform_test_function(&once, &theta, &spec).unwrap(), tf);
        let phi = sample_gff(&spec, 3);
        let back = transform_field(&transform_field(&phi, &theta).unwrap(), &theta).unwrap();
        assert_eq!(back, phi);
    }

    #[test]
    fn reflection_maps_upper_to_lower_half() {
        let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
        let delta = 0.25;
        let tf = TestFunction::scalar_gaussian(vec![0.0, 2.0 * delta + 0.5], 0.2);
        let img = transform_test_function(&tf, &EuclideanTransform::TimeReflection, &spec).unwrap();
        assert!(img.center[1] < -2.0 * delta);
    }

    #[test]
    fn unit_translation_rolls_sampled_values() {
        // Dyadic spacing and centre keep every coordinate exact.
        let spec = LatticeSpec::new(2, 16, 4.0, 1).unwrap();
        let tf = TestFunction::scalar_gaussian(vec![0.25, -0.5], 0.3);
        let t = EuclideanTransform::translation(vec![1, 0]);
        let moved = transform_test_function(&tf, &t, &spec).unwrap().sample(&spec);
        let rolled = transform_field(&tf.sample(&spec), &t).unwrap();
        assert_eq!(moved.data(), rolled.data());
    }

    #[test]
    fn transformed_pairings_match_transformed_fields() {
        for (dim, k) in [(1, 1), (2, 1), (2, 2), (3, 3)] {
            let n = if dim == 3 { 8 } else { 16 };
            let spec = LatticeSpec::new(dim, n, 8.0, k).unwrap();
            let mut dir = vec![0.0; k];
            if k == 1 {
                dir[0] = 1.0;
            } else {
                dir[0] = 0.6;
                dir[k - 1] = 0.8;
            }
            let center: Vec<f64> = (0..dim).map(|j| 0.5 * j as f64 - 0.25).collect();
            let g = TestFunction::gaussian(center, 0.6, 1.0, dir);
            let f = CylindricalFunction::new(OuterFunction::Cosine { frequencies: vec![0.7] }, vec![g]).unwrap();
            let phi = sample_gff(&spec, 17);
            for t in all(dim) {
                let ft = apply_transform(&f, &t, &spec).unwrap();
                let pulled = transform_field(&phi, &t.inverse()).unwrap();
                let (a, b) = (ft.eval(&phi), f.eval(&pulled));
                assert!((a - b).abs() < 1e-10, "{t:?} dim {dim}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn leaving_the_torus_is_a_support_violation() {
        let spec = LatticeSpec::new(1, 32, 8.0, 1).unwrap();
        let tf = TestFunction::truncated(vec![2.5], 0.5, 1.0, 1.0, vec![1.0]);
        let t = EuclideanTransform::translation(vec![4]);
        assert!(matches!(
            transform_test_function(&tf, &t, &spec),
            Err(Error::SupportViolation(_))
        ));
        assert!(EuclideanTransform::AxisPermutation { perm: vec![0, 0] }.validate(2).is_err());
    }
}
