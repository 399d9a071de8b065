//! Numerical construction of regularized Euclidean-invariant,
//! reflection-positive field measures on a periodic lattice.
//!
//! * [`spectral`]: lattice, transforms, test and cylindrical functions.
//! * [`free_measure`]: the free Gaussian measure with covariance
//!   `(p^2 + 1)^{-1}`, its lattice sampler, and mollification.
//! * [`interaction`]: cutoff interactions, reweighted ratio estimators,
//!   cutoff schedules and limit extraction.
//! * [`constraints`]: linear constant-coefficient constraints, projected and
//!   penalized covariances, and penalty-limit convergence sweeps.
//! * [`verifiers`]: reflection positivity, invariance gaps and the Markov
//!   property.

// Guards are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraints;
pub mod error;
pub mod free_measure;
pub mod interaction;
pub mod spectral;
pub mod stats;
pub mod verifiers;

pub use error::{Error, Result};
pub use constraints::{ConstraintSet, DiffOperator};
pub use free_measure::{Mollifier, QuadratureConfig, QuadratureScheme};
pub use interaction::{CutoffSchedule, EstimatorResult, GrowthLaw, Lagrangian, Region};
pub use spectral::{CylindricalFunction, LatticeField, LatticeSpec, OuterFunction, TestFunction};
