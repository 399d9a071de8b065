//! Symmetry and structure checks: reflection positivity Gram matrices,
//! invariance gaps under lattice-exact Euclidean transforms, and
//! conditional independence across separating bands.

mod invariance;
mod markov;
mod rp;
mod transform;

pub use invariance::{calibrate_c0, invariance_gap, InvarianceGap};
pub use markov::{markov_check, MarkovResult, PrecisionSymbol, Probes, MARKOV_MAX_SITES};
pub use rp::{free_cosine_gram, rp_gram, rp_gram_with_plan, HalfSpaceRegion, RpGram, Side};
pub use transform::{apply_transform, transform_field, transform_test_function, EuclideanTransform};
