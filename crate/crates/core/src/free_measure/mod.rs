//! The free Gaussian measure with covariance `(-Delta + 1)^{-1}`:
//! covariance quadrature, exact lattice sampling and mollification.

pub mod covariance;
pub mod mollifier;
pub mod sampler;
pub mod snapshot;

pub use covariance::{
    free_covariance, l2_bound, lattice_covariance, lattice_pairing, spectral_integral, QuadratureConfig,
    QuadratureScheme,
};
pub use mollifier::{mollify, Mollifier};
pub use sampler::{map_samples, sample_gff, sample_stream};
pub use snapshot::{read_snapshot, write_atomic, write_snapshot, SnapshotMeta};
