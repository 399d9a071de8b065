//! Periodic-lattice field representation, Fourier transforms and analytic
//! test functions.

pub mod cylindrical;
pub mod dft;
pub mod lattice;
pub mod quadrature;
pub mod radial;
pub mod test_function;

pub use cylindrical::{CylindricalFunction, OuterFunction, SampledCylindricals};
pub use dft::{apply_matrix_multiplier, apply_multiplier, dft_forward, dft_inverse, laplacian_power, SpectralField};
pub use lattice::{LatticeField, LatticeSpec};
pub use test_function::{BumpFamily, TestFunction};
