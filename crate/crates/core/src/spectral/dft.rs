//! Discrete Fourier transforms on the periodic lattice.
//!
//! The forward transform discretizes `f^(p) = int e^{-i p x} f(x) dx` as
//! `h^D sum_x e^{-i p x} f(x)` with `x` the physical site positions, and the
//! inverse is `f(x) = L^{-D} sum_p e^{i p x} f^(p)`. Spectral arrays are
//! stored in FFT order (see [`LatticeSpec::mode_number`]).

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use rustfft::{Fft, FftPlanner};

use super::lattice::{LatticeField, LatticeSpec};
use crate::error::{Error, Result};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

static PLANS: Lazy<RwLock<HashMap<usize, Plans>>> = Lazy::new(|| RwLock::new(HashMap::new()));

fn plans(n: usize) -> Plans {
    if let Some(p) = PLANS.read().get(&n) {
        return p.clone();
    }
    let mut planner = FftPlanner::new();
    let p = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    PLANS.write().entry(n).or_insert(p).clone()
}

/// Unnormalized in-place multidimensional FFT of one `N^D` block.
pub(crate) fn fft_nd(data: &mut [Complex64], sites: usize, dim: usize, inverse: bool) {
    let (fwd, inv) = plans(sites);
    let plan = if inverse { inv } else { fwd };
    let total = data.len();
    debug_assert_eq!(total, sites.pow(dim as u32));
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    let mut line = vec![Complex64::default(); sites];
    for axis in 0..dim {
        let stride = sites.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(sites) {
                plan.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * sites;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

/// `(-1)^(j_1 + ... + j_D)`: the phase relating FFT index order to the
/// physical-coordinate transform when the origin sits at index `N/2`.
fn origin_phase(spec: &LatticeSpec, flat: usize) -> f64 {
    let mut idx = flat;
    let mut parity = 0;
    for _ in 0..spec.dim {
        parity += idx % spec.sites;
        idx /= spec.sites;
    }
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Complex `K`-component spectral field in FFT order, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    spec: LatticeSpec,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn component(&self, k: usize) -> &[Complex64] {
        let n = self.spec.num_sites();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn from_vec(spec: LatticeSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != spec.num_dof() {
            return Err(Error::DimensionMismatch {
                expected: spec.num_dof(),
                actual: data.len(),
            });
        }
        Ok(SpectralField { spec, data })
    }
}

/// Forward transform `h^D sum_x e^{-i p x} f(x)`.
pub fn dft_forward(field: &LatticeField) -> Result<SpectralField> {
    if !field.is_finite() {
        return Err(Error::NonFinite("dft_forward input"));
    }
    let spec = *field.spec();
    let n = spec.num_sites();
    let hd = spec.cell_volume();
    let mut data: Vec<Complex64> = field.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for block in data.chunks_exact_mut(n) {
        fft_nd(block, spec.sites, spec.dim, false);
        for (j, v) in block.iter_mut().enumerate() {
            *v *= hd * origin_phase(&spec, j);
        }
    }
    Ok(SpectralField { spec, data })
}

/// Inverse transform `L^{-D} sum_p e^{i p x} f^(p)`, keeping the real part.
///
/// For spectra of real fields the imaginary part is rounding noise; for
/// operator symbols that are odd at the Nyquist row it is the asymmetric
/// Nyquist contribution, which is dropped.
pub fn dft_inverse(spectral: &SpectralField) -> Result<LatticeField> {
    let c = dft_inverse_complex(spectral)?;
    let data = c.iter().map(|v| v.re).collect();
    Ok(LatticeField::from_raw(spectral.spec, data))
}

/// Inverse transform returning complex site values.
pub fn dft_inverse_complex(spectral: &SpectralField) -> Result<Vec<Complex64>> {
    if spectral.data.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite("dft_inverse input"));
    }
    let spec = spectral.spec;
    let n = spec.num_sites();
    let inv_vol = 1.0 / spec.volume();
    let mut data = spectral.data.clone();
    for block in data.chunks_exact_mut(n) {
        for (j, v) in block.iter_mut().enumerate() {
            *v *= origin_phase(&spec, j);
        }
        fft_nd(block, spec.sites, spec.dim, true);
        for v in block.iter_mut() {
            *v *= inv_vol;
        }
    }
    Ok(data)
}

/// Applies a real Fourier multiplier (FFT order, one value per mode) to
/// every component of a real field in place.
pub fn apply_multiplier(field: &mut LatticeField, multiplier: &[f64]) {
    let spec = *field.spec();
    let n = spec.num_sites();
    debug_assert_eq!(multiplier.len(), n);
    let scale = 1.0 / n as f64;
    let mut buf = vec![Complex64::default(); n];
    for k in 0..spec.components {
        let comp = field.component_mut(k);
        for (b, &v) in buf.iter_mut().zip(comp.iter()) {
            *b = Complex64::new(v, 0.0);
        }
        fft_nd(&mut buf, spec.sites, spec.dim, false);
        for (b, &m) in buf.iter_mut().zip(multiplier) {
            *b *= m * scale;
        }
        fft_nd(&mut buf, spec.sites, spec.dim, true);
        for (c, b) in comp.iter_mut().zip(&buf) {
            *c = b.re;
        }
    }
}

/// Applies a matrix-valued Fourier multiplier that maps the `K` input
/// components to `rows` output components. `symbol` holds a row-major
/// `rows x K` block per mode, modes in FFT order. The real part of the
/// result is kept, which discards the odd part of a symbol at the Nyquist
/// modes.
pub fn apply_matrix_multiplier(field: &LatticeField, rows: usize, symbol: &[Complex64]) -> Result<LatticeField> {
    let spec = *field.spec();
    let n = spec.num_sites();
    let k = spec.components;
    if symbol.len() != n * rows * k {
        return Err(Error::DimensionMismatch {
            expected: n * rows * k,
            actual: symbol.len(),
        });
    }
    let out_spec = LatticeSpec { components: rows, ..spec };
    out_spec.validate()?;
    let mut hats: Vec<Vec<Complex64>> = (0..k)
        .map(|c| field.component(c).iter().map(|&v| Complex64::new(v, 0.0)).collect())
        .collect();
    for h in hats.iter_mut() {
        fft_nd(h, spec.sites, spec.dim, false);
    }
    let scale = 1.0 / n as f64;
    let mut data = Vec::with_capacity(rows * n);
    let mut buf = vec![Complex64::default(); n];
    for r in 0..rows {
        for (mode, b) in buf.iter_mut().enumerate() {
            let block = &symbol[(mode * rows + r) * k..(mode * rows + r + 1) * k];
            *b = block.iter().zip(&hats).map(|(s, h)| s * h[mode]).sum::<Complex64>() * scale;
        }
        fft_nd(&mut buf, spec.sites, spec.dim, true);
        data.extend(buf.iter().map(|c| c.re));
    }
    Ok(LatticeField::from_raw(out_spec, data))
}

/// Multiplier of `(nabla^2)^j`, i.e. `(-p^2)^j` per mode.
pub fn laplacian_multiplier(spec: &LatticeSpec, power: u32) -> Vec<f64> {
    spec.momentum_squared()
        .into_iter()
        .map(|p2| (-p2).powi(power as i32))
        .collect()
}

/// `(nabla^2)^j field`, applied spectrally.
pub fn laplacian_power(field: &LatticeField, power: u32) -> LatticeField {
    let mut out = field.clone();
    if power == 0 {
        return out;
    }
    let m = laplacian_multiplier(field.spec(), power);
    apply_multiplier(&mut out, &m);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(dim: usize, n: usize, l: f64, k: usize) -> LatticeSpec {
        LatticeSpec::new(dim, n, l, k).unwrap()
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let s = spec(1, 4, 4.0, 1);
        let c = 2.5;
        let f = LatticeField::from_fn(s, |_, _| c);
        let fh = dft_forward(&f).unwrap();
        assert!((fh.data()[0] - Complex64::new(4.0 * c, 0.0)).norm() < 1e-14);
        for v in &fh.data()[1..] {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn discrete_delta_at_origin_has_flat_spectrum() {
        for &(d, n, l) in &[(1, 8, 3.0), (2, 8, 2.0), (3, 4, 4.0)] {
            let s = spec(d, n, l, 1);
            let h = s.spacing();
            let f = LatticeField::from_fn(s, |x, _| {
                if x.iter().all(|&xi| xi == 0.0) {
                    1.0 / h.powi(d as i32)
                } else {
                    0.0
                }
            });
            let fh = dft_forward(&f).unwrap();
            for v in fh.data() {
                assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn plane_wave_is_laplacian_eigenfunction() {
        let s = spec(2, 16, 5.0, 1);
        let k = [3.0, -2.0];
        let dp = s.momentum_step();
        let p = [k[0] * dp, k[1] * dp];
        let p2 = p[0] * p[0] + p[1] * p[1];
        let f = LatticeField::from_fn(s, |x, _| (p[0] * x[0] + p[1] * x[1]).cos());
        for j in 0..3u32 {
            let g = laplacian_power(&f, j);
            let factor = (-p2).powi(j as i32);
            for (a, b) in g.data().iter().zip(f.data()) {
                assert!((a - factor * b).abs() < 1e-9 * factor.abs().max(1.0));
            }
        }
    }

    #[test]
    fn laplacian_matches_finite_difference_on_wide_bump() {
        // Oracle: second-order central difference; error O(h^2).
        let mut errs = Vec::new();
        for &n in &[64usize, 128] {
            let s = spec(1, n, 20.0, 1);
            let h = s.spacing();
            let w: f64 = 1.5;
            let f = LatticeField::from_fn(s, |x, _| (-x[0] * x[0] / (2.0 * w * w)).exp());
            let lap = laplacian_power(&f, 1);
            let v = f.data();
            let mut err: f64 = 0.0;
            for i in 0..n {
                let fd = (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (h * h);
                err = err.max((fd - lap.data()[i]).abs());
            }
            errs.push((h, err));
        }
        let (h0, e0) = errs[0];
        let (h1, e1) = errs[1];
        assert!(e0 < 0.1 * h0 * h0);
        // Halving h should cut the discrepancy by about 4.
        let rate = e0 / e1;
        assert!(rate > 3.5 && rate < 4.5, "rate {rate}, h {h0} {h1}");
    }

    fn random_field(s: LatticeSpec, values: &[f64]) -> LatticeField {
        LatticeField::from_vec(s, values[..s.num_dof()].to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn roundtrip_identity(values in proptest::collection::vec(-10.0f64..10.0, 128)) {
            for s in [spec(1, 8, 2.0, 2), spec(2, 8, 3.0, 2), spec(3, 4, 1.0, 1)] {
                let f = random_field(s, &values);
                let back = dft_inverse(&dft_forward(&f).unwrap()).unwrap();
                let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                for (a, b) in back.data().iter().zip(f.data()) {
                    prop_assert!((a - b).abs() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn parseval(values in proptest::collection::vec(-10.0f64..10.0, 64)) {
            for s in [spec(1, 16, 2.0, 1), spec(2, 8, 5.0, 1), spec(1, 8, 1.0, 2)] {
                let f = random_field(s, &values);
                let fh = dft_forward(&f).unwrap();
                let lhs = f.inner(&f);
                let rhs: f64 = fh.data().iter().map(|v| v.norm_sqr()).sum::<f64>() / s.volume();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1e-300));
            }
        }
    }
}
