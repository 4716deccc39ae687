//! Multi-dimensional FFT over row-major arrays, and the wavenumber plan.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::singular::grid::GridField;

/// Transforms along every axis in place. The inverse is normalised by `1/N`.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::new();
    for axis in 0..shape.len() {
        let n = shape[axis];
        if n == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let stride: usize = shape[axis + 1..].iter().product();
        let block = n * stride;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }
}

/// Angular wavenumbers `2π m / (N h)` in FFT order; the Nyquist entry keeps its negative sign.
pub fn wavenumbers(n: usize, spacing: f64) -> Vec<f64> {
    let len = n as f64 * spacing;
    (0..n)
        .map(|m| {
            let signed = if m < n.div_ceil(2) {
                m as i64
            } else {
                m as i64 - n as i64
            };
            TAU * signed as f64 / len
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMode {
    /// The zero frequency is mapped to 0.
    #[default]
    ProjectOut,
    /// Nonzero mean input is rejected.
    Error,
}

/// Wavenumber grid for a periodic box, reusable across calls.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub wavenumbers: Vec<Vec<f64>>,
    pub zero_mode: ZeroMode,
}

impl SpectralPlan {
    pub fn new(shape: &[usize], spacing: &[f64], zero_mode: ZeroMode) -> Self {
        Self {
            shape: shape.to_vec(),
            spacing: spacing.to_vec(),
            wavenumbers: shape.iter().zip(spacing).map(|(&n, &h)| wavenumbers(n, h)).collect(),
            zero_mode,
        }
    }

    pub fn for_grid(grid: &GridField, zero_mode: ZeroMode) -> Result<Self> {
        grid.validate()?;
        grid.require_power_of_two()?;
        Ok(Self::new(&grid.shape, &grid.spacing, zero_mode))
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Wavevector of flat spectral index `flat`.
    pub fn xi(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for a in (0..self.shape.len()).rev() {
            out[a] = self.wavenumbers[a][rem % self.shape[a]];
            rem /= self.shape[a];
        }
    }

    /// Whether any axis of `flat` sits on the Nyquist frequency.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let mut rem = flat;
        for a in (0..self.shape.len()).rev() {
            let n = self.shape[a];
            let m = rem % n;
            rem /= n;
            if n.is_multiple_of(2) && m == n / 2 {
                return true;
            }
        }
        false
    }

    pub fn forward(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut buf = data.to_vec();
        fft_nd(&mut buf, &self.shape, false);
        buf
    }

    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        fft_nd(&mut buf, &self.shape, true);
        buf
    }

    /// Applies the Fourier multiplier `m(ξ)`; `m` is not called at `ξ = 0`,
    /// which maps to 0 under [`ZeroMode::ProjectOut`].
    pub fn apply(&self, data: &[Complex64], m: impl Fn(&[f64]) -> Complex64) -> Result<Vec<Complex64>> {
        let mut coeffs = self.forward(data);
        self.check_zero_mode(coeffs[0], data.len())?;
        let mut xi = vec![0.0; self.shape.len()];
        for (i, s) in coeffs.iter_mut().enumerate() {
            if i == 0 {
                *s = Complex64::new(0.0, 0.0);
                continue;
            }
            self.xi(i, &mut xi);
            *s *= m(&xi);
        }
        Ok(self.inverse(&coeffs))
    }

    pub fn check_zero_mode(&self, mode0: Complex64, n: usize) -> Result<()> {
        if self.zero_mode == ZeroMode::Error {
            let mean = mode0 / n as f64;
            if mean.norm() > 1e-12 {
                return Err(Error::InvalidGrid(format!(
                    "input has nonzero mean {mean} and the zero-mode policy is `error`"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_3d() {
        let shape = [4, 8, 2];
        let data: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut buf = data.clone();
        fft_nd(&mut buf, &shape, false);
        fft_nd(&mut buf, &shape, true);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_wavenumber() {
        let n = 16;
        let h = 0.25;
        let plan = SpectralPlan::new(&[n], &[h], ZeroMode::ProjectOut);
        let k = TAU * 3.0 / (n as f64 * h);
        let data: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, k * j as f64 * h)).collect();
        let coeffs = plan.forward(&data);
        assert!((coeffs[3].re - n as f64).abs() < 1e-12);
        assert!((plan.wavenumbers[0][3] - k).abs() < 1e-14);
        assert!(plan.wavenumbers[0][8] < 0.0);
        assert!(plan.is_nyquist(8));
    }
}
