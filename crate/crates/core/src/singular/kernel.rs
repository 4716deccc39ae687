//! Exact cell integrals of `1/z̄` and the translation-invariant table used by
//! the direct planar convolutions.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::singular::grid::GridField;

fn f_re(x: f64, y: f64) -> f64 {
    // ∂x∂y F = x / (x² + y²)
    let r2 = x * x + y * y;
    let log_term = if y == 0.0 || r2 == 0.0 { 0.0 } else { 0.5 * y * r2.ln() };
    let atan_term = if x == 0.0 { 0.0 } else { x * (y / x).atan() };
    log_term + atan_term
}

fn f_im(x: f64, y: f64) -> f64 {
    f_re(y, x)
}

/// `∫∫ 1/z̄ dA` over the rectangle `[x1, x2] × [y1, y2]`, with `z = x + iy`.
///
/// The integrand is locally integrable, so rectangles containing the origin
/// are fine; the centred square integrates to 0 by symmetry.
pub fn inv_conj_rect_integral(x1: f64, x2: f64, y1: f64, y2: f64) -> Complex64 {
    let corners = |f: fn(f64, f64) -> f64| f(x2, y2) - f(x1, y2) - f(x2, y1) + f(x1, y1);
    Complex64::new(corners(f_re), corners(f_im))
}

/// `T[d] = ∫_{cell at offset d} 1/z̄` for every offset between two nodes of a 2-D grid.
pub struct KernelTable {
    n0: usize,
    n1: usize,
    data: Vec<Complex64>,
}

impl KernelTable {
    pub fn new(n0: usize, n1: usize, h0: f64, h1: f64) -> Self {
        let w0 = 2 * n0 - 1;
        let w1 = 2 * n1 - 1;
        let data = (0..w0 * w1)
            .into_par_iter()
            .map(|flat| {
                let d0 = (flat / w1) as f64 - (n0 as f64 - 1.0);
                let d1 = (flat % w1) as f64 - (n1 as f64 - 1.0);
                inv_conj_rect_integral((d0 - 0.5) * h0, (d0 + 0.5) * h0, (d1 - 0.5) * h1, (d1 + 0.5) * h1)
            })
            .collect();
        Self { n0, n1, data }
    }

    #[inline]
    fn row(&self, d0: isize) -> &[Complex64] {
        let w1 = 2 * self.n1 - 1;
        let r = (d0 + self.n0 as isize - 1) as usize;
        &self.data[r * w1..(r + 1) * w1]
    }

    /// `out[p] = Σ_q T[p − q] g[q]` over all grid nodes.
    pub fn convolve(&self, g: &[Complex64]) -> Vec<Complex64> {
        let (n0, n1) = (self.n0, self.n1);
        assert_eq!(g.len(), n0 * n1);
        // nonzero sources grouped by row
        let sources: Vec<Vec<(usize, Complex64)>> = (0..n0)
            .map(|q0| {
                (0..n1)
                    .filter_map(|q1| {
                        let v = g[q0 * n1 + q1];
                        (v.re != 0.0 || v.im != 0.0).then_some((q1, v))
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); n0 * n1];
        out.par_chunks_mut(n1).enumerate().for_each(|(p0, out_row)| {
            for (q0, row_sources) in sources.iter().enumerate() {
                if row_sources.is_empty() {
                    continue;
                }
                let t = self.row(p0 as isize - q0 as isize);
                for &(q1, v) in row_sources {
                    // offset index p1 - q1 + (n1 - 1)
                    let start = n1 - 1 - q1;
                    for (o, k) in out_row.iter_mut().zip(&t[start..start + n1]) {
                        *o += k * v;
                    }
                }
            }
        });
        out
    }
}

/// Convolution of grid data with `1/z̄`, cell integrals exact for piecewise-constant data.
pub fn convolve_inv_conj(grid: &GridField, g: &[Complex64]) -> Vec<Complex64> {
    let table = KernelTable::new(grid.shape[0], grid.shape[1], grid.spacing[0], grid.spacing[1]);
    table.convolve(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussRule;

    /// Tensor Gauss quadrature of 1/z̄ on a rectangle away from the origin.
    fn brute(x1: f64, x2: f64, y1: f64, y2: f64) -> Complex64 {
        let rule = GaussRule::new(40);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, wx) in rule.on(x1, x2) {
            for (y, wy) in rule.on(y1, y2) {
                acc += wx * wy / Complex64::new(x, -y);
            }
        }
        acc
    }

    #[test]
    fn rect_integral_matches_quadrature() {
        for &(x1, x2, y1, y2) in &[
            (1.0, 2.0, 0.5, 1.5),
            (-3.0, -2.5, 1.0, 4.0),
            (-1.0, 1.0, 2.0, 2.5),
            (0.2, 0.3, -0.7, -0.1),
        ] {
            let a = inv_conj_rect_integral(x1, x2, y1, y2);
            let b = brute(x1, x2, y1, y2);
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn rect_integral_additive_across_origin() {
        // split a rectangle containing the origin into pieces touching it
        let whole = inv_conj_rect_integral(-0.3, 0.7, -0.2, 0.5);
        let parts = inv_conj_rect_integral(-0.3, 0.0, -0.2, 0.0)
            + inv_conj_rect_integral(0.0, 0.7, -0.2, 0.0)
            + inv_conj_rect_integral(-0.3, 0.0, 0.0, 0.5)
            + inv_conj_rect_integral(0.0, 0.7, 0.0, 0.5);
        assert!((whole - parts).norm() < 1e-14);
        // a centred square integrates to zero
        assert!(inv_conj_rect_integral(-0.5, 0.5, -0.5, 0.5).norm() < 1e-15);
    }

    #[test]
    fn table_convolution_matches_naive_sum() {
        let (n0, n1, h) = (6, 5, 0.3);
        let table = KernelTable::new(n0, n1, h, h);
        let g: Vec<Complex64> = (0..n0 * n1)
            .map(|i| Complex64::new(((i * 7) % 5) as f64 - 2.0, (i % 3) as f64))
            .collect();
        let fast = table.convolve(&g);
        for p in 0..n0 * n1 {
            let (p0, p1) = ((p / n1) as f64, (p % n1) as f64);
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..n0 * n1 {
                let (q0, q1) = ((q / n1) as f64, (q % n1) as f64);
                let (d0, d1) = (p0 - q0, p1 - q1);
                acc += g[q] * inv_conj_rect_integral((d0 - 0.5) * h, (d0 + 0.5) * h, (d1 - 0.5) * h, (d1 + 0.5) * h);
            }
            assert!((acc - fast[p]).norm() < 1e-12);
        }
    }
}
