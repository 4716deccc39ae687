use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::singular::biot_savart::check_planar_compact;
use crate::singular::grid::GridField;
use crate::singular::kernel::convolve_inv_conj;

/// `(1/(π z̄)) ∗ g` for compactly supported complex data (`re`/`im`, or a real `value`).
///
/// `1/(π z̄)` is the fundamental solution of `∂`, so feeding `g = ∂b` returns `b`.
pub fn cauchy_transform(g: &GridField) -> Result<GridField> {
    check_planar_compact(g)?;
    let data = g.complex()?;
    let conv = convolve_inv_conj(g, &data);
    let out: Vec<Complex64> = conv.iter().map(|c| c / PI).collect();
    Ok(g.like().with_complex(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{bump_gradient_factor, bump_profile};
    use crate::singular::grid::BoundaryMode;

    /// `b = χ(z)·c`; `∂b = c·(∂χ) = c·f(|z|²)·z̄/2 ·` with `∇χ = f x`.
    fn bump_pair(n: usize) -> (GridField, Vec<Complex64>) {
        let c = Complex64::new(0.7, -0.4);
        let h = 3.0 / n as f64;
        let grid = GridField::centered(2, n, h, BoundaryMode::Compact);
        let mut b = Vec::with_capacity(grid.len());
        let mut re = Vec::with_capacity(grid.len());
        let mut im = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = grid.coord(i);
            let r2 = x[0] * x[0] + x[1] * x[1];
            // ∂χ = (∂₁χ − i∂₂χ)/2 = f·z̄/2
            let d = c * bump_gradient_factor(r2) * Complex64::new(x[0], -x[1]) * 0.5;
            b.push(c * bump_profile(r2));
            re.push(d.re);
            im.push(d.im);
        }
        (grid.with_component("re", re).with_component("im", im), b)
    }

    #[test]
    fn recovers_bump_from_its_d_derivative() {
        let (g, b) = bump_pair(256);
        let out = cauchy_transform(&g).unwrap().complex().unwrap();
        let num: f64 = out.iter().zip(&b).map(|(o, b)| (o - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den <= 0.02, "relative error {}", num / den);
    }

    #[test]
    fn zero_and_linearity() {
        let grid = GridField::centered(2, 16, 0.1, BoundaryMode::Compact);
        let zero = cauchy_transform(&grid.clone().sample("value", |_| 0.0)).unwrap();
        assert!(zero.complex().unwrap().iter().all(|c| c.norm() == 0.0));

        let inside = |x: &[f64]| x[0].abs() < 0.5 && x[1].abs() < 0.5;
        let g1 = grid.clone().sample("value", |x| if inside(x) { x[0] } else { 0.0 });
        let g2 = grid
            .clone()
            .sample("value", |x| if inside(x) { 1.0 - x[1] } else { 0.0 });
        let sum = grid
            .clone()
            .sample("value", |x| if inside(x) { x[0] + 1.0 - x[1] } else { 0.0 });
        let (a, b, s) = (
            cauchy_transform(&g1).unwrap().complex().unwrap(),
            cauchy_transform(&g2).unwrap().complex().unwrap(),
            cauchy_transform(&sum).unwrap().complex().unwrap(),
        );
        for i in 0..s.len() {
            assert!((a[i] + b[i] - s[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_periodic_input() {
        let g = GridField::centered(2, 16, 0.1, BoundaryMode::Periodic).sample("value", |_| 0.0);
        assert!(cauchy_transform(&g).is_err());
    }
}
