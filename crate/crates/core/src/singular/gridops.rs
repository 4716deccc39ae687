//! Derivatives of gridded vector fields.
//!
//! Compact grids use second-order centred differences (one-sided at the
//! edges); periodic grids are differentiated spectrally with the Nyquist
//! modes dropped.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::singular::fft::{SpectralPlan, ZeroMode};
use crate::singular::grid::{BoundaryMode, GridField};

/// `∂_axis` of one scalar component.
pub fn grid_partial(g: &GridField, data: &[f64], axis: usize) -> Result<Vec<f64>> {
    g.validate()?;
    if axis >= g.dim {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for dim {}",
            g.dim
        )));
    }
    if data.len() != g.len() {
        return Err(Error::InvalidGrid("component length does not match grid".into()));
    }
    match g.boundary_mode {
        BoundaryMode::Compact => finite_difference(g, data, axis),
        BoundaryMode::Periodic => spectral_partial(g, data, axis),
    }
}

fn finite_difference(g: &GridField, data: &[f64], axis: usize) -> Result<Vec<f64>> {
    let n = g.shape[axis];
    if n < 3 {
        return Err(Error::InvalidGrid(
            "finite differences need at least 3 samples per axis".into(),
        ));
    }
    let h = g.spacing[axis];
    let stride: usize = g.shape[axis + 1..].iter().product();
    let mut out = vec![0.0; data.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = (flat / stride) % n;
        let at = |k: usize| data[flat - i * stride + k * stride];
        *o = if i == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * h)
        };
    }
    Ok(out)
}

fn spectral_partial(g: &GridField, data: &[f64], axis: usize) -> Result<Vec<f64>> {
    let plan = SpectralPlan::for_grid(g, ZeroMode::ProjectOut)?;
    let input: Vec<Complex64> = data.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let mut coeffs = plan.forward(&input);
    let mut xi = vec![0.0; g.dim];
    for (i, s) in coeffs.iter_mut().enumerate() {
        if plan.is_nyquist(i) {
            *s = Complex64::new(0.0, 0.0);
            continue;
        }
        plan.xi(i, &mut xi);
        *s *= Complex64::new(0.0, xi[axis]);
    }
    Ok(plan.inverse(&coeffs).iter().map(|c| c.re).collect())
}

/// Jacobian entries `d{i}{j} = ∂_j v_i`, `div`, `s{i}{j}`, `a{i}{j}`, and
/// `curl` with `d_re, d_im, dbar_re, dbar_im` in the plane or `curl1..curl3` in space.
pub fn grid_derivative_bundle(v: &GridField) -> Result<GridField> {
    let comps = v.vector()?;
    let n = v.dim;
    let mut jac = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            jac[i][j] = grid_partial(v, comps[i], j)?;
        }
    }
    let len = v.len();
    let mut out = v.like();
    let mut div = vec![0.0; len];
    for i in 0..n {
        for (d, a) in div.iter_mut().zip(&jac[i][i]) {
            *d += a;
        }
    }
    out.insert("div", div);
    for i in 0..n {
        for j in 0..n {
            out.insert(&format!("d{}{}", i + 1, j + 1), jac[i][j].clone());
            let s = (0..len).map(|p| 0.5 * (jac[i][j][p] + jac[j][i][p])).collect();
            let a = (0..len).map(|p| 0.5 * (jac[i][j][p] - jac[j][i][p])).collect();
            out.insert(&format!("s{}{}", i + 1, j + 1), s);
            out.insert(&format!("a{}{}", i + 1, j + 1), a);
        }
    }
    let j = |a: usize, b: usize, p: usize| jac[a][b][p];
    match n {
        2 => {
            out.insert("curl", (0..len).map(|p| j(1, 0, p) - j(0, 1, p)).collect());
            out.insert("d_re", (0..len).map(|p| 0.5 * (j(0, 0, p) + j(1, 1, p))).collect());
            out.insert("d_im", (0..len).map(|p| 0.5 * (j(1, 0, p) - j(0, 1, p))).collect());
            out.insert("dbar_re", (0..len).map(|p| 0.5 * (j(0, 0, p) - j(1, 1, p))).collect());
            out.insert("dbar_im", (0..len).map(|p| 0.5 * (j(1, 0, p) + j(0, 1, p))).collect());
        }
        3 => {
            out.insert("curl1", (0..len).map(|p| j(2, 1, p) - j(1, 2, p)).collect());
            out.insert("curl2", (0..len).map(|p| j(0, 2, p) - j(2, 0, p)).collect());
            out.insert("curl3", (0..len).map(|p| j(1, 0, p) - j(0, 1, p)).collect());
        }
        _ => {}
    }
    Ok(out)
}
