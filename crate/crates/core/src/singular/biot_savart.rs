//! Planar Biot–Savart law `v = i/(2π z̄) ∗ ω`.
//!
//! Vorticity grids are read as piecewise constant on their cells, and every
//! cell is integrated against the kernel in closed form. Grid output and the
//! pointwise evaluator therefore agree up to rounding.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::singular::grid::{BoundaryMode, GridField, MARGIN};
use crate::singular::kernel::{convolve_inv_conj, inv_conj_rect_integral};

/// Velocity of a compactly supported scalar vorticity grid, sampled at the grid nodes.
pub fn biot_savart(omega: &GridField) -> Result<GridField> {
    check_planar_compact(omega)?;
    let w: Vec<Complex64> = omega.scalar()?.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let conv = convolve_inv_conj(omega, &w);
    // i/(2π) · (a + ib) = (−b + ia)/(2π)
    let v1 = conv.iter().map(|c| -c.im / (2.0 * PI)).collect();
    let v2 = conv.iter().map(|c| c.re / (2.0 * PI)).collect();
    Ok(omega.like().with_component("v1", v1).with_component("v2", v2))
}

pub(crate) fn check_planar_compact(g: &GridField) -> Result<()> {
    if g.dim != 2 {
        return Err(Error::UnsupportedDim(g.dim));
    }
    if g.boundary_mode == BoundaryMode::Periodic {
        return Err(Error::InvalidGrid(
            "planar singular kernels are not periodic; compact input required".into(),
        ));
    }
    g.validate_compact()
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    value: f64,
}

/// Evaluates the Biot–Savart velocity of a piecewise-constant vorticity at arbitrary points.
///
/// Cells with equal values are merged into rectangles first, so data that is
/// constant on large blocks is cheap to evaluate.
#[derive(Debug, Clone)]
pub struct BiotSavartEvaluator {
    rects: Vec<Rect>,
}

impl BiotSavartEvaluator {
    pub fn from_grid(omega: &GridField) -> Result<Self> {
        check_planar_compact(omega)?;
        let w = omega.scalar()?;
        let (n0, n1) = (omega.shape[0], omega.shape[1]);
        let (h0, h1) = (omega.spacing[0], omega.spacing[1]);
        // runs along axis 1, keyed by (start, end, value bits); merged over consecutive rows
        let mut open: BTreeMap<(usize, usize, u64), usize> = BTreeMap::new();
        let mut rects = Vec::new();
        let close = |rects: &mut Vec<Rect>, i_start: usize, i_end: usize, (j0, j1, bits): (usize, usize, u64)| {
            rects.push(Rect {
                x0: omega.origin[0] + (i_start as f64 - 0.5) * h0,
                x1: omega.origin[0] + (i_end as f64 + 0.5) * h0,
                y0: omega.origin[1] + (j0 as f64 - 0.5) * h1,
                y1: omega.origin[1] + (j1 as f64 + 0.5) * h1,
                value: f64::from_bits(bits),
            });
        };
        for i in 0..n0 {
            let row = &w[i * n1..(i + 1) * n1];
            let mut runs = Vec::new();
            let mut j = 0;
            while j < n1 {
                if row[j] == 0.0 {
                    j += 1;
                    continue;
                }
                let start = j;
                while j + 1 < n1 && row[j + 1] == row[start] {
                    j += 1;
                }
                runs.push((start, j, row[start].to_bits()));
                j += 1;
            }
            let keys: Vec<_> = open.keys().copied().collect();
            for key in keys {
                if !runs.contains(&key) {
                    let start = open.remove(&key).unwrap();
                    close(&mut rects, start, i - 1, key);
                }
            }
            for run in runs {
                open.entry(run).or_insert(i);
            }
        }
        for (key, start) in open {
            close(&mut rects, start, n0 - 1, key);
        }
        Ok(Self { rects })
    }

    pub fn rect_count(&self) -> usize {
        self.rects.len()
    }

    pub fn velocity_at(&self, x: f64, y: f64) -> [f64; 2] {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in &self.rects {
            acc += r.value * inv_conj_rect_integral(x - r.x1, x - r.x0, y - r.y1, y - r.y0);
        }
        [-acc.im / (2.0 * PI), acc.re / (2.0 * PI)]
    }
}

/// `ω = sign(x₁x₂)` on `[−w, w]²`, `n` cells per side (n even) plus a zero margin.
pub fn quadrant_vorticity(half_width: f64, n: usize) -> GridField {
    assert!(n.is_multiple_of(2), "quadrant grid needs an even cell count");
    let h = 2.0 * half_width / n as f64;
    let m = n + 2 * MARGIN;
    let origin = -half_width - (MARGIN as f64) * h + 0.5 * h;
    GridField::empty(vec![m, m], vec![origin; 2], vec![h; 2], BoundaryMode::Compact).sample("value", |x| {
        if x[0].abs() < half_width && x[1].abs() < half_width {
            (x[0] * x[1]).signum()
        } else {
            0.0
        }
    })
}

/// Indicator of the disk of radius `radius` as cell-area fractions on an `n × n`
/// grid spanning `[−extent, extent]²`.
pub fn disk_vorticity(radius: f64, extent: f64, n: usize) -> GridField {
    const SUB: usize = 8;
    let h = 2.0 * extent / n as f64;
    let origin = -extent + 0.5 * h;
    GridField::empty(vec![n, n], vec![origin; 2], vec![h; 2], BoundaryMode::Compact).sample("value", |x| {
        let far = (x[0].abs() + h).hypot(x[1].abs() + h);
        let near = (x[0].abs() - h).max(0.0).hypot((x[1].abs() - h).max(0.0));
        if far <= radius {
            return 1.0;
        }
        if near > radius {
            return 0.0;
        }
        let mut inside = 0;
        for a in 0..SUB {
            for b in 0..SUB {
                let px = x[0] + h * ((a as f64 + 0.5) / SUB as f64 - 0.5);
                let py = x[1] + h * ((b as f64 + 0.5) / SUB as f64 - 0.5);
                if px.hypot(py) <= radius {
                    inside += 1;
                }
            }
        }
        inside as f64 / (SUB * SUB) as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_periodic_and_unpadded() {
        let g = GridField::centered(2, 16, 0.1, BoundaryMode::Periodic).sample("value", |_| 0.0);
        assert!(biot_savart(&g).is_err());
        let g = GridField::centered(2, 16, 0.1, BoundaryMode::Compact).sample("value", |_| 1.0);
        assert!(biot_savart(&g).is_err());
    }

    #[test]
    fn quadrant_compresses_to_four_rectangles() {
        let ev = BiotSavartEvaluator::from_grid(&quadrant_vorticity(1.0, 32)).unwrap();
        assert_eq!(ev.rect_count(), 4);
        let v = ev.velocity_at(0.0, 0.0);
        assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
    }

    #[test]
    fn evaluator_matches_grid_output() {
        let omega = disk_vorticity(0.5, 1.0, 32);
        let grid = biot_savart(&omega).unwrap();
        let ev = BiotSavartEvaluator::from_grid(&omega).unwrap();
        let (v1, v2) = (grid.component("v1").unwrap(), grid.component("v2").unwrap());
        for i in (0..grid.len()).step_by(37) {
            let x = grid.coord(i);
            let v = ev.velocity_at(x[0], x[1]);
            assert!((v[0] - v1[i]).abs() < 1e-12 && (v[1] - v2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn point_vortex_far_field() {
        // one unit cell of vorticity looks like a point vortex of circulation h²
        let h = 0.1;
        let mut omega = GridField::centered(2, 8, h, BoundaryMode::Compact).sample("value", |_| 0.0);
        let c = omega.flat_index(&[4, 4]);
        omega.components.get_mut("value").unwrap()[c] = 1.0;
        let ev = BiotSavartEvaluator::from_grid(&omega).unwrap();
        let centre = omega.coord(c);
        let v = ev.velocity_at(centre[0] + 3.0, centre[1]);
        let want = h * h / (2.0 * PI * 3.0);
        assert!(v[0].abs() < 1e-8);
        assert!((v[1] - want).abs() < 1e-5 * want, "{} vs {want}", v[1]);
    }
}
