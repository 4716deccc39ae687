use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    Periodic,
    /// A window of ℝⁿ. Operators that assume compact support check that the
    /// outermost two cells vanish.
    Compact,
}

/// Uniform samples on a 1-, 2- or 3-dimensional grid.
///
/// Node `i` sits at `origin + i * spacing` and stands for the cell of width
/// `spacing` centred there. Arrays are row-major with axis 0 slowest.
/// Component naming: `value` for scalars, `v1..vn` for vectors, `re`/`im`
/// for complex scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub boundary_mode: BoundaryMode,
    pub components: BTreeMap<String, Vec<f64>>,
}

pub const MARGIN: usize = 2;

impl GridField {
    pub fn empty(shape: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>, boundary_mode: BoundaryMode) -> Self {
        Self {
            dim: shape.len(),
            shape,
            origin,
            spacing,
            boundary_mode,
            components: BTreeMap::new(),
        }
    }

    /// Square/cubic grid of `n` nodes per axis centred on the origin with the given spacing.
    pub fn centered(dim: usize, n: usize, spacing: f64, boundary_mode: BoundaryMode) -> Self {
        let origin = -(n as f64 / 2.0) * spacing;
        Self::empty(vec![n; dim], vec![origin; dim], vec![spacing; dim], boundary_mode)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_component(mut self, name: &str, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.len(), "component `{name}` has wrong length");
        self.components.insert(name.to_string(), data);
        self
    }

    pub fn insert(&mut self, name: &str, data: Vec<f64>) {
        assert_eq!(data.len(), self.len(), "component `{name}` has wrong length");
        self.components.insert(name.to_string(), data);
    }

    /// Fills a component by evaluating `f` at every node.
    pub fn sample(mut self, name: &str, f: impl Fn(&[f64]) -> f64) -> Self {
        let data = (0..self.len()).map(|i| f(&self.coord(i))).collect();
        self.components.insert(name.to_string(), data);
        self
    }

    pub fn component(&self, name: &str) -> Result<&[f64]> {
        self.components
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidGrid(format!("missing component `{name}`")))
    }

    pub fn vector_names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("v{i}")).collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn coord(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + i as f64 * self.spacing[a])
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Scalar data: the `value` component, or the only component present.
    pub fn scalar(&self) -> Result<&[f64]> {
        if let Some(v) = self.components.get("value") {
            return Ok(v);
        }
        if self.components.len() == 1 {
            return Ok(self.components.values().next().unwrap());
        }
        Err(Error::InvalidGrid("expected a scalar grid (component `value`)".into()))
    }

    /// Complex scalar data from `re`/`im`, or a real `value` component.
    pub fn complex(&self) -> Result<Vec<Complex64>> {
        if let Some(re) = self.components.get("re") {
            let zeros;
            let im = match self.components.get("im") {
                Some(im) => im,
                None => {
                    zeros = vec![0.0; re.len()];
                    &zeros
                }
            };
            return Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect());
        }
        Ok(self.scalar()?.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn vector(&self) -> Result<Vec<&[f64]>> {
        Self::vector_names(self.dim).iter().map(|n| self.component(n)).collect()
    }

    pub fn like(&self) -> Self {
        Self::empty(
            self.shape.clone(),
            self.origin.clone(),
            self.spacing.clone(),
            self.boundary_mode,
        )
    }

    pub fn with_complex(mut self, data: &[Complex64]) -> Self {
        self.insert("re", data.iter().map(|c| c.re).collect());
        self.insert("im", data.iter().map(|c| c.im).collect());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 3 {
            return Err(Error::UnsupportedDim(self.dim));
        }
        if self.shape.len() != self.dim || self.origin.len() != self.dim || self.spacing.len() != self.dim {
            return Err(Error::InvalidGrid("shape/origin/spacing length mismatch".into()));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        let n = self.len();
        for (name, data) in &self.components {
            if data.len() != n {
                return Err(Error::InvalidGrid(format!(
                    "component `{name}` has {} samples, grid has {n}",
                    data.len()
                )));
            }
        }
        Ok(())
    }

    /// Checks the compact-support margin: every component vanishes on the outer two cells.
    pub fn validate_compact(&self) -> Result<()> {
        self.validate()?;
        if self.boundary_mode != BoundaryMode::Compact {
            return Err(Error::InvalidGrid("operator requires compact boundary mode".into()));
        }
        if self.shape.iter().any(|&s| s <= 2 * MARGIN) {
            return Err(Error::InvalidGrid("grid too small for the compact margin".into()));
        }
        for (name, data) in &self.components {
            for (i, &v) in data.iter().enumerate() {
                if v != 0.0 && self.in_margin(i, MARGIN) {
                    return Err(Error::InvalidGrid(format!(
                        "component `{name}` is nonzero inside the {MARGIN}-cell margin"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn in_margin(&self, flat: usize, margin: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.shape)
            .any(|(&i, &s)| i < margin || i + margin >= s)
    }

    pub fn require_power_of_two(&self) -> Result<()> {
        if self.shape.iter().all(|s| s.is_power_of_two()) {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!(
                "spectral operators need power-of-two sample counts, got {:?}",
                self.shape
            )))
        }
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let g: GridField = serde_json::from_str(&text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_coords() {
        let g = GridField::empty(
            vec![4, 3, 2],
            vec![0.0, 1.0, 2.0],
            vec![0.5, 1.0, 2.0],
            BoundaryMode::Periodic,
        );
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.coord(g.flat_index(&[3, 2, 1])), vec![1.5, 3.0, 4.0]);
    }

    #[test]
    fn compact_margin_enforced() {
        let g = GridField::centered(2, 16, 0.1, BoundaryMode::Compact);
        let ok = g.clone().sample(
            "value",
            |x| if x[0].abs() < 0.3 && x[1].abs() < 0.3 { 1.0 } else { 0.0 },
        );
        assert!(ok.validate_compact().is_ok());
        let bad = g.sample("value", |_| 1.0);
        assert!(bad.validate_compact().is_err());
    }

    #[test]
    fn json_schema_shape() {
        let g =
            GridField::centered(1, 4, 1.0, BoundaryMode::Periodic).with_component("value", vec![1.0, 2.0, 3.0, 4.0]);
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        for key in ["dim", "shape", "origin", "spacing", "boundary_mode", "components"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["boundary_mode"], "periodic");
        assert_eq!(v["components"]["value"][2], 3.0);
        let back: GridField = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }
}
