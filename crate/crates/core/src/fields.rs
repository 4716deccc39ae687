//! Vector and scalar fields, the analytic test zoo, and the logarithmic cutoff `g_t`.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, Matrix};
use crate::singular::biot_savart::BiotSavartEvaluator;
use crate::singular::grid::GridField;

type MapFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A deterministic map `ℝⁿ → ℝⁿ`, optionally with a closed-form Jacobian.
///
/// Cloning is cheap; the closures are shared.
#[derive(Clone)]
pub struct VectorField {
    name: String,
    dim: usize,
    eval: Arc<MapFn>,
    jacobian: Option<Arc<MapFn>>,
    support_radius: f64,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("has_jacobian", &self.jacobian.is_some())
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl VectorField {
    pub fn new(name: impl Into<String>, dim: usize, eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            jacobian: None,
            support_radius: f64::INFINITY,
        }
    }

    /// Closed-form Jacobian, written row-major into an `n*n` buffer (`out[i*n+j] = ∂_j v_i`).
    pub fn with_jacobian(mut self, jac: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_support_radius(mut self, r: f64) -> Self {
        self.support_radius = r;
        self
    }

    /// Planar field given as a complex function of `z = x₁ + i x₂`.
    pub fn planar(name: impl Into<String>, f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::new(name, 2, move |x, out| {
            let w = f(Complex64::new(x[0], x[1]));
            out[0] = w.re;
            out[1] = w.im;
        })
    }

    /// `v(x) = M x`.
    pub fn linear(name: impl Into<String>, m: Matrix) -> Self {
        let n = m.dim();
        let m_eval = m.clone();
        Self::new(name, n, move |x, out| {
            for i in 0..n {
                out[i] = (0..n).map(|j| m_eval[(i, j)] * x[j]).sum();
            }
        })
        .with_jacobian(move |_, out| out.copy_from_slice(m.as_slice()))
    }

    pub fn constant(name: impl Into<String>, c: Vec<f64>) -> Self {
        let n = c.len();
        Self::new(name, n, move |_, out| out.copy_from_slice(&c)).with_jacobian(|_, out| out.fill(0.0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    pub fn jacobian(&self, x: &[f64]) -> Option<Matrix> {
        self.jacobian.as_ref().map(|j| {
            let mut buf = vec![0.0; self.dim * self.dim];
            j(x, &mut buf);
            Matrix::from_row_major(self.dim, buf)
        })
    }

    /// `λ v`, with the Jacobian scaled along.
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = self.eval.clone();
        let mut out = Self::new(format!("{}*{lambda}", self.name), self.dim, move |x, o| {
            inner(x, o);
            o.iter_mut().for_each(|v| *v *= lambda);
        });
        if let Some(j) = self.jacobian.clone() {
            out = out.with_jacobian(move |x, o| {
                j(x, o);
                o.iter_mut().for_each(|v| *v *= lambda);
            });
        }
        out.support_radius = self.support_radius;
        out
    }
}

/// A deterministic map `ℝⁿ → ℝ`.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    dim: usize,
    eval: Arc<ScalarFn>,
    support_radius: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, dim: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            support_radius: f64::INFINITY,
        }
    }

    pub fn with_support_radius(mut self, r: f64) -> Self {
        self.support_radius = r;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// `sign(x₁)` restricted to the ball of radius `r`.
    pub fn truncated_sign(dim: usize, r: f64) -> Self {
        Self::new(format!("sign_r{r}"), dim, move |x| {
            if norm(x) > r {
                0.0
            } else if x[0] > 0.0 {
                1.0
            } else if x[0] < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .with_support_radius(r)
    }

    /// `log |x|`, with value 0 at the origin (a null set).
    pub fn log_abs(dim: usize) -> Self {
        Self::new("log_abs", dim, |x| {
            let r = norm(x);
            if r == 0.0 {
                0.0
            } else {
                r.ln()
            }
        })
    }
}

/// Smooth compactly supported radial profile `exp(1 - 1/(1 - r²))` on `r < 1`, equal to 1 at 0.
pub fn bump_profile(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// Gradient factor: `∇χ(x) = bump_gradient_factor(|x|²) · x`.
pub fn bump_gradient_factor(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        let d = 1.0 - r2;
        -2.0 * bump_profile(r2) / (d * d)
    }
}

/// The cutoff `g_t(x)`: 1 on `|x| ≤ t`, `1 − (1/t) log(log|x| / log t)` up to `|x| = t^{e^t}`, 0 beyond.
///
/// Evaluated in log space so that `t^{e^t}` never has to be formed.
pub fn cutoff_g(t: f64, x: &[f64]) -> Result<f64> {
    if !(t > E) {
        return Err(invalid(format!("cutoff parameter t must exceed e, got {t}")));
    }
    Ok(cutoff_radial(t, norm(x)))
}

fn cutoff_radial(t: f64, r: f64) -> f64 {
    if r <= t {
        return 1.0;
    }
    let l = (r.ln() / t.ln()).ln();
    if l >= t {
        0.0
    } else {
        1.0 - l / t
    }
}

/// `log` of the outer radius `t^{e^t}` of the cutoff.
pub fn cutoff_log_support(t: f64) -> f64 {
    t.exp() * t.ln()
}

/// `g_t · v`. Coincides with `v` on the ball of radius `t`.
pub fn apply_cutoff(v: &VectorField, t: f64) -> Result<VectorField> {
    cutoff_g(t, &vec![0.0; v.dim()])?;
    let inner = v.eval.clone();
    let support = cutoff_log_support(t).exp();
    Ok(VectorField::new(format!("{}*g_{t}", v.name()), v.dim(), move |x, out| {
        let g = cutoff_radial(t, norm(x));
        if g == 0.0 {
            out.fill(0.0);
            return;
        }
        inner(x, out);
        if g != 1.0 {
            out.iter_mut().for_each(|c| *c *= g);
        }
    })
    .with_support_radius(support))
}

/// A closed-form quantity attached to a zoo field, with how it was obtained.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Expected {
    pub value: f64,
    pub note: String,
}

/// Recipe for zoo fields whose velocity comes from a gridded vorticity.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridRecipe {
    /// `ω = sign(x₁x₂)` on `[-half_width, half_width]²`, sampled on an `n × n` cell grid.
    QuadrantVorticity { half_width: f64, n: usize },
}

impl GridRecipe {
    pub fn vorticity(&self) -> GridField {
        match *self {
            GridRecipe::QuadrantVorticity { half_width, n } => {
                crate::singular::biot_savart::quadrant_vorticity(half_width, n)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub field: VectorField,
    pub lipschitz: bool,
    /// Smooth away from a null set the probes avoid.
    pub smooth: bool,
    pub description: String,
    pub expected: BTreeMap<String, Expected>,
    pub grid_recipe: Option<GridRecipe>,
}

impl ZooEntry {
    fn new(field: VectorField, lipschitz: bool, description: &str) -> Self {
        Self {
            field,
            lipschitz,
            smooth: true,
            description: description.to_string(),
            expected: BTreeMap::new(),
            grid_recipe: None,
        }
    }

    fn expect(mut self, key: &str, value: f64, note: &str) -> Self {
        self.expected.insert(
            key.to_string(),
            Expected {
                value,
                note: note.to_string(),
            },
        );
        self
    }

    pub fn name(&self) -> &str {
        self.field.name()
    }

    pub fn summary(&self) -> ZooSummary {
        ZooSummary {
            name: self.name().to_string(),
            dim: self.field.dim(),
            lipschitz: self.lipschitz,
            description: self.description.clone(),
            expected: self.expected.clone(),
            grid_recipe: self.grid_recipe.clone(),
        }
    }
}

/// JSON shape of `zoo list`.
#[derive(Debug, Clone, Serialize)]
pub struct ZooSummary {
    pub name: String,
    pub dim: usize,
    pub lipschitz: bool,
    pub description: String,
    pub expected: BTreeMap<String, Expected>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_recipe: Option<GridRecipe>,
}

const LINEAR_NOTE: &str = "linear field: ∂v = (div + i curl)/2 and ∂̄v = (div − i curl)/2 read off M";
const EXPANSION_NOTE: &str =
    "difference quotients of a linear field are scale-free; sup over equal-norm pairs of the expansion";

/// Fixed generic 2x2 matrix used by the `generic` entry.
pub const GENERIC_2D: [[f64; 2]; 2] = [[0.8, -0.3], [1.1, 0.4]];
/// Fixed generic 3x3 matrix used by the `generic3` entry.
pub const GENERIC_3D: [[f64; 3]; 3] = [[0.5, -0.7, 0.2], [0.9, -0.1, 0.4], [-0.3, 0.6, 0.3]];

/// Builds the test zoo for `dim ∈ {2, 3}`. Names are unique across dimensions.
pub fn make_zoo(dim: usize) -> Result<Vec<ZooEntry>> {
    match dim {
        2 => Ok(zoo_2d()),
        3 => Ok(zoo_3d()),
        d => Err(Error::UnsupportedDim(d)),
    }
}

/// Looks a field up by name in both zoos.
pub fn find_entry(name: &str) -> Result<ZooEntry> {
    zoo_2d()
        .into_iter()
        .chain(zoo_3d())
        .find(|e| e.name() == name)
        .ok_or_else(|| Error::UnknownField(name.to_string()))
}

fn matrix_2(m: [[f64; 2]; 2]) -> Matrix {
    Matrix::from_rows(&[&m[0], &m[1]])
}

fn zoo_2d() -> Vec<ZooEntry> {
    let mut zoo = Vec::new();

    let rot = matrix_2([[0.0, -1.0], [1.0, 0.0]]);
    zoo.push(
        ZooEntry::new(VectorField::linear("rot", rot), true, "rotation generator v(z) = iz")
            .expect("d_re", 0.0, LINEAR_NOTE)
            .expect("d_im", 1.0, LINEAR_NOTE)
            .expect("dbar_re", 0.0, LINEAR_NOTE)
            .expect("dbar_im", 0.0, LINEAR_NOTE)
            .expect("div", 0.0, LINEAR_NOTE)
            .expect("curl", 2.0, LINEAR_NOTE)
            .expect("qbar", 2.0, "2|∂v| with ∂v = i; extremal pair k = ih")
            .expect("r", 2.0, "2|∂v|; orthogonal pair with optimal rotation angle")
            .expect("r0", 2.0, "‖M − Mᵗ‖_op = 2")
            .expect("zygmund", 0.0, "second differences of a linear map vanish"),
    );

    zoo.push(
        ZooEntry::new(
            VectorField::linear("id", Matrix::identity(2)),
            true,
            "identity v(z) = z",
        )
        .expect("d_re", 1.0, LINEAR_NOTE)
        .expect("d_im", 0.0, LINEAR_NOTE)
        .expect("dbar_re", 0.0, LINEAR_NOTE)
        .expect("dbar_im", 0.0, LINEAR_NOTE)
        .expect("div", 2.0, LINEAR_NOTE)
        .expect("curl", 0.0, LINEAR_NOTE)
        .expect("qbar", 2.0, EXPANSION_NOTE)
        .expect("r0", 0.0, "M symmetric, antisymmetric part vanishes"),
    );

    zoo.push(
        ZooEntry::new(
            VectorField::linear("conj", Matrix::diag(&[1.0, -1.0])),
            true,
            "conjugation v(z) = z̄ (symmetric traceless linear field)",
        )
        .expect("d_re", 0.0, "∂z̄ = 0")
        .expect("d_im", 0.0, "∂z̄ = 0")
        .expect("dbar_re", 1.0, "∂̄z̄ = 1")
        .expect("dbar_im", 0.0, "∂̄z̄ = 1")
        .expect("div", 0.0, LINEAR_NOTE)
        .expect("curl", 0.0, LINEAR_NOTE)
        .expect("qbar", 0.0, "only Re(∂̄v)(|h|² − |k|²) survives the expansion")
        .expect("r", 0.0, "only ∂v enters the expansion")
        .expect("r0", 0.0, "M symmetric")
        .expect("lipschitz", 1.0, "|M h| = |h|"),
    );

    let g = matrix_2(GENERIC_2D);
    let d = Complex64::new(
        (GENERIC_2D[0][0] + GENERIC_2D[1][1]) / 2.0,
        (GENERIC_2D[1][0] - GENERIC_2D[0][1]) / 2.0,
    );
    let asym = matrix_2(GENERIC_2D);
    let curl_op = (&asym - &asym.transpose()).op_norm();
    zoo.push(
        ZooEntry::new(VectorField::linear("generic", g), true, "generic linear field")
            .expect("d_re", d.re, LINEAR_NOTE)
            .expect("d_im", d.im, LINEAR_NOTE)
            .expect("qbar", 2.0 * d.norm(), EXPANSION_NOTE)
            .expect("r", 2.0 * d.norm(), EXPANSION_NOTE)
            .expect("r0", curl_op, "‖M − Mᵗ‖_op"),
    );

    zoo.push(
        ZooEntry::new(
            VectorField::planar("square", |z| z * z).with_jacobian(|x, o| {
                o.copy_from_slice(&[2.0 * x[0], -2.0 * x[1], 2.0 * x[1], 2.0 * x[0]]);
            }),
            false,
            "v(z) = z², smooth with unbounded derivative (used for local recovery checks)",
        )
        .expect(
            "zygmund",
            0.0,
            "second difference is 2h², so the quotient is 2|h|, vanishing as |h| → 0",
        ),
    );

    let mut conjlog = ZooEntry::new(
        VectorField::planar("conjlog", |z| {
            let r2 = z.norm_sqr();
            if r2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z.conj() * r2.ln()
            }
        })
        .with_jacobian(|x, o| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let l = r2.ln();
            o[0] = l + 2.0 * x[0] * x[0] / r2;
            o[1] = 2.0 * x[0] * x[1] / r2;
            o[2] = -2.0 * x[0] * x[1] / r2;
            o[3] = -l - 2.0 * x[1] * x[1] / r2;
        }),
        false,
        "v(z) = z̄ log|z|² (value 0 at 0); stand-in non-Lipschitz field with bounded ∂v = z̄/z",
    )
    .expect(
        "abs_d",
        1.0,
        "Wirtinger calculus: ∂v = z̄ ∂ log|z|² = z̄/z, so |∂v| = 1 off the origin",
    )
    .expect(
        "zygmund_at_h",
        4.0 * 2f64.ln(),
        "second difference at x = h: v(2h) + v(0) − 2v(h) = 2h̄ log 4, divided by |h|",
    );
    conjlog.smooth = true;
    zoo.push(conjlog);

    let w0 = Complex64::new(0.5, 0.25);
    zoo.push(
        ZooEntry::new(
            VectorField::planar("bump", move |z| {
                let c = bump_profile(z.norm_sqr());
                (z.conj() + w0) * c
            })
            .with_jacobian(move |x, o| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let c = bump_profile(r2);
                let gf = bump_gradient_factor(r2);
                let a = [x[0] + w0.re, -x[1] + w0.im];
                // D(χ a) = χ Da + a ⊗ ∇χ
                o[0] = c + a[0] * gf * x[0];
                o[1] = a[0] * gf * x[1];
                o[2] = a[1] * gf * x[0];
                o[3] = -c + a[1] * gf * x[1];
            })
            .with_support_radius(1.0),
            true,
            "compactly supported smooth field χ(z)(z̄ + w₀), χ = exp(1 − 1/(1 − |z|²)), w₀ = 0.5 + 0.25i",
        )
        .expect("value_at_0_re", 0.5, "χ(0) = 1")
        .expect("value_at_0_im", 0.25, "χ(0) = 1"),
    );

    zoo.push(
        ZooEntry::new(
            VectorField::constant("const", vec![1.0, -0.5]),
            true,
            "constant field (1, −0.5)",
        )
        .expect("qbar", 0.0, "Δ_h v = 0")
        .expect("r", 0.0, "Δ_h v = 0")
        .expect("r0", 0.0, "Δ_h v = 0")
        .expect("zygmund", 0.0, "Δ_h v = 0"),
    );

    let recipe = GridRecipe::QuadrantVorticity { half_width: 1.0, n: 64 };
    let evaluator =
        BiotSavartEvaluator::from_grid(&recipe.vorticity()).expect("quadrant vorticity recipe is a valid compact grid");
    let mut quadrant = ZooEntry::new(
        VectorField::new("quadrant", 2, move |x, o| {
            let v = evaluator.velocity_at(x[0], x[1]);
            o[0] = v[0];
            o[1] = v[1];
        }),
        false,
        "Biot–Savart velocity of ω = sign(x₁x₂) on [−1,1]² (bounded vorticity, non-Lipschitz at 0)",
    )
    .expect(
        "abs_d_inside",
        0.5,
        "2∂v = iω with div v = 0, so |∂v| = |ω|/2 = 1/2 inside the square",
    );
    quadrant.smooth = false;
    quadrant.grid_recipe = Some(recipe);
    zoo.push(quadrant);

    zoo
}

fn zoo_3d() -> Vec<ZooEntry> {
    let mut zoo = Vec::new();
    let rot = Matrix::from_rows(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
    zoo.push(
        ZooEntry::new(
            VectorField::linear("rot3", rot),
            true,
            "rotation generator in the x₁x₂ plane",
        )
        .expect("div", 0.0, LINEAR_NOTE)
        .expect("r0", 2.0, "‖M − Mᵗ‖_op = 2")
        .expect("zygmund", 0.0, "second differences of a linear map vanish"),
    );
    zoo.push(
        ZooEntry::new(
            VectorField::linear("sym3", Matrix::diag(&[1.0, -1.0, 0.0])),
            true,
            "symmetric traceless diag(1, −1, 0)",
        )
        .expect("r0", 0.0, "M symmetric")
        .expect("lipschitz", 1.0, "‖M‖_op = 1"),
    );
    let g = Matrix::from_rows(&[&GENERIC_3D[0], &GENERIC_3D[1], &GENERIC_3D[2]]);
    let curl_op = (&g - &g.transpose()).op_norm();
    zoo.push(
        ZooEntry::new(VectorField::linear("generic3", g), true, "generic linear field in ℝ³").expect(
            "r0",
            curl_op,
            "‖M − Mᵗ‖_op",
        ),
    );

    let gm = Matrix::from_rows(&[&GENERIC_3D[0], &GENERIC_3D[1], &GENERIC_3D[2]]);
    let c0 = [0.3, -0.2, 0.1];
    let gj = gm.clone();
    zoo.push(ZooEntry::new(
        VectorField::new("bump3", 3, move |x, o| {
            let c = bump_profile(x.iter().map(|v| v * v).sum());
            let a = gm.apply(x);
            for i in 0..3 {
                o[i] = c * (a[i] + c0[i]);
            }
        })
        .with_jacobian(move |x, o| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let c = bump_profile(r2);
            let gf = bump_gradient_factor(r2);
            let a = gj.apply(x);
            for i in 0..3 {
                for j in 0..3 {
                    o[i * 3 + j] = c * gj[(i, j)] + (a[i] + c0[i]) * gf * x[j];
                }
            }
        })
        .with_support_radius(1.0),
        true,
        "compactly supported smooth field χ(x)(Gx + c) in ℝ³",
    ));
    zoo.push(
        ZooEntry::new(
            VectorField::constant("const3", vec![0.2, 1.0, -0.4]),
            true,
            "constant field in ℝ³",
        )
        .expect("r0", 0.0, "Δ_h v = 0")
        .expect("zygmund", 0.0, "Δ_h v = 0"),
    );
    zoo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::jacobian_fd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zoo_rejects_other_dims() {
        assert!(matches!(make_zoo(1), Err(Error::UnsupportedDim(1))));
        assert!(matches!(make_zoo(4), Err(Error::UnsupportedDim(4))));
    }

    #[test]
    fn zoo_names_unique_and_notes_present() {
        let all: Vec<_> = make_zoo(2).unwrap().into_iter().chain(make_zoo(3).unwrap()).collect();
        let mut names: Vec<_> = all.iter().map(|e| e.name().to_string()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), all.len());
        for e in &all {
            for (k, v) in &e.expected {
                assert!(!v.note.is_empty(), "{}:{k} lacks a provenance note", e.name());
            }
        }
    }

    #[test]
    fn zoo_2d_contains_required_entries() {
        let zoo = make_zoo(2).unwrap();
        for name in ["rot", "conj", "conjlog", "bump", "generic", "quadrant"] {
            assert!(zoo.iter().any(|e| e.name() == name), "missing {name}");
        }
        let conjlog = zoo.iter().find(|e| e.name() == "conjlog").unwrap();
        assert!(!conjlog.lipschitz);
        assert_eq!(conjlog.field.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
        let rot = zoo.iter().find(|e| e.name() == "rot").unwrap();
        assert_eq!(rot.expected["curl"].value, 2.0);
        assert_eq!(rot.expected["d_im"].value, 1.0);
    }

    #[test]
    fn conjlog_wirtinger_derivative() {
        // ∂v = z̄/z at a few points, from the closed-form Jacobian
        let e = find_entry("conjlog").unwrap();
        for &(x, y) in &[(0.3, 0.4), (-1.2, 0.7), (2.0, -3.0)] {
            let j = e.field.jacobian(&[x, y]).unwrap();
            let d = Complex64::new((j[(0, 0)] + j[(1, 1)]) / 2.0, (j[(1, 0)] - j[(0, 1)]) / 2.0);
            let z = Complex64::new(x, y);
            let want = z.conj() / z;
            assert!((d - want).norm() < 1e-12);
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_jacobians_are_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let all: Vec<_> = make_zoo(2).unwrap().into_iter().chain(make_zoo(3).unwrap()).collect();
        for e in all.iter().filter(|e| e.field.has_jacobian()) {
            let n = e.field.dim();
            let pts: Vec<Vec<f64>> = (0..100)
                .map(|_| (0..n).map(|_| rng.gen_range(-0.9..0.9) / (n as f64).sqrt()).collect())
                .collect();
            let err = |eps: f64| {
                pts.iter()
                    .map(|p| {
                        let fd = jacobian_fd(&e.field, p, eps).unwrap();
                        let exact = e.field.jacobian(p).unwrap();
                        (&fd - &exact).max_abs()
                    })
                    .fold(0.0, f64::max)
            };
            let (e1, e2) = (err(1e-2), err(5e-3));
            if e1 < 1e-9 {
                // linear or constant: FD is exact up to rounding
                assert!(e2 < 1e-9, "{}", e.name());
                continue;
            }
            let order = (e1 / e2).log2();
            assert!(order >= 1.9, "{}: observed order {order}", e.name());
        }
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_g(3.0, &[3.0, 0.0]).unwrap(), 1.0);
        let far = 3f64.powf(E.powi(3));
        assert_eq!(cutoff_g(3.0, &[far * (1.0 + 1e-12), 0.0]).unwrap(), 0.0);
        assert!(cutoff_g(3.0, &[far, 0.0]).unwrap() < 1e-15);
        let mid = 3f64.powf(E.powf(1.5));
        assert!((cutoff_g(3.0, &[mid, 0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!(cutoff_g(E, &[1.0]).is_err());
        assert!(cutoff_g(2.0, &[1.0]).is_err());
    }

    #[test]
    fn cutoff_monotone_and_continuous() {
        let t = 3.5;
        let outer = cutoff_log_support(t);
        // radial grid in log r, 1e4 points, then refined once
        let jump = |n: usize| {
            let vals: Vec<f64> = (0..=n)
                .map(|i| {
                    let lr = t.ln() * 0.5 + (outer * 1.01 - t.ln() * 0.5) * i as f64 / n as f64;
                    cutoff_radial(t, lr.exp())
                })
                .collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]), "not monotone");
            vals.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
        };
        let j1 = jump(10_000);
        let j2 = jump(20_000);
        assert!(j2 < j1 && j2 < 1e-3, "{j1} {j2}");
        // largest jump shrinks with the mesh: no discontinuity
        assert!(j2 <= 0.5 * j1 + 1e-6);
        // the two breakpoints in particular
        assert!((cutoff_radial(t, t * (1.0 + 1e-12)) - 1.0).abs() < 1e-6);
        assert!(cutoff_radial(t, (outer * (1.0 - 1e-12)).exp()) < 1e-6);
    }

    #[test]
    fn apply_cutoff_examples() {
        let v = VectorField::linear("generic", matrix_2(GENERIC_2D));
        let vt = apply_cutoff(&v, 3.0).unwrap();
        let x = [0.6, 0.8];
        assert_eq!(vt.eval(&x), v.eval(&x));
        let far = 3f64.powf(E.powi(3)) + 1.0;
        assert_eq!(vt.eval(&[far, 0.0]), vec![0.0, 0.0]);
        assert!((vt.support_radius() - 3f64.powf(E.powi(3))).abs() / vt.support_radius() < 1e-12);

        let one = VectorField::constant("e1", vec![1.0, 0.0]);
        let onet = apply_cutoff(&one, 3.0).unwrap();
        let mid = 3f64.powf(E.powf(1.5));
        let got = onet.eval(&[mid, 0.0]);
        assert!((got[0] - 0.5).abs() < 1e-12 && got[1] == 0.0);
        assert!(apply_cutoff(&one, 1.0).is_err());
    }

    #[test]
    fn cutoff_agrees_inside_ball() {
        let v = find_entry("conjlog").unwrap().field;
        let vt = apply_cutoff(&v, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let r = rng.gen_range(0.0..4.0);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let x = [r * a.cos(), r * a.sin()];
            assert_eq!(vt.eval(&x), v.eval(&x));
        }
    }
}
