//! Pointwise derivatives (Jacobian, div, curl, ∂, ∂̄, S, A), multiscale recovery
//! of `|∂v|` and `|Dv − Dᵗv|` from difference quotients, and the rotation
//! generators `𝒥_n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::VectorField;
use crate::linalg::Matrix;
use crate::seminorms::{point_scale_profile, SeminormKind};

/// Central-difference Jacobian, `(i, j)` entry `∂_j v_i`. With `step = 0` the
/// closed-form Jacobian is used when the field has one.
pub fn jacobian_fd(v: &VectorField, x: &[f64], step: f64) -> Result<Matrix> {
    let n = v.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if !(step >= 0.0) {
        return Err(invalid(format!("step must be nonnegative, got {step}")));
    }
    if step == 0.0 {
        return v.jacobian(x).ok_or_else(|| {
            invalid(format!(
                "field `{}` has no closed-form Jacobian; pass step > 0",
                v.name()
            ))
        });
    }
    let mut m = Matrix::zeros(n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        v.eval_into(&xp, &mut fp);
        v.eval_into(&xm, &mut fm);
        for i in 0..n {
            m[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    Ok(m)
}

/// Every derived quantity of one Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBundle {
    pub jacobian: Matrix,
    pub div: f64,
    /// `Dv − Dᵗv`
    pub curl_matrix: Matrix,
    /// `∂₁v² − ∂₂v¹` (planar only)
    pub curl_scalar: Option<f64>,
    /// `∂v = (div + i curl)/2` (planar only)
    pub d_complex: Option<Complex64>,
    /// `∂̄v` (planar only)
    pub dbar_complex: Option<Complex64>,
    /// `(Dv + Dᵗv)/2 − (div/n) Id`
    pub s: Matrix,
    /// `(Dv − Dᵗv)/2 + (div/n) Id`
    pub a: Matrix,
}

impl DerivativeBundle {
    pub fn from_jacobian(jacobian: Matrix) -> Self {
        let n = jacobian.dim();
        let t = jacobian.transpose();
        let div = jacobian.trace();
        let curl_matrix = &jacobian - &t;
        let mut s = (&jacobian + &t).scale(0.5);
        let mut a = curl_matrix.scale(0.5);
        for i in 0..n {
            s[(i, i)] -= div / n as f64;
            a[(i, i)] += div / n as f64;
        }
        let (curl_scalar, d_complex, dbar_complex) = if n == 2 {
            let (a11, a12, a21, a22) = (jacobian[(0, 0)], jacobian[(0, 1)], jacobian[(1, 0)], jacobian[(1, 1)]);
            // ∂ = (∂₁ − i∂₂)/2 and ∂̄ = (∂₁ + i∂₂)/2 applied to v¹ + iv²
            let d = Complex64::new(a11 + a22, a21 - a12) * 0.5;
            let dbar = Complex64::new(a11 - a22, a21 + a12) * 0.5;
            (Some(a21 - a12), Some(d), Some(dbar))
        } else {
            (None, None, None)
        };
        Self {
            jacobian,
            div,
            curl_matrix,
            curl_scalar,
            d_complex,
            dbar_complex,
            s,
            a,
        }
    }
}

pub fn derivative_bundle(v: &VectorField, x: &[f64], step: f64) -> Result<DerivativeBundle> {
    Ok(DerivativeBundle::from_jacobian(jacobian_fd(v, x, step)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryKind {
    /// Q̄ quotients, limit `2|∂v(x)|`.
    QbarRecovery,
    /// R quotients, limit `2|∂v(x)|`.
    RRecovery,
    /// R₀ quotients, limit `‖Dv(x) − Dᵗv(x)‖_op`.
    R0Recovery,
}

impl RecoveryKind {
    fn seminorm(self) -> SeminormKind {
        match self {
            RecoveryKind::QbarRecovery => SeminormKind::Qbar,
            RecoveryKind::RRecovery => SeminormKind::R,
            RecoveryKind::R0Recovery => SeminormKind::R0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub kind: RecoveryKind,
    pub scales: Vec<f64>,
    /// Max quotient over direction pairs at each scale.
    pub values: Vec<f64>,
    /// Value at the finest scale.
    pub value: f64,
}

/// Quotients at `x` over a decreasing ladder of scales. The finest value is
/// reported as is, without extrapolation.
pub fn pointwise_limit_estimate(
    v: &VectorField,
    x: &[f64],
    kind: RecoveryKind,
    scales: &[f64],
    directions: usize,
) -> Result<LimitEstimate> {
    if scales.is_empty() {
        return Err(Error::EmptyProbeSet("empty scale ladder".into()));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) || scales.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Config("scales must be positive and strictly decreasing".into()));
    }
    let values = point_scale_profile(v, kind.seminorm(), x, scales, directions)?;
    Ok(LimitEstimate {
        kind,
        scales: scales.to_vec(),
        value: *values.last().unwrap(),
        values,
    })
}

/// The set `𝒥_n = {J_{i,j} : i < j}`: `J e_i = −e_j`, `J e_j = e_i`, identity elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationGenerators {
    pub dim: usize,
    pub matrices: Vec<Matrix>,
}

pub fn rotation_generators(n: usize) -> Result<RotationGenerators> {
    if n < 2 {
        return Err(Error::UnsupportedDim(n));
    }
    let mut matrices = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = Matrix::identity(n);
            m[(i, i)] = 0.0;
            m[(j, j)] = 0.0;
            m[(j, i)] = -1.0;
            m[(i, j)] = 1.0;
            matrices.push(m);
        }
    }
    Ok(RotationGenerators { dim: n, matrices })
}

/// `sup over J ∈ 𝒥_n ∪ {Id}` of `‖MᵗJ − JᵗM‖_op`, the value of the rotated
/// difference quotient on the linear field `x ↦ Mx`.
pub fn rn_attempt_sup(m: &Matrix, gens: &RotationGenerators) -> Result<f64> {
    if m.dim() != gens.dim {
        return Err(Error::DimensionMismatch {
            expected: gens.dim,
            got: m.dim(),
        });
    }
    let mt = m.transpose();
    let id = Matrix::identity(gens.dim);
    Ok(std::iter::once(&id)
        .chain(&gens.matrices)
        .map(|j| (&(&mt * j) - &(&j.transpose() * m)).op_norm())
        .fold(0.0, f64::max))
}
