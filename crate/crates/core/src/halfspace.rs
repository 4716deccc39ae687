//! Poisson kernel of the upper half-space `ℝⁿ × (0, ∞)`, harmonic extension of
//! compactly supported boundary data by quadrature, and the Bloch, BMO and
//! Carleson functionals built on it.
//!
//! Extension integrals are evaluated in polar coordinates around `x` with
//! `ρ = y tan s`, which turns `P_y(z) dz` into `c_n sin^{n−1}(s) ds dω`. The
//! derivative kernels become bounded trigonometric weights times powers of
//! `1/y`, so small `y` needs no special treatment.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::linalg::norm;
use crate::quadrature::GaussRule;

/// `P(z, y) = c_n y / (|z|² + y²)^{(n+1)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonKernel {
    pub dim: usize,
    pub c_n: f64,
}

fn check_y(y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("height y must be positive, got {y}")))
    }
}

impl PoissonKernel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::UnsupportedDim(0));
        }
        let a = (n as f64 + 1.0) / 2.0;
        Ok(Self {
            dim: n,
            c_n: gamma(a) / PI.powf(a),
        })
    }

    fn check(&self, z: &[f64], y: f64) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        check_y(y)?;
        Ok(z.iter().map(|c| c * c).sum())
    }

    pub fn value(&self, z: &[f64], y: f64) -> Result<f64> {
        let r2 = self.check(z, y)?;
        Ok(self.c_n * y / (r2 + y * y).powf((self.dim as f64 + 1.0) / 2.0))
    }

    /// `∂_y P = (P/y)(|z|² − n y²)/(|z|² + y²)`
    pub fn dy(&self, z: &[f64], y: f64) -> Result<f64> {
        let r2 = self.check(z, y)?;
        let p = self.value(z, y)?;
        let n = self.dim as f64;
        Ok((p / y) * ((r2 - n * y * y) / (r2 + y * y)))
    }

    /// `D_z P = (P/y)(−(n+1) y z/(|z|² + y²))`
    pub fn dz(&self, z: &[f64], y: f64) -> Result<Vec<f64>> {
        let r2 = self.check(z, y)?;
        let p = self.value(z, y)?;
        let n = self.dim as f64;
        Ok(z.iter()
            .map(|&zi| (p / y) * (-(n + 1.0) * y * zi / (r2 + y * y)))
            .collect())
    }

    /// `∂²_yy P = (n+1) P (−3|z|² + n y²)/(|z|² + y²)²`
    pub fn dyy(&self, z: &[f64], y: f64) -> Result<f64> {
        let r2 = self.check(z, y)?;
        let p = self.value(z, y)?;
        let n = self.dim as f64;
        let s = r2 + y * y;
        Ok((n + 1.0) * p * (-3.0 * r2 + n * y * y) / (s * s))
    }
}

/// Largest ratios `|∂_yP| / (nP/y)` and `|D_zP| / (((n+1)/2) P/y)` seen at random nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBoundReport {
    pub dim: usize,
    pub nodes: usize,
    pub max_dy_ratio: f64,
    pub max_dz_ratio: f64,
    pub pass: bool,
}

/// Relative allowance for the last-bit rounding in the sampled kernel bounds;
/// the `D_zP` bound is attained at `|z| = y`.
pub const KERNEL_BOUND_ROUNDING: f64 = 1e-14;

/// Checks the derivative-kernel bounds at `nodes` random points, `y` log-uniform
/// in `[10⁻³, 10³]` and `|z|/y` log-uniform in `[10⁻³, 10³]`.
pub fn kernel_bound_check(n: usize, nodes: usize, seed: u64) -> Result<KernelBoundReport> {
    let k = PoissonKernel::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dy: f64 = 0.0;
    let mut max_dz: f64 = 0.0;
    let nf = n as f64;
    for _ in 0..nodes {
        let y = 10f64.powf(rng.gen_range(-3.0..3.0));
        let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dn = norm(&dir).max(1e-300);
        let rho = y * 10f64.powf(rng.gen_range(-3.0..3.0));
        dir.iter_mut().for_each(|c| *c *= rho / dn);
        let p = k.value(&dir, y)?;
        let dy = k.dy(&dir, y)?;
        let dz = norm(&k.dz(&dir, y)?);
        max_dy = max_dy.max(dy.abs() / (nf * (p / y)));
        max_dz = max_dz.max(dz / ((nf + 1.0) / 2.0 * (p / y)));
    }
    Ok(KernelBoundReport {
        dim: n,
        nodes,
        max_dy_ratio: max_dy,
        max_dz_ratio: max_dz,
        pass: max_dy <= 1.0 + KERNEL_BOUND_ROUNDING && max_dz <= 1.0 + KERNEL_BOUND_ROUNDING,
    })
}

/// Boundary data for a harmonic extension.
pub trait BoundaryData: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn components(&self) -> usize;
    fn support_radius(&self) -> f64;
    fn eval_into(&self, x: &[f64], out: &mut [f64]);
}

impl BoundaryData for VectorField {
    fn name(&self) -> &str {
        VectorField::name(self)
    }
    fn dim(&self) -> usize {
        VectorField::dim(self)
    }
    fn components(&self) -> usize {
        VectorField::dim(self)
    }
    fn support_radius(&self) -> f64 {
        VectorField::support_radius(self)
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        VectorField::eval_into(self, x, out)
    }
}

impl BoundaryData for ScalarField {
    fn name(&self) -> &str {
        ScalarField::name(self)
    }
    fn dim(&self) -> usize {
        ScalarField::dim(self)
    }
    fn components(&self) -> usize {
        1
    }
    fn support_radius(&self) -> f64 {
        ScalarField::support_radius(self)
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.eval(x);
    }
}

/// Quadrature for the extension integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionRule {
    /// Azimuthal nodes (trapezoid), `n ≥ 2`.
    pub azimuthal: usize,
    /// Gauss nodes in `cos θ`, `n = 3`.
    pub polar: usize,
    /// Gauss nodes per radial panel.
    pub gauss: usize,
    /// Longest radial panel; radial panels also break at `ρ = y·2^k`.
    pub max_panel: f64,
}

impl ExtensionRule {
    pub fn for_support(n: usize, support_radius: f64) -> Self {
        let (azimuthal, polar) = match n {
            1 => (1, 1),
            2 => (96, 1),
            _ => (48, 24),
        };
        Self {
            azimuthal,
            polar,
            gauss: 12,
            max_panel: support_radius / 8.0,
        }
    }

    /// Unit directions and weights on `S^{n−1}` (counting measure on `{±1}` for `n = 1`).
    pub fn sphere_nodes(&self, n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
        match n {
            1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
            2 => {
                let m = self.azimuthal.max(1);
                Ok((0..m)
                    .map(|j| {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                        (vec![phi.cos(), phi.sin()], 2.0 * PI / m as f64)
                    })
                    .collect())
            }
            3 => {
                let m = self.azimuthal.max(1);
                let g = GaussRule::new(self.polar.max(1));
                let mut out = Vec::with_capacity(m * g.len());
                for (ct, wt) in g.on(-1.0, 1.0) {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    for j in 0..m {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                        out.push((vec![st * phi.cos(), st * phi.sin(), ct], wt * 2.0 * PI / m as f64));
                    }
                }
                Ok(out)
            }
            d => Err(Error::UnsupportedDim(d)),
        }
    }
}

/// Values and derivatives of `u = P_y ∗ b` at one point `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jet {
    pub value: Vec<f64>,
    pub dy: Vec<f64>,
    pub dyy: Vec<f64>,
    /// `dx[c][i] = ∂_{x_i} u_c`
    pub dx: Vec<Vec<f64>>,
    /// `dxx[c][i*n + j]`, present when second derivatives were requested.
    pub dxx: Option<Vec<Vec<f64>>>,
    /// `dxy[c][i] = ∂_y ∂_{x_i} u_c`
    pub dxy: Option<Vec<Vec<f64>>>,
}

impl Jet {
    fn zeros(c: usize, n: usize, second: bool) -> Self {
        Self {
            value: vec![0.0; c],
            dy: vec![0.0; c],
            dyy: vec![0.0; c],
            dx: vec![vec![0.0; n]; c],
            dxx: second.then(|| vec![vec![0.0; n * n]; c]),
            dxy: second.then(|| vec![vec![0.0; n]; c]),
        }
    }

    /// `|D_x u|` (Frobenius over components) plus `|∂_y u|`.
    pub fn gradient_parts(&self) -> (f64, f64) {
        let dx = self.dx.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        (dx, norm(&self.dy))
    }

    /// Largest second partial in absolute value; needs a jet with second derivatives.
    pub fn max_second(&self) -> f64 {
        let mut m = self.dyy.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for block in self.dxx.iter().chain(&self.dxy) {
            for row in block {
                m = row.iter().fold(m, |a, v| a.max(v.abs()));
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendOrder {
    Value,
    Dy,
    Dyy,
    Dx,
}

struct Node<'a> {
    rho: f64,
    omega: &'a [f64],
    sigma: f64,
    kappa: f64,
    /// `c_n σ^{n−1} ds dω`
    weight: f64,
}

/// Visits the polar quadrature nodes of `∫ P_y(z) f(z) dz` over `{z : |x − z| ≤ radius}`
#[allow(clippy::too_many_arguments)]
/// (with `radius = ∞` treated as unsupported).
fn visit_nodes(
    n: usize,
    c_n: f64,
    x: &[f64],
    y: f64,
    radius: f64,
    rule: &ExtensionRule,
    sphere: &[(Vec<f64>, f64)],
    gauss: &GaussRule,
    mut visit: impl FnMut(&Node),
) {
    let xx: f64 = x.iter().map(|c| c * c).sum();
    let mut breaks = Vec::new();
    for (omega, w_omega) in sphere {
        // |x − ρω| ≤ R  ⇔  ρ² − 2ρ⟨x,ω⟩ + |x|² − R² ≤ 0
        let b: f64 = x.iter().zip(omega).map(|(a, o)| a * o).sum();
        let disc = b * b - xx + radius * radius;
        if disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let (lo, hi) = ((b - sq).max(0.0), b + sq);
        if hi <= lo {
            continue;
        }
        breaks.clear();
        breaks.push(lo);
        let mut k = -8i32;
        loop {
            let p = y * 2f64.powi(k);
            if p >= hi {
                break;
            }
            if p > lo {
                breaks.push(p);
            }
            k += 1;
        }
        breaks.push(hi);
        for win in breaks.windows(2) {
            let (a, b) = (win[0], win[1]);
            let pieces = if rule.max_panel > 0.0 {
                ((b - a) / rule.max_panel).ceil().max(1.0) as usize
            } else {
                1
            };
            for p in 0..pieces {
                let ra = a + (b - a) * p as f64 / pieces as f64;
                let rb = a + (b - a) * (p + 1) as f64 / pieces as f64;
                let (sa, sb) = ((ra / y).atan(), (rb / y).atan());
                for (s, ws) in gauss.on(sa, sb) {
                    let (sigma, kappa) = s.sin_cos();
                    visit(&Node {
                        rho: y * sigma / kappa,
                        omega,
                        sigma,
                        kappa,
                        weight: c_n * sigma.powi(n as i32 - 1) * ws * w_omega,
                    });
                }
            }
        }
    }
}

/// `u(x, y) = (P_y ∗ b)(x)` for compactly supported `b`.
#[derive(Clone)]
pub struct HarmonicExtension {
    boundary: Arc<dyn BoundaryData>,
    kernel: PoissonKernel,
    rule: ExtensionRule,
    sphere: Vec<(Vec<f64>, f64)>,
    gauss: GaussRule,
}

impl std::fmt::Debug for HarmonicExtension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicExtension")
            .field("boundary", &self.boundary.name())
            .field("rule", &self.rule)
            .finish()
    }
}

impl HarmonicExtension {
    pub fn new(boundary: Arc<dyn BoundaryData>) -> Result<Self> {
        let r = boundary.support_radius();
        let rule = ExtensionRule::for_support(boundary.dim(), r);
        Self::with_rule(boundary, rule)
    }

    pub fn with_rule(boundary: Arc<dyn BoundaryData>, rule: ExtensionRule) -> Result<Self> {
        let n = boundary.dim();
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDim(n));
        }
        let r = boundary.support_radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!(
                "boundary `{}` must have compact support; cut it off first",
                boundary.name()
            )));
        }
        let sphere = rule.sphere_nodes(n)?;
        let gauss = GaussRule::new(rule.gauss.max(1));
        Ok(Self {
            kernel: PoissonKernel::new(n)?,
            boundary,
            rule,
            sphere,
            gauss,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim
    }

    pub fn components(&self) -> usize {
        self.boundary.components()
    }

    pub fn rule(&self) -> &ExtensionRule {
        &self.rule
    }

    pub fn boundary_value(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.components()];
        self.boundary.eval_into(x, &mut out);
        out
    }

    /// Value, first derivatives and `∂²_yy u`; with `second`, also `D²_x u` and `∂_y D_x u`.
    pub fn jet(&self, x: &[f64], y: f64, second: bool) -> Result<Jet> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        check_y(y)?;
        let c = self.components();
        let nf = n as f64;
        let mut jet = Jet::zeros(c, n, second);
        let mut b = vec![0.0; c];
        let mut p = vec![0.0; n];
        let support = self.boundary.support_radius();
        visit_nodes(
            n,
            self.kernel.c_n,
            x,
            y,
            support,
            &self.rule,
            &self.sphere,
            &self.gauss,
            |node| {
                for i in 0..n {
                    p[i] = x[i] - node.rho * node.omega[i];
                }
                if norm(&p) > support {
                    return;
                }
                self.boundary.eval_into(&p, &mut b);
                let (s, k, w) = (node.sigma, node.kappa, node.weight);
                let (s2, k2) = (s * s, k * k);
                let w_dy = w * (s2 - nf * k2) / y;
                let w_dyy = w * (nf + 1.0) * (-3.0 * s2 + nf * k2) * k2 / (y * y);
                let w_dx = -w * (nf + 1.0) * s * k / y;
                for comp in 0..c {
                    let bc = b[comp];
                    if bc == 0.0 {
                        continue;
                    }
                    jet.value[comp] += w * bc;
                    jet.dy[comp] += w_dy * bc;
                    jet.dyy[comp] += w_dyy * bc;
                    for i in 0..n {
                        jet.dx[comp][i] += w_dx * node.omega[i] * bc;
                    }
                }
                if second {
                    let base = w * (nf + 1.0) / (y * y);
                    let dxx = jet.dxx.as_mut().unwrap();
                    let dxy = jet.dxy.as_mut().unwrap();
                    let w_dxy = base * s * k * ((nf + 2.0) * k2 - s2);
                    for comp in 0..c {
                        let bc = b[comp];
                        if bc == 0.0 {
                            continue;
                        }
                        for i in 0..n {
                            dxy[comp][i] += w_dxy * node.omega[i] * bc;
                            for j in 0..n {
                                let delta = if i == j { 1.0 } else { 0.0 };
                                dxx[comp][i * n + j] +=
                                    base * ((nf + 3.0) * s2 * k2 * node.omega[i] * node.omega[j] - k2 * delta) * bc;
                            }
                        }
                    }
                }
            },
        );
        Ok(jet)
    }

    /// One slice of the extension: `u`, `∂_y u`, `∂²_yy u` (one entry per component),
    /// or `D_x u` (row-major, component-major).
    pub fn extend(&self, x: &[f64], y: f64, order: ExtendOrder) -> Result<Vec<f64>> {
        let jet = self.jet(x, y, false)?;
        Ok(match order {
            ExtendOrder::Value => jet.value,
            ExtendOrder::Dy => jet.dy,
            ExtendOrder::Dyy => jet.dyy,
            ExtendOrder::Dx => jet.dx.into_iter().flatten().collect(),
        })
    }
}

/// Mass of `P_y` over the ball of radius `radius_factor · y` around the origin.
pub fn kernel_mass(n: usize, y: f64, radius_factor: f64, rule: &ExtensionRule) -> Result<f64> {
    check_y(y)?;
    let k = PoissonKernel::new(n)?;
    let sphere = rule.sphere_nodes(n)?;
    let gauss = GaussRule::new(rule.gauss.max(1));
    let plain = ExtensionRule {
        max_panel: 0.0,
        ..rule.clone()
    };
    let mut mass = 0.0;
    let x = vec![0.0; n];
    visit_nodes(n, k.c_n, &x, y, radius_factor * y, &plain, &sphere, &gauss, |node| {
        mass += node.weight
    });
    Ok(mass)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationRow {
    pub dim: usize,
    pub y: f64,
    pub c_n: f64,
    pub mass: f64,
    pub pass: bool,
}

/// `‖P_y‖₁` over a ball of radius `10⁶ y`, for each `n` and `y`.
pub fn normalization_table(dims: &[usize], ys: &[f64], gauss: usize) -> Result<Vec<NormalizationRow>> {
    let mut rows = Vec::new();
    for &n in dims {
        let rule = ExtensionRule {
            gauss,
            ..ExtensionRule::for_support(n, 1.0)
        };
        let c_n = PoissonKernel::new(n)?.c_n;
        for &y in ys {
            let mass = kernel_mass(n, y, 1e6, &rule)?;
            rows.push(NormalizationRow {
                dim: n,
                y,
                c_n,
                mass,
                pass: (1.0 - 1e-4..=1.0).contains(&mass),
            });
        }
    }
    Ok(rows)
}

/// All combinations of `centers` and `radii`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

impl BallFamily {
    pub fn new(centers: Vec<Vec<f64>>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || radii.is_empty() {
            return Err(Error::EmptyProbeSet("empty ball family".into()));
        }
        if radii.iter().any(|&r| !(r > 0.0)) {
            return Err(invalid("ball radii must be positive"));
        }
        Ok(Self { centers, radii })
    }

    /// Dyadic radii `r0 · 2^{−j}` around a single center.
    pub fn dyadic(center: Vec<f64>, r0: f64, levels: usize) -> Result<Self> {
        Self::new(vec![center], (0..levels).map(|j| r0 * 0.5f64.powi(j as i32)).collect())
    }

    pub fn balls(&self) -> impl Iterator<Item = (&Vec<f64>, f64)> {
        self.centers
            .iter()
            .flat_map(move |c| self.radii.iter().map(move |&r| (c, r)))
    }
}

/// Quadrature over a ball in polar coordinates with `ρ = δu²`, which is gentle
/// on integrable singularities at the center.
pub fn ball_nodes(center: &[f64], delta: f64, panels: usize, rule: &ExtensionRule) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = center.len();
    let sphere = rule.sphere_nodes(n)?;
    let g = GaussRule::new(rule.gauss.max(1));
    let mut out = Vec::new();
    for p in 0..panels.max(1) {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for (u, wu) in g.on(a, b) {
            let rho = delta * u * u;
            // ρ^{n−1} dρ = 2 δⁿ u^{2n−1} du
            let radial = 2.0 * delta.powi(n as i32) * u.powi(2 * n as i32 - 1) * wu;
            for (omega, wo) in &sphere {
                let x = center.iter().zip(omega).map(|(c, o)| c + rho * o).collect();
                out.push((x, radial * wo));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallWitness {
    pub value: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

const BALL_PANELS: usize = 8;

/// Sampled `sup_B (1/|B|) ∫_B |g − g_B|`.
pub fn bmo_norm(
    g: &dyn BoundaryData,
    component: usize,
    balls: &BallFamily,
    rule: &ExtensionRule,
) -> Result<BallWitness> {
    if component >= g.components() {
        return Err(invalid(format!("component {component} out of range")));
    }
    let results: Vec<Result<BallWitness>> = balls
        .balls()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(c, delta)| {
            if c.len() != g.dim() {
                return Err(Error::DimensionMismatch {
                    expected: g.dim(),
                    got: c.len(),
                });
            }
            let nodes = ball_nodes(c, delta, BALL_PANELS, rule)?;
            let mut buf = vec![0.0; g.components()];
            let vals: Vec<f64> = nodes
                .iter()
                .map(|(x, _)| {
                    g.eval_into(x, &mut buf);
                    buf[component]
                })
                .collect();
            let vol: f64 = nodes.iter().map(|(_, w)| w).sum();
            let mean = nodes.iter().zip(&vals).map(|((_, w), v)| w * v).sum::<f64>() / vol;
            let osc = nodes
                .iter()
                .zip(&vals)
                .map(|((_, w), v)| w * (v - mean).abs())
                .sum::<f64>()
                / vol;
            Ok(BallWitness {
                value: osc,
                center: c.clone(),
                radius: delta,
            })
        })
        .collect();
    best_ball(results)
}

fn best_ball(results: Vec<Result<BallWitness>>) -> Result<BallWitness> {
    let mut best: Option<BallWitness> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::EmptyProbeSet("empty ball family".into()))
}

/// Sampled `sup_B (1/|B|) ∫₀^δ ∫_B (|D_x u|² + |∂_y u|²) y dx dy`, with `y = δv²`.
pub fn carleson_quantity(ext: &HarmonicExtension, balls: &BallFamily, rule: &ExtensionRule) -> Result<BallWitness> {
    let height = GaussRule::new(rule.gauss.max(1));
    let list: Vec<_> = balls.balls().collect();
    let mut results = Vec::with_capacity(list.len());
    for (c, delta) in list {
        if c.len() != ext.dim() {
            return Err(Error::DimensionMismatch {
                expected: ext.dim(),
                got: c.len(),
            });
        }
        let nodes = ball_nodes(c, delta, BALL_PANELS, rule)?;
        let vol: f64 = nodes.iter().map(|(_, w)| w).sum();
        let mut ys = Vec::new();
        for p in 0..BALL_PANELS {
            let (a, b) = (p as f64 / BALL_PANELS as f64, (p + 1) as f64 / BALL_PANELS as f64);
            for (v, wv) in height.on(a, b) {
                // y dy = δv² · 2δv dv
                ys.push((delta * v * v, 2.0 * delta * delta * v.powi(3) * wv));
            }
        }
        let pairs: Vec<(usize, usize)> = (0..ys.len())
            .flat_map(|i| (0..nodes.len()).map(move |j| (i, j)))
            .collect();
        let terms: Vec<Result<f64>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let (y, wy) = ys[i];
                let (x, wx) = &nodes[j];
                let jet = ext.jet(x, y, false)?;
                let (dx, dy) = jet.gradient_parts();
                Ok(wy * wx * (dx * dx + dy * dy))
            })
            .collect();
        let mut sum = 0.0;
        for t in terms {
            sum += t?;
        }
        results.push(Ok(BallWitness {
            value: sum / vol,
            center: c.clone(),
            radius: delta,
        }));
    }
    best_ball(results)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleWitness {
    pub value: f64,
    pub x: Vec<f64>,
    pub y: f64,
}

fn sup_over_samples(
    ext: &HarmonicExtension,
    samples: &[(Vec<f64>, f64)],
    second: bool,
    f: impl Fn(&Jet, f64) -> f64 + Sync,
) -> Result<SampleWitness> {
    if samples.is_empty() {
        return Err(Error::EmptyProbeSet("no sample points".into()));
    }
    let vals: Vec<Result<f64>> = samples
        .par_iter()
        .map(|(x, y)| Ok(f(&ext.jet(x, *y, second)?, *y)))
        .collect();
    let mut best = SampleWitness {
        value: f64::NEG_INFINITY,
        x: vec![],
        y: 0.0,
    };
    for (v, (x, y)) in vals.into_iter().zip(samples) {
        let v = v?;
        if v > best.value {
            best = SampleWitness {
                value: v,
                x: x.clone(),
                y: *y,
            };
        }
    }
    Ok(best)
}

/// Sampled `sup y (|D_x u| + |∂_y u|)`.
pub fn bloch_norm(ext: &HarmonicExtension, samples: &[(Vec<f64>, f64)]) -> Result<SampleWitness> {
    sup_over_samples(ext, samples, false, |jet, y| {
        let (dx, dy) = jet.gradient_parts();
        y * (dx + dy)
    })
}

/// `max y^k |k-th derivatives of u|`; `k = 1` is the Bloch quantity.
pub fn higher_order_blowup_probe(
    ext: &HarmonicExtension,
    k: usize,
    samples: &[(Vec<f64>, f64)],
) -> Result<SampleWitness> {
    match k {
        1 => bloch_norm(ext, samples),
        2 => sup_over_samples(ext, samples, true, |jet, y| y * y * jet.max_second()),
        _ => Err(invalid(format!("blow-up probe supports k ∈ {{1, 2}}, got {k}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub x: Vec<f64>,
    pub y_top: f64,
    pub level: usize,
    /// `∫₀^y t ∂²_yy u dt − y ∂_y u + u`
    pub rhs: Vec<f64>,
    pub boundary: Vec<f64>,
    pub residual: f64,
    pub relative_residual: f64,
}

/// Evaluates `∫₀^y t ∂²_yy u(x,t) dt − y ∂_y u(x,y) + u(x,y)` with the composite
/// midpoint rule on `level` cells and compares it with `b(x)`.
pub fn reconstruct_boundary(ext: &HarmonicExtension, x: &[f64], y_top: f64, level: usize) -> Result<Reconstruction> {
    check_y(y_top)?;
    if level == 0 {
        return Err(invalid("quadrature level must be positive"));
    }
    let dt = y_top / level as f64;
    let slices: Vec<Result<Vec<f64>>> = (0..level)
        .into_par_iter()
        .map(|m| {
            let t = (m as f64 + 0.5) * dt;
            Ok(ext.jet(x, t, false)?.dyy.iter().map(|w| t * w * dt).collect())
        })
        .collect();
    let c = ext.components();
    let mut rhs = vec![0.0; c];
    for s in slices {
        for (r, v) in rhs.iter_mut().zip(s?) {
            *r += v;
        }
    }
    let top = ext.jet(x, y_top, false)?;
    for i in 0..c {
        rhs[i] += top.value[i] - y_top * top.dy[i];
    }
    let boundary = ext.boundary_value(x);
    let diff: Vec<f64> = rhs.iter().zip(&boundary).map(|(a, b)| a - b).collect();
    let residual = norm(&diff);
    let scale = norm(&boundary);
    Ok(Reconstruction {
        x: x.to_vec(),
        y_top,
        level,
        rhs,
        boundary,
        residual,
        relative_residual: if scale > 0.0 { residual / scale } else { residual },
    })
}
