//! Report suites over the field zoo and their JSON / CSV / SVG output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffops::{jacobian_fd, DerivativeBundle};
use crate::error::{Error, Result};
use crate::fields::{apply_cutoff, cutoff_log_support, make_zoo, VectorField, ZooEntry};
use crate::halfspace::kernel_bound_check;
use crate::linalg::norm;
use crate::seminorms::{estimate_seminorm, point_scale_profile, ProbeConfig, SeminormEstimate, SeminormKind, Witness};

fn default_seed() -> u64 {
    7
}
fn default_points() -> usize {
    24
}
fn default_half_width() -> f64 {
    1.5
}
fn default_directions_2d() -> usize {
    64
}
fn default_directions_3d() -> usize {
    48
}
fn default_r0() -> f64 {
    0.5
}
fn default_levels() -> usize {
    8
}
fn default_theta() -> usize {
    64
}
fn default_slack() -> f64 {
    0.05
}
fn default_abs_tol() -> f64 {
    1e-9
}
fn default_fd_step() -> f64 {
    1e-6
}
fn default_t_ladder() -> Vec<f64> {
    vec![8.0, 16.0, 32.0]
}
fn default_cutoff_fields() -> Vec<String> {
    vec!["conj".into(), "generic".into()]
}
fn default_cutoff_points() -> usize {
    16
}
fn default_cutoff_slope() -> f64 {
    -0.8
}
fn default_kernel_nodes() -> usize {
    100_000
}

/// Everything a report run depends on. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Base points per field, uniform in `[−half_width, half_width]^dim`.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_directions_2d")]
    pub directions_2d: usize,
    #[serde(default = "default_directions_3d")]
    pub directions_3d: usize,
    /// Coarsest offset length; scales are `r0 · 2^{−j}`, `j < levels`.
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_theta")]
    pub theta_samples: usize,
    /// Zoo fields to run; `None` runs every field of both zoos.
    #[serde(default)]
    pub fields: Option<Vec<String>>,
    /// Relative slack on inequalities between sampled suprema.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Absolute allowance for rounding when both sides vanish.
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    /// Finite-difference step for fields without a closed-form Jacobian.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Optional `[low, high]` bounds for named ratios of the equivalence report.
    #[serde(default)]
    pub envelopes: BTreeMap<String, [f64; 2]>,
    #[serde(default = "default_t_ladder")]
    pub t_ladder: Vec<f64>,
    /// Fields for the cutoff suite, further restricted by `fields` when that is set.
    #[serde(default = "default_cutoff_fields")]
    pub cutoff_fields: Vec<String>,
    #[serde(default = "default_cutoff_points")]
    pub cutoff_points: usize,
    /// Largest acceptable log–log slope of the cutoff excess against `t`.
    #[serde(default = "default_cutoff_slope")]
    pub cutoff_max_slope: f64,
    #[serde(default = "default_kernel_nodes")]
    pub kernel_nodes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || self.levels == 0 {
            return Err(Error::Config("points and levels must be positive".into()));
        }
        if !(self.r0 > 0.0 && self.half_width > 0.0 && self.fd_step > 0.0) {
            return Err(Error::Config("r0, half_width and fd_step must be positive".into()));
        }
        if !(self.slack >= 0.0 && self.abs_tol >= 0.0) {
            return Err(Error::Config("slack and abs_tol must be nonnegative".into()));
        }
        if let Some(t) = self.t_ladder.iter().find(|&&t| !(t > std::f64::consts::E)) {
            return Err(Error::Config(format!("cutoff parameter t must exceed e, got {t}")));
        }
        self.selected_fields()?;
        for name in &self.cutoff_fields {
            crate::fields::find_entry(name)?;
        }
        Ok(())
    }

    /// Probe set shared by every estimate on `v`: base points in the cube of
    /// half-width `half_width`, shrunk to the support radius for compactly supported fields.
    pub fn probes(&self, v: &VectorField) -> ProbeConfig {
        let dim = v.dim();
        let dirs = if dim == 3 {
            self.directions_3d
        } else {
            self.directions_2d
        };
        let hw = self.half_width.min(v.support_radius());
        ProbeConfig::random(dim, self.points, hw, self.seed.wrapping_add(dim as u64))
            .with_directions(dirs)
            .with_dyadic_scales(self.r0, self.levels)
            .with_theta(self.theta_samples)
    }

    /// Same base points with twice the directions and one more dyadic level.
    pub fn refined_probes(&self, v: &VectorField) -> ProbeConfig {
        let p = self.probes(v);
        let dirs = p.directions * 2;
        p.with_directions(dirs).with_dyadic_scales(self.r0, self.levels + 1)
    }

    /// Selected zoo entries, sorted by name.
    pub fn selected_fields(&self) -> Result<Vec<ZooEntry>> {
        let mut all = make_zoo(2)?;
        all.extend(make_zoo(3)?);
        let mut out = match &self.fields {
            None => all,
            Some(names) => {
                let mut picked = Vec::with_capacity(names.len());
                for n in names {
                    let e = all
                        .iter()
                        .find(|e| e.name() == n)
                        .ok_or_else(|| Error::UnknownField(n.clone()))?;
                    picked.push(e.clone());
                }
                picked
            }
        };
        out.sort_by(|a, b| a.name().cmp(b.name()));
        out.dedup_by(|a, b| a.name() == b.name());
        Ok(out)
    }
}

/// Suprema of derivative quantities over a probe set's base points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSups {
    /// `sup |∂v|` (planar only)
    pub abs_d: Option<f64>,
    pub a_op: f64,
    pub curl_op: f64,
    pub div: f64,
    pub at_abs_d: Option<Vec<f64>>,
}

pub fn derivative_sups(v: &VectorField, probes: &ProbeConfig, fd_step: f64) -> Result<DerivativeSups> {
    let step = if v.has_jacobian() { 0.0 } else { fd_step };
    let bundles: Vec<Result<DerivativeBundle>> = probes
        .base_points
        .par_iter()
        .map(|x| Ok(DerivativeBundle::from_jacobian(jacobian_fd(v, x, step)?)))
        .collect();
    let mut out = DerivativeSups {
        abs_d: None,
        a_op: 0.0,
        curl_op: 0.0,
        div: 0.0,
        at_abs_d: None,
    };
    for (b, x) in bundles.into_iter().zip(&probes.base_points) {
        let b = b?;
        if let Some(d) = b.d_complex {
            let d = d.norm();
            if out.abs_d.is_none_or(|m| d > m) {
                out.abs_d = Some(d);
                out.at_abs_d = Some(x.clone());
            }
        }
        out.a_op = out.a_op.max(b.a.op_norm());
        out.curl_op = out.curl_op.max(b.curl_matrix.op_norm());
        out.div = out.div.max(b.div.abs());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub field: String,
    pub dim: usize,
    pub probe_hash: String,
    pub qbar: Option<f64>,
    pub r: Option<f64>,
    pub r0: f64,
    pub zygmund: f64,
    pub lipschitz: f64,
    /// The field is not Lipschitz, so `lipschitz` only reflects the finest probed scale.
    pub lipschitz_capped: bool,
    pub growth: f64,
    pub derivatives: DerivativeSups,
    pub ratios: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub ratio: String,
    pub default_probes: f64,
    pub refined_probes: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeViolation {
    pub field: String,
    pub ratio: String,
    pub value: f64,
    pub envelope: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    /// Largest value of each ratio across the zoo (the empirical constant).
    pub max_ratios: BTreeMap<String, f64>,
    pub refinement: Vec<RefinementCheck>,
    pub envelope_violations: Vec<EnvelopeViolation>,
    pub pass: bool,
}

/// Denominators at or below this are treated as zero and the ratio is omitted.
pub const RATIO_FLOOR: f64 = 1e-9;

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d > RATIO_FLOOR => Some(n / d),
        _ => None,
    }
}

fn estimate(v: &VectorField, kind: SeminormKind, probes: &ProbeConfig) -> Result<Option<SeminormEstimate>> {
    if !kind.supports_dim(v.dim()) {
        return Ok(None);
    }
    estimate_seminorm(v, kind, probes).map(Some)
}

fn equivalence_row(entry: &ZooEntry, probes: &ProbeConfig, fd_step: f64) -> Result<EquivalenceRow> {
    let v = &entry.field;
    let get = |k| -> Result<Option<f64>> { Ok(estimate(v, k, probes)?.map(|e| e.value)) };
    let qbar = get(SeminormKind::Qbar)?;
    let r = get(SeminormKind::R)?;
    let r0 = get(SeminormKind::R0)?.unwrap_or(0.0);
    let zygmund = get(SeminormKind::Zygmund)?.unwrap_or(0.0);
    let lipschitz = get(SeminormKind::Lipschitz)?.unwrap_or(0.0);
    let growth = get(SeminormKind::Growth)?.unwrap_or(0.0);
    let d = derivative_sups(v, probes, fd_step)?;
    let mut ratios = BTreeMap::new();
    ratios.insert("qbar/abs_d".into(), ratio(qbar, d.abs_d));
    ratios.insert("r/abs_d".into(), ratio(r, d.abs_d));
    ratios.insert("r0/a_op".into(), ratio(Some(r0), Some(d.a_op)));
    ratios.insert("a_op/(div+r0)".into(), ratio(Some(d.a_op), Some(d.div + r0)));
    ratios.insert("curl_op/r0".into(), ratio(Some(d.curl_op), Some(r0)));
    ratios.insert("zygmund/r0".into(), ratio(Some(zygmund), Some(r0)));
    Ok(EquivalenceRow {
        field: v.name().to_string(),
        dim: v.dim(),
        probe_hash: probes.hash(),
        qbar,
        r,
        r0,
        zygmund,
        lipschitz,
        lipschitz_capped: !entry.lipschitz,
        growth,
        derivatives: d,
        ratios,
    })
}

fn equivalence_rows(cfg: &RunConfig, refined: bool) -> Result<Vec<EquivalenceRow>> {
    let fields = cfg.selected_fields()?;
    let rows: Vec<Result<EquivalenceRow>> = fields
        .par_iter()
        .map(|e| {
            let p = if refined {
                cfg.refined_probes(&e.field)
            } else {
                cfg.probes(&e.field)
            };
            equivalence_row(e, &p, cfg.fd_step)
        })
        .collect();
    rows.into_iter().collect()
}

fn max_ratios(rows: &[EquivalenceRow]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for row in rows {
        for (k, v) in &row.ratios {
            if let Some(v) = v {
                let e = out.entry(k.clone()).or_insert(f64::NEG_INFINITY);
                *e = e.max(*v);
            }
        }
    }
    out
}

/// All seminorm estimates and derivative sups per field on matched probes,
/// with pairwise ratios, their zoo-wide maxima, and a guard that the maxima do
/// not grow by more than `slack` under probe refinement.
pub fn run_equivalence_suite(cfg: &RunConfig) -> Result<EquivalenceReport> {
    cfg.validate()?;
    let rows = equivalence_rows(cfg, false)?;
    let refined = equivalence_rows(cfg, true)?;
    let max = max_ratios(&rows);
    let max_refined = max_ratios(&refined);
    let refinement: Vec<RefinementCheck> = max
        .iter()
        .map(|(k, &a)| {
            let b = max_refined.get(k).copied().unwrap_or(a);
            RefinementCheck {
                ratio: k.clone(),
                default_probes: a,
                refined_probes: b,
                pass: b <= a * (1.0 + cfg.slack) + cfg.abs_tol,
            }
        })
        .collect();
    let mut envelope_violations = Vec::new();
    for row in &rows {
        for (name, env) in &cfg.envelopes {
            if let Some(Some(v)) = row.ratios.get(name) {
                if *v < env[0] || *v > env[1] {
                    envelope_violations.push(EnvelopeViolation {
                        field: row.field.clone(),
                        ratio: name.clone(),
                        value: *v,
                        envelope: *env,
                    });
                }
            }
        }
    }
    let pass = refinement.iter().all(|r| r.pass) && envelope_violations.is_empty();
    Ok(EquivalenceReport {
        rows,
        max_ratios: max,
        refinement,
        envelope_violations,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub field: String,
    /// `lhs ≤ constant · rhs`
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub slack: f64,
    pub lhs_probe_hash: String,
    pub rhs_probe_hash: String,
    pub pass: bool,
    pub lhs_witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub rows: Vec<InequalityRow>,
    pub pass: bool,
}

impl InequalityReport {
    pub fn first_failure(&self) -> Option<&InequalityRow> {
        self.rows.iter().find(|r| !r.pass)
    }
}

fn inequality_rows(entry: &ZooEntry, cfg: &RunConfig) -> Result<Vec<InequalityRow>> {
    let v = &entry.field;
    let probes = cfg.probes(v);
    let hash = probes.hash();
    let check = |lhs: f64, rhs: f64, c: f64| lhs <= c * rhs * (1.0 + cfg.slack) + cfg.abs_tol;
    let mut rows = Vec::new();

    let z = estimate_seminorm(v, SeminormKind::Zygmund, &probes)?;
    let r0 = estimate_seminorm(v, SeminormKind::R0, &probes)?;
    rows.push(InequalityRow {
        field: v.name().into(),
        inequality: "zygmund <= 4 r0".into(),
        lhs: z.value,
        rhs: r0.value,
        constant: 4.0,
        slack: cfg.slack,
        lhs_probe_hash: z.probe_hash.clone(),
        rhs_probe_hash: r0.probe_hash.clone(),
        pass: check(z.value, r0.value, 4.0),
        lhs_witness: z.witness.clone(),
    });

    if v.dim() == 2 && entry.smooth {
        let d = derivative_sups(v, &probes, cfg.fd_step)?;
        let abs_d = d.abs_d.unwrap_or(0.0);
        let witness = d.at_abs_d.map(|x| Witness {
            x,
            h: None,
            k: None,
            theta: None,
        });
        for kind in [SeminormKind::Qbar, SeminormKind::R] {
            let e = estimate_seminorm(v, kind, &probes)?;
            rows.push(InequalityRow {
                field: v.name().into(),
                inequality: format!("sup|d v| <= 1/2 {kind}"),
                lhs: abs_d,
                rhs: e.value,
                constant: 0.5,
                slack: cfg.slack,
                lhs_probe_hash: hash.clone(),
                rhs_probe_hash: e.probe_hash,
                pass: check(abs_d, e.value, 0.5),
                lhs_witness: witness.clone(),
            });
        }
    }
    for r in &rows {
        // both sides must come from the same probe set
        assert_eq!(
            r.lhs_probe_hash, r.rhs_probe_hash,
            "unmatched probes in {}",
            r.inequality
        );
    }
    Ok(rows)
}

/// Inequalities with explicit constants: `‖·‖_Z ≤ 4‖·‖_{R₀}` on every field,
/// `sup|∂v| ≤ ½‖v‖_Q̄` and `≤ ½‖v‖_R` on smooth planar fields, and the
/// Poisson derivative-kernel bounds in dimensions 1 to 3.
pub fn run_inequality_suite(cfg: &RunConfig) -> Result<InequalityReport> {
    cfg.validate()?;
    let fields = cfg.selected_fields()?;
    let per_field: Vec<Result<Vec<InequalityRow>>> = fields.par_iter().map(|e| inequality_rows(e, cfg)).collect();
    let mut rows = Vec::new();
    for r in per_field {
        rows.extend(r?);
    }
    // kernel rows ride along with any non-empty field selection
    let kernel_dims: &[usize] = if fields.is_empty() { &[] } else { &[1, 2, 3] };
    for &n in kernel_dims {
        let k = kernel_bound_check(n, cfg.kernel_nodes, cfg.seed)?;
        let hash = format!("kernel-n{n}-{}-{}", cfg.kernel_nodes, cfg.seed);
        for (name, c, ratio) in [
            ("|dy P| <= n P/y", n as f64, k.max_dy_ratio),
            ("|dz P| <= (n+1)/2 P/y", (n as f64 + 1.0) / 2.0, k.max_dz_ratio),
        ] {
            rows.push(InequalityRow {
                field: format!("poisson_n{n}"),
                inequality: name.into(),
                lhs: ratio * c,
                rhs: 1.0,
                constant: c,
                slack: crate::halfspace::KERNEL_BOUND_ROUNDING,
                lhs_probe_hash: hash.clone(),
                rhs_probe_hash: hash.clone(),
                pass: k.pass,
                lhs_witness: None,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(InequalityReport { rows, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub field: String,
    pub kind: SeminormKind,
    pub t: f64,
    pub with_cutoff: f64,
    pub without_cutoff: f64,
    pub excess: f64,
    pub probe_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFit {
    pub field: String,
    pub kind: SeminormKind,
    /// Least-squares slope of `log excess` against `log t` over the `t` with positive excess
    /// (needs two of them).
    pub slope: Option<f64>,
    /// Smallest `C` with `excess(t) ≤ C/t` on the ladder.
    pub c: f64,
    /// Excess vanished (to `abs_tol`) for every `t`.
    pub vanishing: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub rows: Vec<CutoffRow>,
    pub fits: Vec<CutoffFit>,
    pub pass: bool,
}

/// Probes straddling the cutoff sphere `|x| = t`: base points with
/// `|x| ∈ [t/2, 4t]` and offsets `t/4 · 2^{−j}`.
pub fn cutoff_probes(cfg: &RunConfig, dim: usize, t: f64) -> ProbeConfig {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ t.to_bits());
    let dirs = crate::seminorms::direction_set(dim, 4 * cfg.cutoff_points).expect("dimension checked");
    let points = (0..cfg.cutoff_points)
        .map(|i| {
            let radius = t * 0.5 * 8f64.powf(rng.gen_range(0.0..1.0));
            dirs[i % dirs.len()].iter().map(|c| c * radius).collect()
        })
        .collect();
    let base = if dim == 3 { cfg.directions_3d } else { cfg.directions_2d };
    ProbeConfig::at_points(dim, points)
        .with_directions(base)
        .with_dyadic_scales(t / 4.0, cfg.levels.min(4))
        .with_theta(cfg.theta_samples)
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Excess of the Q̄ (planar) and R₀ estimates of `g_t·v` over those of `v` for each `t`
/// of the ladder. A run passes when the excess does not grow with `t` and, where it
/// stays positive, decays at least like `t^{cutoff_max_slope}`.
pub fn run_cutoff_stability(cfg: &RunConfig) -> Result<CutoffReport> {
    cfg.validate()?;
    let mut names = cfg.cutoff_fields.clone();
    if let Some(sel) = &cfg.fields {
        names.retain(|n| sel.contains(n));
    }
    names.sort();
    names.dedup();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for name in &names {
        let entry = crate::fields::find_entry(name)?;
        let v = &entry.field;
        let kinds: Vec<SeminormKind> = [SeminormKind::Qbar, SeminormKind::R0]
            .into_iter()
            .filter(|k| k.supports_dim(v.dim()))
            .collect();
        for kind in kinds {
            let mut group = Vec::new();
            for &t in &cfg.t_ladder {
                let probes = cutoff_probes(cfg, v.dim(), t);
                let reach = probes.base_points.iter().map(|p| norm(p)).fold(0.0, f64::max) + probes.scales[0];
                if reach.ln() >= cutoff_log_support(t) {
                    return Err(Error::Config(format!(
                        "cutoff probes reach beyond the support of g_{t}"
                    )));
                }
                let cut = apply_cutoff(v, t)?;
                let a = estimate_seminorm(&cut, kind, &probes)?;
                let b = estimate_seminorm(v, kind, &probes)?;
                group.push(CutoffRow {
                    field: name.clone(),
                    kind,
                    t,
                    with_cutoff: a.value,
                    without_cutoff: b.value,
                    excess: a.value - b.value,
                    probe_hash: a.probe_hash,
                });
            }
            let vanishing = group.iter().all(|r| r.excess.abs() <= cfg.abs_tol);
            let positive: Vec<&CutoffRow> = group.iter().filter(|r| r.excess > cfg.abs_tol).collect();
            let fit = if positive.len() >= 2 {
                let lx: Vec<f64> = positive.iter().map(|r| r.t.ln()).collect();
                let ly: Vec<f64> = positive.iter().map(|r| r.excess.ln()).collect();
                fit_line(&lx, &ly)
            } else {
                None
            };
            let mut ladder: Vec<&CutoffRow> = group.iter().collect();
            ladder.sort_by(|a, b| a.t.total_cmp(&b.t));
            let nonincreasing = ladder
                .windows(2)
                .all(|w| w[1].excess <= w[0].excess.max(0.0) + cfg.abs_tol);
            let c = group.iter().map(|r| r.t * r.excess.max(0.0)).fold(0.0, f64::max);
            let pass = nonincreasing && fit.is_none_or(|(s, _)| s <= cfg.cutoff_max_slope);
            fits.push(CutoffFit {
                field: name.clone(),
                kind,
                slope: fit.map(|f| f.0),
                c,
                vanishing,
                pass,
            });
            rows.extend(group);
        }
    }
    let pass = fits.iter().all(|f| f.pass);
    Ok(CutoffReport { rows, fits, pass })
}

/// A scale scan: quotient values against `log(1/r)` with a fitted line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

/// Lipschitz quotients of `v` at `x` over `scales`, plotted against `log(1/r)`.
pub fn lipschitz_scan(v: &VectorField, x: &[f64], scales: &[f64], directions: usize) -> Result<Series> {
    let y = point_scale_profile(v, SeminormKind::Lipschitz, x, scales, directions)?;
    let lx: Vec<f64> = scales.iter().map(|r| (1.0 / r).ln()).collect();
    let fit = fit_line(&lx, &y);
    Ok(Series {
        label: format!("{} lipschitz quotient at {:?}", v.name(), x),
        x_label: "log(1/r)".into(),
        y_label: "sup |v(x+h) - v(x)| / |h|".into(),
        x: lx,
        y,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
    })
}

/// `(field, metric, value, probe_hash)` rows for CSV output.
pub trait CsvRows {
    fn csv_rows(&self) -> Vec<(String, String, f64, String)>;
}

impl CsvRows for EquivalenceReport {
    fn csv_rows(&self) -> Vec<(String, String, f64, String)> {
        let mut out = Vec::new();
        for r in &self.rows {
            let mut push = |m: &str, v: Option<f64>| {
                if let Some(v) = v {
                    out.push((r.field.clone(), m.to_string(), v, r.probe_hash.clone()));
                }
            };
            push("qbar", r.qbar);
            push("r", r.r);
            push("r0", Some(r.r0));
            push("zygmund", Some(r.zygmund));
            push("lipschitz", Some(r.lipschitz));
            push("growth", Some(r.growth));
            push("sup_abs_d", r.derivatives.abs_d);
            push("sup_a_op", Some(r.derivatives.a_op));
            push("sup_curl_op", Some(r.derivatives.curl_op));
            push("sup_div", Some(r.derivatives.div));
            for (k, v) in &r.ratios {
                push(&format!("ratio:{k}"), *v);
            }
        }
        out
    }
}

impl CsvRows for InequalityReport {
    fn csv_rows(&self) -> Vec<(String, String, f64, String)> {
        let mut out = Vec::new();
        for r in &self.rows {
            out.push((
                r.field.clone(),
                format!("{}:lhs", r.inequality),
                r.lhs,
                r.lhs_probe_hash.clone(),
            ));
            out.push((
                r.field.clone(),
                format!("{}:rhs", r.inequality),
                r.rhs,
                r.rhs_probe_hash.clone(),
            ));
        }
        out
    }
}

impl CsvRows for CutoffReport {
    fn csv_rows(&self) -> Vec<(String, String, f64, String)> {
        self.rows
            .iter()
            .map(|r| {
                (
                    r.field.clone(),
                    format!("{}_excess_t{}", r.kind, r.t),
                    r.excess,
                    r.probe_hash.clone(),
                )
            })
            .collect()
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(report: &dyn CsvRows) -> String {
    let mut s = String::from("field,metric,value,probe_hash\n");
    for (f, m, v, h) in report.csv_rows() {
        let _ = writeln!(s, "{},{},{:e},{}", csv_escape(&f), csv_escape(&m), v, csv_escape(&h));
    }
    s
}

pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of one or more series with their fitted slopes in the legend.
pub fn series_svg(title: &str, series: &[Series]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 56.0;
    let pts = series.iter().flat_map(|s| s.x.iter().zip(&s.y));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (&x, &y) in pts {
        if x.is_finite() && y.is_finite() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape_xml(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{M} {} L{M} {} L{} {}" stroke="black" fill="none"/>"#,
        M,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(s, r#"<text x="{M}" y="{}" font-size="11">{x0:.3}</text>"#, H - M + 16.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{x1:.3}</text>"#,
        W - M,
        H - M + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{y0:.3}</text>"#,
        M - 4.0,
        H - M
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{y1:.3}</text>"#,
        M - 4.0,
        M + 4.0
    );
    if let Some(first) = series.first() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 12.0,
            escape_xml(&first.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape_xml(&first.y_label)
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let c = colors[i % colors.len()];
        let points: Vec<String> = ser
            .x
            .iter()
            .zip(&ser.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{c}" stroke-width="2" fill="none"/>"#,
            points.join(" ")
        );
        for p in &points {
            let (a, b) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{a}" cy="{b}" r="3" fill="{c}"/>"#);
        }
        let slope = ser.slope.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{c}">{} (slope {slope})</text>"#,
            M + 8.0,
            M + 16.0 * (i as f64 + 1.0),
            escape_xml(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Default-versus-refined maxima of each equivalence ratio as a chart.
pub fn refinement_svg(report: &EquivalenceReport) -> String {
    let series: Vec<Series> = report
        .refinement
        .iter()
        .map(|r| Series {
            label: r.ratio.clone(),
            x_label: "probe level (0 = default, 1 = refined)".into(),
            y_label: "max ratio over fields".into(),
            x: vec![0.0, 1.0],
            y: vec![r.default_probes, r.refined_probes],
            slope: Some(r.refined_probes - r.default_probes),
            intercept: Some(r.default_probes),
        })
        .collect();
    series_svg("equivalence ratios under probe refinement", &series)
}

/// Writes `name.json`, `name.csv` and any extra SVG files into `dir`.
pub fn emit<T: Serialize + CsvRows>(report: &T, dir: &Path, name: &str, svgs: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{name}.json")), to_json(report)?)?;
    std::fs::write(dir.join(format!("{name}.csv")), to_csv(report))?;
    for (file, body) in svgs {
        std::fs::write(dir.join(file), body)?;
    }
    Ok(())
}
