//! Difference quotients for the Q̄, R, R₀, Zygmund, Lipschitz and growth
//! functionals, and sampled suprema over a probe configuration.
//!
//! Planar points are identified with complex numbers, `⟨z, w⟩ = Re(z w̄)`.

use std::f64::consts::{E, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::fields::VectorField;
use crate::linalg::{dot, norm};

const EQUAL_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormKind {
    Qbar,
    R,
    R0,
    Zygmund,
    Lipschitz,
    Growth,
}

impl SeminormKind {
    pub const ALL: [SeminormKind; 6] = [
        SeminormKind::Qbar,
        SeminormKind::R,
        SeminormKind::R0,
        SeminormKind::Zygmund,
        SeminormKind::Lipschitz,
        SeminormKind::Growth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeminormKind::Qbar => "qbar",
            SeminormKind::R => "r",
            SeminormKind::R0 => "r0",
            SeminormKind::Zygmund => "zygmund",
            SeminormKind::Lipschitz => "lipschitz",
            SeminormKind::Growth => "growth",
        }
    }

    /// Kinds defined only for planar fields.
    pub fn planar_only(self) -> bool {
        matches!(self, SeminormKind::Qbar | SeminormKind::R)
    }

    pub fn supports_dim(self, dim: usize) -> bool {
        !self.planar_only() || dim == 2
    }
}

impl fmt::Display for SeminormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeminormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SeminormKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown seminorm kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// `|h| = |k|`, as in the class definitions.
    #[default]
    EqualNorm,
    /// Offsets drawn from different scales; used by [`log_extended_check`].
    Free,
}

/// Sampling schedule: base points × directions × scales (× closed-form sup over θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub dim: usize,
    pub base_points: Vec<Vec<f64>>,
    /// Number of unit directions; rounded up to a multiple of 4 (planar) or 2.
    pub directions: usize,
    /// Offset lengths, strictly decreasing.
    pub scales: Vec<f64>,
    /// Size of the uniform θ grid for the R quotient. The estimator also
    /// includes the maximizing angle, which it computes in closed form.
    pub theta_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub pair_mode: PairMode,
}

impl ProbeConfig {
    /// `points` base points uniform in `[−half_width, half_width]^dim`, drawn from a seeded ChaCha8 stream.
    pub fn random(dim: usize, points: usize, half_width: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base_points = (0..points)
            .map(|_| (0..dim).map(|_| rng.gen_range(-half_width..=half_width)).collect())
            .collect();
        Self {
            dim,
            base_points,
            directions: 64,
            scales: dyadic_scales(0.5, 8),
            theta_samples: 64,
            seed,
            pair_mode: PairMode::EqualNorm,
        }
    }

    pub fn at_points(dim: usize, base_points: Vec<Vec<f64>>) -> Self {
        Self {
            dim,
            base_points,
            directions: 64,
            scales: dyadic_scales(0.5, 8),
            theta_samples: 64,
            seed: 0,
            pair_mode: PairMode::EqualNorm,
        }
    }

    pub fn with_directions(mut self, d: usize) -> Self {
        self.directions = d;
        self
    }

    pub fn with_scales(mut self, scales: Vec<f64>) -> Self {
        self.scales = scales;
        self
    }

    pub fn with_dyadic_scales(self, r0: f64, levels: usize) -> Self {
        self.with_scales(dyadic_scales(r0, levels))
    }

    pub fn with_theta(mut self, theta: usize) -> Self {
        self.theta_samples = theta;
        self
    }

    pub fn with_pair_mode(mut self, mode: PairMode) -> Self {
        self.pair_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::UnsupportedDim(0));
        }
        if self.base_points.is_empty() {
            return Err(Error::EmptyProbeSet("no base points".into()));
        }
        if let Some(p) = self.base_points.iter().find(|p| p.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        if self.directions == 0 {
            return Err(Error::EmptyProbeSet("no directions".into()));
        }
        if self.scales.is_empty() {
            return Err(Error::EmptyProbeSet("no scales".into()));
        }
        if self.scales.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Config("scales must be positive and finite".into()));
        }
        if self.scales.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("scales must be strictly decreasing".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("probe config serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(digest)[..16].to_string()
    }
}

/// `r₀ · 2^{−j}`, `j = 0..levels`.
pub fn dyadic_scales(r0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|j| r0 * 0.5f64.powi(j as i32)).collect()
}

fn van_der_corput(mut i: u64) -> f64 {
    let mut out = 0.0;
    let mut base = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            out += base;
        }
        base *= 0.5;
        i >>= 1;
    }
    out
}

/// Unit directions, closed under `u ↦ −u` (the antipode of entry `i` is entry `i ^ 1`).
///
/// Planar sets also contain `iu` for every `u`, so the pairs `(h, ih)` and
/// `(h, −h)` are always probed. Larger counts extend smaller ones (prefix
/// property), so probe sets are nested under refinement.
pub fn direction_set(dim: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    match dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let base = count.div_ceil(4).max(1);
            let mut out = Vec::with_capacity(4 * base);
            for j in 0..base {
                let th = 0.5 * PI * van_der_corput(j as u64);
                let (s, c) = th.sin_cos();
                out.push(vec![c, s]);
                out.push(vec![-c, -s]);
                out.push(vec![-s, c]);
                out.push(vec![s, -c]);
            }
            Ok(out)
        }
        3 => {
            let base = count.div_ceil(2).max(3);
            // R2 low-discrepancy sequence (plastic number) mapped to the sphere
            let g = 1.324_717_957_244_746_f64;
            let (a1, a2) = (1.0 / g, 1.0 / (g * g));
            let mut out = Vec::with_capacity(2 * base);
            for j in 0..base {
                let u = if j < 3 {
                    let mut e = vec![0.0; 3];
                    e[j] = 1.0;
                    e
                } else {
                    let m = (j - 3) as f64;
                    let s = (0.5 + m * a1).fract();
                    let t = (0.5 + m * a2).fract();
                    let z = 1.0 - 2.0 * s;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = 2.0 * PI * t;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                };
                let neg = u.iter().map(|c| -c).collect();
                out.push(u);
                out.push(neg);
            }
            Ok(out)
        }
        d => Err(Error::UnsupportedDim(d)),
    }
}

/// Where a sampled supremum was attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub h: Option<Vec<f64>>,
    pub k: Option<Vec<f64>>,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub kind: SeminormKind,
    /// Exact maximum of the quotient over the probe set; a lower bound for the seminorm.
    pub value: f64,
    pub witness: Option<Witness>,
    pub samples: u64,
    pub is_lower_bound: bool,
    pub probe_hash: String,
}

fn complex(v: &[f64]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn diff(v: &VectorField, x: &[f64], h: &[f64]) -> Vec<f64> {
    let xh: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
    let a = v.eval(&xh);
    let b = v.eval(x);
    a.iter().zip(&b).map(|(p, q)| p - q).collect()
}

fn check_planar(v: &VectorField, x: &[f64], h: &[f64], k: &[f64]) -> Result<()> {
    if v.dim() != 2 {
        return Err(Error::UnsupportedDim(v.dim()));
    }
    for p in [x, h, k] {
        if p.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: p.len(),
            });
        }
    }
    Ok(())
}

fn check_offsets(dim: usize, h: &[f64], k: &[f64], equal: bool) -> Result<(f64, f64)> {
    for p in [h, k] {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    let (nh, nk) = (norm(h), norm(k));
    if nh == 0.0 || nk == 0.0 {
        return Err(Error::ZeroOffset);
    }
    if equal && (nh - nk).abs() > EQUAL_NORM_TOL * nh.max(nk) {
        return Err(Error::NormMismatch { h: nh, k: nk });
    }
    Ok((nh, nk))
}

/// `|⟨Δ_h v, h̄⟩/|h|² − ⟨Δ_k v, k̄⟩/|k|²|` for `|h| = |k| ≠ 0`.
pub fn qbar_quotient(v: &VectorField, x: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
    check_planar(v, x, h, k)?;
    let (nh, nk) = check_offsets(2, h, k, true)?;
    Ok(qbar_free(v, x, h, k, nh, nk))
}

fn qbar_free(v: &VectorField, x: &[f64], h: &[f64], k: &[f64], nh: f64, nk: f64) -> f64 {
    let (hc, kc) = (complex(h), complex(k));
    // ⟨z, w̄⟩ = Re(z w)
    let qh = (complex(&diff(v, x, h)) * hc).re / (nh * nh);
    let qk = (complex(&diff(v, x, k)) * kc).re / (nk * nk);
    (qh - qk).abs()
}

/// `|⟨Δ_h v, e^{iθ}k⟩ − ⟨Δ_k v, e^{iθ}h⟩| / (|h||k|)` for `|h| = |k| ≠ 0`.
pub fn r_quotient(v: &VectorField, x: &[f64], h: &[f64], k: &[f64], theta: f64) -> Result<f64> {
    check_planar(v, x, h, k)?;
    let (nh, nk) = check_offsets(2, h, k, true)?;
    let rot = Complex64::from_polar(1.0, theta);
    let (hc, kc) = (complex(h), complex(k));
    let a = (complex(&diff(v, x, h)) * (rot * kc).conj()).re;
    let b = (complex(&diff(v, x, k)) * (rot * hc).conj()).re;
    Ok((a - b).abs() / (nh * nk))
}

/// `sup_θ` of [`r_quotient`] and a maximizing angle:
/// the θ-dependence is `Re(e^{−iθ} w)` with `w = Δ_h v·k̄ − Δ_k v·h̄`.
pub fn r_quotient_sup_theta(v: &VectorField, x: &[f64], h: &[f64], k: &[f64]) -> Result<(f64, f64)> {
    check_planar(v, x, h, k)?;
    let (nh, nk) = check_offsets(2, h, k, true)?;
    let w = complex(&diff(v, x, h)) * complex(k).conj() - complex(&diff(v, x, k)) * complex(h).conj();
    Ok((w.norm() / (nh * nk), w.arg()))
}

/// `|⟨Δ_h v, k⟩ − ⟨Δ_k v, h⟩| / (|h||k|)`, any dimension.
///
/// With `equal_norm` the offsets must have the same length.
pub fn r0_quotient(v: &VectorField, x: &[f64], h: &[f64], k: &[f64], equal_norm: bool) -> Result<f64> {
    let n = v.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let (nh, nk) = check_offsets(n, h, k, equal_norm)?;
    let a = dot(&diff(v, x, h), k);
    let b = dot(&diff(v, x, k), h);
    Ok((a - b).abs() / (nh * nk))
}

/// `|v(x+h) + v(x−h) − 2v(x)| / |h|`.
pub fn zygmund_quotient(v: &VectorField, x: &[f64], h: &[f64]) -> Result<f64> {
    let n = v.dim();
    let nh = offset_norm(n, x, h)?;
    let xp: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
    let xm: Vec<f64> = x.iter().zip(h).map(|(a, b)| a - b).collect();
    let (p, m, c) = (v.eval(&xp), v.eval(&xm), v.eval(x));
    let d: Vec<f64> = (0..n).map(|i| p[i] + m[i] - 2.0 * c[i]).collect();
    Ok(norm(&d) / nh)
}

/// `|v(x+h) − v(x)| / |h|`.
pub fn lipschitz_quotient(v: &VectorField, x: &[f64], h: &[f64]) -> Result<f64> {
    let nh = offset_norm(v.dim(), x, h)?;
    Ok(norm(&diff(v, x, h)) / nh)
}

fn offset_norm(n: usize, x: &[f64], h: &[f64]) -> Result<f64> {
    for p in [x, h] {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
    }
    let nh = norm(h);
    if nh == 0.0 {
        return Err(Error::ZeroOffset);
    }
    Ok(nh)
}

/// `|v(x)| / (|x| log(e + |x|))`; at `x = 0` this is `|v(0)|` (0 for fields vanishing there).
pub fn growth_quotient(v: &VectorField, x: &[f64]) -> f64 {
    let nx = norm(x);
    let nv = norm(&v.eval(x));
    if nx == 0.0 {
        return nv;
    }
    nv / (nx * (E + nx).ln())
}

/// Base points closer than this to the origin are skipped by the growth estimator.
pub const GROWTH_MIN_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    witness: Option<Witness>,
    samples: u64,
}

impl Best {
    fn new() -> Self {
        Self {
            value: 0.0,
            witness: None,
            samples: 0,
        }
    }

    fn offer(&mut self, value: f64, make: impl FnOnce() -> Witness) {
        if value > self.value || (self.witness.is_none() && value >= self.value) {
            self.value = value;
            self.witness = Some(make());
        }
    }

    fn merge(&mut self, other: Best) {
        self.samples += other.samples;
        if let Some(w) = other.witness {
            if other.value > self.value || self.witness.is_none() {
                self.value = other.value;
                self.witness = Some(w);
            }
        }
    }
}

fn scaled(u: &[f64], r: f64) -> Vec<f64> {
    u.iter().map(|c| c * r).collect()
}

/// Field values around one base point at one scale.
struct Stencil {
    v0: Vec<f64>,
    /// `Δ_{r u_i} v`
    deltas: Vec<Vec<f64>>,
}

impl Stencil {
    fn new(v: &VectorField, x: &[f64], r: f64, dirs: &[Vec<f64>]) -> Self {
        let v0 = v.eval(x);
        let mut xh = vec![0.0; x.len()];
        let mut buf = vec![0.0; x.len()];
        let deltas = dirs
            .iter()
            .map(|u| {
                for (a, (xi, ui)) in xh.iter_mut().zip(x.iter().zip(u)) {
                    *a = xi + r * ui;
                }
                v.eval_into(&xh, &mut buf);
                buf.iter().zip(&v0).map(|(a, b)| a - b).collect()
            })
            .collect();
        Self { v0, deltas }
    }
}

/// Supremum of one quotient over all direction pairs at `(x, r)`.
fn sup_at(v: &VectorField, kind: SeminormKind, x: &[f64], r: f64, dirs: &[Vec<f64>]) -> Best {
    let mut best = Best::new();
    let st = Stencil::new(v, x, r, dirs);
    let d = dirs.len();
    let wit = |i: usize, j: Option<usize>, theta: Option<f64>| Witness {
        x: x.to_vec(),
        h: Some(scaled(&dirs[i], r)),
        k: j.map(|j| scaled(&dirs[j], r)),
        theta,
    };
    match kind {
        SeminormKind::Qbar => {
            // q_i = ⟨Δ_{ru_i} v, r ū_i⟩ / r²; the sup over pairs is max q − min q
            let q: Vec<f64> = (0..d)
                .map(|i| (complex(&st.deltas[i]) * complex(&dirs[i])).re / r)
                .collect();
            let (mut imax, mut imin) = (0, 0);
            for i in 1..d {
                if q[i] > q[imax] {
                    imax = i;
                }
                if q[i] < q[imin] {
                    imin = i;
                }
            }
            best.offer(q[imax] - q[imin], || wit(imax, Some(imin), None));
            best.samples = (d * d) as u64;
        }
        SeminormKind::R => {
            let dc: Vec<Complex64> = st.deltas.iter().map(|v| complex(v)).collect();
            let uc: Vec<Complex64> = dirs.iter().map(|u| complex(u)).collect();
            for i in 0..d {
                for j in (i + 1)..d {
                    let w = dc[i] * uc[j].conj() - dc[j] * uc[i].conj();
                    let val = w.norm() / r;
                    if val > best.value || best.witness.is_none() {
                        best.offer(val, || wit(i, Some(j), Some(w.arg())));
                    }
                }
            }
            best.samples = (d * d) as u64;
        }
        SeminormKind::R0 => {
            let g: Vec<Vec<f64>> = st
                .deltas
                .iter()
                .map(|delta| dirs.iter().map(|u| dot(delta, u)).collect())
                .collect();
            for i in 0..d {
                for j in (i + 1)..d {
                    let val = (g[i][j] - g[j][i]).abs() / r;
                    if val > best.value || best.witness.is_none() {
                        best.offer(val, || wit(i, Some(j), None));
                    }
                }
            }
            best.samples = (d * d) as u64;
            if x.len() >= 3 {
                r0_orthogonal_pairs(v, x, r, dirs, &st, &mut best);
            }
        }
        SeminormKind::Zygmund => {
            for i in 0..d {
                let s: Vec<f64> = (0..x.len()).map(|c| st.deltas[i][c] + st.deltas[i ^ 1][c]).collect();
                best.offer(norm(&s) / r, || wit(i, None, None));
            }
            best.samples = d as u64;
        }
        SeminormKind::Lipschitz => {
            for i in 0..d {
                best.offer(norm(&st.deltas[i]) / r, || wit(i, None, None));
            }
            best.samples = d as u64;
        }
        SeminormKind::Growth => unreachable!("growth has no offsets"),
    }
    let _ = &st.v0;
    best
}

/// Pairs `(u_i, w)` with `w` the normalized component of `u_j` orthogonal to `u_i`.
/// In three or more dimensions this puts the maximizing `k ⊥ h` within reach of the sampling.
fn r0_orthogonal_pairs(v: &VectorField, x: &[f64], r: f64, dirs: &[Vec<f64>], st: &Stencil, best: &mut Best) {
    let n = x.len();
    let mut xk = vec![0.0; n];
    let mut vk = vec![0.0; n];
    let mut extra = 0u64;
    for (i, ui) in dirs.iter().enumerate() {
        for (j, uj) in dirs.iter().enumerate() {
            if j == i || j == (i ^ 1) {
                continue;
            }
            let c = dot(uj, ui);
            let mut w: Vec<f64> = uj.iter().zip(ui).map(|(a, b)| a - c * b).collect();
            let nw = norm(&w);
            if nw < 1e-8 {
                continue;
            }
            w.iter_mut().for_each(|a| *a /= nw);
            for (a, (xi, wi)) in xk.iter_mut().zip(x.iter().zip(&w)) {
                *a = xi + r * wi;
            }
            v.eval_into(&xk, &mut vk);
            let dk: Vec<f64> = vk.iter().zip(&st.v0).map(|(a, b)| a - b).collect();
            let val = (dot(&st.deltas[i], &w) - dot(&dk, ui)).abs() / r;
            extra += 1;
            if val > best.value {
                best.offer(val, || Witness {
                    x: x.to_vec(),
                    h: Some(scaled(ui, r)),
                    k: Some(scaled(&w, r)),
                    theta: None,
                });
            }
        }
    }
    best.samples += extra;
}

/// Maximum of the quotient `kind` over `cfg`. Deterministic for a given `cfg`
/// whatever the number of worker threads: points are evaluated in parallel and
/// reduced in input order, with ties going to the earlier probe.
pub fn estimate_seminorm(v: &VectorField, kind: SeminormKind, cfg: &ProbeConfig) -> Result<SeminormEstimate> {
    cfg.validate()?;
    if cfg.dim != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: cfg.dim,
        });
    }
    if !kind.supports_dim(v.dim()) {
        return Err(Error::UnsupportedDim(v.dim()));
    }
    let mut total = Best::new();
    if kind == SeminormKind::Growth {
        for x in &cfg.base_points {
            total.samples += 1;
            if norm(x) < GROWTH_MIN_RADIUS {
                continue;
            }
            let q = growth_quotient(v, x);
            total.offer(q, || Witness {
                x: x.clone(),
                h: None,
                k: None,
                theta: None,
            });
        }
    } else {
        let dirs = direction_set(cfg.dim, cfg.directions)?;
        let per_point: Vec<Best> = cfg
            .base_points
            .par_iter()
            .map(|x| {
                let mut b = Best::new();
                for &r in &cfg.scales {
                    b.merge(sup_at(v, kind, x, r, &dirs));
                }
                b
            })
            .collect();
        for b in per_point {
            total.merge(b);
        }
    }
    if total.witness.is_none() {
        return Err(Error::EmptyProbeSet(format!("no admissible probes for {kind}")));
    }
    Ok(SeminormEstimate {
        kind,
        value: total.value,
        witness: total.witness,
        samples: total.samples,
        is_lower_bound: true,
        probe_hash: cfg.hash(),
    })
}

/// Per-scale suprema at a single point: `out[j]` is the max over direction pairs at `scales[j]`.
pub fn point_scale_profile(
    v: &VectorField,
    kind: SeminormKind,
    x: &[f64],
    scales: &[f64],
    directions: usize,
) -> Result<Vec<f64>> {
    if kind == SeminormKind::Growth {
        return Err(invalid("growth has no scale profile"));
    }
    if !kind.supports_dim(v.dim()) {
        return Err(Error::UnsupportedDim(v.dim()));
    }
    if x.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: x.len(),
        });
    }
    let dirs = direction_set(v.dim(), directions)?;
    Ok(scales.par_iter().map(|&r| sup_at(v, kind, x, r, &dirs).value).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogExtendedReport {
    pub kind: SeminormKind,
    pub applicable: bool,
    /// Class seminorm estimate used for normalization.
    pub norm: f64,
    pub a: f64,
    pub b: f64,
    /// `max quotient / (norm · (a + b |log(|h|/|k|)|))` over pairs with `|h| ≠ |k|`.
    pub max_ratio: f64,
    pub max_log_ratio: f64,
    pub witness: Option<Witness>,
    pub samples: u64,
    pub consistent: bool,
}

/// Constants of the extended bound for R₀: `5/2 + (1/(2 log 2)) |log(|h|/|k|)|`.
pub const R0_EXTENDED: (f64, f64) = (2.5, 1.0 / (2.0 * LN_2));
/// Constants used for Q̄. The corresponding bound has an unspecified constant; (1, 1) is empirical.
pub const QBAR_EXTENDED: (f64, f64) = (1.0, 1.0);

/// Tests quotients on pairs of different lengths against `norm · (A + B|log(|h|/|k|)|)`.
///
/// Pairs combine any two distinct scales of `cfg` with any two directions.
pub fn log_extended_check(
    v: &VectorField,
    kind: SeminormKind,
    cfg: &ProbeConfig,
    norm_estimate: f64,
    tolerance: f64,
) -> Result<LogExtendedReport> {
    cfg.validate()?;
    if cfg.pair_mode != PairMode::Free {
        return Err(Error::Config("log-extended check needs pair_mode = free".into()));
    }
    let (a, b) = match kind {
        SeminormKind::R0 => R0_EXTENDED,
        SeminormKind::Qbar => QBAR_EXTENDED,
        k => return Err(invalid(format!("no log-extended bound for {k}"))),
    };
    if !kind.supports_dim(v.dim()) {
        return Err(Error::UnsupportedDim(v.dim()));
    }
    if cfg.scales.len() < 2 {
        return Err(Error::EmptyProbeSet(
            "log-extended check needs at least two scales".into(),
        ));
    }
    let mut report = LogExtendedReport {
        kind,
        applicable: norm_estimate > 0.0,
        norm: norm_estimate,
        a,
        b,
        max_ratio: 0.0,
        max_log_ratio: (cfg.scales[0] / cfg.scales[cfg.scales.len() - 1]).ln(),
        witness: None,
        samples: 0,
        consistent: true,
    };
    if !report.applicable {
        return Ok(report);
    }
    let dirs = direction_set(cfg.dim, cfg.directions)?;
    let scales = &cfg.scales;
    let per_point: Vec<Best> = cfg
        .base_points
        .par_iter()
        .map(|x| {
            let stencils: Vec<Stencil> = scales.iter().map(|&r| Stencil::new(v, x, r, &dirs)).collect();
            let mut best = Best::new();
            for (si, &ri) in scales.iter().enumerate() {
                for (sj, &rj) in scales.iter().enumerate() {
                    if si == sj {
                        continue;
                    }
                    let weight = norm_estimate * (a + b * (ri / rj).ln().abs());
                    for (p, up) in dirs.iter().enumerate() {
                        for (q, uq) in dirs.iter().enumerate() {
                            let quotient = match kind {
                                SeminormKind::R0 => {
                                    (rj * dot(&stencils[si].deltas[p], uq) - ri * dot(&stencils[sj].deltas[q], up))
                                        .abs()
                                        / (ri * rj)
                                }
                                _ => {
                                    let qh = (complex(&stencils[si].deltas[p]) * complex(up)).re / ri;
                                    let qk = (complex(&stencils[sj].deltas[q]) * complex(uq)).re / rj;
                                    (qh - qk).abs()
                                }
                            };
                            best.samples += 1;
                            let ratio = quotient / weight;
                            if ratio > best.value {
                                best.offer(ratio, || Witness {
                                    x: x.clone(),
                                    h: Some(scaled(up, ri)),
                                    k: Some(scaled(uq, rj)),
                                    theta: None,
                                });
                            }
                        }
                    }
                }
            }
            best
        })
        .collect();
    let mut total = Best::new();
    for b in per_point {
        total.merge(b);
    }
    report.max_ratio = total.value;
    report.witness = total.witness;
    report.samples = total.samples;
    report.consistent = report.max_ratio <= 1.0 + tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::find_entry;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn planar_linear(a: Complex64, b: Complex64) -> VectorField {
        VectorField::planar("ab", move |z| a * z + b * z.conj())
    }

    #[test]
    fn qbar_examples() {
        let id = find_entry("id").unwrap().field;
        assert!((qbar_quotient(&id, &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        let conj = find_entry("conj").unwrap().field;
        let q = qbar_quotient(&conj, &[0.3, -1.2], &[0.6, 0.8], &[-1.0, 0.0]).unwrap();
        assert!(q.abs() < 1e-15);
        let c = find_entry("const").unwrap().field;
        assert_eq!(qbar_quotient(&c, &[1.0, 2.0], &[0.0, 2.0], &[2.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn quotient_errors() {
        let id = find_entry("id").unwrap().field;
        assert!(matches!(
            qbar_quotient(&id, &[0.0, 0.0], &[1.0, 0.0], &[0.0, 2.0]),
            Err(Error::NormMismatch { .. })
        ));
        assert!(matches!(
            qbar_quotient(&id, &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]),
            Err(Error::ZeroOffset)
        ));
        assert!(zygmund_quotient(&id, &[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(lipschitz_quotient(&id, &[0.0, 0.0], &[0.0, 0.0]).is_err());
        let rot3 = find_entry("rot3").unwrap().field;
        assert!(qbar_quotient(&rot3, &[0.0; 3], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).is_err());
        // free pairs are allowed for R₀ when equal-norm is not requested
        assert!(r0_quotient(&rot3, &[0.0; 3], &[1.0, 0.0, 0.0], &[0.0, 3.0, 0.0], false).is_ok());
        assert!(r0_quotient(&rot3, &[0.0; 3], &[1.0, 0.0, 0.0], &[0.0, 3.0, 0.0], true).is_err());
    }

    #[test]
    fn r_examples() {
        let rot = find_entry("rot").unwrap().field;
        let (h, k) = ([1.0, 0.0], [0.0, 1.0]);
        let best = [0.0, PI / 2.0]
            .iter()
            .map(|&t| r_quotient(&rot, &[0.0, 0.0], &h, &k, t).unwrap())
            .fold(0.0, f64::max);
        assert!((best - 2.0).abs() < 1e-15);
        let (sup, theta) = r_quotient_sup_theta(&rot, &[0.0, 0.0], &h, &k).unwrap();
        assert!((sup - 2.0).abs() < 1e-15);
        assert!((r_quotient(&rot, &[0.0, 0.0], &h, &k, theta).unwrap() - sup).abs() < 1e-14);
        let conj = find_entry("conj").unwrap().field;
        assert!(r_quotient(&conj, &[0.4, 0.1], &[0.6, 0.8], &[0.0, 1.0], 0.7).unwrap() < 1e-15);
    }

    #[test]
    fn r_sup_theta_dominates_grid() {
        let v = find_entry("conjlog").unwrap().field;
        let (x, h, k) = ([0.3, -0.2], [0.05, 0.02], [-0.02, 0.05]);
        let (sup, _) = r_quotient_sup_theta(&v, &x, &h, &k).unwrap();
        let grid = (0..64)
            .map(|i| r_quotient(&v, &x, &h, &k, 2.0 * PI * i as f64 / 64.0).unwrap())
            .fold(0.0, f64::max);
        assert!(sup >= grid && sup - grid < 1e-2 * sup);
    }

    #[test]
    fn r0_examples() {
        let rot = find_entry("rot").unwrap().field;
        assert!((r0_quotient(&rot, &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], true).unwrap() - 2.0).abs() < 1e-15);
        let sym = VectorField::linear("s", Matrix::from_rows(&[&[1.0, 2.0], &[2.0, -3.0]]));
        assert!(r0_quotient(&sym, &[0.7, 0.1], &[0.6, 0.8], &[1.0, 0.0], true).unwrap() < 1e-15);
        let sq = VectorField::new("x2", 1, |x, o| o[0] = x[0] * x[0]);
        assert!((r0_quotient(&sq, &[0.0], &[1.0], &[-1.0], true).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zygmund_lipschitz_growth_examples() {
        let v = find_entry("conjlog").unwrap().field;
        let h = [0.3, 0.4];
        assert!(zygmund_quotient(&v, &[0.0, 0.0], &h).unwrap() < 1e-15);
        let z = zygmund_quotient(&v, &h, &h).unwrap();
        assert!((z - 4.0 * LN_2).abs() < 1e-12, "{z}");
        let generic = find_entry("generic").unwrap().field;
        assert!(zygmund_quotient(&generic, &[1.0, 2.0], &h).unwrap() < 1e-14);

        let r = 1e-3;
        let l = lipschitz_quotient(&v, &[0.0, 0.0], &[r, 0.0]).unwrap();
        assert!((l - (r * r).ln().abs()).abs() < 1e-12);
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let lin = VectorField::linear("m", m.clone());
        let lq = lipschitz_quotient(&lin, &[5.0, 5.0], &[0.0, 1.0]).unwrap();
        assert!((lq - norm(&m.apply(&[0.0, 1.0]))).abs() < 1e-12);

        let id = find_entry("id").unwrap().field;
        assert!((growth_quotient(&id, &[1e6, 0.0]) - 1.0 / (E + 1e6).ln()).abs() < 1e-15);
        assert!((growth_quotient(&id, &[1e6, 0.0]) - 0.0723).abs() < 1e-4);
        assert_eq!(growth_quotient(&id, &[0.0, 0.0]), 0.0);
        let big = 1e8;
        let g = growth_quotient(&v, &[big, 0.0]);
        assert!((g - (big * big).ln() / (E + big).ln()).abs() < 1e-12);
    }

    #[test]
    fn direction_sets_are_symmetric_and_nested() {
        for dim in [1, 2, 3] {
            let small = direction_set(dim, 16).unwrap();
            let large = direction_set(dim, 64).unwrap();
            assert_eq!(&large[..small.len()], &small[..]);
            for (i, u) in large.iter().enumerate() {
                assert!((norm(u) - 1.0).abs() < 1e-14);
                let anti = &large[i ^ 1];
                assert!(u.iter().zip(anti).all(|(a, b)| a == &-b));
            }
        }
        let planar = direction_set(2, 8).unwrap();
        assert_eq!(planar[0], vec![1.0, 0.0]);
        assert_eq!(planar[2][1], 1.0);
        assert_eq!(planar.len(), 8);
    }

    #[test]
    fn estimates_for_linear_fields() {
        let cfg = ProbeConfig::random(2, 4, 1.0, 3)
            .with_directions(256)
            .with_dyadic_scales(0.5, 2);
        let id = find_entry("id").unwrap().field;
        let q = estimate_seminorm(&id, SeminormKind::Qbar, &cfg).unwrap();
        assert!((q.value - 2.0).abs() < 1e-6);
        assert!(q.is_lower_bound);
        let rot = find_entry("rot").unwrap().field;
        assert!((estimate_seminorm(&rot, SeminormKind::R0, &cfg).unwrap().value - 2.0).abs() < 1e-6);
        assert!((estimate_seminorm(&rot, SeminormKind::R, &cfg).unwrap().value - 2.0).abs() < 1e-6);
        let generic = find_entry("generic").unwrap().field;
        assert!(estimate_seminorm(&generic, SeminormKind::Zygmund, &cfg).unwrap().value < 1e-12);
        let conj = find_entry("conj").unwrap().field;
        let lip = estimate_seminorm(&conj, SeminormKind::Lipschitz, &cfg).unwrap();
        assert!((lip.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn witness_reproduces_value() {
        let v = find_entry("bump").unwrap().field;
        let cfg = ProbeConfig::random(2, 6, 1.0, 11)
            .with_directions(32)
            .with_dyadic_scales(0.25, 3);
        let q = estimate_seminorm(&v, SeminormKind::Qbar, &cfg).unwrap();
        let w = q.witness.clone().unwrap();
        let direct = qbar_quotient(&v, &w.x, w.h.as_ref().unwrap(), w.k.as_ref().unwrap()).unwrap();
        assert!((direct - q.value).abs() < 1e-12 * q.value.max(1.0));

        let r = estimate_seminorm(&v, SeminormKind::R, &cfg).unwrap();
        let w = r.witness.unwrap();
        let direct = r_quotient(&v, &w.x, w.h.as_ref().unwrap(), w.k.as_ref().unwrap(), w.theta.unwrap()).unwrap();
        assert!((direct - r.value).abs() < 1e-12 * r.value.max(1.0));

        let b3 = find_entry("bump3").unwrap().field;
        let cfg3 = ProbeConfig::random(3, 4, 0.8, 2)
            .with_directions(24)
            .with_dyadic_scales(0.25, 2);
        let e = estimate_seminorm(&b3, SeminormKind::R0, &cfg3).unwrap();
        let w = e.witness.unwrap();
        let direct = r0_quotient(&b3, &w.x, w.h.as_ref().unwrap(), w.k.as_ref().unwrap(), true).unwrap();
        assert!((direct - e.value).abs() < 1e-12 * e.value.max(1.0));
    }

    #[test]
    fn rejects_bad_configs() {
        let id = find_entry("id").unwrap().field;
        let empty = ProbeConfig::at_points(2, vec![]);
        assert!(matches!(
            estimate_seminorm(&id, SeminormKind::Qbar, &empty),
            Err(Error::EmptyProbeSet(_))
        ));
        let bad = ProbeConfig::random(2, 2, 1.0, 0).with_scales(vec![0.1, 0.2]);
        assert!(estimate_seminorm(&id, SeminormKind::Qbar, &bad).is_err());
        let rot3 = find_entry("rot3").unwrap().field;
        let cfg3 = ProbeConfig::random(3, 2, 1.0, 0);
        assert!(estimate_seminorm(&rot3, SeminormKind::Qbar, &cfg3).is_err());
        assert!(estimate_seminorm(&rot3, SeminormKind::R0, &cfg3).is_ok());
    }

    #[test]
    fn hash_tracks_config() {
        let a = ProbeConfig::random(2, 3, 1.0, 5);
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), a.clone().with_directions(32).hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn log_extended_linear_and_constant() {
        let cfg = ProbeConfig::random(2, 3, 1.0, 1)
            .with_directions(32)
            .with_dyadic_scales(0.5, 4)
            .with_pair_mode(PairMode::Free);
        let generic = find_entry("generic").unwrap().field;
        let eq = ProbeConfig {
            pair_mode: PairMode::EqualNorm,
            ..cfg.clone()
        };
        let n = estimate_seminorm(&generic, SeminormKind::R0, &eq).unwrap().value;
        let rep = log_extended_check(&generic, SeminormKind::R0, &cfg, n, 0.0).unwrap();
        assert!(rep.applicable && rep.consistent && rep.max_ratio <= 1.0, "{rep:?}");

        let c = find_entry("const").unwrap().field;
        let rep = log_extended_check(&c, SeminormKind::R0, &cfg, 0.0, 0.0).unwrap();
        assert!(!rep.applicable);
        assert!(log_extended_check(&generic, SeminormKind::R0, &eq, n, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn quotients_scale_linearly(lambda in -5.0f64..5.0, hx in -1.0f64..1.0, hy in 0.1f64..1.0, x0 in -1.0f64..1.0) {
            let v = find_entry("bump").unwrap().field;
            let w = v.scaled(lambda);
            let (x, h) = ([x0, 0.2], [hx, hy]);
            let k = [-hy, hx];
            let tol = 1e-12;
            let check = |a: f64, b: f64| (a - lambda.abs() * b).abs() <= tol * (1.0 + b.abs() * lambda.abs());
            prop_assert!(check(qbar_quotient(&w, &x, &h, &k).unwrap(), qbar_quotient(&v, &x, &h, &k).unwrap()));
            prop_assert!(check(r_quotient(&w, &x, &h, &k, 0.3).unwrap(), r_quotient(&v, &x, &h, &k, 0.3).unwrap()));
            prop_assert!(check(r0_quotient(&w, &x, &h, &k, true).unwrap(), r0_quotient(&v, &x, &h, &k, true).unwrap()));
            prop_assert!(check(zygmund_quotient(&w, &x, &h).unwrap(), zygmund_quotient(&v, &x, &h).unwrap()));
            prop_assert!(check(lipschitz_quotient(&w, &x, &h).unwrap(), lipschitz_quotient(&v, &x, &h).unwrap()));
        }

        #[test]
        fn refinement_never_decreases(extra_dirs in 1usize..40, extra_points in 0usize..4, extra_levels in 0usize..3) {
            let v = find_entry("conjlog").unwrap().field;
            let coarse = ProbeConfig::random(2, 3, 1.0, 9).with_directions(12).with_dyadic_scales(0.5, 2);
            let fine = ProbeConfig::random(2, 3 + extra_points, 1.0, 9)
                .with_directions(12 + extra_dirs)
                .with_dyadic_scales(0.5, 2 + extra_levels);
            for kind in [SeminormKind::Qbar, SeminormKind::R, SeminormKind::R0, SeminormKind::Zygmund, SeminormKind::Lipschitz, SeminormKind::Growth] {
                let a = estimate_seminorm(&v, kind, &coarse).unwrap().value;
                let b = estimate_seminorm(&v, kind, &fine).unwrap().value;
                prop_assert!(b >= a, "{kind}: {b} < {a}");
            }
        }
    }

    #[test]
    fn planar_linear_fields_converge_to_closed_form() {
        let a = Complex64::new(0.4, -0.9);
        let b = Complex64::new(-0.3, 0.2);
        let v = planar_linear(a, b);
        let cfg = ProbeConfig::at_points(2, vec![vec![0.1, 0.2]])
            .with_directions(1024)
            .with_scales(vec![1.0]);
        for kind in [SeminormKind::Qbar, SeminormKind::R] {
            let e = estimate_seminorm(&v, kind, &cfg).unwrap();
            assert!((e.value - 2.0 * a.norm()).abs() < 1e-4, "{kind}: {}", e.value);
        }
    }
}
