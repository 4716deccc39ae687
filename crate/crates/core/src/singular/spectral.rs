//! Beurling recovery of `∂̄b` from `∂b`, Riesz transforms and
//! the Hodge identity `b = ∇ div u + div curl u` with `Δu = b`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::singular::fft::{SpectralPlan, ZeroMode};
use crate::singular::grid::{BoundaryMode, GridField};

/// Recovers `∂̄b` from `∂b` through the Fourier multiplier `ξ/ξ̄` (`ξ = ξ₁ + iξ₂`).
///
/// The input is treated as one period of a torus. It must be padded: all nonzero
/// samples have to lie in the central half of every axis. This approximates the
/// principal-value operator `−1/(π z̄²) ∗` on ℝ²; [`beurling_tail_estimate`]
/// reports how much of the output mass sits near the box edge.
pub fn beurling_recover_dbar(db: &GridField) -> Result<GridField> {
    if db.dim != 2 {
        return Err(Error::UnsupportedDim(db.dim));
    }
    db.validate()?;
    check_padding(db)?;
    let plan = SpectralPlan::new(&db.shape, &db.spacing, ZeroMode::ProjectOut);
    if !db.shape.iter().all(|s| s.is_power_of_two()) {
        return Err(Error::InvalidGrid("Beurling grid needs power-of-two sizes".into()));
    }
    let data = db.complex()?;
    let out = plan.apply(&data, beurling_symbol)?;
    Ok(db.like().with_complex(&out))
}

/// Multiplier taking `∂` to `∂̄`: `∂ ↔ iξ̄/2`, `∂̄ ↔ iξ/2`.
pub fn beurling_symbol(xi: &[f64]) -> Complex64 {
    let z = Complex64::new(xi[0], xi[1]);
    z / z.conj()
}

fn check_padding(g: &GridField) -> Result<()> {
    for (name, data) in &g.components {
        for (i, &v) in data.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let idx = g.multi_index(i);
            for (a, &n) in g.shape.iter().enumerate() {
                if idx[a] < n / 4 || idx[a] >= n - n / 4 {
                    return Err(Error::InvalidGrid(format!(
                        "component `{name}` reaches the outer quarter of axis {a}; pad by at least 2x"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Fraction of output L² mass within the outer quarter of the box; a proxy for the
/// periodic wrap-around error of the padded Beurling transform.
pub fn beurling_tail_estimate(out: &GridField) -> Result<f64> {
    let data = out.complex()?;
    let (mut tail, mut total) = (0.0, 0.0);
    for (i, c) in data.iter().enumerate() {
        let m = c.norm_sqr();
        total += m;
        let idx = out.multi_index(i);
        if idx.iter().zip(&out.shape).any(|(&k, &n)| k < n / 4 || k >= n - n / 4) {
            tail += m;
        }
    }
    Ok(if total == 0.0 { 0.0 } else { (tail / total).sqrt() })
}

/// `R_j`, multiplier `−i ξ_j/|ξ|`, on a periodic grid. Output is complex (`re`/`im`).
pub fn riesz_transform(g: &GridField, j: usize, zero_mode: ZeroMode) -> Result<GridField> {
    if g.boundary_mode != BoundaryMode::Periodic {
        return Err(Error::InvalidGrid("Riesz transform needs a periodic grid".into()));
    }
    if j >= g.dim {
        return Err(Error::InvalidArgument(format!(
            "Riesz index {j} out of range for dim {}",
            g.dim
        )));
    }
    let plan = SpectralPlan::for_grid(g, zero_mode)?;
    let data = g.complex()?;
    let out = plan.apply(&data, |xi| {
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        Complex64::new(0.0, -xi[j] / norm)
    })?;
    Ok(g.like().with_complex(&out))
}

#[derive(Debug, Clone, Serialize)]
pub struct HodgeReport {
    /// `‖∇div u + div curl u − b‖₂ / ‖b‖₂`
    pub relative_l2: f64,
    /// `‖∇div u + div curl u − b‖_∞ / ‖b‖_∞`
    pub relative_linf: f64,
    /// Relative L² residual of `Δ(div u) = div b`.
    pub div_equation: f64,
    /// Relative L² residual of `Δ(curl u) = curl b`, over all curl entries.
    pub curl_equation: f64,
    /// Relative L² size of `div curl u`; zero for gradient fields.
    pub solenoidal_fraction: f64,
    /// Mean removed from each component before solving.
    pub removed_means: Vec<f64>,
}

/// Solves `Δu = b` spectrally and checks the Hodge identity and the two Poisson
/// equations satisfied by `div u` and `curl u = Du − Dᵗu`.
pub fn hodge_check(b: &GridField) -> Result<HodgeReport> {
    if b.boundary_mode != BoundaryMode::Periodic {
        return Err(Error::InvalidGrid("Hodge check needs a periodic grid".into()));
    }
    let plan = SpectralPlan::for_grid(b, ZeroMode::ProjectOut)?;
    let n = b.dim;
    let comps = b.vector()?;
    let len = plan.len();
    let mut removed_means = Vec::with_capacity(n);
    let mut b_phys = Vec::with_capacity(n);
    let mut b_hat = Vec::with_capacity(n);
    for c in &comps {
        let mean = c.iter().sum::<f64>() / len as f64;
        removed_means.push(mean);
        let data: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x - mean, 0.0)).collect();
        b_hat.push(plan.forward(&data));
        b_phys.push(data);
    }

    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut u_hat = vec![vec![zero; len]; n];
    let mut xi = vec![0.0; n];
    for f in 1..len {
        plan.xi(f, &mut xi);
        let k2: f64 = xi.iter().map(|x| x * x).sum();
        for a in 0..n {
            u_hat[a][f] = -b_hat[a][f] / k2;
        }
    }

    let mut div_u_hat = vec![zero; len];
    let mut grad_div = vec![vec![zero; len]; n];
    let mut div_curl = vec![vec![zero; len]; n];
    let mut lap_div_u = vec![zero; len];
    let mut div_b_hat = vec![zero; len];
    // curl entries (a, c) with a < c
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| ((a + 1)..n).map(move |c| (a, c))).collect();
    let mut lap_curl_u = vec![vec![zero; len]; pairs.len()];
    let mut curl_b_hat = vec![vec![zero; len]; pairs.len()];

    for f in 0..len {
        plan.xi(f, &mut xi);
        let k2: f64 = xi.iter().map(|x| x * x).sum();
        let d: Vec<Complex64> = xi.iter().map(|&x| i * x).collect();
        let div_u: Complex64 = (0..n).map(|a| d[a] * u_hat[a][f]).sum();
        div_u_hat[f] = div_u;
        lap_div_u[f] = -k2 * div_u;
        div_b_hat[f] = (0..n).map(|a| d[a] * b_hat[a][f]).sum();
        for a in 0..n {
            grad_div[a][f] = d[a] * div_u;
            // (div C)_a = Σ_c ∂_c C_{ac},  C_{ac} = ∂_c u_a − ∂_a u_c
            div_curl[a][f] = (0..n).map(|c| d[c] * (d[c] * u_hat[a][f] - d[a] * u_hat[c][f])).sum();
        }
        for (p, &(a, c)) in pairs.iter().enumerate() {
            let curl_u = d[c] * u_hat[a][f] - d[a] * u_hat[c][f];
            lap_curl_u[p][f] = -k2 * curl_u;
            curl_b_hat[p][f] = d[c] * b_hat[a][f] - d[a] * b_hat[c][f];
        }
    }

    let mut num2 = 0.0;
    let mut den2 = 0.0;
    let mut num_inf: f64 = 0.0;
    let mut den_inf: f64 = 0.0;
    let mut sol2 = 0.0;
    for a in 0..n {
        let gd = plan.inverse(&grad_div[a]);
        let dc = plan.inverse(&div_curl[a]);
        for f in 0..len {
            let r = gd[f] + dc[f] - b_phys[a][f];
            num2 += r.norm_sqr();
            num_inf = num_inf.max(r.norm());
            den2 += b_phys[a][f].norm_sqr();
            den_inf = den_inf.max(b_phys[a][f].norm());
            sol2 += dc[f].norm_sqr();
        }
    }
    let rel = |num: f64, den: f64| if den == 0.0 { num } else { num / den };

    let div_equation = {
        let lhs = plan.inverse(&lap_div_u);
        let rhs = plan.inverse(&div_b_hat);
        let (mut nn, mut dd) = (0.0, 0.0);
        for f in 0..len {
            nn += (lhs[f] - rhs[f]).norm_sqr();
            dd += rhs[f].norm_sqr();
        }
        rel(nn.sqrt(), dd.sqrt())
    };
    let curl_equation = {
        let (mut nn, mut dd) = (0.0, 0.0);
        for p in 0..pairs.len() {
            let lhs = plan.inverse(&lap_curl_u[p]);
            let rhs = plan.inverse(&curl_b_hat[p]);
            for f in 0..len {
                nn += (lhs[f] - rhs[f]).norm_sqr();
                dd += rhs[f].norm_sqr();
            }
        }
        rel(nn.sqrt(), dd.sqrt())
    };

    Ok(HodgeReport {
        relative_l2: rel(num2.sqrt(), den2.sqrt()),
        relative_linf: rel(num_inf, den_inf),
        div_equation,
        curl_equation,
        solenoidal_fraction: rel(sol2.sqrt(), den2.sqrt()),
        removed_means,
    })
}
