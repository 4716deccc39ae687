use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use reimann_core::diffops::derivative_bundle;
use reimann_core::fields::{apply_cutoff, find_entry, make_zoo};
use reimann_core::halfspace::{kernel_bound_check, normalization_table, ExtendOrder, HarmonicExtension};
use reimann_core::harness::{
    emit, lipschitz_scan, refinement_svg, run_cutoff_stability, run_equivalence_suite, run_inequality_suite,
    series_svg, RunConfig,
};
use reimann_core::seminorms::{dyadic_scales, estimate_seminorm, ProbeConfig, SeminormKind};
use reimann_core::singular::{
    beurling_recover_dbar, beurling_tail_estimate, biot_savart, disk_vorticity, hodge_check, quadrant_vorticity,
    BoundaryMode, GridField,
};

#[derive(Parser)]
#[command(
    name = "reimann-kit",
    version,
    about = "Seminorm, Poisson-extension and singular-integral experiments on a zoo of vector fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Field zoo.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Sampled seminorm estimate of one zoo field.
    Seminorm {
        #[arg(long)]
        field: String,
        #[arg(long)]
        kind: SeminormKind,
        #[arg(long, default_value_t = 24)]
        points: usize,
        #[arg(long, default_value_t = 1.5)]
        half_width: f64,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Jacobian and derived operators at a point.
    Diffops {
        #[arg(long)]
        field: String,
        /// Comma-separated coordinates.
        #[arg(long)]
        point: String,
        /// Central-difference step; 0 uses the closed-form Jacobian.
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
    },
    /// Poisson kernel checks and harmonic extensions.
    Poisson {
        #[command(subcommand)]
        action: PoissonAction,
    },
    /// Velocity of a planar vorticity grid.
    BiotSavart {
        /// `disk`, `quadrant`, or `file PATH`.
        #[arg(long, num_args = 1..=2, required = true)]
        vorticity: Vec<String>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Residuals of the Hodge identity on a periodic vector grid.
    HodgeCheck {
        #[arg(long = "in")]
        input: PathBuf,
        /// Relative L² residual above which the exit code is 1.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Recovers the anti-holomorphic derivative from the holomorphic one.
    Beurling {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report suites.
    Report {
        suite: Suite,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ZooAction {
    List {
        #[arg(long)]
        dim: Option<usize>,
    },
}

#[derive(Subcommand)]
enum PoissonAction {
    /// Normalization and derivative-bound table.
    Check {
        #[arg(long)]
        dim: Option<usize>,
        /// Gauss nodes per radial panel.
        #[arg(long, default_value_t = 12)]
        res: usize,
        #[arg(long, default_value_t = 100_000)]
        nodes: usize,
    },
    /// Samples `P_y ∗ b` on a grid at height `y`.
    Extend {
        #[arg(long)]
        field: String,
        #[arg(long)]
        y: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Half-width of the sampled window.
        #[arg(long, default_value_t = 1.5)]
        extent: f64,
        #[arg(long, value_enum, default_value_t = Order::Value)]
        order: Order,
        /// Multiply by the cutoff `g_t` first (fields without compact support).
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Value,
    Dy,
    Dyy,
    Dx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Equivalence,
    Inequalities,
    Cutoff,
}

/// Distinguishes inequality violations (exit 1) from configuration errors (exit 2).
enum Outcome {
    Pass,
    Violation(String),
}

fn print_json(v: &serde_json::Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn parse_point(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad coordinate `{p}`")))
        .collect()
}

fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::from_json_file(p)?,
        None => RunConfig::default(),
    })
}

fn report(suite: Suite, config: Option<&Path>, out: &Path) -> anyhow::Result<Outcome> {
    let cfg = load_config(config)?;
    match suite {
        Suite::Equivalence => {
            let rep = run_equivalence_suite(&cfg)?;
            let fields = cfg.selected_fields()?;
            let mut series = Vec::new();
            for name in ["conjlog", "quadrant"] {
                if let Some(e) = fields.iter().find(|e| e.name() == name) {
                    series.push(lipschitz_scan(
                        &e.field,
                        &[0.0, 0.0],
                        &dyadic_scales(0.125, 5),
                        cfg.directions_2d,
                    )?);
                }
            }
            let svgs = vec![
                ("refinement.svg".to_string(), refinement_svg(&rep)),
                (
                    "lipschitz_scan.svg".to_string(),
                    series_svg("Lipschitz quotient at 0 against log(1/r)", &series),
                ),
            ];
            emit(&rep, out, "equivalence", &svgs)?;
            if rep.pass {
                return Ok(Outcome::Pass);
            }
            let msg = rep
                .refinement
                .iter()
                .find(|r| !r.pass)
                .map(|r| {
                    format!(
                        "ratio {} grew from {} to {} under refinement",
                        r.ratio, r.default_probes, r.refined_probes
                    )
                })
                .or_else(|| {
                    rep.envelope_violations
                        .first()
                        .map(|v| format!("{}: ratio {} = {} outside {:?}", v.field, v.ratio, v.value, v.envelope))
                })
                .unwrap_or_default();
            Ok(Outcome::Violation(msg))
        }
        Suite::Inequalities => {
            let rep = run_inequality_suite(&cfg)?;
            emit(&rep, out, "inequalities", &[])?;
            match rep.first_failure() {
                None => Ok(Outcome::Pass),
                Some(r) => Ok(Outcome::Violation(format!(
                    "{}: {} fails, lhs {} > {} * {}; witness {}",
                    r.field,
                    r.inequality,
                    r.lhs,
                    r.constant,
                    r.rhs,
                    serde_json::to_string(&r.lhs_witness)?
                ))),
            }
        }
        Suite::Cutoff => {
            let rep = run_cutoff_stability(&cfg)?;
            emit(&rep, out, "cutoff", &[])?;
            match rep.fits.iter().find(|f| !f.pass) {
                None => Ok(Outcome::Pass),
                Some(f) => Ok(Outcome::Violation(format!(
                    "{} {}: cutoff excess does not decay (slope {:?})",
                    f.field, f.kind, f.slope
                ))),
            }
        }
    }
}

fn extend(
    field: &str,
    y: f64,
    grid: usize,
    extent: f64,
    order: Order,
    cutoff: Option<f64>,
    out: &Path,
) -> anyhow::Result<()> {
    let mut v = find_entry(field)?.field;
    if let Some(t) = cutoff {
        v = apply_cutoff(&v, t)?;
    }
    let ext = HarmonicExtension::new(Arc::new(v))?;
    let n = ext.dim();
    if grid < 2 {
        bail!("grid needs at least 2 samples per axis");
    }
    let h = 2.0 * extent / (grid - 1) as f64;
    let base = GridField::empty(vec![grid; n], vec![-extent; n], vec![h; n], BoundaryMode::Compact);
    let order = match order {
        Order::Value => ExtendOrder::Value,
        Order::Dy => ExtendOrder::Dy,
        Order::Dyy => ExtendOrder::Dyy,
        Order::Dx => ExtendOrder::Dx,
    };
    if y < 2.0 * h {
        eprintln!("warning: kernel width y = {y} is below twice the output spacing {h}");
    }
    use rayon::prelude::*;
    let samples: Vec<_> = (0..base.len())
        .into_par_iter()
        .map(|i| ext.extend(&base.coord(i), y, order))
        .collect::<Result<_, _>>()?;
    let width = samples.first().map_or(0, |s: &Vec<f64>| s.len());
    let mut g = base.clone();
    for c in 0..width {
        let name = if width == 1 {
            "value".to_string()
        } else {
            format!("c{}", c + 1)
        };
        g.insert(&name, samples.iter().map(|s| s[c]).collect());
    }
    g.write_json(out)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Zoo {
            action: ZooAction::List { dim },
        } => {
            let dims = match dim {
                Some(d) => vec![d],
                None => vec![2, 3],
            };
            let mut list = Vec::new();
            for d in dims {
                list.extend(make_zoo(d)?.iter().map(|e| e.summary()));
            }
            print_json(&serde_json::to_value(list)?)?;
        }
        Command::Seminorm {
            field,
            kind,
            points,
            half_width,
            directions,
            r0,
            levels,
            seed,
        } => {
            let v = find_entry(&field)?.field;
            let cfg = ProbeConfig::random(v.dim(), points, half_width, seed)
                .with_directions(directions)
                .with_dyadic_scales(r0, levels);
            print_json(&serde_json::to_value(estimate_seminorm(&v, kind, &cfg)?)?)?;
        }
        Command::Diffops { field, point, step } => {
            let v = find_entry(&field)?.field;
            let b = derivative_bundle(&v, &parse_point(&point)?, step)?;
            print_json(&serde_json::to_value(b)?)?;
        }
        Command::Poisson {
            action: PoissonAction::Check { dim, res, nodes },
        } => {
            let dims = match dim {
                Some(d) => vec![d],
                None => vec![1, 2, 3],
            };
            let norm = normalization_table(&dims, &[0.1, 1.0, 10.0], res)?;
            let bounds = dims
                .iter()
                .map(|&n| kernel_bound_check(n, nodes, 7))
                .collect::<Result<Vec<_>, _>>()?;
            let pass = norm.iter().all(|r| r.pass) && bounds.iter().all(|b| b.pass);
            print_json(&json!({ "normalization": norm, "kernel_bounds": bounds, "pass": pass }))?;
            if !pass {
                return Ok(Outcome::Violation("Poisson kernel check failed".into()));
            }
        }
        Command::Poisson {
            action:
                PoissonAction::Extend {
                    field,
                    y,
                    grid,
                    extent,
                    order,
                    cutoff,
                    out,
                },
        } => {
            extend(&field, y, grid, extent, order, cutoff, &out)?;
        }
        Command::BiotSavart { vorticity, grid, out } => {
            let omega = match vorticity.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
                ["disk"] => disk_vorticity(1.0, 2.0, grid),
                ["quadrant"] => quadrant_vorticity(1.0, grid),
                ["file", path] => GridField::read_json(Path::new(path))?,
                other => bail!("unknown vorticity source {other:?}; expected disk, quadrant or file PATH"),
            };
            biot_savart(&omega)?.write_json(&out)?;
        }
        Command::HodgeCheck { input, tol } => {
            let rep = hodge_check(&GridField::read_json(&input)?)?;
            print_json(&serde_json::to_value(&rep)?)?;
            if rep.relative_l2.is_nan() || rep.relative_l2 > tol {
                return Ok(Outcome::Violation(format!(
                    "Hodge residual {} exceeds {tol}",
                    rep.relative_l2
                )));
            }
        }
        Command::Beurling { input, out } => {
            let res = beurling_recover_dbar(&GridField::read_json(&input)?)?;
            res.write_json(&out)?;
            print_json(&json!({ "tail_estimate": beurling_tail_estimate(&res)? }))?;
        }
        Command::Report { suite, config, out } => return report(suite, config.as_deref(), &out),
    }
    Ok(Outcome::Pass)
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("REIMANN_KIT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow!("REIMANN_KIT_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("REIMANN_KIT_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(cli));
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
