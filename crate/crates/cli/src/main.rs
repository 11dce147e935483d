use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use lens_core::grid::build_grid;
use lens_core::qualitative::{
    ball_nonexistence_scan, check_monotone, flip_rearrange, pohozaev_endpoint_field,
    pohozaev_endpoint_trajectory, pohozaev_profile, summarize_rearrangements,
};
use lens_core::{
    radial_eigenpair, scale_to_solution, shoot, sweep, tune_annulus, NeumannLaplacian,
    RadialDomain, RadialField, RadialProblem, ShootingConfig, SweepConfig, VariationalConfig,
};

#[derive(Parser)]
#[command(name = "lens", version, about = "Least-energy nodal solutions of the Neumann Lane-Emden problem on radial domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct DomainArgs {
    /// Space dimension.
    #[arg(long = "N", default_value_t = 1)]
    dim: usize,
    /// Inner radius (0 for a ball or an interval starting at 0).
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Outer radius.
    #[arg(long)]
    b: f64,
    /// Grid intervals.
    #[arg(long = "M", default_value_t = 2000)]
    intervals: usize,
}

impl DomainArgs {
    fn domain(&self) -> Result<RadialDomain> {
        Ok(RadialDomain::new(self.a, self.b, self.dim)?)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Method {
    Direct,
    Dual,
    Both,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Check {
    Monotone,
    Pohozaev,
    Rearrange,
    Nonexistence,
}

#[derive(Subcommand)]
enum Command {
    /// First nonconstant radial Neumann eigenpair.
    Eigen {
        #[command(flatten)]
        domain: DomainArgs,
        /// Write the eigenfunction as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Outer radius giving a prescribed first radial eigenvalue.
    Tune {
        #[arg(long = "N")]
        dim: usize,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        target: f64,
        #[arg(long = "M", default_value_t = 4000)]
        intervals: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Direct and/or dual variational solve at one exponent.
    Solve {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// Directory for profile CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radial shooting at one exponent.
    Shoot {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        domain: DomainArgs,
        /// Directory for the trajectory CSV and record JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Qualitative checks with JSON reports.
    Verify {
        #[arg(long, value_enum)]
        check: Check,
        /// Profile CSV (`r,value`) to check; otherwise one is computed.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long = "N", default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 5.21021)]
        b: f64,
        #[arg(long = "M", default_value_t = 2000)]
        intervals: usize,
        /// Exponent for `nonexistence`; defaults to the critical one.
        #[arg(long)]
        p: Option<f64>,
        /// Ball radius for `nonexistence`.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Random fields for `rearrange` without input.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Continuation over a list of exponents.
    Sweep {
        /// Comma-separated exponents, e.g. `0,0.5,1,1.5,3`.
        #[arg(long = "p-list", value_delimiter = ',', required = true)]
        p_list: Vec<f64>,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the nine-panel figure.
        #[arg(long)]
        figure1: bool,
        /// Re-solve from cold starts and log disagreements.
        #[arg(long)]
        cold_check: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn print(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Eigen { domain, out } => {
            let op = NeumannLaplacian::new(build_grid(domain.domain()?, domain.intervals)?)?;
            let pair = radial_eigenpair(&op, 1e-10)?;
            if let Some(path) = out {
                write(&path, &pair.eigenfunction.to_csv())?;
            }
            print(&json!({
                "eigenvalue": pair.eigenvalue,
                "residual": pair.residual,
                "iterations": pair.iterations,
            }))?;
        }
        Command::Tune { dim, a, target, intervals, tol } => {
            let t = tune_annulus(dim, a, target, intervals, tol)?;
            print(&serde_json::to_value(&t)?)?;
        }
        Command::Solve { p, domain, method, out } => solve(p, domain, method, out.as_deref())?,
        Command::Shoot { p, domain, out } => {
            let d = domain.domain()?;
            let config = ShootingConfig {
                intervals: domain.intervals,
                ..ShootingConfig::default()
            };
            let sol = shoot(&d, p, &config)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                write(&dir.join("trajectory.csv"), &sol.trajectory.to_csv())?;
                write(&dir.join("record.json"), &serde_json::to_string_pretty(&sol.record)?)?;
            }
            let r = &sol.record;
            print(&json!({
                "p": r.p,
                "s": sol.trajectory.s,
                "energy": r.energy,
                "level": r.level,
                "lambda": r.lambda,
                "residual": r.residual,
                "sup_norm": r.sup_norm,
                "monotone": r.monotone,
                "converged": r.converged,
                "crossings": sol.trajectory.crossings,
                "first_zero": sol.trajectory.first_zero,
                "roots": sol.roots,
                "notes": r.notes,
            }))?;
        }
        Command::Verify { check, input, dim, a, b, intervals, p, radius, tol, samples, seed } => {
            let input = input
                .map(|path| -> Result<RadialField> {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    Ok(RadialField::from_csv(&text)?)
                })
                .transpose()?;
            let domain = RadialDomain::new(a, b, dim);
            let report = match check {
                Check::Monotone => {
                    let u = input.context("--input is required for the monotone check")?;
                    serde_json::to_value(check_monotone(&u, tol))?
                }
                Check::Pohozaev => verify_pohozaev(input, domain?, intervals)?,
                Check::Rearrange => verify_rearrange(input, domain?, intervals, samples, seed)?,
                Check::Nonexistence => {
                    let pc = (dim as f64 + 2.0) / (dim as f64 - 2.0);
                    if dim < 3 {
                        bail!("the ball scan needs N ≥ 3");
                    }
                    let config = ShootingConfig {
                        intervals,
                        s_min: 1e-2,
                        s_max: 1e3,
                        ..ShootingConfig::default()
                    };
                    serde_json::to_value(ball_nonexistence_scan(dim, radius, p.unwrap_or(pc), &config)?)?
                }
            };
            print(&report)?;
        }
        Command::Sweep { p_list, domain, out, figure1, cold_check } => {
            let config = SweepConfig {
                intervals: domain.intervals,
                compare_cold_starts: cold_check,
                ..SweepConfig::default()
            };
            let report = sweep(&p_list, domain.domain()?, &config)?;
            report.write_to(&out, figure1)?;
            for e in &report.entries {
                match &e.record {
                    Some(r) => println!(
                        "p = {:<8} {:?}: sup {:.6e}  residual {:.2e}  monotone {}  converged {}",
                        r.p, e.route, r.sup_norm, r.residual, r.monotone, r.converged
                    ),
                    None => println!("p = {:<8} {:?}: failed: {}", e.p, e.route, e.error.as_deref().unwrap_or("")),
                }
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if !report.all_converged {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(p: f64, domain: DomainArgs, method: Method, out: Option<&Path>) -> Result<()> {
    let problem = RadialProblem::new(domain.domain()?, domain.intervals)?;
    let config = VariationalConfig::default();
    let direct = match method {
        Method::Direct | Method::Both => Some(problem.minimize_lambda(p, &config, None)?),
        Method::Dual => None,
    };
    let dual = match method {
        Method::Dual | Method::Both => Some(problem.maximize_d(p, &config, None)?),
        Method::Direct => None,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        if let Some(d) = &direct {
            write(&dir.join("v_p.csv"), &d.extremizer.to_csv())?;
            if p != 1.0 {
                write(&dir.join("u_p.csv"), &scale_to_solution(&d.extremizer, d.level, p)?.to_csv())?;
            }
        }
        if let Some(d) = &dual {
            write(&dir.join("f_p.csv"), &d.extremizer.to_csv())?;
        }
    }
    let summary = |r: &lens_core::VariationalResult| {
        json!({
            "level": r.level,
            "el_residual": r.el_residual,
            "iterations": r.iterations,
            "converged": r.converged,
            "monotonicity_violations": r.monotonicity_violations,
            "radial_representation_unavailable": r.radial_representation_unavailable,
            "seeds": r.seeds,
        })
    };
    let record = match (&direct, &dual) {
        (Some(d), Some(f)) => Some(serde_json::to_value(problem.level_record_from(d, f)?)?),
        _ => None,
    };
    print(&json!({
        "p": p,
        "eigenvalue": problem.eigenpair().eigenvalue,
        "level_record": record,
        "direct": direct.as_ref().map(summary),
        "dual": dual.as_ref().map(summary),
    }))
}

fn verify_pohozaev(input: Option<RadialField>, domain: RadialDomain, intervals: usize) -> Result<serde_json::Value> {
    if let Some(u) = input {
        let profile = pohozaev_profile(&u, None)?;
        let endpoint = pohozaev_endpoint_field(&u)?;
        return Ok(json!({
            "relative_deviation": profile.relative_deviation,
            "max_deviation": profile.max_deviation,
            "reference": profile.reference,
            "endpoint": endpoint,
        }));
    }
    let pc = domain
        .critical_exponent()
        .context("the Pohozaev check needs N ≥ 3")?;
    let config = ShootingConfig {
        intervals,
        ..ShootingConfig::default()
    };
    let sol = shoot(&domain, pc, &config)?;
    let centred = pohozaev_profile(&sol.record.profile, None)?;
    let exact = pohozaev_profile(&sol.record.profile, Some(&sol.trajectory.du))?;
    Ok(json!({
        "p": pc,
        "s": sol.trajectory.s,
        "relative_deviation": centred.relative_deviation,
        "relative_deviation_trajectory_slope": exact.relative_deviation,
        "reference": centred.reference,
        "endpoint": pohozaev_endpoint_trajectory(&domain, &sol.trajectory)?,
        "endpoint_from_grid": pohozaev_endpoint_field(&sol.record.profile)?,
    }))
}

/// Zero-mean fields of three kinds: nodal noise, a few random modes, and
/// monotone ramps.
fn random_field(grid: &std::sync::Arc<lens_core::RadialGrid>, rng: &mut ChaCha8Rng, kind: usize) -> Result<RadialField> {
    let (a, b) = (grid.domain().inner(), grid.domain().outer());
    let field = match kind % 3 {
        0 => {
            let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            RadialField::new(grid.clone(), values)?
        }
        1 => {
            let modes: Vec<(f64, f64)> = (1..=4).map(|k| (k as f64, rng.gen_range(-1.0..1.0))).collect();
            RadialField::from_fn(grid.clone(), |r| {
                let x = (r - a) / (b - a) * std::f64::consts::PI;
                modes.iter().map(|(k, c)| c * (k * x).cos()).sum()
            })?
        }
        _ => {
            let power = rng.gen_range(0.3..3.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            RadialField::from_fn(grid.clone(), |r| sign * ((r - a) / (b - a)).powf(power))?
        }
    };
    Ok(field.without_mean())
}

fn verify_rearrange(
    input: Option<RadialField>,
    domain: RadialDomain,
    intervals: usize,
    samples: usize,
    seed: u64,
) -> Result<serde_json::Value> {
    if let Some(f) = input {
        let r = flip_rearrange(&f, 2.0, 1e-8)?;
        return Ok(json!({
            "q_in": r.q_in,
            "q_out": r.q_out,
            "norm_defect": r.norm_defect,
            "grid_norm_defect": r.grid_norm_defect,
            "flipped_volume": r.flipped_volume,
            "input_monotone": check_monotone(&f, 1e-10).monotone,
        }));
    }
    let grid = build_grid(domain, intervals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::with_capacity(samples);
    for k in 0..samples {
        let f = random_field(&grid, &mut rng, k)?;
        let q = rng.gen_range(1.05..4.0);
        results.push(flip_rearrange(&f, q, 1e-10)?);
    }
    Ok(serde_json::to_value(summarize_rearrangements(&results))?)
}
