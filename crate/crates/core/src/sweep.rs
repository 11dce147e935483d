//! Continuation in `p`, limit diagnostics near `p = 0` and `p = 1`, and the
//! nine-panel profile figure.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::eigen::log_normalization_constant;
use crate::error::{LensError, Result};
use crate::grid::{RadialDomain, RadialField};
use crate::qualitative::check_monotone;
use crate::record::{SolutionMethod, SolutionRecord};
use crate::shooting::{shoot, ShootingConfig};
use crate::variational::{
    equation_residual, level_l, scale_to_solution, L0Method, RadialProblem, VariationalConfig,
    VariationalResult,
};

/// Exponents of the nine profiles of the reference figure.
pub const FIGURE1_EXPONENTS: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 3.0, 6.0, 11.0, 31.0, 61.0];

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub intervals: usize,
    pub variational: VariationalConfig,
    pub shooting: ShootingConfig,
    /// Re-solve warm-started exponents from cold seeds and log disagreements.
    pub compare_cold_starts: bool,
    /// Largest `|μ - 1|` for which `p = 1` is served by `κψ`.
    pub eigen_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            intervals: 2000,
            variational: VariationalConfig::default(),
            shooting: ShootingConfig::default(),
            compare_cold_starts: false,
            eigen_tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Variational,
    Shooting,
    EigenLimit,
    Unsupported,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub p: f64,
    pub route: Route,
    pub record: Option<SolutionRecord>,
    pub error: Option<String>,
}

impl SweepEntry {
    pub fn converged(&self) -> bool {
        self.record.as_ref().is_some_and(|r| r.converged)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendRow {
    pub p: f64,
    pub sup_norm: f64,
    pub level: f64,
}

/// `‖u_p‖_∞` and `L_p` on one side of `p = 1`, sorted by `p`.
#[derive(Debug, Clone, Serialize)]
pub struct TrendTable {
    pub below_one: bool,
    pub rows: Vec<TrendRow>,
    pub sup_strictly_increasing: bool,
    pub sup_strictly_decreasing: bool,
    /// Monotonicity of `|L_p|` in `p`.
    pub level_magnitude_strictly_increasing: bool,
    pub level_magnitude_strictly_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroLimit {
    pub p: f64,
    /// Sign-aligned `‖u_p - u_0‖_∞`.
    pub sup_distance: f64,
    pub level_p: f64,
    pub level_0: f64,
    /// `u_0` is the closed form on `(0, L)` rather than a computed minimizer.
    pub closed_form: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OneLimit {
    pub p: f64,
    /// Sign-aligned `‖u_p - κψ‖_∞ / ‖κψ‖_∞`.
    pub relative_sup_distance: f64,
    /// `(Λ₁/Λ_p)^{1/(1-p)}`, which tends to `κ`.
    pub kappa_estimate: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepDiagnostics {
    pub zero_limit: Vec<ZeroLimit>,
    pub kappa: Option<f64>,
    pub one_limit: Vec<OneLimit>,
    pub trends: Vec<TrendTable>,
    /// `(p, Λ_p)` for the variational exponents.
    pub lambda_trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub domain: RadialDomain,
    pub intervals: usize,
    pub eigenvalue: f64,
    pub p_values: Vec<f64>,
    pub entries: Vec<SweepEntry>,
    pub diagnostics: SweepDiagnostics,
    pub warnings: Vec<String>,
    pub all_converged: bool,
}

/// `κψ`, the limit of `u_p` as `p → 1` when `μ₁ = 1`.
pub fn limit_u1(problem: &RadialProblem, tolerance: f64) -> Result<RadialField> {
    let pair = problem.eigenpair();
    if (pair.eigenvalue - 1.0).abs() > tolerance {
        return Err(LensError::InvalidInput(format!(
            "μ = {} is not within {tolerance} of 1",
            pair.eigenvalue
        )));
    }
    let kappa = log_normalization_constant(&pair.eigenfunction)?;
    Ok(pair.eigenfunction.scaled(kappa))
}

/// `u_0` on `(0, L)`: `r²/2 - L²/8` up to `L/2`, odd about `L/2`; the branch
/// with `u_0(0) < 0`.
pub fn interval_sign_solution(length: f64, r: f64) -> f64 {
    if r <= 0.5 * length {
        0.5 * r * r - length * length / 8.0
    } else {
        -0.5 * (r - length).powi(2) + length * length / 8.0
    }
}

fn route_for(problem: &RadialProblem, p: f64) -> Route {
    let domain = problem.domain();
    let pc = domain.critical_exponent().unwrap_or(f64::INFINITY);
    if p == 1.0 {
        Route::EigenLimit
    } else if p == 0.0 {
        Route::Shooting
    } else if p > pc {
        if domain.is_ball() {
            Route::Unsupported
        } else {
            Route::Shooting
        }
    } else {
        Route::Variational
    }
}

/// Solves every exponent in `p_list` on `domain`.
pub fn sweep(p_list: &[f64], domain: RadialDomain, config: &SweepConfig) -> Result<SweepReport> {
    if p_list.is_empty() {
        return Err(LensError::InvalidInput("empty exponent list".into()));
    }
    if let Some(bad) = p_list.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(LensError::InvalidExponent {
            value: *bad,
            reason: "sweep exponents must be finite and nonnegative",
        });
    }
    let mut ps = p_list.to_vec();
    ps.sort_by(f64::total_cmp);
    ps.dedup();

    let problem = RadialProblem::new(domain, config.intervals)?;
    let shooting = ShootingConfig {
        intervals: config.intervals,
        ..config.shooting.clone()
    };

    let variational: Vec<f64> = ps
        .iter()
        .copied()
        .filter(|p| route_for(&problem, *p) == Route::Variational)
        .collect();
    let upward: Vec<f64> = variational.iter().copied().filter(|p| *p >= 0.5).collect();
    let downward: Vec<f64> = variational.iter().rev().copied().filter(|p| *p < 0.5).collect();

    let (chains, others) = rayon::join(
        || {
            rayon::join(
                || solve_chain(&problem, &upward, None, config),
                || solve_chain(&problem, &downward, None, config),
            )
        },
        || {
            use rayon::prelude::*;
            ps.par_iter()
                .filter(|p| route_for(&problem, **p) != Route::Variational)
                .map(|&p| solve_other(&problem, p, &shooting, config))
                .collect::<Vec<_>>()
        },
    );
    let (up, down) = chains;
    let mut warnings = Vec::new();
    let mut entries: Vec<SweepEntry> = Vec::new();
    let mut lambda_trace = Vec::new();
    for (entry, warning, lambda) in up.into_iter().chain(down) {
        warnings.extend(warning);
        if let Some(l) = lambda {
            lambda_trace.push((entry.p, l));
        }
        entries.push(entry);
    }
    entries.extend(others);
    entries.sort_by(|a, b| a.p.total_cmp(&b.p));
    lambda_trace.sort_by(|a, b| a.0.total_cmp(&b.0));

    let diagnostics = diagnostics(&problem, &entries, lambda_trace, config, &mut warnings)?;
    let all_converged = entries.iter().all(SweepEntry::converged);
    Ok(SweepReport {
        domain,
        intervals: config.intervals,
        eigenvalue: problem.eigenpair().eigenvalue,
        p_values: ps,
        entries,
        diagnostics,
        warnings,
        all_converged,
    })
}

type ChainItem = (SweepEntry, Option<String>, Option<f64>);

fn solve_chain(
    problem: &RadialProblem,
    ps: &[f64],
    seed: Option<RadialField>,
    config: &SweepConfig,
) -> Vec<ChainItem> {
    let mut warm = seed;
    let mut out = Vec::with_capacity(ps.len());
    for &p in ps {
        match solve_variational(problem, p, warm.as_ref(), config) {
            Ok((record, direct)) => {
                let mut warning = None;
                if config.compare_cold_starts && warm.is_some() {
                    if let Ok(cold) = problem.minimize_lambda(p, &config.variational, None) {
                        let sign = if cold.extremizer.dot(&direct.extremizer).unwrap_or(1.0) < 0.0 {
                            -1.0
                        } else {
                            1.0
                        };
                        let gap = cold
                            .extremizer
                            .scaled(sign)
                            .sup_distance(&direct.extremizer)
                            .unwrap_or(f64::INFINITY);
                        if gap > 1e-3 {
                            warning = Some(format!(
                                "p = {p}: warm and cold starts differ by {gap:.3e} in sup norm"
                            ));
                        }
                    }
                }
                let lambda = Some(direct.level);
                warm = Some(direct.extremizer);
                out.push((
                    SweepEntry {
                        p,
                        route: Route::Variational,
                        record: Some(record),
                        error: None,
                    },
                    warning,
                    lambda,
                ));
            }
            Err(e) => out.push((
                SweepEntry {
                    p,
                    route: Route::Variational,
                    record: None,
                    error: Some(e.to_string()),
                },
                None,
                None,
            )),
        }
    }
    out
}

/// Direct and dual solves at one exponent, merged into a record for
/// `u_p = Λ_p^{1/(p-1)} v_p`.
pub fn solve_variational(
    problem: &RadialProblem,
    p: f64,
    warm: Option<&RadialField>,
    config: &SweepConfig,
) -> Result<(SolutionRecord, VariationalResult)> {
    let direct = problem.minimize_lambda(p, &config.variational, warm)?;
    let warm_dual = warm.map(|v| v.map(|t| crate::nonlinear_average::signed_pow(t, p)));
    let dual = problem.maximize_d(p, &config.variational, warm_dual.as_ref())?;
    let levels = problem.level_record_from(&direct, &dual)?;
    let u = scale_to_solution(&direct.extremizer, direct.level, p)?;
    let energy = problem.energy_i(&u, p)?;
    let residual = equation_residual(problem.op(), &u, 1.0, p)?;
    let mut notes = vec![
        format!("|Λ_p D_p - 1| = {:.3e}", levels.duality_defect),
        format!(
            "|I_p(u_p) - L_p| / |I_p(u_p)| = {:.3e}",
            levels.relation_defect.unwrap_or(f64::NAN)
        ),
        format!(
            "direct residual {:.3e} after {} iterations, dual residual {:.3e} after {}",
            direct.el_residual, direct.iterations, dual.el_residual, dual.iterations
        ),
    ];
    if direct.radial_representation_unavailable {
        notes.push("radial representation unavailable".into());
    }
    let record = SolutionRecord {
        p,
        method: SolutionMethod::Direct,
        sup_norm: u.sup_norm(),
        sign_changing: u.max() > 0.0 && u.min() < 0.0,
        monotone: check_monotone(&u, 1e-10).monotone,
        profile: u,
        energy,
        level: levels.l_p,
        lambda: Some(direct.level),
        dual_level: Some(dual.level),
        residual,
        converged: direct.converged && dual.converged,
        notes,
    };
    Ok((record, direct))
}

fn solve_other(
    problem: &RadialProblem,
    p: f64,
    shooting: &ShootingConfig,
    config: &SweepConfig,
) -> SweepEntry {
    let route = route_for(problem, p);
    let result = match route {
        Route::EigenLimit => eigen_record(problem, config.eigen_tolerance),
        Route::Shooting => shoot(problem.domain(), p, shooting).map(|s| s.record),
        Route::Unsupported => Err(LensError::InvalidExponent {
            value: p,
            reason: "no radial solutions on a ball above the critical exponent",
        }),
        Route::Variational => unreachable!("variational exponents run in chains"),
    };
    match result {
        Ok(record) => SweepEntry {
            p,
            route,
            record: Some(record),
            error: None,
        },
        Err(e) => SweepEntry {
            p,
            route,
            record: None,
            error: Some(e.to_string()),
        },
    }
}

fn eigen_record(problem: &RadialProblem, tolerance: f64) -> Result<SolutionRecord> {
    let u = limit_u1(problem, tolerance)?;
    let mu = problem.eigenpair().eigenvalue;
    let kappa = log_normalization_constant(&problem.eigenpair().eigenfunction)?;
    Ok(SolutionRecord {
        p: 1.0,
        method: SolutionMethod::EigenLimit,
        energy: problem.energy_i(&u, 1.0)?,
        level: None,
        lambda: Some(mu),
        dual_level: Some(1.0 / mu),
        residual: equation_residual(problem.op(), &u, 1.0, 1.0)?,
        sup_norm: u.sup_norm(),
        monotone: check_monotone(&u, 1e-10).monotone,
        sign_changing: u.max() > 0.0 && u.min() < 0.0,
        profile: u,
        converged: true,
        notes: vec![format!("κ = {kappa:.15}, μ = {mu:.12}")],
    })
}

fn aligned_distance(u: &RadialField, reference: &RadialField) -> Result<f64> {
    let sign = if u.dot(reference)? < 0.0 { -1.0 } else { 1.0 };
    u.scaled(sign).sup_distance(reference)
}

fn diagnostics(
    problem: &RadialProblem,
    entries: &[SweepEntry],
    lambda_trace: Vec<(f64, f64)>,
    config: &SweepConfig,
    warnings: &mut Vec<String>,
) -> Result<SweepDiagnostics> {
    let mut diag = SweepDiagnostics {
        lambda_trace,
        ..SweepDiagnostics::default()
    };
    let solved: Vec<&SolutionRecord> = entries.iter().filter_map(|e| e.record.as_ref()).collect();

    // p → 0
    let small: Vec<&&SolutionRecord> = solved.iter().filter(|r| r.p > 0.0 && r.p <= 0.1).collect();
    if !small.is_empty() {
        let domain = problem.domain();
        let closed_form = domain.dim() == 1 && domain.inner() == 0.0;
        let u0 = if closed_form {
            let length = domain.outer();
            RadialField::from_fn(problem.grid().clone(), |r| interval_sign_solution(length, r))?
        } else {
            problem.minimize_l0(L0Method::Both, &config.variational)?.profile
        };
        let level_0 = problem.energy_i0(&u0)?;
        for r in small {
            diag.zero_limit.push(ZeroLimit {
                p: r.p,
                sup_distance: aligned_distance(&r.profile, &u0)?,
                level_p: r.level.unwrap_or(r.energy),
                level_0,
                closed_form,
            });
        }
    }

    // p → 1
    let mu = problem.eigenpair().eigenvalue;
    if (mu - 1.0).abs() <= config.eigen_tolerance {
        let u1 = limit_u1(problem, config.eigen_tolerance)?;
        let kappa = log_normalization_constant(&problem.eigenpair().eigenfunction)?;
        diag.kappa = Some(kappa);
        for r in solved.iter().filter(|r| r.p != 1.0 && (r.p - 1.0).abs() <= 0.1) {
            let Some(lambda) = r.lambda else { continue };
            diag.one_limit.push(OneLimit {
                p: r.p,
                relative_sup_distance: aligned_distance(&r.profile, &u1)? / u1.sup_norm(),
                kappa_estimate: (mu / lambda).powf(1.0 / (1.0 - r.p)),
            });
        }
    } else {
        for below in [true, false] {
            let rows: Vec<TrendRow> = solved
                .iter()
                .filter(|r| r.p > 0.0 && r.p != 1.0 && (r.p < 1.0) == below)
                .filter(|r| problem.domain().critical_exponent().map_or(true, |pc| r.p <= pc))
                .filter_map(|r| {
                    let level = r.level.or_else(|| r.lambda.and_then(|l| level_l(r.p, l).ok()))?;
                    Some(TrendRow {
                        p: r.p,
                        sup_norm: r.sup_norm,
                        level,
                    })
                })
                .collect();
            if rows.len() >= 2 {
                diag.trends.push(trend_table(below, rows));
            }
        }
    }

    for e in entries {
        if let Some(err) = &e.error {
            warnings.push(format!("p = {}: {err}", e.p));
        }
    }
    Ok(diag)
}

fn trend_table(below_one: bool, rows: Vec<TrendRow>) -> TrendTable {
    let inc = |f: &dyn Fn(&TrendRow) -> f64| rows.windows(2).all(|w| f(&w[1]) > f(&w[0]));
    let dec = |f: &dyn Fn(&TrendRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    TrendTable {
        below_one,
        sup_strictly_increasing: inc(&|r| r.sup_norm),
        sup_strictly_decreasing: dec(&|r| r.sup_norm),
        level_magnitude_strictly_increasing: inc(&|r| r.level.abs()),
        level_magnitude_strictly_decreasing: dec(&|r| r.level.abs()),
        rows,
    }
}

/// Formats an exponent for file names: `0.5`, `3`, `0.001`.
pub fn format_exponent(p: f64) -> String {
    format!("{p}")
}

impl SweepReport {
    pub fn levels_csv(&self) -> String {
        let mut out = String::from("p,L_p,Lambda_p,D_p,sup_norm,residual,monotone,converged\n");
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        for e in &self.entries {
            match &e.record {
                Some(r) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{:e},{:e},{},{}",
                        r.p,
                        opt(r.level),
                        opt(r.lambda),
                        opt(r.dual_level),
                        r.sup_norm,
                        r.residual,
                        r.monotone,
                        r.converged
                    );
                }
                None => {
                    let _ = writeln!(out, "{},,,,,,,false", e.p);
                }
            }
        }
        out
    }

    /// Writes `levels.csv`, `profile_p=<p>.csv`, `report.json` and, when
    /// asked, `figure1.svg` into `dir`.
    pub fn write_to(&self, dir: &Path, figure: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("levels.csv"), self.levels_csv())?;
        for e in &self.entries {
            if let Some(r) = &e.record {
                let name = format!("profile_p={}.csv", format_exponent(r.p));
                std::fs::write(dir.join(name), r.profile.to_csv())?;
            }
        }
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("report.json"), json)?;
        if figure {
            std::fs::write(dir.join("figure1.svg"), self.figure_svg())?;
        }
        Ok(())
    }

    /// Small-multiple line plots of the profiles, three per row.
    pub fn figure_svg(&self) -> String {
        let records: Vec<&SolutionRecord> = self.entries.iter().filter_map(|e| e.record.as_ref()).collect();
        let (pw, ph, margin) = (300.0, 220.0, 36.0);
        let cols = 3usize;
        let rows = records.len().div_ceil(cols).max(1);
        let width = cols as f64 * pw;
        let height = rows as f64 * ph;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (k, r) in records.iter().enumerate() {
            let x0 = (k % cols) as f64 * pw;
            let y0 = (k / cols) as f64 * ph;
            let nodes = r.profile.grid().nodes();
            let values = r.profile.values();
            let (rmin, rmax) = (nodes[0], nodes[nodes.len() - 1]);
            let scale = r.profile.sup_norm().max(f64::MIN_POSITIVE);
            let plot_w = pw - 2.0 * margin;
            let plot_h = ph - 2.0 * margin;
            let px = |x: f64| x0 + margin + (x - rmin) / (rmax - rmin) * plot_w;
            let py = |y: f64| y0 + margin + (1.0 - (y / scale + 1.0) / 2.0) * plot_h;
            let _ = writeln!(
                svg,
                r##"<rect x="{:.1}" y="{:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#888"/>"##,
                x0 + margin,
                y0 + margin
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#bbb" stroke-dasharray="3,3"/>"##,
                px(rmin),
                py(0.0),
                px(rmax),
                py(0.0)
            );
            let stride = (values.len() / 400).max(1);
            let mut points = String::new();
            for (i, (x, y)) in nodes.iter().zip(values).enumerate() {
                if i % stride == 0 || i + 1 == values.len() {
                    let _ = write!(points, "{:.2},{:.2} ", px(*x), py(*y));
                }
            }
            let _ = writeln!(
                svg,
                r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>"##,
                points.trim_end()
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">p = {}</text>"#,
                x0 + pw / 2.0,
                y0 + margin - 10.0,
                format_exponent(r.p)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="start" font-size="10">±{:.3}</text>"#,
                x0 + 4.0,
                y0 + margin + 10.0,
                scale
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">r ∈ [{}, {}]</text>"#,
                x0 + pw / 2.0,
                y0 + ph - 10.0,
                rmin,
                rmax
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}
