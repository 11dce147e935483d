//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lens_core::grid::build_grid;
use lens_core::qualitative::{
    ball_nonexistence_scan, check_monotone, flip_rearrange, pohozaev_endpoint_field,
    pohozaev_endpoint_trajectory, pohozaev_profile, summarize_rearrangements,
};
use lens_core::sweep::{interval_sign_solution, Route, FIGURE1_EXPONENTS};
use lens_core::{
    level_l, limit_u1, radial_eigenpair, scale_to_solution, shoot, sweep, tune_annulus, NeumannLaplacian,
    RadialDomain, RadialField, RadialGrid, RadialProblem, RearrangementResult, ShootingConfig, SweepConfig,
    VariationalConfig, VariationalResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REFERENCE_OUTER_RADIUS: f64 = 5.21021;
/// `exp(-½∫ψ² ln ψ²)` for `ψ = √(2/π) cos r` on `(0, π)`, which is `2√(π/2e)`.
const KAPPA_INTERVAL: f64 = 1.520_346_901_066_280_8;

struct Ctx {
    tuned_b: f64,
}

type Check = fn(&Ctx) -> Result<String, String>;

fn ensure(cond: bool, msg: String) -> Result<String, String> {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn tuned_annulus(ctx: &Ctx) -> RadialDomain {
    RadialDomain::annulus(1.0, ctx.tuned_b, 4).unwrap()
}

fn aligned_sup(u: &RadialField, reference: &RadialField) -> f64 {
    let s = if u.dot(reference).unwrap() < 0.0 { -1.0 } else { 1.0 };
    u.scaled(s).sup_distance(reference).unwrap()
}

fn solution(problem: &RadialProblem, p: f64) -> (RadialField, VariationalResult) {
    let res = problem.minimize_lambda(p, &VariationalConfig::default(), None).unwrap();
    assert!(res.converged, "direct solve at p = {p} did not converge");
    (scale_to_solution(&res.extremizer, res.level, p).unwrap(), res)
}

fn c01_tuning(_: &Ctx) -> Result<String, String> {
    let t = Instant::now();
    let res = tune_annulus(4, 1.0, 1.0, 4000, 1e-10).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    ensure(
        (res.outer_radius - REFERENCE_OUTER_RADIUS).abs() <= 5e-3 && el < Duration::from_secs(30),
        format!("b = {:.6} (target 5.21021 ± 5e-3), {:.2?}", res.outer_radius, el),
    )
}

fn c02_eigen(_: &Ctx) -> Result<String, String> {
    let op = NeumannLaplacian::new(build_grid(RadialDomain::interval(0.0, PI).unwrap(), 4096).unwrap()).unwrap();
    let pair = radial_eigenpair(&op, 1e-10).unwrap();
    let c = (2.0 / PI).sqrt();
    let err = op
        .grid()
        .nodes()
        .iter()
        .zip(pair.eigenfunction.values())
        .fold(0.0f64, |m, (r, v)| m.max((v - c * r.cos()).abs()));
    ensure(
        (pair.eigenvalue - 1.0).abs() <= 1e-5 && err <= 1e-4,
        format!("|μ - 1| = {:.2e} (≤ 1e-5), sup|ψ - √(2/π)cos| = {err:.2e} (≤ 1e-4)", (pair.eigenvalue - 1.0).abs()),
    )
}

fn c03_duality(ctx: &Ctx) -> Result<String, String> {
    let problem = RadialProblem::new(tuned_annulus(ctx), 2000).unwrap();
    let cfg = VariationalConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [0.5, 2.0, 3.0] {
        let t = Instant::now();
        let direct = problem.minimize_lambda(p, &cfg, None).unwrap();
        let t_direct = t.elapsed();
        let t = Instant::now();
        let dual = problem.maximize_d(p, &cfg, None).unwrap();
        let t_dual = t.elapsed();
        let defect = (direct.level * dual.level - 1.0).abs();
        ok &= defect <= 1e-3
            && t_direct < Duration::from_secs(60)
            && t_dual < Duration::from_secs(60)
            && direct.converged
            && dual.converged;
        parts.push(format!("p={p}: {defect:.1e} ({t_direct:.0?}/{t_dual:.0?})"));
    }
    ensure(ok, format!("|Λ_p D_p - 1| ≤ 1e-3: {}", parts.join(", ")))
}

fn c04_level_relation(ctx: &Ctx) -> Result<String, String> {
    let problem = RadialProblem::new(tuned_annulus(ctx), 2000).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [0.5, 3.0] {
        let (u, res) = solution(&problem, p);
        let i = problem.energy_i(&u, p).unwrap();
        let l = (p - 1.0) / (2.0 * (p + 1.0)) * res.level.powf((p + 1.0) / (p - 1.0));
        let rel = (i - l).abs() / i.abs();
        ok &= rel <= 1e-3;
        parts.push(format!("p={p}: {rel:.1e}"));
    }
    ensure(ok, format!("|I_p(u_p) - L_p| / |I_p(u_p)| ≤ 1e-3: {}", parts.join(", ")))
}

fn c05_cross_validation(ctx: &Ctx) -> Result<String, String> {
    let domain = tuned_annulus(ctx);
    let problem = RadialProblem::new(domain, 2000).unwrap();
    let (u, _) = solution(&problem, 3.0);
    let shot = shoot(&domain, 3.0, &ShootingConfig::default()).unwrap();
    let rel = aligned_sup(&u, &shot.record.profile) / shot.record.sup_norm;
    ensure(rel <= 1e-2, format!("relative sup distance {rel:.2e} (≤ 1e-2)"))
}

fn c06_zero_limit(_: &Ctx) -> Result<String, String> {
    let problem = RadialProblem::new(RadialDomain::interval(0.0, PI).unwrap(), 2000).unwrap();
    let p = 1e-3;
    let (u, res) = solution(&problem, p);
    let u0 = RadialField::from_fn(problem.grid().clone(), |r| interval_sign_solution(PI, r)).unwrap();
    let dist = aligned_sup(&u, &u0);
    // I_0(u_0) = ∫ u0'^2/2 - |u0| = π³/48 - π³/16
    let i0 = -PI.powi(3) / 24.0;
    let lp = level_l(p, res.level).unwrap();
    ensure(
        dist <= 1e-2 && (lp - i0).abs() <= 1e-2,
        format!("sup|u_p - u_0| = {dist:.2e} (≤ 1e-2), |L_p - I_0(u_0)| = {:.2e} (≤ 1e-2)", (lp - i0).abs()),
    )
}

fn kappa_quadrature() -> f64 {
    // composite Simpson with 10⁶ panels; t ln t is continuous at the zero of ψ
    let n = 1_000_000usize;
    let h = PI / n as f64;
    let g = |r: f64| {
        let t = 2.0 / PI * r.cos().powi(2);
        if t == 0.0 {
            0.0
        } else {
            t * t.ln()
        }
    };
    let mut s = g(0.0) + g(PI);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    (-0.5 * s * h / 3.0).exp()
}

fn c07_one_limit(ctx: &Ctx) -> Result<String, String> {
    let kq = kappa_quadrature();
    if (kq - KAPPA_INTERVAL).abs() > 1e-8 {
        return Err(format!("κ oracle mismatch: {kq} vs {KAPPA_INTERVAL}"));
    }
    let mut parts = Vec::new();
    let mut ok = true;
    let interval = RadialProblem::new(RadialDomain::interval(0.0, PI).unwrap(), 2000).unwrap();
    let limit = RadialField::from_fn(interval.grid().clone(), |r| KAPPA_INTERVAL * (2.0 / PI).sqrt() * r.cos()).unwrap();
    for p in [0.99, 1.01] {
        let (u, _) = solution(&interval, p);
        let rel = aligned_sup(&u, &limit) / limit.sup_norm();
        ok &= rel <= 5e-2;
        parts.push(format!("(0,π) p={p}: {rel:.1e}"));
    }
    let annulus = RadialProblem::new(tuned_annulus(ctx), 2000).unwrap();
    let u1 = limit_u1(&annulus, 1e-2).unwrap();
    for p in [0.99, 1.01] {
        let (u, _) = solution(&annulus, p);
        let rel = aligned_sup(&u, &u1) / u1.sup_norm();
        ok &= rel <= 5e-2;
        parts.push(format!("annulus p={p}: {rel:.1e}"));
    }
    ensure(ok, format!("‖u_p - κψ‖∞/‖κψ‖∞ ≤ 5e-2: {}", parts.join(", ")))
}

fn c08_trichotomy(_: &Ctx) -> Result<String, String> {
    let problem = RadialProblem::new(RadialDomain::interval(0.0, 1.0).unwrap(), 2000).unwrap();
    let stats = |ps: &[f64]| -> Vec<(f64, f64)> {
        ps.iter()
            .map(|&p| {
                let (u, res) = solution(&problem, p);
                (u.sup_norm(), level_l(p, res.level).unwrap())
            })
            .collect()
    };
    let above = stats(&[1.5, 1.25, 1.1, 1.01]);
    let below = stats(&[0.5, 0.75, 0.9, 0.99]);
    let up_ok = above.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1);
    // L_p < 0 below 1 and tends to 0: its magnitude decreases
    let down_ok = below.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1.abs() < w[0].1.abs());
    ensure(
        up_ok && down_ok,
        format!(
            "μ = π²: sup/L_p increasing toward 1⁺ ({}), sup/|L_p| decreasing toward 1⁻ ({}); sup at 1.01 = {:.1e}, at 0.99 = {:.1e}",
            up_ok, down_ok, above[3].0, below[3].0
        ),
    )
}

fn c09_pohozaev(ctx: &Ctx) -> Result<String, String> {
    let domain = tuned_annulus(ctx);
    let shot = shoot(&domain, 3.0, &ShootingConfig::default()).unwrap();
    let profile = pohozaev_profile(&shot.record.profile, None).unwrap();
    let endpoint_grid = pohozaev_endpoint_field(&shot.record.profile).unwrap();
    let endpoint = pohozaev_endpoint_trajectory(&domain, &shot.trajectory).unwrap();
    let scan_cfg = ShootingConfig {
        s_min: 1e-2,
        s_max: 1e3,
        ..ShootingConfig::default()
    };
    let critical = ball_nonexistence_scan(4, 1.0, 3.0, &scan_cfg).unwrap();
    let sub = ball_nonexistence_scan(4, 1.0, 2.5, &scan_cfg).unwrap();
    ensure(
        profile.relative_deviation <= 1e-2
            && endpoint_grid.relative_defect <= 2e-2
            && endpoint.relative_defect <= 2e-2
            && critical.closures.is_empty()
            && !sub.closures.is_empty(),
        format!(
            "max|P - P(a)|/|P(a)| = {:.1e} (≤ 1e-2), endpoint {:.1e}/{:.1e} (≤ 2e-2), ball p=3: {}, p=2.5: {}",
            profile.relative_deviation,
            endpoint_grid.relative_defect,
            endpoint.relative_defect,
            critical.verdict,
            sub.verdict
        ),
    )
}

fn random_zero_mean(grid: &std::sync::Arc<RadialGrid>, rng: &mut ChaCha8Rng, k: usize) -> RadialField {
    let (a, b) = (grid.domain().inner(), grid.domain().outer());
    let f = match k % 3 {
        0 => RadialField::new(grid.clone(), (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap(),
        1 => {
            let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            RadialField::from_fn(grid.clone(), |r| {
                let x = (r - a) / (b - a) * PI;
                c.iter().enumerate().map(|(j, cj)| cj * ((j + 1) as f64 * x).cos()).sum()
            })
            .unwrap()
        }
        _ => {
            let e = rng.gen_range(0.3..3.0);
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            RadialField::from_fn(grid.clone(), |r| s * ((r - a) / (b - a)).powf(e)).unwrap()
        }
    };
    f.without_mean()
}

fn c10_rearrangement(ctx: &Ctx) -> Result<String, String> {
    let grid = build_grid(tuned_annulus(ctx), 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let results: Vec<RearrangementResult> = (0..100)
        .map(|k| {
            let f = random_zero_mean(&grid, &mut rng, k);
            let q = rng.gen_range(1.05..4.0);
            flip_rearrange(&f, q, 1e-10).unwrap()
        })
        .collect();
    let s = summarize_rearrangements(&results);
    ensure(
        s.passed && s.samples == 100,
        format!(
            "100 fields: max norm defect {:.1e}, min gain {:.1e}, near-equality {} (monotone {}){}",
            s.max_norm_defect,
            s.min_gain,
            s.near_equality,
            s.near_equality_monotone,
            if s.failures.is_empty() { String::new() } else { format!("; {:?}", s.failures) }
        ),
    )
}

fn c11_monotone(ctx: &Ctx) -> Result<String, String> {
    let report = sweep(&[0.5, 3.0, 6.0, 31.0], tuned_annulus(ctx), &SweepConfig::default()).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for e in &report.entries {
        let r = e.record.as_ref().ok_or(format!("p = {} failed", e.p))?;
        let m = check_monotone(&r.profile, 1e-10);
        ok &= r.converged && m.monotone;
        parts.push(format!("p={} ({:?}) {}", r.p, e.route, m.monotone));
    }
    ensure(ok, format!("check_monotone: {}", parts.join(", ")))
}

fn c12_figure(_: &Ctx) -> Result<String, String> {
    let t = Instant::now();
    let domain = RadialDomain::annulus(1.0, REFERENCE_OUTER_RADIUS, 4).unwrap();
    let report = sweep(&FIGURE1_EXPONENTS, domain, &SweepConfig::default()).unwrap();
    let dir = std::env::temp_dir().join(format!("lens-figure1-{}", std::process::id()));
    report.write_to(&dir, true).unwrap();
    let svg = std::fs::read_to_string(dir.join("figure1.svg")).unwrap();
    std::fs::remove_dir_all(&dir).ok();
    let el = t.elapsed();
    let good = report
        .entries
        .iter()
        .filter(|e| e.record.as_ref().is_some_and(|r| r.converged && r.sign_changing && r.monotone))
        .count();
    let routes: Vec<Route> = report.entries.iter().map(|e| e.route).collect();
    ensure(
        good == 9 && svg.matches("<polyline").count() == 9 && el < Duration::from_secs(300),
        format!("{good}/9 profiles converged, sign-changing and monotone in {el:.1?} (< 5 min); routes {routes:?}"),
    )
}

fn c13_no_blowup(ctx: &Ctx) -> Result<String, String> {
    let problem = RadialProblem::new(tuned_annulus(ctx), 2000).unwrap();
    let (u25, _) = solution(&problem, 2.5);
    let (u299, _) = solution(&problem, 2.99);
    let ratio = u299.sup_norm() / u25.sup_norm();
    ensure(
        (0.5..=2.0).contains(&ratio),
        format!("‖u_2.99‖∞ / ‖u_2.5‖∞ = {ratio:.4} (within a factor 2)"),
    )
}

fn main() {
    let criteria: [(&str, Check); 13] = [
        ("annulus tuning", c01_tuning),
        ("eigenpair on (0,π)", c02_eigen),
        ("duality identity", c03_duality),
        ("level relation", c04_level_relation),
        ("shooting vs variational", c05_cross_validation),
        ("p → 0 limit", c06_zero_limit),
        ("p → 1 limit with μ = 1", c07_one_limit),
        ("p = 1 trichotomy", c08_trichotomy),
        ("Pohozaev and ball scan", c09_pohozaev),
        ("flip-and-rearrange", c10_rearrangement),
        ("monotone annulus solutions", c11_monotone),
        ("nine-profile figure", c12_figure),
        ("no blow-up at the critical power", c13_no_blowup),
    ];
    let tuned_b = tune_annulus(4, 1.0, 1.0, 4000, 1e-10).map_or(REFERENCE_OUTER_RADIUS, |t| t.outer_radius);
    let ctx = Ctx { tuned_b };
    println!("acceptance: tuned annulus (1, {tuned_b:.6}) in R^4");
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&ctx)))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2} {name}: {detail} [{:.1?}]", k + 1, t.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
