//! Qualitative checks: radial monotonicity, the Pohozaev first integral at the
//! critical power, nonexistence evidence on balls, and the flip-and-rearrange
//! transform.

use serde::Serialize;

use crate::error::{LensError, Result};
use crate::grid::{RadialDomain, RadialField};
use crate::shooting::{refine_roots, scan_initial_values, integrate_radial, ShootingConfig, ShootingTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
    Constant,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonotoneCheck {
    pub monotone: bool,
    pub direction: Direction,
    /// Largest step against `direction`, relative to `max|u|`.
    pub worst_violation: f64,
}

/// Consecutive differences share a sign up to `tol · max|u|`.
pub fn check_monotone(u: &RadialField, tol: f64) -> MonotoneCheck {
    let scale = u.sup_norm();
    if scale == 0.0 {
        return MonotoneCheck {
            monotone: true,
            direction: Direction::Constant,
            worst_violation: 0.0,
        };
    }
    let (mut up, mut down) = (0.0f64, 0.0f64);
    for w in u.values().windows(2) {
        let d = w[1] - w[0];
        up = up.max(d);
        down = down.max(-d);
    }
    let (direction, worst) = if up == 0.0 && down == 0.0 {
        (Direction::Constant, 0.0)
    } else if down >= up {
        (Direction::Decreasing, up / scale)
    } else {
        (Direction::Increasing, down / scale)
    };
    MonotoneCheck {
        monotone: worst <= tol,
        direction,
        worst_violation: worst,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PohozaevProfile {
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    /// `P(a)`.
    pub reference: f64,
    /// `max |P(r) - P(a)|`.
    pub max_deviation: f64,
    /// `max |P(r) - P(a)| / |P(a)|`.
    pub relative_deviation: f64,
}

fn check_pohozaev_dim(domain: &RadialDomain) -> Result<f64> {
    if domain.dim() < 3 {
        return Err(LensError::InvalidDomain(format!(
            "the Pohozaev first integral needs N ≥ 3, got N = {}",
            domain.dim()
        )));
    }
    Ok(domain.dim() as f64)
}

/// `P(r) = rᴺ u'²/(2N) + (N-2)/(2N) r^{N-1} u' u + (N-2)/(2N²) rᴺ |u|^{2N/(N-2)}`.
///
/// Slopes are centred differences with `u' = 0` at both ends unless given.
pub fn pohozaev_profile(u: &RadialField, slope: Option<&[f64]>) -> Result<PohozaevProfile> {
    let grid = u.grid();
    let n = check_pohozaev_dim(grid.domain())?;
    let v = u.values();
    let du: Vec<f64> = match slope {
        Some(s) => {
            if s.len() != v.len() {
                return Err(LensError::GridMismatch);
            }
            s.to_vec()
        }
        None => centred_slope(v, grid.step()),
    };
    let crit = 2.0 * n / (n - 2.0);
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(v)
        .zip(&du)
        .map(|((r, u), d)| {
            let rn = r.powf(n);
            rn * d * d / (2.0 * n)
                + (n - 2.0) / (2.0 * n) * r.powf(n - 1.0) * d * u
                + (n - 2.0) / (2.0 * n * n) * rn * u.abs().powf(crit)
        })
        .collect();
    if !values.iter().all(|x| x.is_finite()) {
        return Err(LensError::NonFinite("Pohozaev profile"));
    }
    let reference = values[0];
    let max_deviation = values.iter().fold(0.0f64, |m, x| m.max((x - reference).abs()));
    Ok(PohozaevProfile {
        r: grid.nodes().to_vec(),
        relative_deviation: if reference != 0.0 {
            max_deviation / reference.abs()
        } else {
            max_deviation
        },
        values,
        reference,
        max_deviation,
    })
}

fn centred_slope(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut du = vec![0.0; n];
    for i in 1..n - 1 {
        du[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    du
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EndpointIdentity {
    pub first_zero: f64,
    /// `(N-2)/(2N²) aᴺ |u(a)|^{2N/(N-2)}`.
    pub boundary_term: f64,
    /// `r₀ᴺ u'(r₀)² / (2N)`.
    pub zero_term: f64,
    pub relative_defect: f64,
}

/// Both sides of the identity linking `u(a)` to the slope at the first zero.
pub fn pohozaev_endpoint(domain: &RadialDomain, u_a: f64, r0: f64, slope_r0: f64) -> Result<EndpointIdentity> {
    let n = check_pohozaev_dim(domain)?;
    let a = domain.inner();
    let boundary_term = (n - 2.0) / (2.0 * n * n) * a.powf(n) * u_a.abs().powf(2.0 * n / (n - 2.0));
    let zero_term = r0.powf(n) * slope_r0 * slope_r0 / (2.0 * n);
    let scale = boundary_term.abs().max(zero_term.abs());
    Ok(EndpointIdentity {
        first_zero: r0,
        boundary_term,
        zero_term,
        relative_defect: if scale > 0.0 {
            (boundary_term - zero_term).abs() / scale
        } else {
            0.0
        },
    })
}

/// Endpoint identity from a trajectory, using its located first zero.
pub fn pohozaev_endpoint_trajectory(domain: &RadialDomain, t: &ShootingTrajectory) -> Result<EndpointIdentity> {
    let (r0, d0) = t
        .first_zero
        .zip(t.first_zero_slope)
        .ok_or_else(|| LensError::InvalidInput("trajectory has no zero".into()))?;
    pohozaev_endpoint(domain, t.s, r0, d0)
}

/// Endpoint identity from a grid field: the zero is linearly interpolated and
/// the slope there interpolated from centred differences.
pub fn pohozaev_endpoint_field(u: &RadialField) -> Result<EndpointIdentity> {
    let grid = u.grid();
    let v = u.values();
    let r = grid.nodes();
    let k = v
        .windows(2)
        .position(|w| w[0] * w[1] <= 0.0 && w[0] != w[1])
        .ok_or_else(|| LensError::InvalidInput("field has no sign change".into()))?;
    let t = v[k] / (v[k] - v[k + 1]);
    let r0 = r[k] + t * (r[k + 1] - r[k]);
    let du = centred_slope(v, grid.step());
    let slope = if k == 0 || k + 1 == v.len() - 1 {
        (v[k + 1] - v[k]) / grid.step()
    } else {
        du[k] + t * (du[k + 1] - du[k])
    };
    pohozaev_endpoint(grid.domain(), v[0], r0, slope)
}

#[derive(Debug, Clone, Serialize)]
pub struct NonexistenceReport {
    pub dim: usize,
    pub radius: f64,
    pub p: f64,
    pub critical_exponent: Option<f64>,
    pub s_range: (f64, f64),
    pub scanned: usize,
    /// `(crossings, count)`.
    pub crossing_histogram: Vec<(usize, usize)>,
    pub blown_up: usize,
    /// Smallest `|u'(R)|` over all finite trajectories.
    pub min_terminal_slope: Option<f64>,
    /// Smallest `|u'(R)|` over single-crossing trajectories.
    pub min_terminal_slope_single: Option<f64>,
    /// Initial values of single-crossing trajectories that close with
    /// `u'(R) = 0`.
    pub closures: Vec<f64>,
    /// Smallest `r₀ᴺ u'(r₀)²/(2N)` over trajectories that cross zero.
    pub pohozaev_zero_term: Option<f64>,
    pub verdict: String,
}

/// Scans `u'(R)` over radial solutions started at the origin of the ball of
/// radius `R`. This is evidence, not proof: it reports whether a Neumann
/// closure was found on the scanned range. Steps are refined with `|s|` so the
/// concentrating core of large starts stays resolved (at least 40 steps per
/// length scale unless `config` asks for more).
pub fn ball_nonexistence_scan(
    dim: usize,
    radius: f64,
    p: f64,
    config: &ShootingConfig,
) -> Result<NonexistenceReport> {
    let domain = RadialDomain::ball(radius, dim)?;
    let config = &ShootingConfig {
        steps_per_scale: Some(config.steps_per_scale.unwrap_or(40.0).max(40.0)),
        ..config.clone()
    };
    // solutions are odd in s, so positive starts suffice
    let scan = scan_initial_values(&domain, p, config, &[1.0])?.remove(0);
    let mut hist = std::collections::BTreeMap::new();
    let mut blown_up = 0;
    let mut min_all: Option<f64> = None;
    let mut min_single: Option<f64> = None;
    for pt in &scan {
        if pt.blew_up {
            blown_up += 1;
            continue;
        }
        *hist.entry(pt.crossings).or_insert(0usize) += 1;
        let m = pt.terminal_slope.abs();
        min_all = Some(min_all.map_or(m, |x: f64| x.min(m)));
        if pt.crossings == 1 {
            min_single = Some(min_single.map_or(m, |x: f64| x.min(m)));
        }
    }
    let closures: Vec<f64> = refine_roots(&domain, p, config, &scan)?
        .into_iter()
        .filter(|t| t.crossings == 1 && !t.blew_up && t.relative_miss() <= 1e-6)
        .map(|t| t.s)
        .collect();
    let mut pohozaev: Option<f64> = None;
    for pt in scan.iter().filter(|pt| pt.crossings >= 1 && !pt.blew_up) {
        let t = integrate_radial(&domain, p, pt.s, config)?;
        if let (Some(r0), Some(d0)) = (t.first_zero, t.first_zero_slope) {
            let z = r0.powi(dim as i32) * d0 * d0 / (2.0 * dim as f64);
            pohozaev = Some(pohozaev.map_or(z, |x: f64| x.min(z)));
        }
    }
    let verdict = if closures.is_empty() {
        "no Neumann closure found".to_string()
    } else {
        format!("Neumann closure found at {} initial value(s)", closures.len())
    };
    Ok(NonexistenceReport {
        dim,
        radius,
        p,
        critical_exponent: domain.critical_exponent(),
        s_range: (config.s_min, config.s_max),
        scanned: scan.len(),
        crossing_histogram: hist.into_iter().collect(),
        blown_up,
        min_terminal_slope: min_all,
        min_terminal_slope_single: min_single,
        closures,
        pohozaev_zero_term: pohozaev,
        verdict,
    })
}

/// A piece of a step profile: `value` on a set of measure `volume`.
#[derive(Debug, Clone, Copy)]
struct Atom {
    value: f64,
    volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RearrangementResult {
    pub input: RadialField,
    /// Cell averages of the rearranged step profile.
    pub output: RadialField,
    pub exponent: f64,
    /// `∫ f K f` for `f` read as constant on each grid cell.
    pub q_in: f64,
    /// `∫ f^⊛ K f^⊛` for the rearranged step profile.
    pub q_out: f64,
    pub norm_in: f64,
    pub norm_out: f64,
    /// `|‖f^⊛‖_q - ‖f‖_q|` on the step profiles.
    pub norm_defect: f64,
    /// The same defect for the cell-averaged grid output.
    pub grid_norm_defect: f64,
    pub mean_out: f64,
    /// Measure of the region where the sign was flipped.
    pub flipped_volume: f64,
}

/// Flip-and-rearrange: `f` is multiplied by `+1` where `𝓘f > 0` and by `-1`
/// where `𝓘f ≤ 0`, with `𝓘f(r) = ∫_{a<|x|<r} f`, then rearranged decreasingly
/// in the volume coordinate.
///
/// `f` is taken constant on each grid cell, so `𝓘f` is piecewise linear in
/// the volume coordinate and its zeros are located exactly; cells are split
/// there. The quadratic forms use the exact inverse of the Laplacian on step
/// functions, `∫ f K f = ∫_a^b 𝓘f(r)² / (σ r^{N-1}) dr`.
pub fn flip_rearrange(f: &RadialField, exponent: f64, mean_tol: f64) -> Result<RearrangementResult> {
    if !(exponent >= 1.0) {
        return Err(LensError::InvalidExponent {
            value: exponent,
            reason: "norm exponent must be at least 1",
        });
    }
    if !f.is_finite() {
        return Err(LensError::NonFinite("rearrangement input"));
    }
    let grid = f.grid();
    let domain = *grid.domain();
    let w = grid.weights();
    let v = f.values();
    let mass: f64 = w.iter().zip(v).map(|(a, b)| a * b.abs()).sum();
    let integral = f.integrate();
    if integral.abs() > mean_tol * mass.max(f64::MIN_POSITIVE) {
        return Err(LensError::Compatibility {
            integral,
            bound: mean_tol * mass,
        });
    }

    let mut atoms = Vec::with_capacity(v.len() + 8);
    let mut flipped_volume = 0.0;
    let mut cum = 0.0;
    for (&vol, &c) in w.iter().zip(v) {
        let mut pieces = vec![(0.0, vol)];
        if c != 0.0 {
            let t = -cum / c;
            if t > 0.0 && t < vol {
                pieces = vec![(0.0, t), (t, vol)];
            }
        }
        for (lo, hi) in pieces {
            let mid = cum + c * 0.5 * (lo + hi);
            let keep = mid > 0.0;
            if hi <= lo {
                continue;
            }
            if !keep {
                flipped_volume += hi - lo;
            }
            atoms.push(Atom {
                value: if keep { c } else { -c },
                volume: hi - lo,
            });
        }
        cum += c * vol;
    }
    atoms.sort_by(|x, y| y.value.total_cmp(&x.value));

    let norm = |it: &mut dyn Iterator<Item = (f64, f64)>| -> f64 {
        it.map(|(val, vol)| vol * val.abs().powf(exponent)).sum::<f64>().powf(1.0 / exponent)
    };
    let norm_in = norm(&mut w.iter().zip(v).map(|(a, b)| (*b, *a)));
    let norm_out = norm(&mut atoms.iter().map(|a| (a.value, a.volume)));

    // cell averages of the rearranged profile
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    let mut left = atoms.first().map_or(0.0, |a| a.volume);
    for (i, &vol) in w.iter().enumerate() {
        let mut need = vol;
        let mut acc = 0.0;
        let mut pieces = 0;
        let mut last = 0.0;
        while need > 0.0 && k < atoms.len() {
            let take = left.min(need);
            last = atoms[k].value;
            acc += atoms[k].value * take;
            pieces += 1;
            need -= take;
            left -= take;
            if left <= 0.0 {
                k += 1;
                left = atoms.get(k).map_or(0.0, |a| a.volume);
            }
        }
        out[i] = if pieces == 1 { last } else { acc / vol };
    }
    let output = RadialField::new(grid.clone(), out)?;
    let grid_norm_out = output.lq_norm(exponent)?;

    let sigma = domain.sphere_measure();
    let q_in = quadratic_form_cells(&domain, sigma, (0..v.len()).map(|i| {
        let (lo, hi) = grid.cell_bounds(i);
        (lo, hi, v[i])
    }));
    let mut s = 0.0;
    let mut r_lo = domain.inner();
    let pieces: Vec<(f64, f64, f64)> = atoms
        .iter()
        .map(|a| {
            s += a.volume;
            let r_hi = domain.radius_at_volume(s).min(domain.outer());
            let piece = (r_lo, r_hi, a.value);
            r_lo = r_hi;
            piece
        })
        .collect();
    let q_out = quadratic_form_cells(&domain, sigma, pieces.into_iter());

    Ok(RearrangementResult {
        input: f.clone(),
        mean_out: output.integrate(),
        output,
        exponent,
        q_in,
        q_out,
        norm_in,
        norm_out,
        norm_defect: (norm_out - norm_in).abs(),
        grid_norm_defect: (grid_norm_out - norm_in).abs(),
        flipped_volume,
    })
}

/// Aggregate of [`flip_rearrange`] over a family of inputs.
#[derive(Debug, Clone, Serialize)]
pub struct RearrangementSummary {
    pub samples: usize,
    pub max_norm_defect: f64,
    pub max_mean_out: f64,
    /// Smallest `q_out - q_in`.
    pub min_gain: f64,
    /// Inputs with `q_out - q_in ≤ 1e-10 |q_in|`.
    pub near_equality: usize,
    pub near_equality_monotone: usize,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Checks norm preservation to `1e-10`, `q_out ≥ q_in - 1e-10`, and that
/// every near-equality input is monotone.
pub fn summarize_rearrangements(results: &[RearrangementResult]) -> RearrangementSummary {
    let mut summary = RearrangementSummary {
        samples: results.len(),
        max_norm_defect: 0.0,
        max_mean_out: 0.0,
        min_gain: f64::INFINITY,
        near_equality: 0,
        near_equality_monotone: 0,
        failures: Vec::new(),
        passed: true,
    };
    for (k, r) in results.iter().enumerate() {
        let gain = r.q_out - r.q_in;
        summary.max_norm_defect = summary.max_norm_defect.max(r.norm_defect);
        summary.max_mean_out = summary.max_mean_out.max(r.mean_out.abs());
        summary.min_gain = summary.min_gain.min(gain);
        if r.norm_defect > 1e-10 {
            summary.failures.push(format!("sample {k}: norm defect {:.3e}", r.norm_defect));
        }
        if gain < -1e-10 {
            summary.failures.push(format!("sample {k}: quadratic form dropped by {:.3e}", -gain));
        }
        if gain <= 1e-10 * r.q_in.abs() {
            summary.near_equality += 1;
            if check_monotone(&r.input, 1e-10).monotone {
                summary.near_equality_monotone += 1;
            } else {
                summary.failures.push(format!("sample {k}: near equality on a nonmonotone input"));
            }
        }
    }
    summary.passed = summary.failures.is_empty();
    summary
}

/// `∫_a^b 𝓘(r)²/(σ r^{N-1}) dr` for a step function given as `(lo, hi, value)`
/// pieces covering `[a, b]` in order.
fn quadratic_form_cells(
    domain: &RadialDomain,
    sigma: f64,
    pieces: impl Iterator<Item = (f64, f64, f64)>,
) -> f64 {
    let (nodes, weights) = gauss_legendre(8);
    let n = domain.dim() as i32;
    let mut cum = 0.0;
    let mut total = 0.0;
    for (lo, hi, c) in pieces {
        if hi <= lo {
            continue;
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut piece = 0.0;
        for (x, wt) in nodes.iter().zip(&weights) {
            let r = mid + half * x;
            let i = cum + c * domain.shell_volume(lo, r);
            piece += wt * i * i / (sigma * r.powi(n - 1));
        }
        total += half * piece;
        cum += c * domain.shell_volume(lo, hi);
    }
    total
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}
