//! Radial shooting for `-(r^{N-1} u')' = c r^{N-1} f(u)`, `u'(a) = u'(b) = 0`,
//! with `f(u) = |u|^{p-1} u` for `p > 0` and `f(u) = sgn(u)` for `p = 0`.
//!
//! Trajectories are integrated with classical RK4 on the grid step. Every sign
//! change of `u` inside a step is located by bisection on the substep and the
//! step is split there, which keeps the sign nonlinearity exact and gives the
//! first zero `r₀` and `u'(r₀)` to roundoff.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LensError, Result};
use crate::grid::{build_grid, RadialDomain, RadialField};
use crate::nonlinear_average::signed_pow;
use crate::operators::NeumannLaplacian;
use crate::qualitative::check_monotone;
use crate::record::{SolutionMethod, SolutionRecord};
use crate::variational::{equation_residual, level_l, power_integral};

#[derive(Debug, Clone, Serialize)]
pub struct ShootingConfig {
    /// Number of RK4 steps across `[a, b]`; samples land on the grid nodes.
    pub intervals: usize,
    /// Coefficient `c` of the nonlinearity.
    pub coefficient: f64,
    /// Scan range for `|s|`.
    pub s_min: f64,
    pub s_max: f64,
    /// Scan points per sign.
    pub scan_points: usize,
    /// Accept a root once `|u'(b)| ≤ slope_tol · max|u'|`.
    pub slope_tol: f64,
    /// `|u|` beyond this counts as blow-up.
    pub blowup: f64,
    /// When set, the step is refined so that the length scale
    /// `(c|s|^{p-1})^{-1/2}` of the start is covered by this many steps.
    /// Samples then no longer land on the grid of `intervals`.
    pub steps_per_scale: Option<f64>,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            intervals: 2000,
            coefficient: 1.0,
            s_min: 1e-4,
            s_max: 1e4,
            scan_points: 240,
            slope_tol: 1e-10,
            blowup: 1e100,
            steps_per_scale: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingTrajectory {
    pub p: f64,
    /// `u(a)`.
    pub s: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// `u'(b)`; meaningless when `blew_up`.
    pub terminal_slope: f64,
    pub crossings: usize,
    pub first_zero: Option<f64>,
    /// `u'(r₀)` at the first zero.
    pub first_zero_slope: Option<f64>,
    pub blew_up: bool,
    /// `|∫ c|u|^{p-1}u| / ∫ c|u|^p`, integrated along the trajectory.
    pub compatibility: f64,
}

impl ShootingTrajectory {
    pub fn max_slope(&self) -> f64 {
        self.du.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `|u'(b)| / max|u'|`.
    pub fn relative_miss(&self) -> f64 {
        let scale = self.max_slope();
        if scale > 0.0 {
            self.terminal_slope.abs() / scale
        } else {
            self.terminal_slope.abs()
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u,du\n");
        for ((r, u), du) in self.r.iter().zip(&self.u).zip(&self.du) {
            out.push_str(&format!("{r:e},{u:e},{du:e}\n"));
        }
        out
    }
}

/// `(u, u', ∫ρ^{N-1} c f(u), ∫ρ^{N-1} c|u|^p)`.
type State = [f64; 4];

struct Rhs {
    p: f64,
    dim: f64,
    coef: f64,
}

impl Rhs {
    fn nonlinearity(&self, u: f64, sign: f64) -> f64 {
        if self.p == 0.0 {
            sign
        } else {
            signed_pow(u, self.p)
        }
    }

    fn eval(&self, r: f64, y: &State, sign: f64) -> State {
        let f = self.coef * self.nonlinearity(y[0], sign);
        let rn = r.powf(self.dim - 1.0);
        let mag = if self.p == 0.0 { 1.0 } else { y[0].abs().powf(self.p) };
        [
            y[1],
            -(self.dim - 1.0) / r * y[1] - f,
            rn * f,
            rn * self.coef * mag,
        ]
    }

    fn step(&self, r: f64, y: &State, dt: f64, sign: f64) -> State {
        let add = |a: &State, k: &State, t: f64| -> State {
            [a[0] + t * k[0], a[1] + t * k[1], a[2] + t * k[2], a[3] + t * k[3]]
        };
        let k1 = self.eval(r, y, sign);
        let k2 = self.eval(r + 0.5 * dt, &add(y, &k1, 0.5 * dt), sign);
        let k3 = self.eval(r + 0.5 * dt, &add(y, &k2, 0.5 * dt), sign);
        let k4 = self.eval(r + dt, &add(y, &k3, dt), sign);
        let mut out = *y;
        for j in 0..4 {
            out[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out
    }

    /// `u(h), u'(h)` from `u = s + αr² + βr⁴`.
    fn origin_series(&self, s: f64, h: f64) -> State {
        let n = self.dim;
        let f = self.coef * self.nonlinearity(s, s.signum());
        let df = if self.p == 0.0 {
            0.0
        } else {
            self.coef * self.p * s.abs().powf(self.p - 1.0)
        };
        let alpha = -f / (2.0 * n);
        let beta = df * f / (8.0 * n * (n + 2.0));
        let hn = h.powf(n) / n;
        let mag = if self.p == 0.0 { 1.0 } else { s.abs().powf(self.p) };
        [
            s + alpha * h * h + beta * h.powi(4),
            2.0 * alpha * h + 4.0 * beta * h.powi(3),
            f * hn,
            self.coef * mag * hn,
        ]
    }
}

fn sign_of(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Integrates from `u(a) = s`, `u'(a) = 0` to `b`.
pub fn integrate_radial(
    domain: &RadialDomain,
    p: f64,
    s: f64,
    config: &ShootingConfig,
) -> Result<ShootingTrajectory> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(LensError::InvalidExponent {
            value: p,
            reason: "shooting needs a finite p ≥ 0",
        });
    }
    if !(s.is_finite() && s != 0.0) {
        return Err(LensError::InvalidInput(format!("initial value s = {s} must be nonzero")));
    }
    if config.intervals < 2 {
        return Err(LensError::GridTooSmall { min: 2, got: config.intervals });
    }
    let rhs = Rhs {
        p,
        dim: domain.dim() as f64,
        coef: config.coefficient,
    };
    let (a, b) = (domain.inner(), domain.outer());
    let mut m = config.intervals;
    if let Some(k) = config.steps_per_scale {
        let scale = (config.coefficient.abs() * s.abs().powf(p - 1.0)).powf(-0.5);
        let needed = ((b - a) * k / scale).ceil();
        if needed.is_finite() && needed > m as f64 {
            m = (needed as usize).min(1 << 22);
        }
    }
    let h = (b - a) / m as f64;
    let node = |i: usize| if i == m { b } else { a + i as f64 * h };

    let mut r = vec![a];
    let mut u = vec![s];
    let mut du = vec![0.0];
    let mut y: State = [s, 0.0, 0.0, 0.0];
    let mut crossings = 0;
    let mut first_zero = None;
    let mut first_zero_slope = None;
    let mut blew_up = false;

    for i in 0..m {
        let (r0, r1) = (node(i), node(i + 1));
        let dt = r1 - r0;
        let sign = sign_of(y[0]);
        let mut next = if i == 0 && domain.is_ball() {
            rhs.origin_series(s, dt)
        } else {
            rhs.step(r0, &y, dt, sign)
        };
        if sign != 0.0 && sign_of(next[0]) == -sign && !(i == 0 && domain.is_ball()) {
            // locate the zero inside the step
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 1e-13 * dt.max(1.0) {
                    break;
                }
                if sign_of(rhs.step(r0, &y, mid, sign)[0]) == sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut at_zero = rhs.step(r0, &y, hi, sign);
            at_zero[0] = 0.0;
            crossings += 1;
            if first_zero.is_none() {
                first_zero = Some(r0 + hi);
                first_zero_slope = Some(at_zero[1]);
            }
            next = rhs.step(r0 + hi, &at_zero, dt - hi, -sign);
        } else if sign != 0.0 && sign_of(next[0]) == -sign {
            crossings += 1;
        }
        if !next.iter().all(|v| v.is_finite()) || next[0].abs() > config.blowup {
            blew_up = true;
            break;
        }
        y = next;
        r.push(r1);
        u.push(y[0]);
        du.push(y[1]);
    }

    let compatibility = if y[3] > 0.0 { y[2].abs() / y[3] } else { y[2].abs() };
    Ok(ShootingTrajectory {
        p,
        s,
        r,
        u,
        terminal_slope: if blew_up { f64::NAN } else { y[1] },
        du,
        crossings,
        first_zero,
        first_zero_slope,
        blew_up,
        compatibility,
    })
}

/// Summary of one scan point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub s: f64,
    pub terminal_slope: f64,
    pub crossings: usize,
    pub blew_up: bool,
}

/// Scans `s` over `±[s_min, s_max]` geometrically.
pub fn scan_initial_values(
    domain: &RadialDomain,
    p: f64,
    config: &ShootingConfig,
    signs: &[f64],
) -> Result<Vec<Vec<ScanPoint>>> {
    let n = config.scan_points.max(2);
    if !(config.s_min > 0.0 && config.s_max > config.s_min) {
        return Err(LensError::InvalidInput("scan needs 0 < s_min < s_max".into()));
    }
    let ratio = (config.s_max / config.s_min).ln() / (n - 1) as f64;
    signs
        .iter()
        .map(|&sign| {
            (0..n)
                .into_par_iter()
                .map(|k| {
                    let s = sign * config.s_min * (ratio * k as f64).exp();
                    let t = integrate_radial(domain, p, s, config)?;
                    Ok(ScanPoint {
                        s,
                        terminal_slope: t.terminal_slope,
                        crossings: t.crossings,
                        blew_up: t.blew_up,
                    })
                })
                .collect()
        })
        .collect()
}

/// Sign changes of `u'(b)` between adjacent scan points that both have finite
/// trajectories, refined by bisection.
pub fn refine_roots(
    domain: &RadialDomain,
    p: f64,
    config: &ShootingConfig,
    branch: &[ScanPoint],
) -> Result<Vec<ShootingTrajectory>> {
    let brackets: Vec<(ScanPoint, ScanPoint)> = branch
        .windows(2)
        .filter(|w| {
            !w[0].blew_up
                && !w[1].blew_up
                && w[0].terminal_slope * w[1].terminal_slope <= 0.0
                && (w[0].crossings >= 1 || w[1].crossings >= 1)
        })
        .map(|w| (w[0], w[1]))
        .collect();
    brackets
        .par_iter()
        .map(|(lo, hi)| bisect(domain, p, config, *lo, *hi))
        .collect()
}

fn bisect(
    domain: &RadialDomain,
    p: f64,
    config: &ShootingConfig,
    lo: ScanPoint,
    hi: ScanPoint,
) -> Result<ShootingTrajectory> {
    let (mut s_lo, mut m_lo) = (lo.s, lo.terminal_slope);
    let mut s_hi = hi.s;
    let mut best = integrate_radial(domain, p, s_lo, config)?;
    if m_lo == 0.0 {
        return Ok(best);
    }
    for _ in 0..200 {
        let mid = 0.5 * (s_lo + s_hi);
        if mid == s_lo || mid == s_hi {
            break;
        }
        let t = integrate_radial(domain, p, mid, config)?;
        if t.blew_up {
            break;
        }
        let m = t.terminal_slope;
        let done = t.relative_miss() <= config.slope_tol;
        if m * m_lo > 0.0 {
            s_lo = mid;
            m_lo = m;
        } else {
            s_hi = mid;
        }
        let better = best.blew_up || t.terminal_slope.abs() < best.terminal_slope.abs();
        if better {
            best = t;
        }
        if done || m == 0.0 {
            break;
        }
    }
    Ok(best)
}

/// A shooting solution with the material behind its selection.
#[derive(Debug, Clone, Serialize)]
pub struct ShootingSolution {
    pub record: SolutionRecord,
    pub trajectory: ShootingTrajectory,
    /// `(s, I_p, crossings)` of every refined root, single-crossing or not.
    pub roots: Vec<(f64, f64, usize)>,
}

/// Least-energy radial solution among single-crossing shooting roots.
pub fn shoot(domain: &RadialDomain, p: f64, config: &ShootingConfig) -> Result<ShootingSolution> {
    if p == 1.0 {
        return Err(LensError::InvalidExponent {
            value: p,
            reason: "u'(b) vanishes identically in s at p = 1",
        });
    }
    if domain.is_ball() && domain.critical_exponent().is_some_and(|pc| p >= pc) {
        return Err(LensError::InvalidExponent {
            value: p,
            reason: "no radial solutions on a ball at or above the critical exponent",
        });
    }
    let grid = build_grid(*domain, config.intervals)?;
    let op = NeumannLaplacian::new(grid.clone())?;
    let scans = scan_initial_values(domain, p, config, &[1.0, -1.0])?;
    let mut roots = Vec::new();
    let mut candidates = Vec::new();
    for branch in &scans {
        for t in refine_roots(domain, p, config, branch)? {
            let profile = RadialField::new(grid.clone(), t.u.clone())?;
            let energy = energy(&op, &profile, p)?;
            roots.push((t.s, energy, t.crossings));
            if t.crossings == 1 && !t.blew_up {
                candidates.push((energy, t, profile));
            }
        }
    }
    let (energy, trajectory, profile) = candidates
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| {
            LensError::NoBracket(format!(
                "no single-crossing root of u'(b) for |s| in [{}, {}]",
                config.s_min, config.s_max
            ))
        })?;
    let record = to_record(&op, &profile, &trajectory, energy, config)?;
    Ok(ShootingSolution {
        record,
        trajectory,
        roots,
    })
}

fn energy(op: &NeumannLaplacian, u: &RadialField, p: f64) -> Result<f64> {
    Ok(0.5 * op.dirichlet_energy(u)? - power_integral(u, p + 1.0) / (p + 1.0))
}

fn to_record(
    op: &NeumannLaplacian,
    profile: &RadialField,
    t: &ShootingTrajectory,
    energy: f64,
    config: &ShootingConfig,
) -> Result<SolutionRecord> {
    let p = t.p;
    let residual = equation_residual(op, profile, config.coefficient, p)?;
    let (lambda, level) = if p > 0.0 {
        let lambda = profile.lq_norm(p + 1.0)?.powf(p - 1.0);
        (Some(lambda), level_l(p, lambda).ok())
    } else {
        (None, Some(energy))
    };
    let monotone = check_monotone(profile, 1e-10).monotone;
    let converged = t.relative_miss() <= config.slope_tol.max(1e-8) && t.crossings == 1;
    let mut notes = vec![format!(
        "s = {:e}, |u'(b)|/max|u'| = {:.3e}, compatibility defect {:.3e}",
        t.s,
        t.relative_miss(),
        t.compatibility
    )];
    if let Some(r0) = t.first_zero {
        notes.push(format!("first zero r0 = {r0:.12}"));
    }
    Ok(SolutionRecord {
        p,
        method: SolutionMethod::Shooting,
        sup_norm: profile.sup_norm(),
        sign_changing: profile.max() > 0.0 && profile.min() < 0.0,
        profile: profile.clone(),
        energy,
        level,
        lambda,
        dual_level: lambda.map(|l| 1.0 / l),
        residual,
        monotone,
        converged,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(m: usize) -> ShootingConfig {
        ShootingConfig {
            intervals: m,
            ..ShootingConfig::default()
        }
    }

    #[test]
    fn linear_case_is_cosine() {
        let d = RadialDomain::interval(0.0, PI).unwrap();
        let t = integrate_radial(&d, 1.0, 1.0, &cfg(2000)).unwrap();
        let err = t.r.iter().zip(&t.u).fold(0.0f64, |m, (r, u)| m.max((u - r.cos()).abs()));
        assert!(err < 1e-10, "{err}");
        assert!(t.terminal_slope.abs() < 1e-10);
        assert_eq!(t.crossings, 1);
        assert!((t.first_zero.unwrap() - PI / 2.0).abs() < 1e-11);
    }

    #[test]
    fn sign_nonlinearity_parabola() {
        let d = RadialDomain::interval(0.0, PI).unwrap();
        let s = -PI * PI / 8.0;
        let t = integrate_radial(&d, 0.0, s, &cfg(999)).unwrap();
        let exact = |r: f64| {
            if r <= PI / 2.0 {
                r * r / 2.0 - PI * PI / 8.0
            } else {
                -(r - PI).powi(2) / 2.0 + PI * PI / 8.0
            }
        };
        let err = t.r.iter().zip(&t.u).fold(0.0f64, |m, (r, u)| m.max((u - exact(*r)).abs()));
        assert!(err < 1e-11, "{err}");
        assert!(t.terminal_slope.abs() < 1e-11);
        assert!((t.first_zero.unwrap() - PI / 2.0).abs() < 1e-12);
        assert_eq!(t.crossings, 1);
    }

    #[test]
    fn scaling_covariance() {
        let d = RadialDomain::annulus(1.0, 3.0, 4).unwrap();
        let (p, lam, s): (f64, f64, f64) = (2.5, 2.0, 0.7);
        let base = integrate_radial(&d, p, s, &cfg(1500)).unwrap();
        let scaled_cfg = ShootingConfig {
            coefficient: lam.powf(1.0 - p),
            ..cfg(1500)
        };
        let scaled = integrate_radial(&d, p, lam * s, &scaled_cfg).unwrap();
        for (a, b) in base.u.iter().zip(&scaled.u) {
            assert!((lam * a - b).abs() <= 1e-8 * lam * base.u[0].abs());
        }
    }

    #[test]
    fn ball_series_start() {
        // p = 1 on the unit ball in R³: u = sin(r)/r
        let d = RadialDomain::ball(2.0, 3).unwrap();
        let t = integrate_radial(&d, 1.0, 1.0, &cfg(1000)).unwrap();
        let err = t.r[1..]
            .iter()
            .zip(&t.u[1..])
            .fold(0.0f64, |m, (r, u)| m.max((u - r.sin() / r).abs()));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn shoot_cubic_on_interval() {
        let d = RadialDomain::interval(0.0, PI).unwrap();
        let sol = shoot(&d, 3.0, &cfg(2000)).unwrap();
        let rec = &sol.record;
        assert!(rec.converged && rec.monotone && rec.sign_changing);
        assert!(sol.trajectory.compatibility < 1e-6);
        assert!((rec.energy - rec.level.unwrap()).abs() < 1e-5 * rec.energy.abs());
    }

    #[test]
    fn shoot_sign_problem() {
        let d = RadialDomain::interval(0.0, PI).unwrap();
        let sol = shoot(&d, 0.0, &cfg(2001)).unwrap();
        assert!((sol.trajectory.s.abs() - PI * PI / 8.0).abs() < 1e-9);
        assert!((sol.record.energy + PI.powi(3) / 24.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_degenerate_requests() {
        let d = RadialDomain::interval(0.0, 1.0).unwrap();
        assert!(shoot(&d, 1.0, &cfg(100)).is_err());
        assert!(integrate_radial(&d, 2.0, 0.0, &cfg(100)).is_err());
        let ball = RadialDomain::ball(1.0, 4).unwrap();
        assert!(shoot(&ball, 3.0, &cfg(100)).is_err());
    }
}
