//! First nonconstant radial Neumann eigenpair and annulus tuning.

use serde::Serialize;

use crate::error::{LensError, Result};
use crate::grid::{build_grid, RadialDomain, RadialField};
use crate::operators::NeumannLaplacian;

const MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub eigenvalue: f64,
    /// Zero average, `‖ψ‖₂ = 1`, `ψ(a) > 0`.
    pub eigenfunction: RadialField,
    /// `‖-Δψ - μψ‖₂`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest nonzero eigenvalue of the discrete Neumann Laplacian by inverse
/// iteration with `K` on the zero-average subspace.
///
/// Stops once `‖-Δψ - μψ‖₂ ≤ tol · max(μ, 1)`, or once the residual is at the
/// roundoff floor `10 ε ‖L‖` of the operator, or when the iterates stop moving.
pub fn radial_eigenpair(op: &NeumannLaplacian, tol: f64) -> Result<EigenPair> {
    let grid = op.grid().clone();
    let (a, b) = (grid.domain().inner(), grid.domain().outer());
    let start = RadialField::from_fn(grid.clone(), |r| {
        (std::f64::consts::PI * (r - a) / (b - a)).cos()
    })?;
    let mut psi = normalize(&start.without_mean());
    let mut mu = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut stalled = 0;
    let floor = 10.0 * f64::EPSILON * op.norm_bound();

    for it in 1..=MAX_ITERATIONS {
        let next = normalize(&op.inverse_projected(psi.values()));
        let step = next.sub(&psi)?.l2_norm();
        psi = next;
        let energy = op.dirichlet_energy_unchecked(psi.values());
        let new_mu = energy / psi.dot(&psi)?;
        let lpsi = op.apply_unchecked(psi.values());
        residual = lpsi.zip_map(&psi, |l, v| l - new_mu * v)?.l2_norm();
        let dmu = (new_mu - mu).abs();
        mu = new_mu;
        if residual <= (tol * mu.max(1.0)).max(floor) {
            return Ok(finish(psi, mu, residual, it));
        }
        if dmu <= 4.0 * f64::EPSILON * mu && step <= 1e-12 {
            stalled += 1;
            if stalled >= 3 {
                if residual <= 1e3 * tol * mu.max(1.0) {
                    return Ok(finish(psi, mu, residual, it));
                }
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Err(LensError::NoConvergence {
        method: "radial eigenpair inverse iteration",
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn normalize(f: &RadialField) -> RadialField {
    let n = f.l2_norm();
    f.scaled(1.0 / n)
}

fn finish(psi: RadialField, mu: f64, residual: f64, iterations: usize) -> EigenPair {
    let psi = if psi.values()[0] < 0.0 { psi.scaled(-1.0) } else { psi };
    EigenPair {
        eigenvalue: mu,
        eigenfunction: psi,
        residual,
        iterations,
    }
}

/// Convenience wrapper: grid, operator and eigenpair for a domain.
pub fn eigenpair_for(domain: RadialDomain, intervals: usize, tol: f64) -> Result<EigenPair> {
    let op = NeumannLaplacian::new(build_grid(domain, intervals)?)?;
    radial_eigenpair(&op, tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneResult {
    pub outer_radius: f64,
    pub eigenvalue: f64,
    /// Every `(b, μ(b))` evaluated, in evaluation order.
    pub history: Vec<(f64, f64)>,
    /// `μ` was decreasing in `b` across all evaluated radii.
    pub monotone: bool,
}

/// Finds the outer radius `b` for which `μ_{1,rad}(a, b)` equals `target`.
///
/// The bracket is searched geometrically from `1.01 a` up to `10³ a` (from
/// `10⁻²` to `10³` when `a = 0`); the root is then polished by a bracketed
/// secant in `(ln b, ln μ)`, where the dependence is nearly linear.
pub fn tune_annulus(
    dim: usize,
    inner: f64,
    target: f64,
    intervals: usize,
    tol: f64,
) -> Result<TuneResult> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(LensError::InvalidInput(format!("target eigenvalue {target} must be positive")));
    }
    if inner < 0.0 {
        return Err(LensError::InvalidDomain("inner radius must be nonnegative".into()));
    }
    let (b_min, b_max) = if inner > 0.0 {
        (inner * 1.01, inner * 1e3)
    } else {
        (1e-2, 1e3)
    };
    let mut history = Vec::new();
    let mut eval = |b: f64| -> Result<f64> {
        let domain = RadialDomain::new(inner, b, dim)?;
        let mu = eigenpair_for(domain, intervals, 1e-10)?.eigenvalue;
        history.push((b, mu));
        Ok(mu)
    };

    let mut lo = b_min;
    let mut mu_lo = eval(lo)?;
    if mu_lo < target {
        return Err(LensError::NoBracket(format!(
            "μ({lo}) = {mu_lo} already below target {target}"
        )));
    }
    let mut hi = lo;
    let mut mu_hi = mu_lo;
    while mu_hi >= target {
        lo = hi;
        mu_lo = mu_hi;
        if hi >= b_max {
            return Err(LensError::NoBracket(format!(
                "μ stays above {target} up to b = {b_max}"
            )));
        }
        hi = (hi * 1.5).min(b_max);
        mu_hi = eval(hi)?;
    }

    let phi = |mu: f64| mu.ln() - target.ln();
    let (mut x_lo, mut x_hi) = (lo.ln(), hi.ln());
    let (mut f_lo, mut f_hi) = (phi(mu_lo), phi(mu_hi));
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, mu_lo) } else { (hi, mu_hi) };
    let mut side = 0i8;
    for _ in 0..100 {
        if (best.1 - target).abs() <= tol {
            break;
        }
        let mut x = x_lo - f_lo * (x_hi - x_lo) / (f_hi - f_lo);
        if !(x > x_lo && x < x_hi) {
            x = 0.5 * (x_lo + x_hi);
        }
        let b = x.exp();
        let mu = eval(b)?;
        let f = phi(mu);
        if (mu - target).abs() < (best.1 - target).abs() {
            best = (b, mu);
        }
        // decreasing in b: f > 0 means the root is to the right
        if f > 0.0 {
            x_lo = x;
            f_lo = f;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            x_hi = x;
            f_hi = f;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
        if (x_hi - x_lo).abs() <= 4.0 * f64::EPSILON * x_hi.abs().max(1.0) {
            break;
        }
    }

    let mut sorted = history.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(TuneResult {
        outer_radius: best.0,
        eigenvalue: best.1,
        history,
        monotone,
    })
}

/// `κ = exp(-½ ∫ ψ² ln ψ²)` for an `L²`-normalized `ψ`, with `t ln t := 0` at
/// `t = 0`.
pub fn log_normalization_constant(psi: &RadialField) -> Result<f64> {
    let norm = psi.l2_norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(LensError::NotNormalized(norm));
    }
    let entropy: f64 = psi
        .grid()
        .weights()
        .iter()
        .zip(psi.values())
        .map(|(w, v)| {
            let t = v * v;
            if t == 0.0 {
                0.0
            } else {
                w * t * t.ln()
            }
        })
        .sum();
    Ok((-0.5 * entropy).exp())
}
