//! The nonlinear average `c_p` and the measure balance used at `p = 0`.
//!
//! For `p > 0` and a field `w`, `c_p(w)` is the unique shift with
//! `∫ |w + c|^{p-1} (w + c) = 0`. The map `c ↦ ∫|w + c|^{p-1}(w + c)` is strictly
//! increasing, nonpositive at `c = -max w` and nonnegative at `c = -min w`, so
//! the root is bracketed from the start. The same shift minimizes
//! `c ↦ ‖w + c‖_{p+1}`.

use serde::Serialize;

use crate::error::{LensError, Result};
use crate::grid::RadialField;

const MAX_ITERATIONS: usize = 200;

/// `|t|^{p-1} t`, with the value `0` at `t = 0` for every `p`.
#[inline]
pub fn signed_pow(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if p == 1.0 {
        t
    } else {
        t.signum() * t.abs().powf(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecenterResult {
    pub shift: f64,
    /// `∫ |w + c|^{p-1} (w + c)` at the returned shift.
    pub residual: f64,
    pub iterations: usize,
    /// The bracket shrank to adjacent floating point numbers before the
    /// residual test passed. Happens for small `p`, where the map is steep
    /// near grid values of `-w`.
    pub resolved_by_bracket: bool,
}

/// Returns `(∫|w+c|^{p-1}(w+c), ∫|w+c|^p)`.
fn balance(values: &[f64], weights: &[f64], p: f64, c: f64) -> (f64, f64) {
    let mut g = 0.0;
    let mut scale = 0.0;
    for (w, v) in weights.iter().zip(values) {
        let t = v + c;
        let m = if p == 1.0 { t.abs() } else { t.abs().powf(p) };
        scale += w * m;
        g += w * m.copysign(t);
    }
    (g, scale)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(LensError::InvalidExponent {
            value: p,
            reason: "the nonlinear average needs 0 < p < ∞",
        });
    }
    Ok(())
}

/// Computes `c_p(w)`: bracketed bisection, with a false-position (Illinois)
/// polish for `p ≥ 1`; for `p < 1` the balance map is not Lipschitz and pure
/// bisection is used. Convergence means `|g(c)| ≤ tol ∫|w + c|^p`.
pub fn cp(w: &RadialField, p: f64, tol: f64) -> Result<RecenterResult> {
    check_exponent(p)?;
    if !w.is_finite() {
        return Err(LensError::NonFinite("c_p input"));
    }
    let values = w.values();
    let weights = w.grid().weights();
    let (wmin, wmax) = (w.min(), w.max());
    if wmin == wmax {
        return Ok(RecenterResult {
            shift: -wmax,
            residual: 0.0,
            iterations: 0,
            resolved_by_bracket: false,
        });
    }

    let mut lo = -wmax;
    let mut hi = -wmin;
    let (mut g_lo, _) = balance(values, weights, p, lo);
    let (mut g_hi, _) = balance(values, weights, p, hi);
    let mut c = if p == 1.0 { -w.mean() } else { 0.5 * (lo + hi) };
    let mut side = 0i8;
    let mut iterations = 0;
    let mut resolved_by_bracket = false;

    let residual = loop {
        iterations += 1;
        let (g, scale) = balance(values, weights, p, c);
        if g.abs() <= tol * scale {
            break g;
        }
        if g < 0.0 {
            lo = c;
            g_lo = g;
            if side == -1 && p >= 1.0 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = c;
            g_hi = g;
            if side == 1 && p >= 1.0 {
                g_lo *= 0.5;
            }
            side = 1;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || iterations >= MAX_ITERATIONS {
            resolved_by_bracket = iterations < MAX_ITERATIONS;
            // keep whichever end balances better
            let (g_l, _) = balance(values, weights, p, lo);
            let (g_h, _) = balance(values, weights, p, hi);
            let (best_c, best_g) = if g_l.abs() <= g_h.abs() { (lo, g_l) } else { (hi, g_h) };
            let best_g = if best_g.abs() <= g.abs() {
                c = best_c;
                best_g
            } else {
                g
            };
            if iterations >= MAX_ITERATIONS {
                return Err(LensError::NoConvergence {
                    method: "c_p bisection",
                    iterations,
                    residual: best_g,
                });
            }
            break best_g;
        }
        c = if p >= 1.0 && g_hi > g_lo {
            let secant = lo - g_lo * (hi - lo) / (g_hi - g_lo);
            if secant > lo && secant < hi {
                secant
            } else {
                mid
            }
        } else {
            mid
        };
    };

    verify_minimizing(w, p, c, wmax - wmin)?;
    Ok(RecenterResult {
        shift: c,
        residual,
        iterations,
        resolved_by_bracket,
    })
}

/// `‖w + c‖_{p+1}` must not drop when the shift is moved by `±δ`.
fn verify_minimizing(w: &RadialField, p: f64, c: f64, spread: f64) -> Result<()> {
    let delta = 1e-3 * spread;
    let norm = |shift: f64| -> f64 {
        w.grid()
            .weights()
            .iter()
            .zip(w.values())
            .map(|(wt, v)| wt * (v + shift).abs().powf(p + 1.0))
            .sum::<f64>()
    };
    let centre = norm(c);
    let slack = 1e-12 * centre.max(f64::MIN_POSITIVE);
    if norm(c + delta) + slack < centre || norm(c - delta) + slack < centre {
        return Err(LensError::NoConvergence {
            method: "c_p minimizing check",
            iterations: 0,
            residual: centre,
        });
    }
    Ok(())
}

/// `w + c_p(w)`.
pub fn recenter(w: &RadialField, p: f64, tol: f64) -> Result<RadialField> {
    let r = cp(w, p, tol)?;
    Ok(w.shifted(r.shift))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignBalance {
    pub positive: f64,
    pub negative: f64,
    pub zero: f64,
    /// `| |{u>0}| - |{u<0}| | ≤ |{u=0}|`.
    pub in_m0: bool,
}

/// Measures of `{u > ε}`, `{u < -ε}` and `{|u| ≤ ε}` on the grid cells.
pub fn sign_balance(u: &RadialField, zero_band: f64) -> SignBalance {
    let eps = zero_band.max(0.0);
    let (mut positive, mut negative, mut zero) = (0.0, 0.0, 0.0);
    for (w, v) in u.grid().weights().iter().zip(u.values()) {
        if *v > eps {
            positive += w;
        } else if *v < -eps {
            negative += w;
        } else {
            zero += w;
        }
    }
    SignBalance {
        positive,
        negative,
        zero,
        in_m0: (positive - negative).abs() <= zero,
    }
}

/// Zero band `h · max|u'|`: a value is considered zero when it is within
/// one grid step of a sign change.
pub fn default_zero_band(u: &RadialField) -> f64 {
    let v = u.values();
    v.windows(2).fold(0.0, |m, w| m.max((w[1] - w[0]).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, RadialDomain};
    use std::f64::consts::PI;

    fn interval(b: f64, m: usize) -> std::sync::Arc<crate::grid::RadialGrid> {
        build_grid(RadialDomain::interval(0.0, b).unwrap(), m).unwrap()
    }

    #[test]
    fn constant_field() {
        let g = interval(1.0, 32);
        let r = cp(&RadialField::constant(g.clone(), 5.0), 2.5, 1e-12).unwrap();
        assert_eq!(r.shift, -5.0);
        let z = recenter(&RadialField::constant(g, 5.0), 3.0, 1e-12).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn linear_case_is_mean() {
        let g = interval(2.0, 100);
        let w = RadialField::from_fn(g, |r| r.exp()).unwrap();
        let r = cp(&w, 1.0, 1e-14).unwrap();
        assert!((r.shift + w.mean()).abs() < 1e-13);
    }

    #[test]
    fn odd_symmetric_field_unchanged() {
        let g = interval(PI, 400);
        let w = RadialField::from_fn(g, |r| r.cos() + 0.3 * (3.0 * r).cos()).unwrap();
        for p in [0.3, 2.0, 5.0] {
            let r = cp(&w, p, 1e-13).unwrap();
            assert!(r.shift.abs() < 1e-12, "p={p}: {}", r.shift);
        }
    }

    #[test]
    fn generic_field_balances() {
        let g = build_grid(RadialDomain::annulus(1.0, 3.0, 4).unwrap(), 300).unwrap();
        let w = RadialField::from_fn(g, |r| (2.0 * r).sin() + 0.4).unwrap();
        let out = recenter(&w, 2.5, 1e-14).unwrap();
        let g: f64 = out
            .grid()
            .weights()
            .iter()
            .zip(out.values())
            .map(|(wt, v)| wt * signed_pow(*v, 2.5))
            .sum();
        assert!(g.abs() <= 1e-10, "{g}");
    }

    #[test]
    fn sublinear_uses_bracket() {
        let g = interval(1.0, 64);
        let w = RadialField::from_fn(g, |r| r * r - 0.2).unwrap();
        let r = cp(&w, 1e-3, 1e-12).unwrap();
        assert!(r.shift >= -w.max() && r.shift <= -w.min());
    }

    #[test]
    fn rejects_bad_exponent() {
        let g = interval(1.0, 32);
        let w = RadialField::from_fn(g, |r| r).unwrap();
        assert!(cp(&w, 0.0, 1e-12).is_err());
        assert!(cp(&w, f64::NAN, 1e-12).is_err());
    }

    #[test]
    fn balance_of_cosine() {
        // odd node count keeps π/2 off the grid, so no node sits on the zero
        let g = interval(PI, 1001);
        let u = RadialField::from_fn(g, f64::cos).unwrap();
        let b = sign_balance(&u, 0.0);
        assert!((b.positive - PI / 2.0).abs() < 1e-12);
        assert!((b.negative - PI / 2.0).abs() < 1e-12);
        assert!(b.in_m0);
        let one = sign_balance(&RadialField::constant(u.grid().clone(), 1.0), 0.0);
        assert!((one.positive - PI).abs() < 1e-12 && !one.in_m0);
    }
}
