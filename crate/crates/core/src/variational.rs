//! Variational characterizations of least-energy nodal solutions.
//!
//! Three levels are computed here:
//!
//! - `Λ_p = min ∫|∇u|²` over `‖u‖_{p+1} = 1`, `∫|u|^{p-1}u = 0` (direct);
//! - `D_p = max ∫ f K f` over `∫f = 0`, `‖f‖_{(p+1)/p} = 1` (dual);
//! - `L_0 = min I_0` over the balanced set `M_0` (the `p = 0` sign problem).
//!
//! The direct descent is a projected gradient method in the `H¹`-type metric
//! induced by `K`: the preconditioned gradient at a feasible `u` is
//! `u - K_p(|u|^{p-1}u)/‖K_p(|u|^{p-1}u)‖_{p+1}`, the step length comes from
//! Barzilai–Borwein, and each trial point is projected back by recentring and
//! renormalizing. The unit step is the nonlinear inverse iteration, which never
//! increases `∫|∇u|²`; it is the fallback whenever the BB step would.
//!
//! The dual ascent replaces `f` by the maximizer of the linearization
//! `g ↦ ∫ g K f` over the constraint set, namely `|K_p f|^{p-1} K_p f`
//! renormalized. Convexity of `f ↦ ∫ f K f` makes every step an ascent step.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{radial_eigenpair, EigenPair};
use crate::error::{LensError, Result};
use crate::grid::{build_grid, RadialDomain, RadialField, RadialGrid};
use crate::nonlinear_average::{cp, sign_balance, signed_pow, SignBalance};
use crate::operators::NeumannLaplacian;

#[derive(Debug, Clone, Serialize)]
pub struct VariationalConfig {
    /// Relative Euler–Lagrange (or stationarity) residual at which a run stops.
    pub tol: f64,
    pub max_iterations: usize,
    /// Residual tolerance handed to `c_p`.
    pub recenter_tol: f64,
    /// Barzilai–Borwein steps in the direct descent; plain inverse iteration
    /// when false.
    pub barzilai_borwein: bool,
    /// Largest BB step tried before falling back to the unit step.
    pub max_step: f64,
}

impl Default for VariationalConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 50_000,
            recenter_tol: 1e-13,
            barzilai_borwein: true,
            max_step: 20.0,
        }
    }
}

/// Outcome of one start of a direct or dual run.
#[derive(Debug, Clone, Serialize)]
pub struct SeedOutcome {
    pub seed: String,
    pub level: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalResult {
    pub p: f64,
    /// `Λ_p` for the direct problem, `D_p` for the dual one.
    pub level: f64,
    /// `v_p` (direct) or `f_p` (dual).
    pub extremizer: RadialField,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations where the objective moved the wrong way by more than
    /// `1e-12` relative.
    pub monotonicity_violations: usize,
    /// Ball with `p ≥ p_c`: the level is computed, but radial solutions do not
    /// exist there, so the extremizer does not represent one.
    pub radial_representation_unavailable: bool,
    pub seeds: Vec<SeedOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub p: f64,
    pub l_p: Option<f64>,
    pub lambda_p: f64,
    pub d_p: f64,
    /// `|Λ_p D_p - 1|`.
    pub duality_defect: f64,
    /// `|I_p(u_p) - L_p| / |I_p(u_p)|`, with `u_p = Λ_p^{1/(p-1)} v_p`.
    pub relation_defect: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum L0Method {
    /// Preconditioned subgradient descent on `I_0` with balance projection.
    Direct,
    /// `p = 0.1 → 0.01 → 0.001` through the direct `Λ_p` solver.
    Continuation,
    /// Both, keeping the lower `I_0`.
    #[default]
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignProblemResult {
    pub level: f64,
    pub profile: RadialField,
    pub method: L0Method,
    pub balance: SignBalance,
    pub iterations: usize,
    pub converged: bool,
    /// `(method, I_0)` of every candidate that was computed.
    pub candidates: Vec<(L0Method, f64)>,
}

/// `L_p = (p-1)/(2(p+1)) Λ_p^{(p+1)/(p-1)}`.
pub fn level_l(p: f64, lambda: f64) -> Result<f64> {
    check_positive_exponent(p)?;
    if p == 1.0 {
        return Err(LensError::InvalidExponent {
            value: p,
            reason: "the level relation is singular at p = 1",
        });
    }
    if !(lambda > 0.0) {
        return Err(LensError::InvalidInput(format!("Λ_p = {lambda} must be positive")));
    }
    Ok((p - 1.0) / (2.0 * (p + 1.0)) * lambda.powf((p + 1.0) / (p - 1.0)))
}

/// `u_p = Λ_p^{1/(p-1)} v_p`.
pub fn scale_to_solution(v: &RadialField, lambda: f64, p: f64) -> Result<RadialField> {
    check_positive_exponent(p)?;
    if p == 1.0 {
        return Err(LensError::InvalidExponent {
            value: p,
            reason: "no rescaling exists at p = 1",
        });
    }
    if !(lambda > 0.0) {
        return Err(LensError::InvalidInput(format!("Λ_p = {lambda} must be positive")));
    }
    let factor = lambda.powf(1.0 / (p - 1.0));
    if !factor.is_finite() {
        return Err(LensError::NonFinite("rescaling factor"));
    }
    Ok(v.scaled(factor))
}

fn check_positive_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(LensError::InvalidExponent {
            value: p,
            reason: "exponent must be positive and finite",
        });
    }
    Ok(())
}

/// `∫ |u|^{q}`.
pub fn power_integral(u: &RadialField, q: f64) -> f64 {
    u.grid()
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v.abs().powf(q))
        .sum()
}

/// `∫ |u|^{p-1} u`.
pub fn nonlinear_average(u: &RadialField, p: f64) -> f64 {
    u.grid()
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * signed_pow(*v, p))
        .sum()
}

/// Gradients with respect to nodal values of `∫|u|^{p+1}` and of
/// `∫|u|^{p-1}u` (the latter for `p ≥ 1`).
pub fn constraint_gradients(u: &RadialField, p: f64) -> (Vec<f64>, Vec<f64>) {
    let w = u.grid().weights();
    let norm = u
        .values()
        .iter()
        .zip(w)
        .map(|(v, wt)| wt * (p + 1.0) * signed_pow(*v, p))
        .collect();
    let avg = u
        .values()
        .iter()
        .zip(w)
        .map(|(v, wt)| wt * p * v.abs().powf(p - 1.0))
        .collect();
    (norm, avg)
}

/// `(‖-Δv - c|v|^{p-1}v‖₂, ‖c|v|^{p-1}v‖₂)`. For `p < 1` the power is
/// evaluated with `|v| ≥ 1e-14` and both cells next to every sign change are
/// left out.
pub(crate) fn equation_residual_parts(
    op: &NeumannLaplacian,
    v: &[f64],
    coef: f64,
    p: f64,
) -> (f64, f64) {
    let lv = op.apply_unchecked(v);
    let w = op.grid().weights();
    let n = v.len();
    let mut skip = vec![false; n];
    if p < 1.0 {
        for i in 0..n - 1 {
            if v[i] == 0.0 || v[i] * v[i + 1] < 0.0 {
                skip[i] = true;
                skip[i + 1] = true;
            }
        }
        if v[n - 1] == 0.0 {
            skip[n - 1] = true;
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        if skip[i] {
            continue;
        }
        let t = if p < 1.0 && v[i] != 0.0 {
            v[i].signum() * v[i].abs().max(1e-14).powf(p)
        } else {
            signed_pow(v[i], p)
        };
        let rhs = coef * t;
        num += w[i] * (lv.values()[i] - rhs).powi(2);
        den += w[i] * rhs * rhs;
    }
    (num.sqrt(), den.sqrt())
}

/// Relative residual of `-Δv = c |v|^{p-1} v`.
pub fn equation_residual(op: &NeumannLaplacian, v: &RadialField, coef: f64, p: f64) -> Result<f64> {
    v.check_grid(op.grid())?;
    let (num, den) = equation_residual_parts(op, v.values(), coef, p);
    Ok(if den > 0.0 { num / den } else { num })
}

/// Absolute residual `‖-Δu - |u|^{p-1}u‖₂` of a candidate solution.
pub fn pde_residual(op: &NeumannLaplacian, u: &RadialField, p: f64) -> Result<f64> {
    u.check_grid(op.grid())?;
    Ok(equation_residual_parts(op, u.values(), 1.0, p).0)
}

/// A radial domain with its operator and first radial eigenpair, shared by
/// all solves on that domain.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    op: NeumannLaplacian,
    eigen: EigenPair,
}

impl RadialProblem {
    pub fn new(domain: RadialDomain, intervals: usize) -> Result<Self> {
        Self::from_operator(NeumannLaplacian::new(build_grid(domain, intervals)?)?)
    }

    pub fn from_operator(op: NeumannLaplacian) -> Result<Self> {
        let eigen = radial_eigenpair(&op, 1e-10)?;
        Ok(Self { op, eigen })
    }

    pub fn op(&self) -> &NeumannLaplacian {
        &self.op
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.op.grid()
    }

    pub fn domain(&self) -> &RadialDomain {
        self.op.grid().domain()
    }

    pub fn eigenpair(&self) -> &EigenPair {
        &self.eigen
    }

    /// `I_p(u) = ½∫|∇u|² - 1/(p+1) ∫|u|^{p+1}`; `p = 0` gives `I_0`.
    pub fn energy_i(&self, u: &RadialField, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(LensError::InvalidExponent {
                value: p,
                reason: "energy needs p ≥ 0",
            });
        }
        let grad = self.op.dirichlet_energy(u)?;
        Ok(0.5 * grad - power_integral(u, p + 1.0) / (p + 1.0))
    }

    /// `I_0(u) = ½∫|∇u|² - ∫|u|`.
    pub fn energy_i0(&self, u: &RadialField) -> Result<f64> {
        self.energy_i(u, 0.0)
    }

    /// `φ_p(f) = p/(p+1) ∫|f|^{(p+1)/p} - ½ ∫ f K f` on zero-average `f`.
    pub fn dual_energy_phi(&self, f: &RadialField, p: f64, tol: f64) -> Result<f64> {
        check_positive_exponent(p)?;
        let kf = self.op.inverse_neumann(f, tol)?;
        let q = (p + 1.0) / p;
        Ok(p / (p + 1.0) * power_integral(f, q) - 0.5 * f.dot(&kf)?)
    }

    fn radial_unavailable(&self, p: f64) -> bool {
        let d = self.domain();
        d.is_ball() && d.critical_exponent().is_some_and(|pc| p >= pc)
    }

    /// Recentre, then normalize in `L^{p+1}`.
    fn project(&self, u: &RadialField, p: f64, config: &VariationalConfig) -> Result<RadialField> {
        let shift = cp(u, p, config.recenter_tol)?.shift;
        let centred = u.shifted(shift);
        let norm = centred.lq_norm_unchecked(p + 1.0);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(LensError::InvalidInput("projection of a constant field".into()));
        }
        Ok(centred.scaled(1.0 / norm))
    }

    /// `K_p(|u|^{p-1}u)` normalized in `L^{p+1}`.
    fn inverse_step(&self, u: &RadialField, p: f64, config: &VariationalConfig) -> Result<RadialField> {
        let f: Vec<f64> = u.values().iter().map(|v| signed_pow(*v, p)).collect();
        let w = self.op.inverse_projected(&f);
        self.project(&w, p, config)
    }

    /// Minimizes `∫|∇u|²` under `‖u‖_{p+1} = 1`, `∫|u|^{p-1}u = 0` from `±ψ₁`
    /// and an optional warm start; the lowest level wins.
    pub fn minimize_lambda(
        &self,
        p: f64,
        config: &VariationalConfig,
        warm: Option<&RadialField>,
    ) -> Result<VariationalResult> {
        check_positive_exponent(p)?;
        let seeds = self.seeds(warm)?;
        let runs: Vec<Result<(SeedOutcome, RadialField, usize)>> = seeds
            .par_iter()
            .map(|(name, seed)| self.descend_lambda(p, name, seed, config))
            .collect();
        self.collect(p, runs, |a, b| a < b)
    }

    fn seeds(&self, warm: Option<&RadialField>) -> Result<Vec<(String, RadialField)>> {
        let psi = &self.eigen.eigenfunction;
        let mut seeds = vec![("+psi1".to_string(), psi.clone()), ("-psi1".to_string(), psi.scaled(-1.0))];
        if let Some(w) = warm {
            w.check_grid(self.grid())?;
            if w.max() > w.min() {
                seeds.push(("warm".to_string(), w.clone()));
            }
        }
        Ok(seeds)
    }

    fn collect(
        &self,
        p: f64,
        runs: Vec<Result<(SeedOutcome, RadialField, usize)>>,
        better: impl Fn(f64, f64) -> bool,
    ) -> Result<VariationalResult> {
        let mut outcomes = Vec::new();
        let mut best: Option<(SeedOutcome, RadialField, usize)> = None;
        let mut last_err = None;
        for run in runs {
            match run {
                Ok((outcome, field, violations)) => {
                    outcomes.push(outcome.clone());
                    let replace = match &best {
                        None => true,
                        Some((b, _, _)) => {
                            (outcome.converged && !b.converged)
                                || (outcome.converged == b.converged
                                    && better(outcome.level, b.level))
                        }
                    };
                    if replace {
                        best = Some((outcome, field, violations));
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        let (outcome, extremizer, violations) = match best {
            Some(b) => b,
            None => return Err(last_err.unwrap_or(LensError::InvalidInput("no seeds".into()))),
        };
        Ok(VariationalResult {
            p,
            level: outcome.level,
            extremizer,
            el_residual: outcome.el_residual,
            iterations: outcome.iterations,
            converged: outcome.converged,
            monotonicity_violations: violations,
            radial_representation_unavailable: self.radial_unavailable(p),
            seeds: outcomes,
        })
    }

    fn descend_lambda(
        &self,
        p: f64,
        name: &str,
        seed: &RadialField,
        config: &VariationalConfig,
    ) -> Result<(SeedOutcome, RadialField, usize)> {
        let op = &self.op;
        let mut u = self.project(seed, p, config)?;
        let mut energy = op.dirichlet_energy_unchecked(u.values());
        let mut prev: Option<(RadialField, RadialField)> = None;
        let mut violations = 0;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        let mut stalled = 0;

        while iterations < config.max_iterations {
            let target = self.inverse_step(&u, p, config)?;
            residual = {
                let (num, den) = equation_residual_parts(op, u.values(), energy, p);
                num / den
            };
            if residual <= config.tol {
                converged = true;
                break;
            }
            iterations += 1;
            let grad = u.sub(&target)?;

            let mut tau = 1.0;
            if config.barzilai_borwein {
                if let Some((u_prev, g_prev)) = &prev {
                    let s = u.sub(u_prev)?;
                    let y = grad.sub(g_prev)?;
                    let sy = s.dot(&y)?;
                    if sy > 0.0 {
                        tau = (s.dot(&s)? / sy).clamp(1.0, config.max_step);
                    }
                }
            }
            let mut next = None;
            if tau != 1.0 {
                let trial = self.project(&u.zip_map(&grad, |a, g| a - tau * g)?, p, config);
                if let Ok(trial) = trial {
                    let e = op.dirichlet_energy_unchecked(trial.values());
                    if e <= energy {
                        next = Some((trial, e));
                    }
                }
            }
            // unit step: the inverse iteration itself
            let (trial, e) = match next {
                Some(t) => t,
                None => {
                    let e = op.dirichlet_energy_unchecked(target.values());
                    (target, e)
                }
            };
            if e > energy * (1.0 + 1e-12) {
                violations += 1;
            }
            let change = (energy - e).abs() / energy;
            stalled = if change <= 4.0 * f64::EPSILON { stalled + 1 } else { 0 };
            prev = Some((u, grad));
            u = trial;
            energy = e;
            if stalled >= 50 {
                break;
            }
        }
        if !converged {
            let (num, den) = equation_residual_parts(op, u.values(), energy, p);
            residual = num / den;
            converged = residual <= config.tol;
        }
        Ok((
            SeedOutcome {
                seed: name.to_string(),
                level: energy,
                el_residual: residual,
                iterations,
                converged,
            },
            u,
            violations,
        ))
    }

    /// Maximizes `∫ f K f` under `∫f = 0`, `‖f‖_{(p+1)/p} = 1`.
    ///
    /// A maximizer is a fixed point of `f ↦ |K_p f|^{p-1} K_p f` renormalized;
    /// the residual is the `L^{(p+1)/p}` distance between `f` and its image.
    pub fn maximize_d(
        &self,
        p: f64,
        config: &VariationalConfig,
        warm: Option<&RadialField>,
    ) -> Result<VariationalResult> {
        check_positive_exponent(p)?;
        let seeds: Vec<(String, RadialField)> = self
            .seeds(None)?
            .into_iter()
            .map(|(n, s)| (n, s.map(|v| signed_pow(v, p))))
            .chain(warm.map(|w| ("warm".to_string(), w.clone())))
            .collect();
        for (_, s) in &seeds {
            s.check_grid(self.grid())?;
        }
        let runs: Vec<_> = seeds
            .par_iter()
            .map(|(name, seed)| self.ascend_d(p, name, seed, config))
            .collect();
        self.collect(p, runs, |a, b| a > b)
    }

    fn normalize_dual(&self, f: &RadialField, p: f64) -> Result<RadialField> {
        let centred = f.without_mean();
        let norm = centred.lq_norm_unchecked((p + 1.0) / p);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(LensError::InvalidInput("dual iterate vanished".into()));
        }
        Ok(centred.scaled(1.0 / norm))
    }

    fn ascend_d(
        &self,
        p: f64,
        name: &str,
        seed: &RadialField,
        config: &VariationalConfig,
    ) -> Result<(SeedOutcome, RadialField, usize)> {
        let op = &self.op;
        let exponent = (p + 1.0) / p;
        let mut f = self.normalize_dual(seed, p)?;
        let mut q = f64::NEG_INFINITY;
        let mut residual;
        let mut best_residual = f64::INFINITY;
        let mut since_best = 0;
        let mut converged = false;
        let mut violations = 0;
        let mut iterations = 0;
        loop {
            let kf = op.inverse_projected(f.values());
            let new_q = f.dot(&kf)?;
            if new_q < q * (1.0 - 1e-12) {
                violations += 1;
            }
            q = new_q;
            let shift = cp(&kf, p, config.recenter_tol)?.shift;
            let next = self.normalize_dual(&kf.shifted(shift).map(|v| signed_pow(v, p)), p)?;
            residual = next.sub(&f)?.lq_norm_unchecked(exponent);
            if residual <= config.tol {
                converged = true;
                break;
            }
            if residual < 0.9 * best_residual {
                best_residual = residual;
                since_best = 0;
            } else {
                since_best += 1;
            }
            if iterations >= config.max_iterations || since_best >= 500 {
                break;
            }
            iterations += 1;
            f = next;
        }
        Ok((
            SeedOutcome {
                seed: name.to_string(),
                level: q,
                el_residual: residual,
                iterations,
                converged,
            },
            f,
            violations,
        ))
    }

    /// `Λ_p`, `D_p`, `L_p` and their defects at one exponent.
    pub fn level_record(&self, p: f64, config: &VariationalConfig) -> Result<LevelRecord> {
        let direct = self.minimize_lambda(p, config, None)?;
        let dual = self.maximize_d(p, config, None)?;
        self.level_record_from(&direct, &dual)
    }

    pub fn level_record_from(
        &self,
        direct: &VariationalResult,
        dual: &VariationalResult,
    ) -> Result<LevelRecord> {
        let p = direct.p;
        let lambda = direct.level;
        let (l_p, relation_defect) = if p == 1.0 {
            (None, None)
        } else {
            let l = level_l(p, lambda)?;
            let u = scale_to_solution(&direct.extremizer, lambda, p)?;
            let i = self.energy_i(&u, p)?;
            (Some(l), Some((i - l).abs() / i.abs()))
        };
        Ok(LevelRecord {
            p,
            l_p,
            lambda_p: lambda,
            d_p: dual.level,
            duality_defect: (lambda * dual.level - 1.0).abs(),
            relation_defect,
        })
    }

    /// Least-energy solution of `-Δu = sgn(u)`.
    pub fn minimize_l0(&self, method: L0Method, config: &VariationalConfig) -> Result<SignProblemResult> {
        let mut candidates: Vec<(L0Method, RadialField, usize, bool)> = Vec::new();
        if matches!(method, L0Method::Direct | L0Method::Both) {
            for seed in [self.eigen.eigenfunction.clone(), self.eigen.eigenfunction.scaled(-1.0)] {
                let (u, it, ok) = self.descend_sign_problem(&seed, config)?;
                candidates.push((L0Method::Direct, u, it, ok));
            }
        }
        if matches!(method, L0Method::Continuation | L0Method::Both) {
            let mut warm: Option<RadialField> = None;
            let mut last = None;
            for p in [0.1, 0.01, 0.001] {
                let res = self.minimize_lambda(p, config, warm.as_ref())?;
                let u = scale_to_solution(&res.extremizer, res.level, p)?;
                warm = Some(res.extremizer.clone());
                last = Some((u, res.iterations, res.converged));
            }
            let (u, it, ok) = last.expect("continuation ran");
            candidates.push((L0Method::Continuation, u, it, ok));
        }
        let mut scored = Vec::new();
        for (m, u, it, ok) in candidates {
            let e = self.energy_i0(&u)?;
            scored.push((m, u, it, ok, e));
        }
        let best = scored
            .iter()
            .min_by(|a, b| a.4.total_cmp(&b.4))
            .ok_or_else(|| LensError::InvalidInput("no method selected".into()))?;
        let (m, u, it, ok, e) = best.clone();
        let band = 0.0;
        Ok(SignProblemResult {
            level: e,
            balance: sign_balance(&u, band),
            profile: u,
            method: m,
            iterations: it,
            converged: ok,
            candidates: scored.iter().map(|c| (c.0, c.4)).collect(),
        })
    }

    /// Fixed point `u ← K s(u) - t`, where `s(u)` is the sign of `u` balanced so
    /// that `∫ s = 0` (the median cell takes a value in `[-1, 1]`) and `t`
    /// moves the volume median of `K s(u)` to zero. Each step is a `K`-
    /// preconditioned subgradient step on `I_0` followed by the balance
    /// projection, and never increases `I_0` on the balanced set.
    fn descend_sign_problem(
        &self,
        seed: &RadialField,
        config: &VariationalConfig,
    ) -> Result<(RadialField, usize, bool)> {
        let mut u = shift_to_median(seed);
        let mut sign = balanced_sign(&u);
        for it in 1..=config.max_iterations.min(10_000) {
            let w = self.op.inverse_projected(&sign);
            let next = shift_to_median(&w);
            let next_sign = balanced_sign(&next);
            let same = sign
                .iter()
                .zip(&next_sign)
                .all(|(a, b)| (a - b).abs() <= 1e-12);
            u = next;
            sign = next_sign;
            if same {
                let w = self.op.inverse_projected(&sign);
                return Ok((shift_to_median(&w), it, true));
            }
        }
        Ok((u, config.max_iterations.min(10_000), false))
    }
}

/// Sorted order of node indices by value, stable.
fn order_by_value(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx
}

/// Index of the node where the cumulative measure, in increasing order of
/// value, first reaches half of `|Ω|`, plus the measure strictly below it.
fn volume_median(u: &RadialField) -> (usize, f64) {
    let w = u.grid().weights();
    let total: f64 = w.iter().sum();
    let mut below = 0.0;
    for &i in &order_by_value(u.values()) {
        if below + w[i] >= 0.5 * total {
            return (i, below);
        }
        below += w[i];
    }
    unreachable!("weights sum to the total measure")
}

fn shift_to_median(u: &RadialField) -> RadialField {
    let (j, _) = volume_median(u);
    u.shifted(-u.values()[j])
}

/// Balanced sign of `u`: `±1` off the median node, and the value in `[-1, 1]`
/// at the median node that makes `Σ V_i s_i = 0`.
fn balanced_sign(u: &RadialField) -> Vec<f64> {
    let w = u.grid().weights();
    let (j, below) = volume_median(u);
    let total: f64 = w.iter().sum();
    let above = total - below - w[j];
    let order = order_by_value(u.values());
    let mut s = vec![0.0; w.len()];
    let mut seen = false;
    for &i in &order {
        if i == j {
            seen = true;
            s[i] = ((below - above) / w[j]).clamp(-1.0, 1.0);
        } else {
            s[i] = if seen { 1.0 } else { -1.0 };
        }
    }
    s
}
