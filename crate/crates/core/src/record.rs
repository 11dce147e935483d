use serde::Serialize;

use crate::grid::RadialField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionMethod {
    /// Minimizer of the constrained level `Λ_p`, rescaled.
    Direct,
    /// Maximizer of the dual level `D_p`, mapped back.
    Dual,
    /// Radial shooting in the initial value.
    Shooting,
    /// Minimizer of `I_0` on the balanced set (the `p = 0` problem).
    SignProblem,
    /// `κ ψ₁`, the limit profile at `p = 1` when `μ₁ = 1`.
    EigenLimit,
}

/// One solved instance of the Neumann Lane-Emden problem.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecord {
    pub p: f64,
    pub method: SolutionMethod,
    pub profile: RadialField,
    /// `I_p(u)` (`I_0(u)` at `p = 0`).
    pub energy: f64,
    /// `L_p` from the level relation, when `Λ_p` is available and `p ≠ 1`.
    pub level: Option<f64>,
    pub lambda: Option<f64>,
    pub dual_level: Option<f64>,
    /// `‖-Δu - |u|^{p-1}u‖₂ / ‖|u|^{p-1}u‖₂`.
    pub residual: f64,
    pub sup_norm: f64,
    pub monotone: bool,
    pub sign_changing: bool,
    pub converged: bool,
    pub notes: Vec<String>,
}
