//! Numerical laboratory for least-energy nodal solutions of the pure Neumann
//! Lane-Emden problem
//!
//! ```text
//!     -Δu = |u|^{p-1} u  in Ω,    ∂_ν u = 0  on ∂Ω,
//! ```
//!
//! on radial domains (intervals, balls and annuli in any dimension). The crate
//! computes solutions through three independent routes (direct minimization of
//! the constrained Rayleigh-type level, dual maximization, and radial
//! shooting) and cross-checks the identities that tie them together.
//!
//! Module map:
//!
//! - [`grid`]: radial domains, uniform grids, radial quadrature and norms.
//! - [`operators`]: discrete Neumann Laplacian, its zero-average inverse `K`
//!   and the recentred inverse `K_p`.
//! - [`nonlinear_average`]: the recentring constant `c_p` and the `p = 0`
//!   measure balance.
//! - [`eigen`]: first nonconstant radial Neumann eigenpair and annulus tuning.
//! - [`variational`]: energies, the direct and dual extremal problems and
//!   level relations.
//! - [`shooting`]: radial ODE shooting, including `p = 0` and supercritical `p`.
//! - [`qualitative`]: monotonicity, Pohozaev profile, ball nonexistence scan,
//!   flip-and-rearrange transform.
//! - [`sweep`]: continuation in `p`, limit diagnostics and figure output.

pub mod eigen;
pub mod error;
pub mod grid;
pub mod nonlinear_average;
pub mod operators;
pub mod qualitative;
pub mod record;
pub mod shooting;
pub mod sweep;
pub mod variational;

mod bordered;

pub use eigen::{log_normalization_constant, radial_eigenpair, tune_annulus, EigenPair, TuneResult};
pub use error::{LensError, Result};
pub use grid::{IntervalMeasure, RadialDomain, RadialField, RadialGrid};
pub use nonlinear_average::{cp, recenter, sign_balance, RecenterResult, SignBalance};
pub use operators::NeumannLaplacian;

pub use record::{SolutionMethod, SolutionRecord};
pub use variational::{
    level_l, scale_to_solution, L0Method, LevelRecord, RadialProblem, SignProblemResult,
    VariationalConfig, VariationalResult,
};
pub use qualitative::{check_monotone, flip_rearrange, pohozaev_profile, MonotoneCheck, RearrangementResult};
pub use shooting::{integrate_radial, shoot, ShootingConfig, ShootingSolution, ShootingTrajectory};
pub use sweep::{limit_u1, sweep, SweepConfig, SweepReport};
