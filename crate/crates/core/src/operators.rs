//! Discrete radial Neumann Laplacian and its inverses.
//!
//! The Laplacian is the conservative (finite-volume) discretization on the
//! dual cells of the grid:
//!
//! ```text
//!   (L u)_i = [ A_{i-1/2} (u_i - u_{i-1}) + A_{i+1/2} (u_i - u_{i+1}) ] / (h V_i)
//! ```
//!
//! with face areas `A = σ r^{N-1}` and cell measures `V_i`. The boundary
//! faces carry zero flux, which is the Neumann condition; at the centre of a
//! ball the first row reduces to `2N (u_0 - u_1) / h²`. Writing `S = diag(V) L`,
//! `S` is symmetric with constants in its kernel, and `uᵀ S u` is the discrete
//! Dirichlet energy.

use std::sync::Arc;

use crate::bordered::BorderedTridiagonal;
use crate::error::{LensError, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlinear_average::recenter;

#[derive(Debug, Clone)]
pub struct NeumannLaplacian {
    grid: Arc<RadialGrid>,
    /// `A_{i+1/2} / h`, the conductance of face `i + 1/2`.
    coupling: Vec<f64>,
    diag: Vec<f64>,
    factor: BorderedTridiagonal,
}

impl NeumannLaplacian {
    pub fn new(grid: Arc<RadialGrid>) -> Result<Self> {
        let h = grid.step();
        let coupling: Vec<f64> = grid.face_areas().iter().map(|a| a / h).collect();
        let n = grid.len();
        let mut diag = vec![0.0; n];
        for (i, c) in coupling.iter().enumerate() {
            diag[i] += c;
            diag[i + 1] += c;
        }
        let off: Vec<f64> = coupling.iter().map(|c| -c).collect();
        let w = grid.weights();
        let factor = BorderedTridiagonal::factor(&off, &diag, &off, w, w, 0.0)?;
        Ok(Self {
            grid,
            coupling,
            diag,
            factor,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Largest absolute row sum of `L`, which bounds its spectrum.
    pub fn norm_bound(&self) -> f64 {
        self.diag
            .iter()
            .zip(self.grid.weights())
            .fold(0.0f64, |m, (d, v)| m.max(2.0 * d / v))
    }

    /// `S u` with `S = diag(V) L`.
    pub(crate) fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut out: Vec<f64> = self.diag.iter().zip(u).map(|(d, x)| d * x).collect();
        for i in 0..n - 1 {
            let c = self.coupling[i];
            out[i] -= c * u[i + 1];
            out[i + 1] -= c * u[i];
        }
        out
    }

    /// `-Δu` with the Neumann closure.
    pub fn apply(&self, u: &RadialField) -> Result<RadialField> {
        u.check_grid(&self.grid)?;
        Ok(self.apply_unchecked(u.values()))
    }

    pub(crate) fn apply_unchecked(&self, u: &[f64]) -> RadialField {
        let mut out = self.stiffness_apply(u);
        for (o, w) in out.iter_mut().zip(self.grid.weights()) {
            *o /= w;
        }
        RadialField::from_parts(self.grid.clone(), out)
    }

    /// `∫|∇u|²`, summed over cell faces: `Σ A_{i+1/2} (u_{i+1} - u_i)² / h`.
    pub fn dirichlet_energy(&self, u: &RadialField) -> Result<f64> {
        u.check_grid(&self.grid)?;
        Ok(self.dirichlet_energy_unchecked(u.values()))
    }

    pub(crate) fn dirichlet_energy_unchecked(&self, u: &[f64]) -> f64 {
        self.coupling
            .iter()
            .zip(u.windows(2))
            .map(|(c, w)| c * (w[1] - w[0]).powi(2))
            .sum()
    }

    /// Gradient of `u ↦ ∫|∇u|²` with respect to the nodal values.
    pub fn dirichlet_gradient(&self, u: &RadialField) -> Result<Vec<f64>> {
        u.check_grid(&self.grid)?;
        Ok(self.stiffness_apply(u.values()).into_iter().map(|x| 2.0 * x).collect())
    }

    /// The operator `K`: for zero-average `h`, the zero-average `u` with
    /// `-Δu = h` and `∂_ν u = 0`.
    ///
    /// `h` must satisfy `|∫h| ≤ tol ‖h‖₁`; whatever mean remains is projected
    /// out by the Lagrange multiplier of the bordered system.
    pub fn inverse_neumann(&self, h: &RadialField, tol: f64) -> Result<RadialField> {
        h.check_grid(&self.grid)?;
        let integral = h.integrate();
        let l1: f64 = self
            .grid
            .weights()
            .iter()
            .zip(h.values())
            .map(|(w, v)| w * v.abs())
            .sum();
        if integral.abs() > tol * l1 {
            return Err(LensError::Compatibility {
                integral,
                bound: tol * l1,
            });
        }
        Ok(self.inverse_projected(h.values()))
    }

    /// `K(h - mean h)` without the compatibility check.
    pub(crate) fn inverse_projected(&self, h: &[f64]) -> RadialField {
        let mut rhs: Vec<f64> = h
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .collect();
        self.factor.solve_in_place(&mut rhs, 0.0);
        RadialField::from_parts(self.grid.clone(), rhs)
    }

    /// The operator `K_p h = K h + c_p(K h)`.
    pub fn shifted_inverse(&self, h: &RadialField, p: f64, tol: f64) -> Result<RadialField> {
        let kh = self.inverse_neumann(h, tol)?;
        recenter(&kh, p, tol)
    }

    /// `∫ f K f` for the mean-free part of `f`.
    pub fn quadratic_form(&self, f: &RadialField) -> Result<f64> {
        f.check_grid(&self.grid)?;
        let kf = self.inverse_projected(f.values());
        f.dot(&kf)
    }
}
