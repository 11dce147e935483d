//! Direct solver for a tridiagonal matrix bordered by one extra row and column:
//!
//! ```text
//!     [ T   c ] [x]   [y ]
//!     [ rᵀ  d ] [λ] = [yₙ]
//! ```
//!
//! Gaussian elimination runs down the tridiagonal core and carries the border
//! along; the last core pivot is folded into a 2×2 block with the border, so
//! a singular `T` (the Neumann Laplacian) is fine as long as the full matrix
//! is not.

use crate::error::{LensError, Result};

#[derive(Debug, Clone)]
pub(crate) struct BorderedTridiagonal {
    upper: Vec<f64>,
    pivots: Vec<f64>,
    mult: Vec<f64>,
    border_col: Vec<f64>,
    row_mult: Vec<f64>,
    corner: [[f64; 2]; 2],
}

impl BorderedTridiagonal {
    /// `lower[i] = T[i+1][i]`, `diag[i] = T[i][i]`, `upper[i] = T[i][i+1]`.
    pub(crate) fn factor(
        lower: &[f64],
        diag: &[f64],
        upper: &[f64],
        col: &[f64],
        row: &[f64],
        corner: f64,
    ) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 2 && lower.len() == n - 1 && upper.len() == n - 1);
        assert!(col.len() == n && row.len() == n);

        let mut pivots = vec![0.0; n];
        let mut mult = vec![0.0; n - 1];
        let mut row_mult = vec![0.0; n - 1];
        let mut border_col = col.to_vec();
        let mut row_run = row.to_vec();
        let mut d = corner;

        pivots[0] = diag[0];
        let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n - 1 {
            let piv = pivots[i];
            if piv.abs() <= 1e-300 || piv.abs() <= f64::EPSILON * 1e-6 * scale {
                return Err(LensError::Singular(format!("zero pivot at row {i}")));
            }
            let m = lower[i] / piv;
            mult[i] = m;
            pivots[i + 1] = diag[i + 1] - m * upper[i];
            border_col[i + 1] -= m * border_col[i];
            let rm = row_run[i] / piv;
            row_mult[i] = rm;
            row_run[i + 1] -= rm * upper[i];
            d -= rm * border_col[i];
        }
        let block = [[pivots[n - 1], border_col[n - 1]], [row_run[n - 1], d]];
        let det = block[0][0] * block[1][1] - block[0][1] * block[1][0];
        let size = block.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if det.abs() <= f64::EPSILON * size * size * 1e-3 {
            return Err(LensError::Singular("bordered system has a null space".into()));
        }
        Ok(Self {
            upper: upper.to_vec(),
            pivots,
            mult,
            border_col,
            row_mult,
            corner: block,
        })
    }

    /// Solves in place: on return `rhs` holds `x` and the multiplier `λ` is returned.
    pub(crate) fn solve_in_place(&self, rhs: &mut [f64], mut rhs_border: f64) -> f64 {
        let n = self.pivots.len();
        debug_assert_eq!(rhs.len(), n);
        for i in 0..n - 1 {
            rhs[i + 1] -= self.mult[i] * rhs[i];
            rhs_border -= self.row_mult[i] * rhs[i];
        }
        let [[a, b], [c, d]] = self.corner;
        let det = a * d - b * c;
        let x_last = (rhs[n - 1] * d - b * rhs_border) / det;
        let lambda = (a * rhs_border - c * rhs[n - 1]) / det;
        rhs[n - 1] = x_last;
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.upper[i] * rhs[i + 1] - self.border_col[i] * lambda)
                / self.pivots[i];
        }
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn matches_dense_elimination_on_singular_core() {
        // graph Laplacian of a weighted path: singular, kernel = constants
        let n = 9;
        let w: Vec<f64> = (0..n - 1).map(|i| 1.0 + 0.3 * i as f64).collect();
        let mut diag = vec![0.0; n];
        for i in 0..n - 1 {
            diag[i] += w[i];
            diag[i + 1] += w[i];
        }
        let off: Vec<f64> = w.iter().map(|x| -x).collect();
        let mass: Vec<f64> = (0..n).map(|i| 0.5 + 0.1 * i as f64).collect();
        let f = BorderedTridiagonal::factor(&off, &diag, &off, &mass, &mass, 0.0).unwrap();

        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut x = rhs.clone();
        let lambda = f.solve_in_place(&mut x, 0.25);

        let mut dense = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            dense[i][i] = diag[i];
            if i + 1 < n {
                dense[i][i + 1] = off[i];
                dense[i + 1][i] = off[i];
            }
            dense[i][n] = mass[i];
            dense[n][i] = mass[i];
        }
        let mut b = rhs.clone();
        b.push(0.25);
        let reference = dense_solve(dense, b);
        for i in 0..n {
            assert!((x[i] - reference[i]).abs() < 1e-12);
        }
        assert!((lambda - reference[n]).abs() < 1e-12);
    }

    #[test]
    fn detects_null_space() {
        let diag = [1.0, 2.0, 1.0];
        let off = [-1.0, -1.0];
        // border orthogonal to the kernel of T keeps the system singular
        let col = [1.0, 0.0, -1.0];
        assert!(BorderedTridiagonal::factor(&off, &diag, &off, &col, &col, 0.0).is_err());
    }
}
