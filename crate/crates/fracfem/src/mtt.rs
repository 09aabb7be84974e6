//! Matrix transference oracle on the interval: discretize
//! −(a u')' + c u with P1 elements, diagonalize the generalized
//! eigenproblem K Φ = M Φ Λ, and apply the fractional power spectrally,
//! u_h = Φ Λ^{−s} Φᵀ b_f. Dense and deliberately independent of the
//! extension solver so the two paths can cross-check each other.

use crate::linalg::{sym_eig_dense, DenseMatrix};
use crate::quadrature::Rule;
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use libm::pow;

/// Coefficients of the operator −(a u')' + c u on (0,1), Dirichlet ends.
pub struct Operator1d<'a> {
    pub a: &'a dyn Fn(f64) -> f64,
    pub c: &'a dyn Fn(f64) -> f64,
}

/// Diagonalized P1 discretization, reusable across fractional exponents.
pub struct MttSystem {
    n: usize,
    eigenvalues: Vec<f64>,
    vectors: DenseMatrix,
}

const MAX_DENSE_N: usize = 2000;

impl MttSystem {
    pub fn new(op: &Operator1d, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("mtt grid needs at least 2 cells"));
        }
        if n > MAX_DENSE_N {
            return Err(Error::Config("mtt dense eigensolve is limited to N <= 2000"));
        }
        let h = 1.0 / n as f64;
        let dofs = n - 1;
        let mut k = DenseMatrix::zeros(dofs);
        let mut m = DenseMatrix::zeros(dofs);
        for cell in 0..n {
            let x0 = cell as f64 * h;
            let rule = Rule::legendre(3, x0, x0 + h)?;
            let mut k_loc = [[0.0; 2]; 2];
            for (&xq, &w) in rule.nodes.iter().zip(&rule.weights) {
                let av = (op.a)(xq);
                if !(av > 0.0) || !av.is_finite() {
                    return Err(Error::NonSpd { cell });
                }
                let cv = (op.c)(xq);
                if cv < 0.0 || !cv.is_finite() {
                    return Err(Error::NonSpd { cell });
                }
                let rise = (xq - x0) / h;
                let theta = [1.0 - rise, rise];
                let dtheta = [-1.0 / h, 1.0 / h];
                for i in 0..2 {
                    for j in 0..2 {
                        k_loc[i][j] += w * (av * dtheta[i] * dtheta[j] + cv * theta[i] * theta[j]);
                    }
                }
            }
            let m_loc = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
            for i in 0..2 {
                let Some(r) = interior_index(cell + i, n) else { continue };
                for j in 0..2 {
                    let Some(cix) = interior_index(cell + j, n) else { continue };
                    k.set(r, cix, k.get(r, cix) + k_loc[i][j]);
                    m.set(r, cix, m.get(r, cix) + m_loc[i][j]);
                }
            }
        }
        let (eigenvalues, vectors) = sym_eig_dense(&k, &m)?;
        Ok(MttSystem { n, eigenvalues, vectors })
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    /// Smallest generalized eigenvalue of the discretization.
    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Fractional solve u_h = Φ Λ^{−s} Φᵀ b_f, returned as nodal values on
    /// the full grid x_i = i/N (zeros at the Dirichlet ends).
    ///
    /// s = 1 is the plain FEM solve, s = 0 the L² projection of f.
    pub fn solve(&self, f: &dyn Fn(f64) -> f64, s: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain("fractional exponent must lie in [0,1]"));
        }
        let dofs = self.n - 1;
        let h = 1.0 / self.n as f64;
        // load b_i = ∫ f θ_i
        let mut b = vec![0.0; dofs];
        for cell in 0..self.n {
            let x0 = cell as f64 * h;
            let rule = Rule::legendre(8, x0, x0 + h)?;
            for (&xq, &w) in rule.nodes.iter().zip(&rule.weights) {
                let rise = (xq - x0) / h;
                let fv = f(xq);
                if let Some(r) = interior_index(cell, self.n) {
                    b[r] += w * fv * (1.0 - rise);
                }
                if let Some(r) = interior_index(cell + 1, self.n) {
                    b[r] += w * fv * rise;
                }
            }
        }
        // spectral coefficients Φᵀ b, scaled by λ^{−s}, recombined
        let mut coeffs = vec![0.0; dofs];
        for k in 0..dofs {
            let mut acc = 0.0;
            for i in 0..dofs {
                acc += self.vectors.get(i, k) * b[i];
            }
            coeffs[k] = acc * pow(self.eigenvalues[k], -s);
        }
        let mut u = vec![0.0; self.n + 1];
        for i in 0..dofs {
            let mut acc = 0.0;
            for k in 0..dofs {
                acc += self.vectors.get(i, k) * coeffs[k];
            }
            u[i + 1] = acc;
        }
        Ok(u)
    }
}

fn interior_index(node: usize, n: usize) -> Option<usize> {
    if node == 0 || node == n {
        None
    } else {
        Some(node - 1)
    }
}

/// One-shot convenience wrapper around [`MttSystem`].
pub fn mtt_solve(op: &Operator1d, f: &dyn Fn(f64) -> f64, s: f64, n: usize) -> Result<Vec<f64>> {
    MttSystem::new(op, n)?.solve(f, s)
}
