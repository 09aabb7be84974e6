//! Gauss rules generated by the Golub–Welsch eigenvalue method.
//!
//! Two weight families cover everything the solver needs: plain Legendre on
//! an interval, and the one-sided Jacobi weight y^β on [0,h] that absorbs
//! the degenerate/singular factor of the cylinder measure at y = 0.

use crate::linalg::{jacobi_eigen, DenseMatrix};
use crate::{Error, Result};
use alloc::vec::Vec;
use libm::{pow, sqrt};

/// Nodes and weights of a positive quadrature rule on some interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre rule with `order` points on [a,b]; exact through
    /// degree 2·order−1.
    pub fn legendre(order: usize, a: f64, b: f64) -> Result<Rule> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config("quadrature interval must be finite with a < b"));
        }
        let base = jacobi_weight_reference(order, 0.0)?;
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        Ok(Rule {
            nodes: base.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: base.weights.iter().map(|&w| half * w).collect(),
        })
    }

    /// Gauss rule for ∫₀^h y^β f(y) dy with β > −1; the weight y^β is
    /// handled exactly, f is integrated exactly through degree 2·order−1.
    pub fn jacobi_left(order: usize, beta: f64, h: f64) -> Result<Rule> {
        if !(beta > -1.0 && beta.is_finite()) {
            return Err(Error::Config("jacobi weight exponent must exceed -1"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config("quadrature interval length must be positive"));
        }
        let base = jacobi_weight_reference(order, beta)?;
        // y = h(1+x)/2 pulls (1+x)^β out of the measure: the extra factor
        // (h/2)^β joins the jacobian h/2.
        let scale = pow(0.5 * h, beta + 1.0);
        Ok(Rule {
            nodes: base.nodes.iter().map(|&x| 0.5 * h * (1.0 + x)).collect(),
            weights: base.weights.iter().map(|&w| scale * w).collect(),
        })
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Reference rule on [−1,1] for the weight (1+x)^β, by eigendecomposition
/// of the symmetrized three-term recurrence matrix.
fn jacobi_weight_reference(order: usize, beta: f64) -> Result<Rule> {
    if order == 0 {
        return Err(Error::Config("quadrature order must be at least 1"));
    }
    let n = order;
    let mut j = DenseMatrix::zeros(n);
    // Monic recurrence for the weight (1−x)^0 (1+x)^β.
    j.set(0, 0, beta / (beta + 2.0));
    for k in 1..n {
        let kf = k as f64;
        let denom = 2.0 * kf + beta;
        j.set(k, k, beta * beta / (denom * (denom + 2.0)));
        let num = 2.0 * kf * (kf + beta) / denom;
        let off = sqrt(num * num / ((denom + 1.0) * (denom - 1.0)));
        j.set(k - 1, k, off);
        j.set(k, k - 1, off);
    }
    let (nodes, vecs) = jacobi_eigen(&j)?;
    // Total mass μ₀ = ∫_{−1}^{1} (1+x)^β dx.
    let mu0 = pow(2.0, beta + 1.0) / (beta + 1.0);
    let weights = (0..n).map(|k| mu0 * vecs.get(0, k) * vecs.get(0, k)).collect();
    Ok(Rule { nodes, weights })
}
