//! Minimal sparse and dense kernels: CSR storage with preconditioned
//! conjugate gradients for the extension systems, and a cyclic-Jacobi dense
//! symmetric eigensolver (plain and B-generalized) for the validation path.

use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

/// Square sparse matrix in compressed-sparse-row layout with sorted columns.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from one column→value map per row (columns come out sorted).
    pub fn from_row_maps(rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let nnz = rows.iter().map(|r| r.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in &rows {
            for (&j, &v) in row {
                debug_assert!(j < n);
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// max_{ij} |a_ij − a_ji|, for symmetry checks.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if j > i {
                    worst = worst.max(fabs(self.vals[k] - self.get(j, i)));
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, &v| m.max(fabs(v)))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n);
        for (i, j, v) in self.entries() {
            d.set(i, j, v);
        }
        d
    }
}

/// Row-major square dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    a: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            debug_assert_eq!(r.len(), n);
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max(fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }
}

/// Lower Cholesky factor of an SPD matrix; fails on non-positive pivots.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.n();
    let mut l = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return Err(Error::LinAlg("matrix not positive definite"));
                }
                l.set(i, i, sqrt(sum));
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves L Lᵀ x = b given the lower factor L.
pub fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.n();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut sum = x[i];
        for k in 0..i {
            sum -= l.get(i, k) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut sum = x[i];
        for k in i + 1..n {
            sum -= l.get(k, i) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending and the matching orthonormal columns.
pub fn jacobi_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.n();
    if n == 0 {
        return Err(Error::Config("empty matrix"));
    }
    if a.symmetry_defect() > 1e-8 * (1.0 + frobenius(a)) {
        return Err(Error::LinAlg("matrix not symmetric"));
    }
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let mut d: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    for sweep in 1..=60 {
        let mut sm = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                sm += fabs(m.get(p, q));
            }
        }
        if sm == 0.0 {
            return Ok(sorted_eigen(d, v));
        }
        let tresh = if sweep < 4 { 0.2 * sm / (n * n) as f64 } else { 0.0 };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = 100.0 * fabs(m.get(p, q));
                if sweep > 4 && fabs(d[p]) + g == fabs(d[p]) && fabs(d[q]) + g == fabs(d[q]) {
                    m.set(p, q, 0.0);
                } else if fabs(m.get(p, q)) > tresh {
                    let mut h = d[q] - d[p];
                    let t = if fabs(h) + g == fabs(h) {
                        m.get(p, q) / h
                    } else {
                        let theta = 0.5 * h / m.get(p, q);
                        let mut t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta));
                        if theta < 0.0 {
                            t = -t;
                        }
                        t
                    };
                    let c = 1.0 / sqrt(1.0 + t * t);
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    h = t * m.get(p, q);
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    m.set(p, q, 0.0);
                    for j in 0..p {
                        rotate(&mut m, j, p, j, q, s, tau);
                    }
                    for j in p + 1..q {
                        rotate(&mut m, p, j, j, q, s, tau);
                    }
                    for j in q + 1..n {
                        rotate(&mut m, p, j, q, j, s, tau);
                    }
                    for j in 0..n {
                        rotate(&mut v, j, p, j, q, s, tau);
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    Err(Error::LinAlg("jacobi eigensolver did not converge"))
}

fn rotate(m: &mut DenseMatrix, i: usize, j: usize, k: usize, l: usize, s: f64, tau: f64) {
    let g = m.get(i, j);
    let h = m.get(k, l);
    m.set(i, j, g - s * (h + g * tau));
    m.set(k, l, h + s * (g - h * tau));
}

fn frobenius(a: &DenseMatrix) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.n() {
        for j in 0..a.n() {
            sum += a.get(i, j) * a.get(i, j);
        }
    }
    sqrt(sum)
}

fn sorted_eigen(d: Vec<f64>, v: DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let vals = order.iter().map(|&i| d[i]).collect();
    let mut vecs = DenseMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vecs.set(row, new_col, v.get(row, old_col));
        }
    }
    (vals, vecs)
}

/// Generalized symmetric eigenproblem A v = μ B v with B SPD.
/// Returns eigenvalues ascending and B-orthonormal eigenvector columns.
pub fn sym_eig_dense(a: &DenseMatrix, b: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::Config("dimension mismatch in generalized eigenproblem"));
    }
    let l = cholesky(b).map_err(|_| Error::LinAlg("B not positive definite"))?;
    // C = L⁻¹ A L⁻ᵀ via two triangular solves, then symmetrize roundoff away.
    let mut x = DenseMatrix::zeros(n);
    for col in 0..n {
        for i in 0..n {
            let mut sum = a.get(i, col);
            for k in 0..i {
                sum -= l.get(i, k) * x.get(k, col);
            }
            x.set(i, col, sum / l.get(i, i));
        }
    }
    let mut c = DenseMatrix::zeros(n);
    for row in 0..n {
        for j in 0..n {
            let mut sum = x.get(row, j);
            for k in 0..j {
                sum -= l.get(j, k) * c.get(row, k);
            }
            c.set(row, j, sum / l.get(j, j));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (c.get(i, j) + c.get(j, i));
            c.set(i, j, m);
            c.set(j, i, m);
        }
    }
    let (vals, z) = jacobi_eigen(&c)?;
    // Back-transform: V = L⁻ᵀ Z, column by column.
    let mut v = DenseMatrix::zeros(n);
    for col in 0..n {
        for i in (0..n).rev() {
            let mut sum = z.get(i, col);
            for k in i + 1..n {
                sum -= l.get(k, i) * v.get(k, col);
            }
            v.set(i, col, sum / l.get(i, i));
        }
    }
    Ok((vals, v))
}

/// Factored tridiagonal principal blocks coupling each vertical line of
/// unknowns, for tensor meshes whose free nodes are laid out as
/// index = layer·lines + line. Extension systems on strongly graded
/// partitions are violently anisotropic in the extended direction, and
/// solving along those lines restores mesh-independent CG behavior in y.
#[derive(Debug, Clone)]
pub struct LineBlocks {
    lines: usize,
    layers: usize,
    inv_d: Vec<f64>,
    l: Vec<f64>,
}

impl LineBlocks {
    pub fn new(a: &CsrMatrix, lines: usize, layers: usize) -> Result<Self> {
        if lines == 0 || layers == 0 || lines * layers != a.n() {
            return Err(Error::Config("line layout does not match the matrix"));
        }
        let n = a.n();
        let mut inv_d = vec![0.0; n];
        let mut l = vec![0.0; n];
        for c in 0..lines {
            for k in 0..layers {
                let i = k * lines + c;
                let mut dp = a.get(i, i);
                if k > 0 {
                    let e = a.get(i - lines, i);
                    let lk = e * inv_d[i - lines];
                    l[i] = lk;
                    dp -= lk * e;
                }
                if !(dp > 0.0) {
                    return Err(Error::LinAlg("line blocks are not positive definite"));
                }
                inv_d[i] = 1.0 / dp;
            }
        }
        Ok(LineBlocks { lines, layers, inv_d, l })
    }

    /// z = P⁻¹ r via the LDLᵀ factors, every line independently.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lines = self.lines;
        z[..lines].copy_from_slice(&r[..lines]);
        for i in lines..lines * self.layers {
            z[i] = r[i] - self.l[i] * z[i - lines];
        }
        let n = lines * self.layers;
        for i in (n - lines..n).rev() {
            z[i] *= self.inv_d[i];
        }
        for i in (0..n - lines).rev() {
            z[i] = z[i] * self.inv_d[i] - self.l[i + lines] * z[i + lines];
        }
    }

    pub fn n(&self) -> usize {
        self.lines * self.layers
    }
}

/// Preconditioner choices for [`cg_solve`].
#[derive(Debug, Clone)]
pub enum Preconditioner {
    None,
    Jacobi,
    Lines(LineBlocks),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for an SPD system.
///
/// Convergence means ‖b − Ax‖₂ ≤ tol·‖b‖₂ for the recomputed true residual.
/// Hitting `maxiter` returns the best iterate with `converged = false`.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxiter: usize,
    precond: Preconditioner,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::Config("cg_solve: dimension mismatch"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config("cg_solve: tol must lie in (0,1)"));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        let report = SolveReport { iterations: 0, relative_residual: 0.0, converged: true };
        return Ok((vec![0.0; n], report));
    }
    enum Applier {
        Identity,
        Diag(Vec<f64>),
        Lines(LineBlocks),
    }
    let applier = match precond {
        Preconditioner::None => Applier::Identity,
        Preconditioner::Jacobi => {
            let d = a.diagonal();
            if d.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::LinAlg("jacobi preconditioner needs a positive diagonal"));
            }
            Applier::Diag(d.iter().map(|&v| 1.0 / v).collect())
        }
        Preconditioner::Lines(lb) => {
            if lb.n() != n {
                return Err(Error::Config("cg_solve: preconditioner size mismatch"));
            }
            Applier::Lines(lb)
        }
    };
    let apply_m = |r: &[f64], z: &mut Vec<f64>| match &applier {
        Applier::Identity => z.copy_from_slice(r),
        Applier::Diag(m) => {
            for i in 0..n {
                z[i] = m[i] * r[i];
            }
        }
        Applier::Lines(lb) => lb.apply(r, z),
    };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    apply_m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    // Finite-precision CG stalls at a floor set by κ(A); past it the recurrence
    // residual keeps shrinking while the true residual does not, and the
    // iterates eventually drift. Track the best confirmed iterate and restart
    // from the true residual, giving up once restarts stop paying.
    let mut best_x = x.clone();
    let mut best_rel = 1.0;
    let mut it = 0;
    while it < maxiter {
        it += 1;
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap < 0.0 {
            return Err(Error::LinAlg("nonpositive curvature: matrix not positive definite"));
        }
        if !(pap > 0.0) || !(rz > 0.0) {
            // Underflow of the recurrence: no usable direction left.
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) / bnorm <= tol {
            // The recurrence claims convergence; confirm with the true residual.
            a.matvec(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            let rel = norm2(&r) / bnorm;
            if rel <= tol {
                let report =
                    SolveReport { iterations: it, relative_residual: rel, converged: true };
                return Ok((x, report));
            }
            if rel >= 0.5 * best_rel {
                break;
            }
            best_rel = rel;
            best_x.copy_from_slice(&x);
            // Clean restart from the true residual.
            apply_m(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        apply_m(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    a.matvec(&x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let rel = norm2(&r) / bnorm;
    if rel < best_rel {
        best_rel = rel;
        best_x.copy_from_slice(&x);
    }
    let report = SolveReport { iterations: it, relative_residual: best_rel, converged: false };
    Ok((best_x, report))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}
