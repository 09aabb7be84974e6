//! Q1 assembly of the weighted extension system on the truncated cylinder.
//!
//! Every element matrix is a tensor product: the x'-direction factors are
//! standard interval stiffness/mass blocks, and the y-direction factors are
//! built from exact moments of y^α against the degree-≤2 shape products, so
//! the degenerate weight is integrated without quadrature error at y = 0.

use crate::linalg::CsrMatrix;
use crate::mesh::{CylinderMesh, DomainKind};
use crate::quadrature::Rule;
use crate::specfun::FracParams;
use crate::spectral::SpectralMode;
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{expm1, log1p, pow};

use core::f64::consts::PI;

/// Right-hand side data f, given spectrally or as a pointwise closure.
pub enum RhsSpec<'a> {
    Modes(&'a [SpectralMode]),
    Function(&'a dyn Fn(&[f64; 2]) -> f64),
}

/// Operator coefficients: the Laplacian, or −(a u')' + c u on the interval.
pub enum Coefficients<'a> {
    Laplace,
    Variable1d { a: &'a dyn Fn(f64) -> f64, c: &'a dyn Fn(f64) -> f64 },
}

/// Quadrature-order overrides; `None` keeps the defaults (2-point Gauss for
/// constant coefficients, 3-point when a or c vary, frequency-scaled rules
/// for the trace data).
#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyOptions {
    pub x_order: Option<usize>,
    pub rhs_order: Option<usize>,
}

/// The reduced free-dof system: symmetric CSR matrix and load vector.
#[derive(Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Exact ∫_a^b y^{α+j} dy = (b^{α+j+1} − a^{α+j+1})/(α+j+1).
///
/// Evaluated as a^p·expm1(p·log1p((b−a)/a))/p away from a = 0 so the
/// difference of nearby powers never cancels catastrophically.
pub fn weighted_moment(a: f64, b: f64, alpha: f64, j: usize) -> Result<f64> {
    if a < 0.0 || !a.is_finite() {
        return Err(Error::Domain("weighted moment needs a ≥ 0"));
    }
    if !(b > a) || !b.is_finite() {
        return Err(Error::Domain("weighted moment needs b > a"));
    }
    let p = alpha + j as f64 + 1.0;
    if !(p > 0.0) {
        return Err(Error::Domain("weighted moment needs α+j+1 > 0"));
    }
    if a == 0.0 {
        Ok(pow(b, p) / p)
    } else {
        Ok(pow(a, p) * expm1(p * log1p((b - a) / a)) / p)
    }
}

/// y-direction element factors on [a,b]: weighted mass wm[p][q] =
/// ∫ y^α η_p η_q and weighted stiffness wk[p][q] = ∫ y^α η_p' η_q'.
struct YFactors {
    wm: [[f64; 2]; 2],
    wk: [[f64; 2]; 2],
}

fn y_factors(a: f64, b: f64, alpha: f64) -> Result<YFactors> {
    let k = b - a;
    let m0 = weighted_moment(a, b, alpha, 0)?;
    let m1 = weighted_moment(a, b, alpha, 1)?;
    let m2 = weighted_moment(a, b, alpha, 2)?;
    let k2 = k * k;
    let wm00 = (b * b * m0 - 2.0 * b * m1 + m2) / k2;
    let wm01 = (-a * b * m0 + (a + b) * m1 - m2) / k2;
    let wm11 = (a * a * m0 - 2.0 * a * m1 + m2) / k2;
    let wk = m0 / k2;
    Ok(YFactors { wm: [[wm00, wm01], [wm01, wm11]], wk: [[wk, -wk], [-wk, wk]] })
}

/// Per-cell (stiffness, mass) 2×2 factor pair in one x-direction.
type XFactorPair = ([[f64; 2]; 2], [[f64; 2]; 2]);

/// Closed-form interval factors: stiffness [[1,−1],[−1,1]]/h and mass
/// (h/6)[[2,1],[1,2]].
fn x_factors_const(h: f64) -> XFactorPair {
    let s = 1.0 / h;
    let m = h / 6.0;
    ([[s, -s], [-s, s]], [[2.0 * m, m], [m, 2.0 * m]])
}

/// Gauss-integrated interval factors for variable a(x), c(x); positivity of
/// a and nonnegativity of c are enforced at every quadrature point.
#[allow(clippy::type_complexity)]
fn x_factors_variable(
    cell: usize,
    x0: f64,
    h: f64,
    a: &dyn Fn(f64) -> f64,
    c: &dyn Fn(f64) -> f64,
    order: usize,
) -> Result<([[f64; 2]; 2], [[f64; 2]; 2])> {
    let rule = Rule::legendre(order, x0, x0 + h)?;
    let mut sa = [[0.0; 2]; 2];
    let mut mc = [[0.0; 2]; 2];
    for (&xq, &w) in rule.nodes.iter().zip(&rule.weights) {
        let av = a(xq);
        if !(av > 0.0) || !av.is_finite() {
            return Err(Error::NonSpd { cell });
        }
        let cv = c(xq);
        if cv < 0.0 || !cv.is_finite() {
            return Err(Error::NonSpd { cell });
        }
        let rise = (xq - x0) / h;
        let theta = [1.0 - rise, rise];
        let dtheta = [-1.0 / h, 1.0 / h];
        for i in 0..2 {
            for j in 0..2 {
                sa[i][j] += w * av * dtheta[i] * dtheta[j];
                mc[i][j] += w * cv * theta[i] * theta[j];
            }
        }
    }
    Ok((sa, mc))
}

/// Gauss order sized so the fastest retained sine is integrated against the
/// hat functions to near machine precision.
fn mode_rhs_order(max_index: usize, h: f64) -> usize {
    6 + (0.6 * max_index as f64 * PI * h) as usize
}

fn rhs_value(rhs: &RhsSpec, x: &[f64; 2]) -> f64 {
    match rhs {
        RhsSpec::Modes(modes) => modes.iter().map(|m| m.coeff * m.phi(x)).sum(),
        RhsSpec::Function(f) => f(x),
    }
}

fn rhs_x_order(rhs: &RhsSpec, h: f64, opts: &AssemblyOptions) -> usize {
    if let Some(q) = opts.rhs_order {
        return q;
    }
    match rhs {
        RhsSpec::Modes(modes) => {
            let max_index = modes
                .iter()
                .map(|m| match m.index {
                    crate::spectral::ModeIndex::Interval(i) => i,
                    crate::spectral::ModeIndex::Square(i, j) => i.max(j),
                })
                .max()
                .unwrap_or(1);
            mode_rhs_order(max_index, h)
        }
        RhsSpec::Function(_) => 6,
    }
}

/// Assembles the free-dof system for
/// ∫ y^α (𝐀∇V·∇W + c V W) = d_s ⟨f, tr W⟩ on the truncated cylinder.
pub fn assemble_extension_system(
    mesh: &CylinderMesh,
    params: &FracParams,
    rhs: &RhsSpec,
    coeffs: &Coefficients,
    opts: &AssemblyOptions,
) -> Result<SparseSystem> {
    if matches!(coeffs, Coefficients::Variable1d { .. })
        && mesh.omega.kind != DomainKind::UnitInterval
    {
        return Err(Error::Config("variable coefficients are supported on the interval only"));
    }
    let m_omega = mesh.omega.m_omega;
    let h = mesh.omega.h();
    let alpha = params.alpha;

    // x-direction factors, one pair per Ω-cell (constant data shares one).
    let (s_const, m_const) = x_factors_const(h);
    let var_factors: Option<Vec<XFactorPair>> = match coeffs {
        Coefficients::Laplace => None,
        Coefficients::Variable1d { a, c } => {
            let order = opts.x_order.unwrap_or(3);
            let mut per_cell = Vec::with_capacity(m_omega);
            for cx in 0..m_omega {
                per_cell.push(x_factors_variable(cx, cx as f64 * h, h, *a, *c, order)?);
            }
            Some(per_cell)
        }
    };

    let n_free = mesh.num_free();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_free];
    let mut scatter = |r: Option<usize>, c: Option<usize>, v: f64| {
        if let (Some(fr), Some(fc)) = (r, c) {
            *rows[fr].entry(fc).or_insert(0.0) += v;
        }
    };

    for (ky, (ya, yb)) in mesh.ypart.intervals().enumerate() {
        let yf = y_factors(ya, yb, alpha)?;
        match mesh.omega.kind {
            DomainKind::UnitInterval => {
                for cx in 0..m_omega {
                    let (sa, mc) = match &var_factors {
                        None => (s_const, [[0.0; 2]; 2]),
                        Some(list) => list[cx],
                    };
                    for i in 0..2 {
                        for p in 0..2 {
                            let row = mesh.free_index(mesh.node_id(&[cx + i], ky + p));
                            for j in 0..2 {
                                for q in 0..2 {
                                    let col =
                                        mesh.free_index(mesh.node_id(&[cx + j], ky + q));
                                    let v = (sa[i][j] + mc[i][j]) * yf.wm[p][q]
                                        + m_const[i][j] * yf.wk[p][q];
                                    scatter(row, col, v);
                                }
                            }
                        }
                    }
                }
            }
            DomainKind::UnitSquare => {
                for cy in 0..m_omega {
                    for cx in 0..m_omega {
                        for i1 in 0..2 {
                            for i2 in 0..2 {
                                for p in 0..2 {
                                    let row = mesh.free_index(
                                        mesh.node_id(&[cx + i1, cy + i2], ky + p),
                                    );
                                    for j1 in 0..2 {
                                        for j2 in 0..2 {
                                            let grad_x = s_const[i1][j1] * m_const[i2][j2]
                                                + m_const[i1][j1] * s_const[i2][j2];
                                            let mass_x = m_const[i1][j1] * m_const[i2][j2];
                                            for q in 0..2 {
                                                let col = mesh.free_index(mesh.node_id(
                                                    &[cx + j1, cy + j2],
                                                    ky + q,
                                                ));
                                                let v = grad_x * yf.wm[p][q]
                                                    + mass_x * yf.wk[p][q];
                                                scatter(row, col, v);
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Load vector: d_s·∫_Ω f·(trace of the hat) over the bottom face.
    let mut b = vec![0.0; n_free];
    let order = rhs_x_order(rhs, h, opts);
    let base = Rule::legendre(order, 0.0, h)?;
    match mesh.omega.kind {
        DomainKind::UnitInterval => {
            for cx in 0..m_omega {
                let x0 = cx as f64 * h;
                for (&xq, &w) in base.nodes.iter().zip(&base.weights) {
                    let x = x0 + xq;
                    let fv = rhs_value(rhs, &[x, 0.0]);
                    let rise = xq / h;
                    for i in 0..2 {
                        if let Some(fr) = mesh.free_index(mesh.node_id(&[cx + i], 0)) {
                            let theta = if i == 0 { 1.0 - rise } else { rise };
                            b[fr] += params.d_s * w * fv * theta;
                        }
                    }
                }
            }
        }
        DomainKind::UnitSquare => {
            for cy in 0..m_omega {
                for cx in 0..m_omega {
                    let (x0, y0) = (cx as f64 * h, cy as f64 * h);
                    for (&xq, &wx) in base.nodes.iter().zip(&base.weights) {
                        let rx = xq / h;
                        for (&yq, &wy) in base.nodes.iter().zip(&base.weights) {
                            let ry = yq / h;
                            let fv = rhs_value(rhs, &[x0 + xq, y0 + yq]);
                            let theta1 = [1.0 - rx, rx];
                            let theta2 = [1.0 - ry, ry];
                            for i1 in 0..2 {
                                for i2 in 0..2 {
                                    if let Some(fr) = mesh
                                        .free_index(mesh.node_id(&[cx + i1, cy + i2], 0))
                                    {
                                        b[fr] += params.d_s
                                            * wx
                                            * wy
                                            * fv
                                            * theta1[i1]
                                            * theta2[i2];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(SparseSystem { matrix: CsrMatrix::from_row_maps(rows), rhs: b })
}

/// Matrix Market coordinate dump (symmetric, lower triangle, 1-based).
pub fn matrix_market_string(m: &CsrMatrix) -> String {
    let mut nnz_lower = 0usize;
    for (i, j, _) in m.entries() {
        if j <= i {
            nnz_lower += 1;
        }
    }
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    out.push_str(&format!("{} {} {}\n", m.n(), m.n(), nnz_lower));
    for (i, j, v) in m.entries() {
        if j <= i {
            out.push_str(&format!("{} {} {:.16e}\n", i + 1, j + 1, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cg_solve, cholesky, DenseMatrix, Preconditioner};
    use crate::mesh::{build_cylinder_mesh, make_y_partition, OmegaSpec, YPartition};
    use libm::{fabs, sqrt};

    fn interval_mesh(m_omega: usize, m: usize, y: f64, gamma: f64) -> CylinderMesh {
        let omega = OmegaSpec::new(DomainKind::UnitInterval, m_omega).unwrap();
        build_cylinder_mesh(omega, make_y_partition(m, y, gamma).unwrap())
    }

    #[test]
    fn weighted_moment_reference_values() {
        assert!(fabs(weighted_moment(0.0, 1.0, 0.0, 0).unwrap() - 1.0) < 1e-15);
        assert!(fabs(weighted_moment(0.0, 1.0, 0.5, 1).unwrap() - 0.4) < 1e-15);
        let want = 2.0 * (sqrt(2.0) - 1.0);
        assert!(fabs(weighted_moment(1.0, 2.0, -0.5, 0).unwrap() - want) < 1e-15);
        assert!(weighted_moment(-0.1, 1.0, 0.0, 0).is_err());
        assert!(weighted_moment(1.0, 1.0, 0.0, 0).is_err());
        assert!(weighted_moment(0.0, 1.0, -1.5, 0).is_err());
    }

    #[test]
    fn weighted_moment_stable_on_narrow_high_cells() {
        // Narrow interval far from zero: compare against the b^p−a^p form
        // evaluated in extended precision via the factored expm1 identity.
        let (a, b, alpha) = (7.25, 7.25 + 1e-6, -0.6);
        let m0 = weighted_moment(a, b, alpha, 0).unwrap();
        // midpoint rule is accurate to O(width²) ≈ 1e-12 relative here
        let mid = pow(0.5 * (a + b), alpha) * (b - a);
        assert!(fabs(m0 - mid) < 1e-11 * mid);
    }

    #[test]
    fn alpha_zero_matches_classical_q1_stiffness() {
        // s = 1/2 removes the weight; the assembled matrix must equal the
        // classical Q1 stiffness for the rectangle grid, entry for entry.
        let mesh = interval_mesh(4, 3, 1.5, 1.0);
        let params = FracParams::new(0.5).unwrap();
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 0.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();

        let h = mesh.omega.h();
        let (sx, mx) = x_factors_const(h);
        let n_free = mesh.num_free();
        let mut want = DenseMatrix::zeros(n_free);
        for (ky, (ya, yb)) in mesh.ypart.intervals().enumerate() {
            let k = yb - ya;
            // classical closed forms: mass (k/6)[[2,1],[1,2]], stiffness (1/k)[[1,−1],[−1,1]]
            let my = [[k / 3.0, k / 6.0], [k / 6.0, k / 3.0]];
            let sy = [[1.0 / k, -1.0 / k], [-1.0 / k, 1.0 / k]];
            for cx in 0..4 {
                for i in 0..2 {
                    for p in 0..2 {
                        let Some(r) = mesh.free_index(mesh.node_id(&[cx + i], ky + p)) else {
                            continue;
                        };
                        for j in 0..2 {
                            for q in 0..2 {
                                let Some(c) =
                                    mesh.free_index(mesh.node_id(&[cx + j], ky + q))
                                else {
                                    continue;
                                };
                                let v = sx[i][j] * my[p][q] + mx[i][j] * sy[p][q];
                                want.set(r, c, want.get(r, c) + v);
                            }
                        }
                    }
                }
            }
        }
        let mut max_entry = 0.0f64;
        for i in 0..n_free {
            for j in 0..n_free {
                max_entry = max_entry.max(fabs(want.get(i, j)));
            }
        }
        for i in 0..n_free {
            for j in 0..n_free {
                assert!(
                    fabs(sys.matrix.get(i, j) - want.get(i, j)) < 1e-13 * max_entry,
                    "mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn single_free_dof_half_case_by_hand() {
        // M_Ω=2, one y-layer, s=1/2: entry 5/3, rhs h·d_s with d_s = 1.
        let omega = OmegaSpec::new(DomainKind::UnitInterval, 2).unwrap();
        let one_layer = YPartition { points: vec![0.0, 1.0], gamma: 1.0, m: 1, y: 1.0 };
        let mesh = build_cylinder_mesh(omega, one_layer);
        assert_eq!(mesh.num_free(), 1);
        let params = FracParams::new(0.5).unwrap();
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();
        assert!(fabs(sys.matrix.get(0, 0) - 5.0 / 3.0) < 1e-14);
        assert!(fabs(sys.rhs[0] - 0.5) < 1e-14);
    }

    #[test]
    fn constant_rhs_gives_ds_times_h() {
        let mesh = interval_mesh(5, 3, 2.0, 1.8);
        let params = FracParams::new(0.3).unwrap();
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let h = mesh.omega.h();
        for ix in 1..5 {
            let dof = mesh.free_index(mesh.node_id(&[ix], 0)).unwrap();
            assert!(fabs(sys.rhs[dof] - params.d_s * h) < 1e-14);
        }
        // nodes above the bottom face carry no load
        let dof = mesh.free_index(mesh.node_id(&[2], 1)).unwrap();
        assert_eq!(sys.rhs[dof], 0.0);
    }

    #[test]
    fn matrix_matches_independent_quadrature_oracle() {
        // M_Ω = M = 3, s = 0.3, graded: rebuild every entry by per-cell
        // numerical integration (Gauss–Jacobi on the bottom layer where the
        // weight is singular, high-order Gauss–Legendre elsewhere).
        let s = 0.3;
        let params = FracParams::new(s).unwrap();
        let gamma = crate::mesh::default_grading(params.alpha);
        let mesh = interval_mesh(3, 3, 1.25, gamma);
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 0.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();

        let h = mesh.omega.h();
        let n_free = mesh.num_free();
        let mut want = DenseMatrix::zeros(n_free);
        for (ky, (ya, yb)) in mesh.ypart.intervals().enumerate() {
            let k = yb - ya;
            // weighted y-integrals by quadrature adapted to the weight
            let yrule = if ya == 0.0 {
                Rule::jacobi_left(16, params.alpha, yb).unwrap()
            } else {
                Rule::legendre(24, ya, yb).unwrap()
            };
            let weight = |y: f64| {
                if ya == 0.0 {
                    1.0 // the Jacobi rule already carries y^α
                } else {
                    pow(y, params.alpha)
                }
            };
            let eta = |p: usize, y: f64| {
                if p == 0 {
                    (yb - y) / k
                } else {
                    (y - ya) / k
                }
            };
            let deta = |p: usize| if p == 0 { -1.0 / k } else { 1.0 / k };
            let xrule = Rule::legendre(8, 0.0, h).unwrap();
            for cx in 0..3 {
                for i in 0..2 {
                    for p in 0..2 {
                        let Some(r) = mesh.free_index(mesh.node_id(&[cx + i], ky + p)) else {
                            continue;
                        };
                        for j in 0..2 {
                            for q in 0..2 {
                                let Some(c) =
                                    mesh.free_index(mesh.node_id(&[cx + j], ky + q))
                                else {
                                    continue;
                                };
                                let mut acc = 0.0;
                                for (&yq, &wy) in yrule.nodes.iter().zip(&yrule.weights) {
                                    for (&xq, &wx) in
                                        xrule.nodes.iter().zip(&xrule.weights)
                                    {
                                        let rise = xq / h;
                                        let th = [1.0 - rise, rise];
                                        let dth = [-1.0 / h, 1.0 / h];
                                        acc += wx
                                            * wy
                                            * weight(yq)
                                            * (dth[i] * dth[j] * eta(p, yq) * eta(q, yq)
                                                + th[i] * th[j] * deta(p) * deta(q));
                                    }
                                }
                                want.set(r, c, want.get(r, c) + acc);
                            }
                        }
                    }
                }
            }
        }
        let scale = sys.matrix.max_abs();
        for i in 0..n_free {
            for j in 0..n_free {
                assert!(
                    fabs(sys.matrix.get(i, j) - want.get(i, j)) < 1e-10 * scale,
                    "oracle mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn rhs_scales_linearly_and_matrix_is_unchanged() {
        let mesh = interval_mesh(4, 4, 1.0, 2.0);
        let params = FracParams::new(0.4).unwrap();
        let f1 = |x: &[f64; 2]| libm::sin(PI * x[0]) + 0.25;
        let f3 = |x: &[f64; 2]| 3.0 * (libm::sin(PI * x[0]) + 0.25);
        let opts = AssemblyOptions::default();
        let sys1 = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&f1),
            &Coefficients::Laplace,
            &opts,
        )
        .unwrap();
        let sys3 = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&f3),
            &Coefficients::Laplace,
            &opts,
        )
        .unwrap();
        for (v1, v3) in sys1.rhs.iter().zip(&sys3.rhs) {
            assert!(fabs(3.0 * v1 - v3) < 1e-14 * (1.0 + fabs(*v3)));
        }
        for ((i1, j1, a1), (i3, j3, a3)) in sys1.matrix.entries().zip(sys3.matrix.entries()) {
            assert_eq!((i1, j1), (i3, j3));
            assert_eq!(a1, a3, "matrix must not depend on f");
        }
    }

    #[test]
    fn assembled_matrix_symmetric_and_spd() {
        for (s, m) in [(0.2, 6), (0.5, 5), (0.8, 4)] {
            let params = FracParams::new(s).unwrap();
            let gamma = crate::mesh::default_grading(params.alpha);
            let mesh = interval_mesh(m, m, 1.5, gamma);
            let sys = assemble_extension_system(
                &mesh,
                &params,
                &RhsSpec::Function(&|_| 1.0),
                &Coefficients::Laplace,
                &AssemblyOptions::default(),
            )
            .unwrap();
            assert!(sys.matrix.symmetry_defect() < 1e-12 * sys.matrix.max_abs());
            assert!(cholesky(&sys.matrix.to_dense()).is_ok(), "SPD check at s={s}");
        }
        // n = 2 small case
        let params = FracParams::new(0.6).unwrap();
        let omega = OmegaSpec::new(DomainKind::UnitSquare, 3).unwrap();
        let mesh = build_cylinder_mesh(omega, make_y_partition(3, 1.0, 2.5).unwrap());
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();
        assert!(sys.matrix.symmetry_defect() < 1e-12 * sys.matrix.max_abs());
        assert!(cholesky(&sys.matrix.to_dense()).is_ok());
    }

    #[test]
    fn galerkin_residual_vanishes_on_free_dofs() {
        let params = FracParams::new(0.4).unwrap();
        let mesh = interval_mesh(6, 6, 1.5, crate::mesh::default_grading(params.alpha));
        let modes = [SpectralMode::interval(1, 1.0).unwrap()];
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Modes(&modes),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let (v, rep) =
            cg_solve(&sys.matrix, &sys.rhs, 1e-12, 2000, Preconditioner::Jacobi).unwrap();
        assert!(rep.converged);
        let mut av = vec![0.0; v.len()];
        sys.matrix.matvec(&v, &mut av);
        let bnorm = crate::linalg::norm2(&sys.rhs);
        for i in 0..v.len() {
            assert!(fabs(sys.rhs[i] - av[i]) <= 1e-10 * bnorm);
        }
    }

    #[test]
    fn variable_coefficients_reduce_to_laplace() {
        let params = FracParams::new(0.35).unwrap();
        let mesh = interval_mesh(4, 3, 1.0, 2.0);
        let one = |_: f64| 1.0;
        let zero = |_: f64| 0.0;
        let sys_var = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Variable1d { a: &one, c: &zero },
            &AssemblyOptions::default(),
        )
        .unwrap();
        let sys_lap = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let scale = sys_lap.matrix.max_abs();
        for ((i1, j1, v1), (i2, j2, v2)) in
            sys_var.matrix.entries().zip(sys_lap.matrix.entries())
        {
            assert_eq!((i1, j1), (i2, j2));
            assert!(fabs(v1 - v2) < 1e-13 * scale);
        }
    }

    #[test]
    fn nonpositive_coefficient_identifies_cell() {
        let params = FracParams::new(0.5).unwrap();
        let mesh = interval_mesh(4, 2, 1.0, 1.0);
        // a(x) dips negative only inside the third cell (0.5, 0.75)
        let a = |x: f64| if x > 0.5 && x < 0.75 { -1.0 } else { 1.0 };
        let c = |_: f64| 0.0;
        let err = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Variable1d { a: &a, c: &c },
            &AssemblyOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, Error::NonSpd { cell: 2 });
    }

    #[test]
    fn variable_coefficients_rejected_on_square() {
        let params = FracParams::new(0.5).unwrap();
        let omega = OmegaSpec::new(DomainKind::UnitSquare, 2).unwrap();
        let mesh = build_cylinder_mesh(omega, make_y_partition(2, 1.0, 1.0).unwrap());
        let one = |_: f64| 1.0;
        let err = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Variable1d { a: &one, c: &one },
            &AssemblyOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn matrix_market_dump_well_formed() {
        let mesh = interval_mesh(3, 2, 1.0, 1.0);
        let params = FracParams::new(0.5).unwrap();
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let dump = matrix_market_string(&sys.matrix);
        let mut lines = dump.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate real symmetric"
        );
        let header: Vec<usize> =
            lines.next().unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(header[0], sys.matrix.n());
        assert_eq!(header[1], sys.matrix.n());
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), header[2]);
        // every recorded entry is on or below the diagonal
        for line in body {
            let toks: Vec<&str> = line.split(' ').collect();
            let (i, j): (usize, usize) = (toks[0].parse().unwrap(), toks[1].parse().unwrap());
            assert!(j <= i);
            let _: f64 = toks[2].parse().unwrap();
        }
    }
}
