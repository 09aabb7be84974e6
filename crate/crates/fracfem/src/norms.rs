//! Error functionals for the discrete extension: the weighted energy
//! seminorm ‖∇(𝔲−V)‖_{L²(y^α)} over the truncated cylinder, and the trace
//! error ‖u−U‖_{ℍ^s(Ω)}.
//!
//! Near y = 0 the exact y-derivative behaves like y^{−α}, so the squared
//! error is integrated there with a three-way split: Gauss–Jacobi with
//! weight y^α for the terms that stay bounded, Gauss–Jacobi with weight
//! y^{−α} for the square of the weighted flux y^α∂_y𝔲 (a bounded quantity),
//! and plain Gauss for the cross term. Everything else uses plain Gauss on
//! geometrically subdivided cells so stretched graded intervals cannot
//! degrade the rule.

use crate::mesh::{CylinderMesh, DomainKind, OmegaSpec};
use crate::quadrature::Rule;
use crate::specfun::psi_pair;
use crate::spectral::{hs_norm, project_trace, ModeIndex, SpectralMode, SpectralSolution};
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use libm::{log, pow, sqrt};

/// Quadrature orders for the error functional.
#[derive(Debug, Clone, Copy)]
pub struct QuadRule {
    /// Gauss order per x'-direction.
    pub x_order: usize,
    /// Gauss order in y away from the bottom.
    pub y_order: usize,
    /// Gauss–Jacobi/Gauss order in y on the cells touching y = 0.
    pub bottom_order: usize,
}

impl Default for QuadRule {
    fn default() -> Self {
        QuadRule { x_order: 4, y_order: 4, bottom_order: 6 }
    }
}

/// Largest admissible length ratio of a y-integration piece; longer pieces
/// are subdivided geometrically.
const MAX_PIECE_RATIO: f64 = 1.5;

/// Gradient data of an exact field on the cylinder, in the combination the
/// functional needs: the x'-gradient and the weighted y-derivative y^α·∂_y,
/// which stays bounded down to the bottom face.
pub trait ExactGrad {
    fn grads(&self, x: &[f64; 2], y: f64) -> Result<([f64; 2], f64)>;
}

/// [`ExactGrad`] view of a spectral solution with memoized per-mode tables:
/// profile values per y-abscissa and eigenfunction values per x-point, so
/// repeated quadrature points cost one Bessel evaluation each.
///
/// Both tables are keyed by coordinate bit patterns; the y-table holds
/// per-mode (ψ, y^α ψ') pairs, the x-table coefficient-scaled
/// (φ, ∂₁φ, ∂₂φ) triples.
type ProfileTable = RefCell<BTreeMap<u64, Vec<(f64, f64)>>>;
type TraceTable = RefCell<BTreeMap<(u64, u64), Vec<(f64, f64, f64)>>>;

/// Bottom-cell quadrature bundle: y^α points carrying (y, w, e0, e1),
/// y^{−α} points for the flux square, plain points for the cross term.
type SingularRules = (Vec<(f64, f64, f64, f64)>, Vec<(f64, f64)>, Vec<(f64, f64)>);

pub struct ExtensionGrad<'a> {
    sol: &'a SpectralSolution,
    ytab: ProfileTable,
    xtab: TraceTable,
}

impl<'a> ExtensionGrad<'a> {
    pub fn new(sol: &'a SpectralSolution) -> Self {
        ExtensionGrad { sol, ytab: RefCell::new(BTreeMap::new()), xtab: RefCell::new(BTreeMap::new()) }
    }
}

impl ExactGrad for ExtensionGrad<'_> {
    fn grads(&self, x: &[f64; 2], y: f64) -> Result<([f64; 2], f64)> {
        let alpha = self.sol.params.alpha;
        let mut ytab = self.ytab.borrow_mut();
        let yrow = match ytab.get(&y.to_bits()) {
            Some(row) => row.clone(),
            None => {
                let mut row = Vec::with_capacity(self.sol.modes.len());
                let w = pow(y, alpha);
                for mode in &self.sol.modes {
                    let p = psi_pair(&self.sol.params, mode.lambda, y)?;
                    let dpsi = p.dpsi.ok_or(Error::Singular(
                        "weighted gradient needs y > 0 off the half case",
                    ))?;
                    row.push((p.psi, w * dpsi));
                }
                ytab.insert(y.to_bits(), row.clone());
                row
            }
        };
        let key = (x[0].to_bits(), x[1].to_bits());
        let mut xtab = self.xtab.borrow_mut();
        let xrow = match xtab.get(&key) {
            Some(row) => row.clone(),
            None => {
                let row: Vec<(f64, f64, f64)> = self
                    .sol
                    .modes
                    .iter()
                    .map(|m| {
                        let g = m.grad_phi(x);
                        (m.coeff * m.phi(x), m.coeff * g[0], m.coeff * g[1])
                    })
                    .collect();
                xtab.insert(key, row.clone());
                row
            }
        };
        let mut gx = [0.0; 2];
        let mut wdy = 0.0;
        for ((phi, g1, g2), (psi, wdpsi)) in xrow.iter().zip(&yrow) {
            gx[0] += g1 * psi;
            gx[1] += g2 * psi;
            wdy += phi * wdpsi;
        }
        Ok((gx, wdy))
    }
}

/// Geometric subdivision of [a,b] (a > 0) into pieces with length ratio at
/// most [`MAX_PIECE_RATIO`].
fn split_geometric(a: f64, b: f64) -> Vec<(f64, f64)> {
    debug_assert!(a > 0.0 && b > a);
    let ratio = b / a;
    if ratio <= MAX_PIECE_RATIO {
        return vec![(a, b)];
    }
    let count = (log(ratio) / log(MAX_PIECE_RATIO)) as usize + 1;
    let r = pow(ratio, 1.0 / count as f64);
    let mut out = Vec::with_capacity(count);
    let mut lo = a;
    for i in 1..count {
        let hi = a * pow(r, i as f64);
        out.push((lo, hi));
        lo = hi;
    }
    out.push((lo, b));
    out
}

/// x-quadrature point of a cell with the corner shape values attached.
struct CellXPoint {
    x: [f64; 2],
    w: f64,
    n: [f64; 4],
    dn: [[f64; 2]; 4],
}

/// One Ω-cell: within-layer corner offsets plus its quadrature points.
struct CellX {
    corners: [usize; 4],
    ncorners: usize,
    pts: Vec<CellXPoint>,
}

fn build_cells_x(mesh: &CylinderMesh, x_order: usize) -> Result<Vec<CellX>> {
    let m_omega = mesh.omega.m_omega;
    let h = mesh.omega.h();
    let base = Rule::legendre(x_order, 0.0, h)?;
    let mut cells = Vec::with_capacity(mesh.omega.cells_per_layer());
    match mesh.omega.kind {
        DomainKind::UnitInterval => {
            for cx in 0..m_omega {
                let x0 = cx as f64 * h;
                let pts = base
                    .nodes
                    .iter()
                    .zip(&base.weights)
                    .map(|(&xq, &w)| {
                        let r = xq / h;
                        CellXPoint {
                            x: [x0 + xq, 0.0],
                            w,
                            n: [1.0 - r, r, 0.0, 0.0],
                            dn: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0; 2], [0.0; 2]],
                        }
                    })
                    .collect();
                cells.push(CellX { corners: [cx, cx + 1, 0, 0], ncorners: 2, pts });
            }
        }
        DomainKind::UnitSquare => {
            let nd = mesh.omega.nodes_per_direction();
            for cy in 0..m_omega {
                for cx in 0..m_omega {
                    let (x0, y0) = (cx as f64 * h, cy as f64 * h);
                    let mut pts = Vec::with_capacity(x_order * x_order);
                    for (&aq, &wa) in base.nodes.iter().zip(&base.weights) {
                        let ra = aq / h;
                        for (&bq, &wb) in base.nodes.iter().zip(&base.weights) {
                            let rb = bq / h;
                            let n = [
                                (1.0 - ra) * (1.0 - rb),
                                ra * (1.0 - rb),
                                (1.0 - ra) * rb,
                                ra * rb,
                            ];
                            let dn = [
                                [-(1.0 - rb) / h, -(1.0 - ra) / h],
                                [(1.0 - rb) / h, -ra / h],
                                [-rb / h, (1.0 - ra) / h],
                                [rb / h, ra / h],
                            ];
                            pts.push(CellXPoint { x: [x0 + aq, y0 + bq], w: wa * wb, n, dn });
                        }
                    }
                    let base_off = cy * nd + cx;
                    cells.push(CellX {
                        corners: [base_off, base_off + 1, base_off + nd, base_off + nd + 1],
                        ncorners: 4,
                        pts,
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Weighted energy seminorm of 𝔲 − V over the truncated cylinder, where V
/// is the Q1 function with nodal values `v` (full grid, Dirichlet included).
pub fn weighted_h1_error(
    v: &[f64],
    exact: &SpectralSolution,
    mesh: &CylinderMesh,
    rule: &QuadRule,
) -> Result<f64> {
    let grads = ExtensionGrad::new(exact);
    weighted_h1_error_with(v, &grads, exact.params.alpha, mesh, rule)
}

/// Same functional against any exact field given through [`ExactGrad`].
pub fn weighted_h1_error_with(
    v: &[f64],
    exact: &dyn ExactGrad,
    alpha: f64,
    mesh: &CylinderMesh,
    rule: &QuadRule,
) -> Result<f64> {
    if v.len() != mesh.num_nodes() {
        return Err(Error::Config("nodal vector does not match the mesh"));
    }
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::Domain("weight exponent must lie in (-1,1)"));
    }
    if rule.x_order == 0 || rule.y_order == 0 || rule.bottom_order == 0 {
        return Err(Error::Config("quadrature orders must be positive"));
    }
    let cells = build_cells_x(mesh, rule.x_order)?;
    let per_layer = mesh.omega.nodes_per_layer();
    let mut total = 0.0;

    for (ky, (ya, yb)) in mesh.ypart.intervals().enumerate() {
        let k = yb - ya;
        // Precompute the slab's y-integration points. Regular points carry
        // (y, weight·y^α, η₀, η₁, y^{−α}); the bottom cell additionally has
        // the three singular rules on its lower half.
        struct RegPt {
            y: f64,
            w_alpha: f64,
            e0: f64,
            e1: f64,
            inv_alpha: f64,
        }
        let mut reg = Vec::new();
        let mut sing: Option<SingularRules> = None;
        if ya == 0.0 {
            let mid = 0.5 * yb;
            // upper half of the bottom cell: regular treatment
            for (pa, pb) in split_geometric(mid, yb) {
                let r = Rule::legendre(rule.bottom_order, pa, pb)?;
                for (&yq, &wq) in r.nodes.iter().zip(&r.weights) {
                    reg.push(RegPt {
                        y: yq,
                        w_alpha: wq * pow(yq, alpha),
                        e0: (yb - yq) / k,
                        e1: (yq - ya) / k,
                        inv_alpha: pow(yq, -alpha),
                    });
                }
            }
            // lower half: Jacobi(α) for bounded terms, Jacobi(−α) for the
            // squared weighted flux, plain Gauss for the cross term
            let ja = Rule::jacobi_left(rule.bottom_order, alpha, mid)?;
            let jm = Rule::jacobi_left(rule.bottom_order, -alpha, mid)?;
            let gl = Rule::legendre(rule.bottom_order, 0.0, mid)?;
            let ja_pts = ja
                .nodes
                .iter()
                .zip(&ja.weights)
                .map(|(&y, &w)| (y, w, (yb - y) / k, (y - ya) / k))
                .collect();
            let jm_pts = jm.nodes.iter().zip(&jm.weights).map(|(&y, &w)| (y, w)).collect();
            let gl_pts = gl.nodes.iter().zip(&gl.weights).map(|(&y, &w)| (y, w)).collect();
            sing = Some((ja_pts, jm_pts, gl_pts));
        } else {
            for (pa, pb) in split_geometric(ya, yb) {
                let r = Rule::legendre(rule.y_order, pa, pb)?;
                for (&yq, &wq) in r.nodes.iter().zip(&r.weights) {
                    reg.push(RegPt {
                        y: yq,
                        w_alpha: wq * pow(yq, alpha),
                        e0: (yb - yq) / k,
                        e1: (yq - ya) / k,
                        inv_alpha: pow(yq, -alpha),
                    });
                }
            }
        }

        for cell in &cells {
            let mut vlow = [0.0; 4];
            let mut vup = [0.0; 4];
            for j in 0..cell.ncorners {
                vlow[j] = v[ky * per_layer + cell.corners[j]];
                vup[j] = v[(ky + 1) * per_layer + cell.corners[j]];
            }
            for pt in &cell.pts {
                // V(x_q, y) = a·η₀ + b·η₁; gradient pieces likewise linear
                let mut a = 0.0;
                let mut b = 0.0;
                let mut ga = [0.0; 2];
                let mut gb = [0.0; 2];
                for j in 0..cell.ncorners {
                    a += vlow[j] * pt.n[j];
                    b += vup[j] * pt.n[j];
                    ga[0] += vlow[j] * pt.dn[j][0];
                    ga[1] += vlow[j] * pt.dn[j][1];
                    gb[0] += vup[j] * pt.dn[j][0];
                    gb[1] += vup[j] * pt.dn[j][1];
                }
                let dyv = (b - a) / k;

                let mut cell_acc = 0.0;
                for rp in &reg {
                    let (gxu, wdy) = exact.grads(&pt.x, rp.y)?;
                    let ex1 = gxu[0] - (ga[0] * rp.e0 + gb[0] * rp.e1);
                    let ex2 = gxu[1] - (ga[1] * rp.e0 + gb[1] * rp.e1);
                    let ey = wdy * rp.inv_alpha - dyv;
                    cell_acc += rp.w_alpha * (ex1 * ex1 + ex2 * ex2 + ey * ey);
                }
                if let Some((ja_pts, jm_pts, gl_pts)) = &sing {
                    // ∫y^α[(∇_x'e)² + (∂_yV)²]: bounded factors, weight y^α
                    for &(yq, wq, e0, e1) in ja_pts {
                        let (gxu, _) = exact.grads(&pt.x, yq)?;
                        let ex1 = gxu[0] - (ga[0] * e0 + gb[0] * e1);
                        let ex2 = gxu[1] - (ga[1] * e0 + gb[1] * e1);
                        cell_acc += wq * (ex1 * ex1 + ex2 * ex2 + dyv * dyv);
                    }
                    // ∫y^{−α}(y^α∂_y𝔲)²
                    for &(yq, wq) in jm_pts {
                        let (_, wdy) = exact.grads(&pt.x, yq)?;
                        cell_acc += wq * wdy * wdy;
                    }
                    // cross term −2∫(y^α∂_y𝔲)·∂_yV
                    for &(yq, wq) in gl_pts {
                        let (_, wdy) = exact.grads(&pt.x, yq)?;
                        cell_acc += wq * (-2.0) * wdy * dyv;
                    }
                }
                total += pt.w * cell_acc;
            }
        }
    }
    // squared errors can round to a tiny negative through the cross term
    Ok(sqrt(total.max(0.0)))
}

/// Trace error ‖u − U‖_{ℍ^s(Ω)}: U is projected onto the eigenbasis with
/// cutoff 4·M_Ω and compared against the exact coefficients.
pub fn trace_hs_error(
    omega: &OmegaSpec,
    u_bottom: &[f64],
    exact_modes: &[SpectralMode],
    s: f64,
) -> Result<f64> {
    let cutoff = 4 * omega.m_omega;
    let mut diff = project_trace(omega, u_bottom, cutoff)?;
    for em in exact_modes {
        let slot = match em.index {
            ModeIndex::Interval(m) => {
                if m >= 1 && m <= cutoff {
                    Some(m - 1)
                } else {
                    None
                }
            }
            ModeIndex::Square(m, n) => {
                if m >= 1 && m <= cutoff && n >= 1 && n <= cutoff {
                    Some((m - 1) * cutoff + (n - 1))
                } else {
                    None
                }
            }
        };
        match slot {
            Some(i) => diff[i].coeff -= em.coeff,
            None => diff.push(SpectralMode { coeff: -em.coeff, ..*em }),
        }
    }
    hs_norm(&diff, s)
}

/// Composite quadrature of the profile energy ∫₀^Y y^α(λψ² + ψ'²) dy on a
/// strongly graded partition; converges to d_s·λ^s as Y grows.
pub fn psi_energy_quadrature(
    params: &crate::specfun::FracParams,
    lambda: f64,
    y_max: f64,
    intervals: usize,
    order: usize,
) -> Result<f64> {
    if !(lambda > 0.0 && y_max > 0.0) {
        return Err(Error::Domain("profile energy needs positive lambda and Y"));
    }
    if intervals < 2 || order < 2 {
        return Err(Error::Config("profile energy needs intervals ≥ 2 and order ≥ 2"));
    }
    let alpha = params.alpha;
    let nf = intervals as f64;
    let grade = |i: usize| pow(i as f64 / nf, 4.0) * y_max;
    let mut total = 0.0;

    // first interval: split the integrand by weight behavior
    let y1 = grade(1);
    let ja = Rule::jacobi_left(order, alpha, y1)?;
    for (&yq, &wq) in ja.nodes.iter().zip(&ja.weights) {
        let p = psi_pair(params, lambda, yq)?;
        total += wq * lambda * p.psi * p.psi;
    }
    let jm = Rule::jacobi_left(order, -alpha, y1)?;
    for (&yq, &wq) in jm.nodes.iter().zip(&jm.weights) {
        let p = psi_pair(params, lambda, yq)?;
        let wdy = pow(yq, alpha) * p.dpsi.expect("positive y carries a derivative");
        total += wq * wdy * wdy;
    }

    // remaining intervals: plain Gauss on geometric pieces
    for i in 1..intervals {
        let (a, b) = (grade(i), grade(i + 1));
        for (pa, pb) in split_geometric(a, b) {
            let r = Rule::legendre(order, pa, pb)?;
            for (&yq, &wq) in r.nodes.iter().zip(&r.weights) {
                let p = psi_pair(params, lambda, yq)?;
                let dpsi = p.dpsi.expect("positive y carries a derivative");
                total += wq * pow(yq, alpha) * (lambda * p.psi * p.psi + dpsi * dpsi);
            }
        }
    }
    Ok(total)
}
