//! Refinement studies: mesh sequences, solves, error measurement, rate
//! fitting, and CSV emission.

use crate::config::{
    Domain, GammaSpec, MeshPolicy, OperatorCoeffs, StudyConfig, TruncationPolicy,
};
use fracfem::assembly::{
    assemble_extension_system, AssemblyOptions, Coefficients, RhsSpec,
};
use fracfem::linalg::{cg_solve, CsrMatrix, LineBlocks, Preconditioner};
use fracfem::mesh::{
    build_cylinder_mesh, choose_truncation, default_grading, make_y_partition, CylinderMesh,
    OmegaSpec,
};
use fracfem::mtt::{mtt_solve, Operator1d};
use fracfem::norms::{trace_hs_error, weighted_h1_error, QuadRule};
use fracfem::specfun::FracParams;
use fracfem::spectral::{spectral_fractional_solve, SpectralMode};
use libm::{pow, sin, sqrt};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

const CG_MAX_ITER: usize = 50_000;

/// Line preconditioner along the extended direction; free nodes are laid
/// out layer-major, so the layout is (interior nodes per layer) × (layers).
fn line_precond(matrix: &CsrMatrix, mesh: &CylinderMesh) -> Result<Preconditioner, CliError> {
    let layers = mesh.ypart.m;
    let lines = matrix.n() / layers;
    LineBlocks::new(matrix, lines, layers)
        .map(Preconditioner::Lines)
        .map_err(|e| CliError::Solver(format!("preconditioner setup failed: {e}")))
}

#[derive(Debug, Clone, Copy)]
pub struct LevelRow {
    pub level: usize,
    pub m: usize,
    pub cells: usize,
    pub dofs: usize,
    pub y: f64,
    pub err_h1w: f64,
    pub err_hs: f64,
    pub assemble_ms: f64,
    pub solve_ms: f64,
    pub cg_iters: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<LevelRow>,
    pub rate_h1w: Option<f64>,
    pub rate_hs: Option<f64>,
}

/// Ordinary least squares of log₁₀(error) against log₁₀(size):
/// returns (slope, intercept, r²).
pub fn fit_rate(rows: &[(f64, f64)]) -> Result<(f64, f64, f64), CliError> {
    if rows.len() < 3 {
        return Err(CliError::Config(format!(
            "rate fit needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    for &(x, y) in rows {
        if !(x > 0.0 && y > 0.0) {
            return Err(CliError::Config(format!(
                "rate fit needs positive values, got ({x}, {y})"
            )));
        }
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|&(x, _)| libm::log10(x)).collect();
    let ys: Vec<f64> = rows.iter().map(|&(_, y)| libm::log10(y)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(CliError::Config("rate fit needs distinct sizes".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r2))
}

/// Resolved mesh parameters of one study level.
pub struct LevelMesh {
    pub mesh: CylinderMesh,
    pub gamma: f64,
    pub y: f64,
}

/// Builds the level-k mesh under the configured policies. The automatic
/// truncation rule equilibrates with the previous level's cell count:
/// ε = (#cells_prev)^(−1/(n+1)), which is 1/M_prev when M_Ω = M.
pub fn build_level_mesh(
    cfg: &StudyConfig,
    params: &FracParams,
    m: usize,
    m_prev: usize,
) -> Result<LevelMesh, CliError> {
    let n = cfg.domain.dim();
    let gamma = match &cfg.mesh {
        MeshPolicy::Uniform => 1.0,
        MeshPolicy::Graded { gamma: GammaSpec::Value(g) } => *g,
        MeshPolicy::Graded { gamma: GammaSpec::Auto(_) } => default_grading(params.alpha),
    };
    let y = match &cfg.truncation {
        TruncationPolicy::Fixed { y } => *y,
        TruncationPolicy::Auto { c } => {
            let lambda1 = n as f64 * PI * PI;
            let eps = 1.0 / m_prev as f64;
            choose_truncation(eps, lambda1, *c)
                .map_err(|e| CliError::Config(format!("truncation rule failed: {e}")))?
        }
    };
    let omega = OmegaSpec::new(cfg.domain.kind(), m)
        .map_err(|e| CliError::Config(format!("invalid interior mesh: {e}")))?;
    let ypart = make_y_partition(m, y, gamma)
        .map_err(|e| CliError::Config(format!("invalid extended partition: {e}")))?;
    let mesh = build_cylinder_mesh(omega, ypart);
    Ok(LevelMesh { mesh, gamma, y })
}

/// Eigenvalue of the first Dirichlet mode and the study's built-in load:
/// f = λ₁^s·2^{−n/2}·φ₁, whose exact solution is Π sin(πxᵢ).
fn fundamental_rhs(domain: Domain, s: f64) -> Result<Vec<SpectralMode>, CliError> {
    let n = domain.dim();
    let lambda1 = n as f64 * PI * PI;
    let coeff = pow(lambda1, s) * pow(2.0, -(n as f64) / 2.0);
    let mode = match domain {
        Domain::Interval => SpectralMode::interval(1, coeff),
        Domain::Square => SpectralMode::square(1, 1, coeff),
    }
    .map_err(|e| CliError::Config(format!("{e}")))?;
    Ok(vec![mode])
}

pub fn quad_rule(cfg: &StudyConfig) -> QuadRule {
    QuadRule {
        x_order: cfg.quadrature.x_order,
        y_order: cfg.quadrature.y_order,
        bottom_order: cfg.quadrature.bottom_order,
    }
}

fn assembly_options(cfg: &StudyConfig) -> AssemblyOptions {
    AssemblyOptions {
        x_order: cfg.quadrature.assembly_x_order,
        rhs_order: cfg.quadrature.rhs_order,
    }
}

/// Runs the configured refinement study against the built-in fundamental
/// load, measuring both the cylinder energy error and the trace error.
pub fn run_study(cfg: &StudyConfig, deterministic: bool) -> Result<ConvergenceTable, CliError> {
    if cfg.operator.is_some() {
        return Err(CliError::Config(
            "convergence studies need the exact spectral solution; \
             variable operators are served by solve and oracle-compare"
                .into(),
        ));
    }
    let params = FracParams::new(cfg.s)
        .map_err(|e| CliError::Config(format!("invalid fractional order: {e}")))?;
    let rhs_modes = fundamental_rhs(cfg.domain, cfg.s)?;
    let exact = spectral_fractional_solve(&rhs_modes, cfg.s)
        .map_err(|e| CliError::Config(format!("{e}")))?;
    let rule = quad_rule(cfg);
    let opts = assembly_options(cfg);

    let mut rows = Vec::with_capacity(cfg.levels.len());
    let mut m_prev = cfg.levels[0];
    for (level, &m) in cfg.levels.iter().enumerate() {
        let lm = build_level_mesh(cfg, &params, m, m_prev)?;
        let mesh = &lm.mesh;
        let summary = mesh.summary();
        eprintln!(
            "level {level}: M={m} Y={:.4} gamma={:.4} cells={} dofs={} ratio={:.3}",
            lm.y,
            lm.gamma,
            summary.cells,
            summary.free_dofs,
            mesh.ypart.max_neighbor_ratio(),
        );

        let t0 = Instant::now();
        let sys = assemble_extension_system(
            mesh,
            &params,
            &RhsSpec::Modes(&rhs_modes),
            &Coefficients::Laplace,
            &opts,
        )
        .map_err(|e| CliError::Solver(format!("assembly failed at level {level}: {e}")))?;
        let assemble_ms = t0.elapsed().as_secs_f64() * 1e3;

        let t1 = Instant::now();
        let precond = line_precond(&sys.matrix, mesh)?;
        let (vf, report) = cg_solve(&sys.matrix, &sys.rhs, cfg.solver_tol, CG_MAX_ITER, precond)
            .map_err(|e| CliError::Solver(format!("CG failed at level {level}: {e}")))?;
        let solve_ms = t1.elapsed().as_secs_f64() * 1e3;
        if !report.converged {
            return Err(CliError::Solver(format!(
                "CG did not converge at level {level}: M={m} dofs={} iters={} residual={:.3e}",
                summary.free_dofs, report.iterations, report.relative_residual
            )));
        }

        let v = mesh.expand_free(&vf);
        let err_h1w = weighted_h1_error(&v, &exact, mesh, &rule)
            .map_err(|e| CliError::Solver(format!("energy error failed at level {level}: {e}")))?;
        let per_layer = mesh.omega.nodes_per_layer();
        let err_hs = trace_hs_error(&mesh.omega, &v[..per_layer], &exact.modes, cfg.s)
            .map_err(|e| CliError::Solver(format!("trace error failed at level {level}: {e}")))?;

        rows.push(LevelRow {
            level,
            m,
            cells: summary.cells,
            dofs: summary.free_dofs,
            y: lm.y,
            err_h1w,
            err_hs,
            assemble_ms: if deterministic { 0.0 } else { assemble_ms },
            solve_ms: if deterministic { 0.0 } else { solve_ms },
            cg_iters: report.iterations,
        });
        m_prev = m;
    }

    let window = rate_window(rows.len());
    let tail = &rows[rows.len() - window..];
    let pick = |f: fn(&LevelRow) -> f64| -> Option<f64> {
        let pts: Vec<(f64, f64)> = tail.iter().map(|r| (r.cells as f64, f(r))).collect();
        fit_rate(&pts).ok().map(|(slope, _, _)| slope)
    };
    let rate_h1w = pick(|r| r.err_h1w);
    let rate_hs = pick(|r| r.err_hs);
    Ok(ConvergenceTable { rows, rate_h1w, rate_hs })
}

/// Tail window for the rate fit: the last half of the levels, never
/// fewer than the 3 points the fit needs when the table has them.
fn rate_window(len: usize) -> usize {
    len.div_ceil(2).max(3).min(len)
}

/// 16-significant-digit scientific notation used for every float column.
pub fn fmt_float(v: f64) -> String {
    // 16 significant digits, widened to 17 for the rare values where 16
    // do not re-read to the identical bits.
    let short = format!("{v:.15e}");
    if short.parse() == Ok(v) {
        return short;
    }
    format!("{v:.16e}")
}

fn fmt_rate(r: Option<f64>) -> String {
    match r {
        Some(v) => fmt_float(v),
        None => "nan".into(),
    }
}

pub const CSV_HEADER: &str = "level,M,cells,dofs,Y,err_h1w,err_hs,assemble_ms,solve_ms,cg_iters";

pub fn table_to_csv(table: &ConvergenceTable) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.m,
            r.cells,
            r.dofs,
            fmt_float(r.y),
            fmt_float(r.err_h1w),
            fmt_float(r.err_hs),
            fmt_float(r.assemble_ms),
            fmt_float(r.solve_ms),
            r.cg_iters,
        );
    }
    let _ = writeln!(out, "# rate_h1w={}", fmt_rate(table.rate_h1w));
    let _ = writeln!(out, "# rate_hs={}", fmt_rate(table.rate_hs));
    out
}

pub fn emit_csv(table: &ConvergenceTable, path: &str) -> Result<(), CliError> {
    std::fs::write(path, table_to_csv(table))
        .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))
}

/// Single solve on the finest configured level. Returns the mesh summary as
/// JSON and the bottom-trace CSV body.
pub fn solve_single(cfg: &StudyConfig) -> Result<(String, String), CliError> {
    let params = FracParams::new(cfg.s)
        .map_err(|e| CliError::Config(format!("invalid fractional order: {e}")))?;
    let m = *cfg.levels.last().expect("validated nonempty");
    let m_prev = if cfg.levels.len() >= 2 { cfg.levels[cfg.levels.len() - 2] } else { m };
    let lm = build_level_mesh(cfg, &params, m, m_prev)?;
    let mesh = &lm.mesh;
    let opts = assembly_options(cfg);

    let f = |x: &[f64; 2]| sin(PI * x[0]);
    let rhs_modes;
    let sys = match &cfg.operator {
        Some(op) => {
            let a = |x: f64| op.eval_a(x);
            let c = |x: f64| op.eval_c(x);
            assemble_extension_system(
                mesh,
                &params,
                &RhsSpec::Function(&f),
                &Coefficients::Variable1d { a: &a, c: &c },
                &opts,
            )
        }
        None => {
            rhs_modes = fundamental_rhs(cfg.domain, cfg.s)?;
            assemble_extension_system(
                mesh,
                &params,
                &RhsSpec::Modes(&rhs_modes),
                &Coefficients::Laplace,
                &opts,
            )
        }
    }
    .map_err(|e| CliError::Solver(format!("assembly failed: {e}")))?;

    let precond = line_precond(&sys.matrix, mesh)?;
    let (vf, report) = cg_solve(&sys.matrix, &sys.rhs, cfg.solver_tol, CG_MAX_ITER, precond)
        .map_err(|e| CliError::Solver(format!("CG failed: {e}")))?;
    if !report.converged {
        return Err(CliError::Solver(format!(
            "CG did not converge: iters={} residual={:.3e}",
            report.iterations, report.relative_residual
        )));
    }
    let v = mesh.expand_free(&vf);
    let summary = mesh.summary();
    let json = serde_json::json!({
        "n": summary.n,
        "M_omega": summary.m_omega,
        "M": summary.m,
        "Y": summary.y,
        "gamma": summary.gamma,
        "nodes": summary.nodes,
        "cells": summary.cells,
        "free_dofs": summary.free_dofs,
        "cg_iters": report.iterations,
        "relative_residual": report.relative_residual,
    })
    .to_string();

    let mut csv = String::new();
    match cfg.domain {
        Domain::Interval => {
            csv.push_str("x1,U\n");
            for (i, &vi) in v.iter().take(mesh.omega.nodes_per_layer()).enumerate() {
                let _ = writeln!(csv, "{},{}", fmt_float(mesh.omega.coord(i)), fmt_float(vi));
            }
        }
        Domain::Square => {
            csv.push_str("x1,x2,U\n");
            let nd = mesh.omega.nodes_per_direction();
            for (w, &vw) in v.iter().take(mesh.omega.nodes_per_layer()).enumerate() {
                let (i1, i2) = (w % nd, w / nd);
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    fmt_float(mesh.omega.coord(i1)),
                    fmt_float(mesh.omega.coord(i2)),
                    fmt_float(vw),
                );
            }
        }
    }
    Ok((json, csv))
}

/// L² distance between piecewise-linear functions on nested uniform grids
/// of (0,1); the fine point count minus one must be a multiple of the coarse.
pub fn l2_gap_nested(coarse: &[f64], fine: &[f64]) -> f64 {
    let m = coarse.len() - 1;
    let n = fine.len() - 1;
    assert!(n.is_multiple_of(m), "grids must be nested");
    let k = n / m;
    let h = 1.0 / n as f64;
    let at = |i: usize| {
        let (j, r) = (i / k, i % k);
        if r == 0 {
            coarse[j]
        } else {
            let t = r as f64 / k as f64;
            (1.0 - t) * coarse[j] + t * coarse[j + 1]
        }
    };
    let mut acc = 0.0;
    for cell in 0..n {
        let d0 = at(cell) - fine[cell];
        let d1 = at(cell + 1) - fine[cell + 1];
        acc += h / 3.0 * (d0 * d0 + d0 * d1 + d1 * d1);
    }
    sqrt(acc)
}

/// Cross-validation of the extension solver against the dense spectral
/// baseline on simultaneously refined grids (N = 4·M).
pub fn oracle_compare(cfg: &StudyConfig) -> Result<String, CliError> {
    if cfg.domain != Domain::Interval {
        return Err(CliError::Config("oracle comparison runs on the interval domain".into()));
    }
    let params = FracParams::new(cfg.s)
        .map_err(|e| CliError::Config(format!("invalid fractional order: {e}")))?;
    let opts = assembly_options(cfg);
    let default_op = OperatorCoeffs { a: vec![1.0], c: vec![0.0] };
    let op = cfg.operator.as_ref().unwrap_or(&default_op);
    let a = |x: f64| op.eval_a(x);
    let c = |x: f64| op.eval_c(x);
    let f = |x: &[f64; 2]| sin(PI * x[0]);
    let f1 = |x: f64| sin(PI * x);

    let mut out = String::from("level,M,N,l2_gap\n");
    let mut m_prev = cfg.levels[0];
    for (level, &m) in cfg.levels.iter().enumerate() {
        let lm = build_level_mesh(cfg, &params, m, m_prev)?;
        let sys = assemble_extension_system(
            &lm.mesh,
            &params,
            &RhsSpec::Function(&f),
            &Coefficients::Variable1d { a: &a, c: &c },
            &opts,
        )
        .map_err(|e| CliError::Solver(format!("assembly failed at level {level}: {e}")))?;
        let precond = line_precond(&sys.matrix, &lm.mesh)?;
        let (vf, report) = cg_solve(&sys.matrix, &sys.rhs, cfg.solver_tol, CG_MAX_ITER, precond)
            .map_err(|e| CliError::Solver(format!("CG failed at level {level}: {e}")))?;
        if !report.converged {
            return Err(CliError::Solver(format!(
                "CG did not converge at level {level}: residual={:.3e}",
                report.relative_residual
            )));
        }
        let v = lm.mesh.expand_free(&vf);
        let trace = &v[..lm.mesh.omega.nodes_per_layer()];

        let n_mtt = 4 * m;
        let op1 = Operator1d { a: &a, c: &c };
        let u_ref = mtt_solve(&op1, &f1, cfg.s, n_mtt)
            .map_err(|e| CliError::Solver(format!("baseline solve failed: {e}")))?;
        let gap = l2_gap_nested(trace, &u_ref);
        let _ = writeln!(out, "{},{},{},{}", level, m, n_mtt, fmt_float(gap));
        m_prev = m;
    }
    Ok(out)
}

/// Bessel table check against the integral-representation oracle on the
/// ν∈{0.1,…,0.9} × 40 log-spaced z∈[1e-3,30] grid.
pub fn selftest() -> Result<(String, f64), CliError> {
    use fracfem::specfun::{bessel_k, bessel_k_integral};
    let mut out = String::from("nu,z,computed,oracle,rel_err\n");
    let mut max_rel: f64 = 0.0;
    let (lg_lo, lg_hi) = (-3.0f64, libm::log10(30.0));
    for i in 1..=9usize {
        let nu = i as f64 * 0.1;
        for j in 0..40usize {
            let z = pow(10.0, lg_lo + (lg_hi - lg_lo) * j as f64 / 39.0);
            let computed = bessel_k(nu, z)
                .map_err(|e| CliError::Solver(format!("Bessel evaluation failed: {e}")))?
                .value;
            let oracle = bessel_k_integral(nu, z)
                .map_err(|e| CliError::Solver(format!("Bessel oracle failed: {e}")))?;
            let rel = (computed - oracle).abs() / oracle.abs();
            max_rel = max_rel.max(rel);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_float(nu),
                fmt_float(z),
                fmt_float(computed),
                fmt_float(oracle),
                fmt_float(rel),
            );
        }
    }
    let _ = writeln!(out, "# max_rel_err={}", fmt_float(max_rel));
    Ok((out, max_rel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_power_law() {
        let rows: Vec<(f64, f64)> =
            (1..=6).map(|i| {
                let n = pow(2.0, i as f64) * 100.0;
                (n, 7.0 * pow(n, -1.0 / 3.0))
            }).collect();
        let (slope, _, r2) = fit_rate(&rows).unwrap();
        assert!((slope - (-1.0 / 3.0)).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_slope_under_seeded_noise() {
        let mut state: u64 = 42;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let rows: Vec<(f64, f64)> = (1..=8)
            .map(|i| {
                let n = pow(2.0, i as f64) * 50.0;
                (n, 3.0 * pow(n, -0.5) * (1.0 + 0.01 * next()))
            })
            .collect();
        let (slope, _, _) = fit_rate(&rows).unwrap();
        assert!((slope - (-0.5)).abs() < 0.02, "got {slope}");
    }

    #[test]
    fn fit_of_constant_error_is_flat() {
        let rows = [(100.0, 0.25), (200.0, 0.25), (400.0, 0.25)];
        let (slope, _, r2) = fit_rate(&rows).unwrap();
        assert_eq!(slope, 0.0);
        assert_eq!(r2, 1.0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, -0.5), (3.0, 0.1)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (1.0, 0.5), (1.0, 0.1)]).is_err());
    }

    #[test]
    fn rate_window_never_starves_the_fit() {
        assert_eq!(rate_window(2), 2); // short table: rate stays nan
        assert_eq!(rate_window(3), 3);
        assert_eq!(rate_window(4), 3);
        assert_eq!(rate_window(5), 3);
        assert_eq!(rate_window(8), 4);
    }

    #[test]
    fn csv_shape_matches_contract() {
        let empty = ConvergenceTable { rows: vec![], rate_h1w: None, rate_hs: None };
        let text = table_to_csv(&empty);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "# rate_h1w=nan");
        assert_eq!(lines[2], "# rate_hs=nan");

        let one = ConvergenceTable {
            rows: vec![LevelRow {
                level: 0,
                m: 8,
                cells: 512,
                dofs: 448,
                y: 2.5,
                err_h1w: 0.125,
                err_hs: 0.0625,
                assemble_ms: 0.0,
                solve_ms: 0.0,
                cg_iters: 17,
            }],
            rate_h1w: None,
            rate_hs: None,
        };
        let text = table_to_csv(&one);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,8,512,448,"));
        assert!(lines[1].ends_with(",17"));
    }

    #[test]
    fn float_cells_reread_to_identical_bits() {
        // 0.1 + 0.2 and this truncation height both need the 17th digit.
        for &v in &[0.0, 1.0 / 3.0, 0.1 + 0.2, 1.765_084_801_221_212_8, 2.621e-10, 6.0] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(6.0), "6.000000000000000e0");
        assert_eq!(fmt_float(0.1 + 0.2), "3.0000000000000004e-1");
    }

    #[test]
    fn nested_l2_gap_is_exact_for_shared_grids() {
        // identical piecewise-linear data → zero gap
        let coarse = [0.0, 0.5, 1.0, 0.25, 0.0];
        let mut fine = Vec::new();
        for i in 0..4 {
            fine.push(coarse[i]);
            fine.push(0.5 * (coarse[i] + coarse[i + 1]));
        }
        fine.push(coarse[4]);
        assert_eq!(l2_gap_nested(&coarse, &fine), 0.0);

        // constant unit offset integrates to exactly 1
        let off: Vec<f64> = fine.iter().map(|v| v + 1.0).collect();
        assert!((l2_gap_nested(&coarse, &off) - 1.0).abs() < 1e-14);
    }
}
