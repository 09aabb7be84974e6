//! End-to-end acceptance gate. Each test checks one shipping criterion and
//! prints a single PASS line with the measured quantities; tolerances and
//! rate windows are pinned here and nowhere else.

use std::time::Instant;

use fracfem::assembly::{assemble_extension_system, AssemblyOptions, Coefficients, RhsSpec};
use fracfem::linalg::{cg_solve, cholesky, DenseMatrix, LineBlocks, Preconditioner};
use fracfem::mesh::{
    build_cylinder_mesh, default_grading, make_y_partition, CylinderMesh, DomainKind, OmegaSpec,
};
use fracfem::norms::{psi_energy_quadrature, weighted_h1_error, QuadRule};
use fracfem::specfun::FracParams;
use fracfem::spectral::{spectral_fractional_solve, SpectralMode};
use fracfem_cli::config::StudyConfig;
use fracfem_cli::study::{oracle_compare, run_study, selftest};

const PI: f64 = core::f64::consts::PI;

fn cfg(json: &str) -> StudyConfig {
    StudyConfig::from_json(json).expect("acceptance config must parse")
}

fn interval_mesh(m_omega: usize, m: usize, y: f64, gamma: f64) -> CylinderMesh {
    let omega = OmegaSpec::new(DomainKind::UnitInterval, m_omega).unwrap();
    build_cylinder_mesh(omega, make_y_partition(m, y, gamma).unwrap())
}

fn solve_system(
    mesh: &CylinderMesh,
    params: &FracParams,
    modes: &[SpectralMode],
) -> (Vec<f64>, fracfem::linalg::CsrMatrix) {
    let sys = assemble_extension_system(
        mesh,
        params,
        &RhsSpec::Modes(modes),
        &Coefficients::Laplace,
        &AssemblyOptions::default(),
    )
    .unwrap();
    let lines = sys.matrix.n() / mesh.ypart.m;
    let lb = LineBlocks::new(&sys.matrix, lines, mesh.ypart.m).unwrap();
    let (vf, rep) =
        cg_solve(&sys.matrix, &sys.rhs, 1e-8, 50_000, Preconditioner::Lines(lb)).unwrap();
    assert!(rep.converged, "CG must converge: rel={:.3e}", rep.relative_residual);
    (vf, sys.matrix)
}

#[test]
fn acceptance_1_bessel_against_integral_oracle() {
    let t0 = Instant::now();
    let (_, max_rel) = selftest().unwrap();
    let dt = t0.elapsed().as_secs_f64();
    assert!(max_rel < 1e-10, "criterion 1: FAIL max_rel={max_rel:.3e}");
    assert!(dt < 5.0, "criterion 1: FAIL runtime {dt:.2}s > 5s");
    println!("criterion 1: PASS (max rel err {max_rel:.3e} over 9x40 grid, {dt:.2}s)");
}

#[test]
fn acceptance_2_profile_energy_identity() {
    let mut worst = 0.0f64;
    for &s in &[0.2, 0.5, 0.8] {
        let params = FracParams::new(s).unwrap();
        for &lambda in &[PI * PI, 2.0 * PI * PI] {
            let y_max = 40.0 / lambda.sqrt();
            let got = psi_energy_quadrature(&params, lambda, y_max, 96, 12).unwrap();
            let want = params.d_s * lambda.powf(s);
            let rel = ((got - want) / want).abs();
            assert!(rel < 1e-6, "criterion 2: FAIL s={s} lambda={lambda:.4} rel={rel:.3e}");
            worst = worst.max(rel);
        }
    }
    println!("criterion 2: PASS (energy identity to {worst:.3e} over 3 orders x 2 modes)");
}

#[test]
fn acceptance_3_quasi_uniform_rate_1d() {
    let t0 = Instant::now();
    let c = cfg(
        r#"{"domain":"interval","s":0.2,"mesh":{"policy":"uniform"},
            "levels":[16,32,64,128,256],"truncation":{"policy":"fixed","y":6.0}}"#,
    );
    let table = run_study(&c, true).unwrap();
    let rate = table.rate_h1w.expect("rate requires >= 3 levels");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 120.0, "criterion 3: FAIL runtime {dt:.1}s > 2min");
    assert!(
        (-0.14..=-0.08).contains(&rate),
        "criterion 3: FAIL slope {rate:.4} outside [-0.14,-0.08]"
    );
    println!("criterion 3: PASS (uniform s=0.2 slope {rate:.4} in [-0.14,-0.08], {dt:.1}s)");
}

#[test]
fn acceptance_4_graded_rate_1d() {
    let t0 = Instant::now();
    let mut rates = Vec::new();
    for &s in &[0.2, 0.8] {
        let c = cfg(&format!(
            r#"{{"domain":"interval","s":{s},"mesh":{{"policy":"graded","gamma":"auto"}},
                "levels":[16,32,64,128,256],"truncation":{{"policy":"auto"}}}}"#,
        ));
        let table = run_study(&c, true).unwrap();
        let rate = table.rate_h1w.expect("rate requires >= 3 levels");
        assert!(
            (-0.56..=-0.44).contains(&rate),
            "criterion 4: FAIL s={s} slope {rate:.4} outside [-0.56,-0.44]"
        );
        rates.push(rate);
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 180.0, "criterion 4: FAIL runtime {dt:.1}s > 3min");
    println!(
        "criterion 4: PASS (graded slopes s=0.2: {:.4}, s=0.8: {:.4}, both in [-0.56,-0.44], {dt:.1}s)",
        rates[0], rates[1]
    );
}

#[test]
fn acceptance_5_graded_rate_2d() {
    let t0 = Instant::now();
    let mut rates = Vec::new();
    for &s in &[0.2, 0.8] {
        let c = cfg(&format!(
            r#"{{"domain":"square","s":{s},"mesh":{{"policy":"graded","gamma":"auto"}},
                "levels":[8,16,24,32,48],"truncation":{{"policy":"auto"}}}}"#,
        ));
        let table = run_study(&c, true).unwrap();
        let rate = table.rate_h1w.expect("rate requires >= 3 levels");
        assert!(
            (-0.40..=-0.27).contains(&rate),
            "criterion 5: FAIL s={s} slope {rate:.4} outside [-0.40,-0.27]"
        );
        rates.push(rate);
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 900.0, "criterion 5: FAIL runtime {dt:.1}s > 15min");
    println!(
        "criterion 5: PASS (square slopes s=0.2: {:.4}, s=0.8: {:.4}, both in [-0.40,-0.27], {dt:.1}s)",
        rates[0], rates[1]
    );
}

#[test]
fn acceptance_6_truncation_decay() {
    // Fixed fine mesh, growing cylinder height: the error must fall at least
    // like exp(-sqrt(lambda_1)/4 * Y) until the spatial floor takes over.
    let s = 0.5;
    let params = FracParams::new(s).unwrap();
    let gamma = default_grading(params.alpha);
    let m = 128usize;
    let coeff = PI.powf(2.0 * s) * 0.5f64.sqrt();
    let modes = [SpectralMode::interval(1, coeff).unwrap()];
    let exact = spectral_fractional_solve(&modes, s).unwrap();
    let rule = QuadRule::default();
    let heights: Vec<f64> = (1..=6).map(|k| k as f64).collect();
    let mut errs = Vec::new();
    for &y in &heights {
        let mesh = interval_mesh(m, m, y, gamma);
        let (vf, _) = solve_system(&mesh, &params, &modes);
        let v = mesh.expand_free(&vf);
        errs.push(weighted_h1_error(&v, &exact, &mesh, &rule).unwrap());
    }
    let slopes: Vec<f64> = errs.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    // Floor: first interval whose decay has lost 75% of the initial rate.
    let floor = slopes
        .iter()
        .position(|d| d.abs() < 0.25 * slopes[0].abs())
        .unwrap_or(slopes.len());
    assert!(floor >= 1, "criterion 6: FAIL no decaying prefix: slopes {slopes:?}");
    let pre: Vec<(f64, f64)> =
        heights.iter().zip(&errs).take(floor + 1).map(|(&y, &e)| (y, e.ln())).collect();
    // Least-squares slope of ln(err) against Y on the pre-floor prefix.
    let n = pre.len() as f64;
    let sx: f64 = pre.iter().map(|p| p.0).sum();
    let sy: f64 = pre.iter().map(|p| p.1).sum();
    let sxx: f64 = pre.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pre.iter().map(|p| p.0 * p.1).sum();
    let rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let bound = -PI / 4.0;
    assert!(
        rate <= bound,
        "criterion 6: FAIL pre-floor rate {rate:.4} slower than {bound:.4}; errors {errs:?}"
    );
    println!(
        "criterion 6: PASS (decay rate {rate:.4} <= {bound:.4} on Y in [1,{}], floor after {} step(s))",
        floor + 1,
        floor
    );
}

#[test]
fn acceptance_7_cross_method_agreement() {
    let mut finals = Vec::new();
    for &s in &[0.3, 0.7] {
        let c = cfg(&format!(
            r#"{{"domain":"interval","s":{s},"mesh":{{"policy":"graded","gamma":"auto"}},
                "levels":[32,64,128],"truncation":{{"policy":"auto"}},
                "operator":{{"a":[1.0,0.5],"c":[0.0,1.0]}}}}"#,
        ));
        let body = oracle_compare(&c).unwrap();
        let mut gaps = Vec::new();
        for line in body.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 4, "criterion 7: body row must have 4 columns");
            gaps.push(cols[3].parse::<f64>().unwrap());
        }
        assert_eq!(gaps.len(), 3);
        assert!(
            gaps[0] > gaps[1] && gaps[1] > gaps[2],
            "criterion 7: FAIL s={s} gaps not strictly decreasing: {gaps:?}"
        );
        assert!(gaps[2] < 1e-3, "criterion 7: FAIL s={s} final gap {:.3e} >= 1e-3", gaps[2]);
        finals.push(gaps[2]);
    }
    println!(
        "criterion 7: PASS (independent-method gap decreasing, finals s=0.3: {:.3e}, s=0.7: {:.3e})",
        finals[0], finals[1]
    );
}

#[test]
fn acceptance_8_structural_properties() {
    // Symmetry and positive definiteness on a graded anisotropic system.
    for &s in &[0.25, 0.75] {
        let params = FracParams::new(s).unwrap();
        let mesh = interval_mesh(8, 8, 2.0, default_grading(params.alpha));
        let sys = assemble_extension_system(
            &mesh,
            &params,
            &RhsSpec::Function(&|_| 1.0),
            &Coefficients::Laplace,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let d = sys.matrix.to_dense();
        let n = sys.matrix.n();
        let mut max_abs = 0.0f64;
        let mut max_skew = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                max_abs = max_abs.max(d.get(i, j).abs());
                max_skew = max_skew.max((d.get(i, j) - d.get(j, i)).abs());
            }
        }
        assert!(
            max_skew <= 1e-12 * max_abs,
            "criterion 8: FAIL s={s} asymmetry {max_skew:.3e} vs scale {max_abs:.3e}"
        );
        assert!(cholesky(&d).is_ok(), "criterion 8: FAIL s={s} Cholesky rejected the matrix");
    }

    // The unweighted case must reproduce the classical bilinear stiffness.
    let params = FracParams::new(0.5).unwrap();
    let mesh = interval_mesh(4, 3, 1.5, 1.0);
    let sys = assemble_extension_system(
        &mesh,
        &params,
        &RhsSpec::Function(&|_| 0.0),
        &Coefficients::Laplace,
        &AssemblyOptions::default(),
    )
    .unwrap();
    let h = mesh.omega.h();
    let sx = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let mx = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    let n_free = mesh.num_free();
    let mut want = DenseMatrix::zeros(n_free);
    for (ky, (ya, yb)) in mesh.ypart.intervals().enumerate() {
        let k = yb - ya;
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
                            let Some(c) = mesh.free_index(mesh.node_id(&[cx + j], ky + q)) else {
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
    let mut scale = 0.0f64;
    for i in 0..n_free {
        for j in 0..n_free {
            scale = scale.max(want.get(i, j).abs());
        }
    }
    for i in 0..n_free {
        for j in 0..n_free {
            assert!(
                (sys.matrix.get(i, j) - want.get(i, j)).abs() < 1e-13 * scale,
                "criterion 8: FAIL classical stiffness mismatch at ({i},{j})"
            );
        }
    }

    // The discrete trace is the bottom layer of the solution, no projection.
    let params = FracParams::new(0.4).unwrap();
    let mesh = interval_mesh(8, 8, 2.0, default_grading(params.alpha));
    let coeff = PI.powf(2.0 * params.s) * 0.5f64.sqrt();
    let modes = [SpectralMode::interval(1, coeff).unwrap()];
    let (vf, _) = solve_system(&mesh, &params, &modes);
    let v = mesh.expand_free(&vf);
    for ix in 0..=mesh.omega.m_omega {
        let node = mesh.node_id(&[ix], 0);
        match mesh.free_index(node) {
            Some(f) => assert!(
                v[node] == vf[f],
                "criterion 8: FAIL trace value differs from solution at node {node}"
            ),
            None => assert!(
                v[node] == 0.0,
                "criterion 8: FAIL boundary trace value must vanish at node {node}"
            ),
        }
    }
    println!(
        "criterion 8: PASS (symmetry <= 1e-12, Cholesky ok, classical limit entrywise <= 1e-13, trace exact)"
    );
}

#[test]
fn acceptance_9_deterministic_output() {
    let dir = std::env::temp_dir().join("fracfem_acceptance_determinism");
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("study.csv");
    let cfg_path = dir.join("study.json");
    std::fs::write(
        &cfg_path,
        format!(
            r#"{{"domain":"interval","s":0.3,"mesh":{{"policy":"graded","gamma":"auto"}},
                "levels":[8,16,32],"truncation":{{"policy":"auto"}},
                "output":{:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_fracfem");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let status = std::process::Command::new(exe)
            .args(["converge", "--threads", "1", "--config"])
            .arg(&cfg_path)
            .status()
            .unwrap();
        assert!(status.success(), "criterion 9: FAIL converge exited with {status}");
        outputs.push(std::fs::read(&out).unwrap());
        std::fs::remove_file(&out).unwrap();
    }
    assert!(outputs[0] == outputs[1], "criterion 9: FAIL repeated runs differ byte-for-byte");
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(
        text.starts_with("level,M,cells,dofs,Y,err_h1w,err_hs,assemble_ms,solve_ms,cg_iters\n"),
        "criterion 9: FAIL unexpected CSV header"
    );
    println!(
        "criterion 9: PASS (two single-threaded runs byte-identical, {} bytes)",
        outputs[0].len()
    );
}
