//! Checks of the nonhomogeneous combined scheme: the load functional, the
//! local solves against a finite-difference oracle, weak initial data, and
//! the exact-particular-solution identity.

use std::sync::Arc;
use trefftz_wave::analysis::l2_error_at_time;
use trefftz_wave::anisotropy::Vec3;
use trefftz_wave::assembly::{
    assemble_local, assemble_method1, assemble_nonhomogeneous_rhs, AssemblyError,
    AssemblyOptions, FluxParameters, LocalPolyBasis, LocalRegion, TrefftzFamily,
};
use trefftz_wave::cases::{make_case, BoundaryMode, TensorParams};
use trefftz_wave::fields::{DataCapabilities, ExactField, TraceField, WaveCase, ZeroField};
use trefftz_wave::linalg::LuFactor;
use trefftz_wave::mesh::{generate, SpaceTimeMesh};
use trefftz_wave::solver::{solve_particular, LocalMode};

fn mesh_for(
    case: &trefftz_wave::cases::ManufacturedCase,
    level: u32,
) -> Arc<SpaceTimeMesh> {
    Arc::new(
        generate(
            &case.domain(),
            Arc::clone(&case.tensor),
            level,
            1 << level,
            case.boundary_spec(),
            1.0,
        )
        .unwrap(),
    )
}

#[test]
fn zero_source_gives_method1_rhs_and_zero_particular() {
    // f = 0, v¹ = σ¹ = 0: the nonhomogeneous load reduces to the plain one
    let case = make_case("hom2d_hat", &TensorParams::default(), BoundaryMode::Mixed).unwrap();
    let mesh = mesh_for(&case, 1);
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let opts = AssemblyOptions::default();
    let system = assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap();
    let zero = ZeroField { d: 2 };
    let rhs = assemble_nonhomogeneous_rhs(&mesh, &family, &flux, &case, &zero, &opts).unwrap();
    for (a, b) in rhs.iter().flatten().zip(system.rhs.iter().flatten()) {
        assert_eq!(a, b);
    }
    // and the local solves return the zero particular solution in both
    // modes (on a physical-frame mesh, where the local spaces live)
    let zero_case = make_case("zero2d", &TensorParams::default(), BoundaryMode::Dirichlet).unwrap();
    let zmesh = mesh_for(&zero_case, 1);
    for mode in [LocalMode::Overlapping, LocalMode::Nonoverlapping] {
        let part = solve_particular(&zmesh, 1, &zero_case, &flux, mode, 1.0, &opts).unwrap();
        for (_, v, sigma) in &part.per_elem {
            assert!(v.is_zero());
            assert!(sigma.iter().all(|s| s.is_zero()));
        }
    }
}

#[test]
fn exact_particular_solution_collapses_the_residual_problem() {
    // substituting the exact solution as the particular part leaves a
    // residual load at quadrature level, so the Trefftz correction is ~0
    // and the combined field reproduces the exact solution
    let case =
        make_case("nonhom1d", &TensorParams::default(), BoundaryMode::Dirichlet).unwrap();
    let mesh = mesh_for(&case, 3);
    let family = TrefftzFamily::new(2, &mesh);
    let flux = FluxParameters::default();
    let opts = AssemblyOptions::default();
    let exact = ExactField { case: &case };
    let rhs = assemble_nonhomogeneous_rhs(&mesh, &family, &flux, &case, &exact, &opts).unwrap();
    let system = assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap();
    let scale = system
        .rhs
        .iter()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let worst = rhs.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(
        worst <= 1e-10 * scale.max(1.0),
        "combined residual load {worst:.3e} vs scale {scale:.3e}"
    );
}

/// fine staggered-leapfrog reference for the 1D local problem
/// `v_t = f − ∂ₓσ`, `σ_t = −∂ₓv`, zero data, `v = 0` at both ends
fn fd_local_reference(
    x0: f64,
    len: f64,
    t_len: f64,
    f: &dyn Fn(f64, f64) -> f64,
    nx: usize,
    nt: usize,
) -> Vec<f64> {
    let dx = len / nx as f64;
    let dt = t_len / nt as f64;
    let mut v = vec![0.0; nx + 1];
    let mut s = vec![0.0; nx];
    let mut t = 0.0;
    for i in 0..nx {
        s[i] -= 0.5 * dt * (v[i + 1] - v[i]) / dx;
    }
    for _ in 0..nt {
        for i in 1..nx {
            let x = x0 + i as f64 * dx;
            v[i] += dt * (f(x, t + 0.5 * dt) - (s[i] - s[i - 1]) / dx);
        }
        v[0] = 0.0;
        v[nx] = 0.0;
        for i in 0..nx {
            s[i] -= dt * (v[i + 1] - v[i]) / dx;
        }
        t += dt;
    }
    v
}

#[test]
fn local_solve_tracks_finite_difference_oracle() {
    // d = 1, K* = (0, 1) × (0, 1), f = 1: the local DG solution approaches
    // the finite-difference solution of the local problem as q grows
    struct UnitSource;
    impl WaveCase for UnitSource {
        fn dim(&self) -> usize {
            1
        }
        fn v_exact(&self, _x: &Vec3, _t: f64) -> f64 {
            0.0
        }
        fn sigma_exact(&self, _x: &Vec3, _t: f64) -> Vec3 {
            [0.0; 3]
        }
        fn g_n(&self, _x: &Vec3, _t: f64, _n: &Vec3) -> f64 {
            0.0
        }
        fn f(&self, _x: &Vec3, _t: f64) -> f64 {
            1.0
        }
    }
    let case = make_case("zero1d", &TensorParams::default(), BoundaryMode::Dirichlet).unwrap();
    let mesh = mesh_for(&case, 0);
    let flux = FluxParameters::default();
    let source = UnitSource;
    // compare at t = 0.6: at t = 1 every sine mode of the unit interval
    // completes a half period and the solution degenerates there
    let t_eval = 0.6;
    let vref = fd_local_reference(0.0, 1.0, t_eval, &|_x, _t| 1.0, 800, 3200);
    let vref_max = vref.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut prev = f64::INFINITY;
    for q in [1u32, 3, 5] {
        let opts = AssemblyOptions {
            quad_order: Some(q as usize + 3),
            ..Default::default()
        };
        let (a, b) = assemble_local(
            &mesh,
            LocalRegion::Element { elem: 0, gamma: 1.0 },
            q,
            &source,
            &flux,
            &opts,
        )
        .unwrap();
        let lu = LuFactor::new(&a).unwrap();
        let u = lu.solve(&b);
        let basis = LocalPolyBasis::new(1, q);
        let vpoly = basis.polynomial(&u[..basis.len()]);
        let mut worst = 0.0_f64;
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            let node = (x * 800.0).round() as usize;
            let vh = vpoly.evaluate_unchecked(&[2.0 * x - 1.0], 2.0 * t_eval - 1.0);
            worst = worst.max((vh - vref[node]).abs());
        }
        assert!(worst < prev, "q={q}: {worst:.3e} did not improve on {prev:.3e}");
        prev = worst;
    }
    assert!(
        prev <= 0.15 * vref_max,
        "q=5 error {prev:.3e} too large vs |v| max {vref_max:.3e}"
    );
}

#[test]
fn local_initial_trace_weakly_zero_under_refinement() {
    // the discrete particular solution's trace at each slab bottom shrinks
    // under refinement (weak zero initial data)
    let case =
        make_case("nonhom1d", &TensorParams::default(), BoundaryMode::Dirichlet).unwrap();
    let flux = FluxParameters::default();
    let opts = AssemblyOptions::default();
    let mut prev = f64::INFINITY;
    for level in [1u32, 2, 3] {
        let mesh = mesh_for(&case, level);
        let part =
            solve_particular(&mesh, 2, &case, &flux, LocalMode::Overlapping, 1.0, &opts).unwrap();
        // L² of v¹ over all slab bottoms
        let mut acc = 0.0;
        for (eid, el) in mesh.elements.iter().enumerate() {
            let h = el.hi[0] - el.lo[0];
            for i in 0..8 {
                let x = [el.lo[0] + (i as f64 + 0.5) / 8.0 * h, 0.0, 0.0];
                let (v, _) = part.eval(eid, &x, el.t0);
                acc += v * v * h / 8.0;
            }
        }
        let norm = acc.sqrt();
        assert!(norm < prev, "level {level}: {norm:.3e} vs {prev:.3e}");
        prev = norm;
    }
}

#[test]
fn missing_boundary_data_is_reported() {
    struct NoNeumann;
    impl WaveCase for NoNeumann {
        fn dim(&self) -> usize {
            2
        }
        fn v_exact(&self, _x: &Vec3, _t: f64) -> f64 {
            0.0
        }
        fn sigma_exact(&self, _x: &Vec3, _t: f64) -> Vec3 {
            [0.0; 3]
        }
        fn g_n(&self, _x: &Vec3, _t: f64, _n: &Vec3) -> f64 {
            unreachable!("no Neumann data")
        }
        fn capabilities(&self) -> DataCapabilities {
            DataCapabilities {
                dirichlet: true,
                neumann: false,
            }
        }
    }
    let case = make_case("hom2d_hat", &TensorParams::default(), BoundaryMode::Neumann).unwrap();
    let mesh = mesh_for(&case, 1);
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let err = assemble_method1(&mesh, &family, &flux, &NoNeumann, &AssemblyOptions::default());
    assert!(matches!(
        err,
        Err(AssemblyError::MissingBoundaryData("Neumann"))
    ));
}

#[test]
fn l2_error_vanishes_for_exact_field_and_rejects_off_slab_times() {
    let case = make_case("hom2d_hat", &TensorParams::default(), BoundaryMode::Neumann).unwrap();
    let mesh = mesh_for(&case, 1);
    let exact = ExactField { case: &case };
    let errs = l2_error_at_time(&exact, &case, &mesh, 1.0, 4).unwrap();
    assert!(errs.v < 1e-13 && errs.sigma < 1e-13);
    let e = l2_error_at_time(&exact, &case, &mesh, 0.3, 4);
    assert!(matches!(
        e,
        Err(trefftz_wave::analysis::AnalysisError::TimeNotOnSlabBoundary(_))
    ));
}
