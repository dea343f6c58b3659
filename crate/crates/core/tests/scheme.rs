//! Cross-module checks of the DG scheme: hand-computed entries, the
//! coercivity identity, the continuity bounds, consistency, the patch test,
//! and the Method-II reduction at `A = I`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use trefftz_wave::analysis::{dg_plus_seminorm, dg_seminorm};
use trefftz_wave::anisotropy::AnisotropyTensor;
use trefftz_wave::assembly::{
    assemble_action, assemble_method1, assemble_method2, AssemblyOptions, BlockSystem,
    FluxParameters, SchemeFrame, TrefftzFamily,
};
use trefftz_wave::cases::{make_case, BoundaryMode, TensorParams};
use trefftz_wave::fields::{DiffField, ExactField, TraceField, WaveCase};
use trefftz_wave::mesh::{generate, SpaceTimeMesh};
use trefftz_wave::polynomial::MultiIndex;
use trefftz_wave::solver::{solve, DiscreteSolution, MethodTag};

fn unit_params() -> TensorParams {
    TensorParams {
        lambda1: 1.0,
        lambda2: 1.0,
        ..TensorParams::default()
    }
}

fn build(case_id: &str, params: &TensorParams, bc: BoundaryMode, l: u32, n: usize) -> (
    Arc<SpaceTimeMesh>,
    trefftz_wave::cases::ManufacturedCase,
) {
    let case = make_case(case_id, params, bc).unwrap();
    let mesh = generate(
        &case.domain(),
        Arc::clone(&case.tensor),
        l,
        n,
        case.boundary_spec(),
        1.0,
    )
    .unwrap();
    (Arc::new(mesh), case)
}

/// quadratic form u ↦ 𝒜(u; u) of an assembled block system
fn quadratic_form(system: &BlockSystem, coeffs: &[Vec<f64>]) -> f64 {
    let mut q = 0.0;
    for n in 0..system.n_slabs {
        let du = system.diag[n].matvec(&coeffs[n]);
        q += coeffs[n].iter().zip(&du).map(|(a, b)| a * b).sum::<f64>();
        if let Some(c) = &system.coupling[n] {
            let cu = c.matvec(&coeffs[n - 1]);
            q += coeffs[n].iter().zip(&cu).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    q
}

/// bilinear value 𝒜(u; w) between two coefficient vectors
fn bilinear_form(system: &BlockSystem, u: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
    let mut q = 0.0;
    for n in 0..system.n_slabs {
        let du = system.diag[n].matvec(&u[n]);
        q += w[n].iter().zip(&du).map(|(a, b)| a * b).sum::<f64>();
        if let Some(c) = &system.coupling[n] {
            let cu = c.matvec(&u[n - 1]);
            q += w[n].iter().zip(&cu).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    q
}

fn random_coeffs(rng: &mut impl Rng, system: &BlockSystem) -> Vec<Vec<f64>> {
    (0..system.n_slabs)
        .map(|_| {
            (0..system.block_size)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

fn as_solution(
    mesh: &Arc<SpaceTimeMesh>,
    family: &TrefftzFamily,
    coeffs: Vec<Vec<f64>>,
) -> DiscreteSolution {
    DiscreteSolution {
        mesh: Arc::clone(mesh),
        family: family.clone(),
        method: MethodTag::MethodI,
        coeffs,
        slab_residuals: vec![],
    }
}

#[test]
fn single_element_pair_one_zero_gives_three() {
    // d = 1, single element, A = 1, c = 1, α = β = 1, Γ_D = {0, 1}:
    // 𝒜((1,0); (1,0)) = 3 (final-slice mass 1 + Dirichlet penalty 2)
    let (mesh, case) = build("zero1d", &unit_params(), BoundaryMode::Dirichlet, 0, 1);
    let family = TrefftzFamily::new(1, &mesh);
    let params = FluxParameters::default();
    let system =
        assemble_method1(&mesh, &family, &params, &case, &AssemblyOptions::default()).unwrap();
    // locate the constant pair (w, τ) = (const, 0): seed t of Û²
    let j0 = family
        .basis
        .pairs
        .iter()
        .position(|p| {
            p.w.num_terms() == 1
                && p.w.coefficient(&MultiIndex::new(0, [0, 0, 0])) != 0.0
                && p.tau[0].is_zero()
        })
        .expect("constant pair present");
    let scale = family.basis.pairs[j0]
        .w
        .coefficient(&MultiIndex::new(0, [0, 0, 0]));
    let aij = system.diag[0].get(j0, j0);
    assert!(
        (aij - 3.0 * scale * scale).abs() < 1e-12,
        "diag entry {aij} vs {}",
        3.0 * scale * scale
    );
    // zero data: RHS identically zero
    for b in &system.rhs {
        assert!(b.iter().all(|v| *v == 0.0));
    }
    // and the DG seminorm of that single pair squares to the same value
    let mut coeffs = vec![vec![0.0; system.block_size]];
    coeffs[0][j0] = 1.0;
    let sol = as_solution(&mesh, &family, coeffs);
    let nrm = dg_seminorm(&sol, &mesh, &params, SchemeFrame::Physical, None, 4);
    assert!((nrm * nrm - aij).abs() < 1e-12);
    // DG⁺ adds nothing here: no internal faces, τ = 0, no Neumann part
    let nrm_plus = dg_plus_seminorm(&sol, &mesh, &params, SchemeFrame::Physical, None, 4);
    assert!((nrm_plus - nrm).abs() < 1e-13);
}

#[test]
fn coercivity_identity_both_methods() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params2 = TensorParams {
        lambda1: 0.37,
        ..TensorParams::default()
    };
    for (scheme, frame) in [
        (SchemeFrame::Physical, SchemeFrame::Physical),
        (SchemeFrame::HatScheme, SchemeFrame::HatScheme),
    ] {
        for bc in [BoundaryMode::Dirichlet, BoundaryMode::Neumann, BoundaryMode::Mixed] {
            let (mesh, case) = build("hom2d_hat", &params2, bc, 1, 2);
            let family = TrefftzFamily::new(1, &mesh);
            let flux = FluxParameters::default();
            let opts = AssemblyOptions::default();
            let system = match scheme {
                SchemeFrame::Physical => {
                    assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap()
                }
                _ => assemble_method2(&mesh, &family, &flux, &case, &opts).unwrap(),
            };
            for _ in 0..20 {
                let coeffs = random_coeffs(&mut rng, &system);
                let q = quadratic_form(&system, &coeffs);
                let sol = as_solution(&mesh, &family, coeffs);
                let nrm = dg_seminorm(&sol, &mesh, &flux, frame, None, 4);
                assert!(
                    (q - nrm * nrm).abs() <= 1e-10 * nrm * nrm,
                    "{scheme:?} {bc:?}: A(u,u) = {q}, |u|² = {}",
                    nrm * nrm
                );
            }
        }
    }
}

#[test]
fn flipped_flux_sign_breaks_coercivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mesh, case) = build("hom2d_hat", &TensorParams::default(), BoundaryMode::Neumann, 1, 2);
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let opts = AssemblyOptions {
        flip_flux_sign: true,
        ..Default::default()
    };
    let system = assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap();
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let coeffs = random_coeffs(&mut rng, &system);
        let q = quadratic_form(&system, &coeffs);
        let sol = as_solution(&mesh, &family, coeffs);
        let nrm = dg_seminorm(&sol, &mesh, &flux, SchemeFrame::Physical, None, 4);
        worst = worst.max((q - nrm * nrm).abs() / (nrm * nrm));
    }
    assert!(worst > 1e-6, "corrupted flux went unnoticed: {worst}");
}

#[test]
fn continuity_bounds_with_constant_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mesh, case) = build(
        "hom2d_hat",
        &TensorParams::default(),
        BoundaryMode::Mixed,
        1,
        2,
    );
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let system =
        assemble_method1(&mesh, &family, &flux, &case, &AssemblyOptions::default()).unwrap();
    for _ in 0..100 {
        let u = random_coeffs(&mut rng, &system);
        let w = random_coeffs(&mut rng, &system);
        let a_uw = bilinear_form(&system, &u, &w);
        let su = as_solution(&mesh, &family, u);
        let sw = as_solution(&mesh, &family, w);
        let ndg_u = dg_seminorm(&su, &mesh, &flux, SchemeFrame::Physical, None, 4);
        let ndg_w = dg_seminorm(&sw, &mesh, &flux, SchemeFrame::Physical, None, 4);
        let nplus_u = dg_plus_seminorm(&su, &mesh, &flux, SchemeFrame::Physical, None, 4);
        let nplus_w = dg_plus_seminorm(&sw, &mesh, &flux, SchemeFrame::Physical, None, 4);
        assert!(a_uw.abs() <= 2.0 * nplus_u * ndg_w + 1e-12);
        assert!(a_uw.abs() <= 2.0 * ndg_u * nplus_w + 1e-12);
        assert!(nplus_u >= ndg_u);
    }
}

#[test]
fn method2_equals_method1_for_identity_tensor() {
    let (mesh, case) = build("hom2d_hat", &unit_params(), BoundaryMode::Neumann, 1, 2);
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let opts = AssemblyOptions::default();
    let s1 = assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap();
    let s2 = assemble_method2(&mesh, &family, &flux, &case, &opts).unwrap();
    for n in 0..s1.n_slabs {
        for (a, b) in s1.diag[n].data.iter().zip(s2.diag[n].data.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in s1.rhs[n].iter().zip(s2.rhs[n].iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn method2_differs_for_anisotropic_tensor() {
    // λ₁ = 1/2 gives the [[0.625, 0.25], [0.25, 0.625]] family with ρ = 7/3
    let params = TensorParams {
        lambda1: 0.5,
        ..TensorParams::default()
    };
    let (mesh, case) = build("hom2d_hat", &params, BoundaryMode::Neumann, 1, 2);
    assert!((case.rho() - 7.0 / 3.0).abs() < 1e-12);
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let opts = AssemblyOptions::default();
    let s1 = assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap();
    let s2 = assemble_method2(&mesh, &family, &flux, &case, &opts).unwrap();
    let mut max_diff = 0.0_f64;
    for n in 0..s1.n_slabs {
        for (a, b) in s1.diag[n].data.iter().zip(s2.diag[n].data.iter()) {
            max_diff = max_diff.max((a - b).abs());
        }
    }
    assert!(max_diff > 1e-6, "systems unexpectedly close: {max_diff}");
}

#[test]
fn consistency_exact_traces_satisfy_discrete_equations() {
    // inserting the exact solution's traces reproduces the load up to
    // quadrature error, which shrinks as the rule order grows
    let (mesh, case) = build(
        "hom2d_hat",
        &TensorParams::default(),
        BoundaryMode::Neumann,
        1,
        2,
    );
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let exact = ExactField { case: &case };
    let mut last = f64::INFINITY;
    for order in [3usize, 6, 10] {
        let opts = AssemblyOptions {
            quad_order: Some(order),
            ..Default::default()
        };
        let system = assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap();
        let action =
            assemble_action(&mesh, &family, &flux, SchemeFrame::Physical, &exact, &opts).unwrap();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for n in 0..system.n_slabs {
            for (a, b) in action[n].iter().zip(system.rhs[n].iter()) {
                worst = worst.max((a - b).abs());
                scale = scale.max(b.abs());
            }
        }
        let rel = worst / scale;
        assert!(rel < last * 1.5, "no quadrature decay: {rel} vs {last}");
        last = rel;
    }
    assert!(last < 1e-10, "converged consistency residual {last}");
}

#[test]
fn patch_test_reproduces_polynomial_solution() {
    // (v, σ) = (2t, −Pᵀ(2x̂₁, 0)) lies in the p ≥ 1 Trefftz space
    for (id, d) in [("patch1d", 1usize), ("patch2d", 2)] {
        let params = TensorParams {
            lambda1: 0.4,
            ..TensorParams::default()
        };
        let (mesh, case) = build(id, &params, BoundaryMode::Dirichlet, 1, 2);
        let family = TrefftzFamily::new(1, &mesh);
        let flux = FluxParameters::default();
        let system =
            assemble_method1(&mesh, &family, &flux, &case, &AssemblyOptions::default()).unwrap();
        let sol = solve(&mesh, &family, &system, MethodTag::MethodI).unwrap();
        for r in &sol.slab_residuals {
            assert!(*r < 1e-10, "slab residual {r}");
        }
        // L∞ over quadrature-like sample points
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst = 0.0_f64;
        for (eid, el) in mesh.elements.iter().enumerate() {
            for _ in 0..10 {
                let mut x = [0.0; 3];
                for i in 0..d {
                    x[i] = rng.gen_range(el.lo[i]..el.hi[i]);
                }
                let xp = mesh.native_to_phys(&x);
                let t = rng.gen_range(el.t0..el.t1);
                let (vh, sh) = sol.eval(eid, &xp, t);
                let ve = case.v_exact(&xp, t);
                let se = case.sigma_exact(&xp, t);
                worst = worst.max((vh - ve).abs());
                for i in 0..d {
                    worst = worst.max((sh[i] - se[i]).abs());
                }
            }
        }
        assert!(worst < 1e-9, "{id}: patch test error {worst}");
        // the error field's DG seminorm vanishes too
        let exact = ExactField { case: &case };
        let err = DiffField {
            a: &exact,
            b: &sol,
        };
        let nrm = dg_seminorm(&err, &mesh, &flux, SchemeFrame::Physical, None, 4);
        assert!(nrm < 1e-9, "{id}: error DG seminorm {nrm}");
    }
}

#[test]
fn uniform_meshes_share_slab_blocks() {
    // element-relative quadrature makes all diagonal blocks bit-identical
    // on a uniform mesh, so the system stores (and factors) each once
    let (mesh, case) = build(
        "hom2d_hat",
        &TensorParams::default(),
        BoundaryMode::Neumann,
        1,
        4,
    );
    let family = TrefftzFamily::new(1, &mesh);
    let system = assemble_method1(
        &mesh,
        &family,
        &FluxParameters::default(),
        &case,
        &AssemblyOptions::default(),
    )
    .unwrap();
    for n in 1..system.n_slabs {
        assert!(Arc::ptr_eq(&system.diag[0], &system.diag[n]));
    }
    for n in 2..system.n_slabs {
        assert!(Arc::ptr_eq(
            system.coupling[1].as_ref().unwrap(),
            system.coupling[n].as_ref().unwrap()
        ));
    }
}

#[test]
fn solve_is_deterministic_and_causally_local() {
    let (mesh, case) = build(
        "hom2d_hat",
        &TensorParams::default(),
        BoundaryMode::Neumann,
        1,
        4,
    );
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let opts = AssemblyOptions::default();
    let system = assemble_method1(&mesh, &family, &flux, &case, &opts).unwrap();
    let a = solve(&mesh, &family, &system, MethodTag::MethodI).unwrap();
    let b = solve(&mesh, &family, &system, MethodTag::MethodI).unwrap();
    for (ca, cb) in a.coeffs.iter().zip(b.coeffs.iter()) {
        assert_eq!(ca, cb); // bit-identical
    }
    // perturbing the RHS of slab 2 leaves slabs 0 and 1 untouched
    let mut perturbed = system.clone();
    perturbed.rhs[2][0] += 1.0;
    let c = solve(&mesh, &family, &perturbed, MethodTag::MethodI).unwrap();
    assert_eq!(a.coeffs[0], c.coeffs[0]);
    assert_eq!(a.coeffs[1], c.coeffs[1]);
    assert_ne!(a.coeffs[2], c.coeffs[2]);
    assert_ne!(a.coeffs[3], c.coeffs[3]);
}

#[test]
fn zero_rhs_gives_zero_solution() {
    let (mesh, case) = build("zero2d", &unit_params(), BoundaryMode::Dirichlet, 1, 2);
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let system =
        assemble_method1(&mesh, &family, &flux, &case, &AssemblyOptions::default()).unwrap();
    let sol = solve(&mesh, &family, &system, MethodTag::MethodI).unwrap();
    for block in &sol.coeffs {
        assert!(block.iter().all(|c| *c == 0.0));
    }
}
