//! The bundled property suite: every module's analytical invariants run in
//! one deterministic pass, reporting one named pass/fail line each.

use crate::analysis::{dg_plus_seminorm, dg_seminorm};
use crate::anisotropy::{
    check_transform_identities, decompose, mat_mul, mat_transpose, random_spd, Vec3,
};
use crate::assembly::{
    assemble_method1, assemble_method2, AssemblyOptions, BlockSystem, FluxParameters,
    SchemeFrame, TrefftzFamily,
};
use crate::cases::{make_case, BoundaryMode, TensorParams};
use crate::fields::{DiffField, ExactField, WaveCase};
use crate::linalg::{jacobi_eigen, DenseMatrix};
use crate::mesh::{generate, verify_geometry_lemmas, DomainSpec, MeshFrame, SpaceTimeMesh};
use crate::polynomial::{spatial_indices_up_to, MultiIndex, SpaceTimePolynomial};
use crate::quadrature::rule_for;
use crate::solver::{solve, DiscreteSolution, MethodTag};
use crate::trefftz_basis::{build_first_order_basis, build_scalar_space, dim_scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct PropertyConfig {
    pub seed: u64,
    /// test hook: corrupt one flux sign so the coercivity check must fail
    pub flip_flux_sign: bool,
}

impl Default for PropertyConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            flip_flux_sign: false,
        }
    }
}

fn result(name: &'static str, pass: bool, detail: String) -> PropertyResult {
    PropertyResult { name, pass, detail }
}

fn random_poly(rng: &mut impl Rng, d: usize, deg: u32) -> SpaceTimePolynomial {
    let mut terms = Vec::new();
    for k in 0..=deg {
        for alpha in spatial_indices_up_to(d, deg - k) {
            terms.push((MultiIndex::new(k, alpha), rng.gen_range(-1.0..1.0)));
        }
    }
    SpaceTimePolynomial::from_terms(d, terms)
}

fn eigendecomposition_reconstruction(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let d = rng.gen_range(1..=3);
        let a = random_spd(rng, d, 1e3);
        let t = match decompose(d, &a) {
            Ok(t) => t,
            Err(e) => return result("eigendecomposition-reconstruction", false, e.to_string()),
        };
        let mut lam = [0.0; 9];
        for i in 0..d {
            lam[3 * i + i] = t.lambda[i];
        }
        let r = mat_mul(d, &mat_mul(d, &mat_transpose(d, &t.p), &lam), &t.p);
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((r[3 * i + j] - a[3 * i + j]).abs());
            }
        }
        // matrix-power identity A^{1/2} A^{1/2} = A
        let h = t.power(0.5);
        let hh = mat_mul(d, &h, &h);
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((hh[3 * i + j] - a[3 * i + j]).abs());
            }
        }
    }
    result(
        "eigendecomposition-reconstruction",
        worst <= 1e-12,
        format!("max deviation {worst:.3e} (tol 1e-12)"),
    )
}

fn transform_identities(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let d = rng.gen_range(1..=3);
        let a = random_spd(rng, d, 1e3);
        let t = decompose(d, &a).expect("SPD");
        let v_hat = random_poly(rng, d, 4);
        let sigma_hat: Vec<SpaceTimePolynomial> =
            (0..d).map(|_| random_poly(rng, d, 4)).collect();
        let samples: Vec<(Vec3, f64)> = (0..10)
            .map(|_| {
                let mut x = [0.0; 3];
                for xi in x.iter_mut().take(d) {
                    *xi = rng.gen_range(-1.0..1.0);
                }
                (x, rng.gen_range(0.0..1.0))
            })
            .collect();
        let (g, dv) = check_transform_identities(&t, &v_hat, &sigma_hat, &samples);
        worst = worst.max(g).max(dv);
    }
    result(
        "transform-identities",
        worst <= 1e-10,
        format!("max residual {worst:.3e} (tol 1e-10)"),
    )
}

fn trefftz_residuals() -> PropertyResult {
    for d in 1..=3usize {
        let tensor = Arc::new(crate::anisotropy::AnisotropyTensor::identity(d));
        for p in 0..=5u32 {
            let space = build_scalar_space(p, d, 1.0);
            if space.members.len() != dim_scalar(p, d) {
                return result(
                    "trefftz-residuals",
                    false,
                    format!("dim mismatch d={d} p={p}"),
                );
            }
            for u in &space.members {
                if !space.wave_residual(u).is_zero() {
                    return result(
                        "trefftz-residuals",
                        false,
                        format!("nonzero wave residual d={d} p={p}"),
                    );
                }
            }
            let basis = build_first_order_basis(p, d, 1.0, Arc::clone(&tensor));
            for pair in basis.pairs.iter() {
                let (r1, r2) = pair.residuals(1.0);
                if r1.iter().any(|r| !r.is_zero()) || !r2.is_zero() {
                    return result(
                        "trefftz-residuals",
                        false,
                        format!("nonzero pair residual d={d} p={p}"),
                    );
                }
            }
        }
    }
    result(
        "trefftz-residuals",
        true,
        "coefficient-exact zero for p ≤ 5, d ≤ 3".into(),
    )
}

fn trefftz_gram() -> PropertyResult {
    let mut worst = f64::INFINITY;
    for d in 1..=3usize {
        let tensor = Arc::new(crate::anisotropy::AnisotropyTensor::identity(d));
        for p in 0..=5u32 {
            let basis = build_first_order_basis(p, d, 1.0, Arc::clone(&tensor));
            let mut keys = std::collections::BTreeSet::new();
            for pair in basis.pairs.iter() {
                for (idx, _) in pair.w.terms() {
                    keys.insert((usize::MAX, *idx));
                }
                for (i, t) in pair.tau.iter().enumerate() {
                    for (idx, _) in t.terms() {
                        keys.insert((i, *idx));
                    }
                }
            }
            let keys: Vec<_> = keys.into_iter().collect();
            let n = basis.len();
            let mut cols = Vec::with_capacity(n);
            for pair in basis.pairs.iter() {
                let mut col = vec![0.0; keys.len()];
                for (r, (comp, idx)) in keys.iter().enumerate() {
                    col[r] = if *comp == usize::MAX {
                        pair.w.coefficient(idx)
                    } else {
                        pair.tau[*comp].coefficient(idx)
                    };
                }
                let nrm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in col.iter_mut() {
                    *v /= nrm;
                }
                cols.push(col);
            }
            let mut gram = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    gram.set(i, j, cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum());
                }
            }
            let (w, _) = jacobi_eigen(&gram, 100).expect("symmetric");
            worst = worst.min(w[0]);
        }
    }
    result(
        "trefftz-gram-independence",
        worst > 1e-10,
        format!("min Gram eigenvalue {worst:.3e} (needs > 1e-10)"),
    )
}

fn mesh_lemmas(rng: &mut ChaCha8Rng) -> PropertyResult {
    // facet area-ratio bound on random tensors, and level-independence of
    // the ĥ/h ratio (the constants themselves are not quantified)
    let mut worst_area = 0.0_f64;
    for _ in 0..50 {
        let d = rng.gen_range(1..=3usize);
        let a = random_spd(rng, d, 100.0);
        let tensor = Arc::new(decompose(d, &a).expect("SPD"));
        let frame = if rng.gen_bool(0.5) {
            MeshFrame::Hat
        } else {
            MeshFrame::Physical
        };
        let mesh = generate(
            &DomainSpec::unit_box(d, frame),
            tensor,
            1,
            2,
            BoundaryMode::Neumann.to_spec(d),
            1.0,
        )
        .expect("valid domain");
        let rep = verify_geometry_lemmas(&mesh);
        worst_area = worst_area.max(rep.area_bound_max);
    }
    let mut a = [0.0; 9];
    a[0] = 0.25;
    a[4] = 1.0;
    let tensor = Arc::new(decompose(2, &a).expect("SPD"));
    let mut ratios = Vec::new();
    for l in 1..=3u32 {
        let mesh = generate(
            &DomainSpec::unit_box(2, MeshFrame::Hat),
            Arc::clone(&tensor),
            l,
            1 << l,
            BoundaryMode::Neumann.to_spec(2),
            1.0,
        )
        .expect("valid domain");
        let rep = verify_geometry_lemmas(&mesh);
        ratios.push(rep.hhat_ratio_max);
    }
    let ratio_spread = ratios.iter().cloned().fold(0.0_f64, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = worst_area <= 1.0 + 1e-10 && ratio_spread < 2.0;
    result(
        "mesh-transformation-lemmas",
        pass,
        format!("area bound max {worst_area:.12}, ĥ/h level spread {ratio_spread:.3}"),
    )
}

struct SuiteSetup {
    mesh: Arc<SpaceTimeMesh>,
    case: crate::cases::ManufacturedCase,
    family: TrefftzFamily,
    flux: FluxParameters,
}

fn setup(p: u32, boundary: BoundaryMode) -> SuiteSetup {
    let params = TensorParams {
        lambda1: 0.37,
        ..TensorParams::default()
    };
    let case = make_case("hom2d_hat", &params, boundary).expect("known case");
    let mesh = Arc::new(
        generate(
            &case.domain(),
            Arc::clone(&case.tensor),
            1,
            2,
            case.boundary_spec(),
            1.0,
        )
        .expect("valid domain"),
    );
    let family = TrefftzFamily::new(p, &mesh);
    SuiteSetup {
        mesh,
        case,
        family,
        flux: FluxParameters::default(),
    }
}

fn random_solution(
    rng: &mut impl Rng,
    s: &SuiteSetup,
    system: &BlockSystem,
) -> (Vec<Vec<f64>>, DiscreteSolution) {
    let coeffs: Vec<Vec<f64>> = (0..system.n_slabs)
        .map(|_| {
            (0..system.block_size)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let sol = DiscreteSolution {
        mesh: Arc::clone(&s.mesh),
        family: s.family.clone(),
        method: MethodTag::MethodI,
        coeffs: coeffs.clone(),
        slab_residuals: vec![],
    };
    (coeffs, sol)
}

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

fn coercivity_identity(rng: &mut ChaCha8Rng, cfg: &PropertyConfig) -> PropertyResult {
    let s = setup(1, BoundaryMode::Mixed);
    let opts = AssemblyOptions {
        flip_flux_sign: cfg.flip_flux_sign,
        ..Default::default()
    };
    let mut worst = 0.0_f64;
    for scheme in [SchemeFrame::Physical, SchemeFrame::HatScheme] {
        let system = match scheme {
            SchemeFrame::Physical => {
                assemble_method1(&s.mesh, &s.family, &s.flux, &s.case, &opts)
            }
            _ => assemble_method2(&s.mesh, &s.family, &s.flux, &s.case, &opts),
        }
        .expect("assembly");
        for _ in 0..20 {
            let (coeffs, sol) = random_solution(rng, &s, &system);
            let q = quadratic_form(&system, &coeffs);
            let nrm = dg_seminorm(&sol, &s.mesh, &s.flux, scheme, None, 4);
            worst = worst.max((q - nrm * nrm).abs() / (nrm * nrm));
        }
    }
    result(
        "coercivity-identity",
        worst <= 1e-9,
        format!("max relative deviation {worst:.3e} (tol 1e-9)"),
    )
}

fn continuity_bounds(rng: &mut ChaCha8Rng) -> PropertyResult {
    let s = setup(1, BoundaryMode::Mixed);
    let opts = AssemblyOptions::default();
    let system = assemble_method1(&s.mesh, &s.family, &s.flux, &s.case, &opts).expect("assembly");
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (cu, su) = random_solution(rng, &s, &system);
        let (cw, sw) = random_solution(rng, &s, &system);
        // 𝒜(u; w): test coefficients w against trial u
        let mut a_uw = 0.0;
        for n in 0..system.n_slabs {
            let du = system.diag[n].matvec(&cu[n]);
            a_uw += cw[n].iter().zip(&du).map(|(a, b)| a * b).sum::<f64>();
            if let Some(c) = &system.coupling[n] {
                let v = c.matvec(&cu[n - 1]);
                a_uw += cw[n].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let ndg_u = dg_seminorm(&su, &s.mesh, &s.flux, SchemeFrame::Physical, None, 4);
        let ndg_w = dg_seminorm(&sw, &s.mesh, &s.flux, SchemeFrame::Physical, None, 4);
        let np_u = dg_plus_seminorm(&su, &s.mesh, &s.flux, SchemeFrame::Physical, None, 4);
        let np_w = dg_plus_seminorm(&sw, &s.mesh, &s.flux, SchemeFrame::Physical, None, 4);
        worst = worst
            .max(a_uw.abs() - 2.0 * np_u * ndg_w)
            .max(a_uw.abs() - 2.0 * ndg_u * np_w)
            .max(ndg_u - np_u);
    }
    result(
        "continuity-bounds",
        worst <= 1e-12,
        format!("max bound excess {worst:.3e}"),
    )
}

fn transformation_stability(rng: &mut ChaCha8Rng) -> PropertyResult {
    // |u|_DG(Q) ≤ det(Λ^{1/4}) λ_min^{-1/4} |û|_DG(Q̂) for δ = 1/2
    let s = setup(1, BoundaryMode::Mixed);
    let opts = AssemblyOptions::default();
    let system = assemble_method1(&s.mesh, &s.family, &s.flux, &s.case, &opts).expect("assembly");
    let t = &s.mesh.tensor;
    let mut factor = 1.0;
    for i in 0..t.d {
        factor *= t.lambda[i].powf(0.25);
    }
    factor /= t.lambda_min().powf(0.25);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let (_, sol) = random_solution(rng, &s, &system);
        let phys = dg_seminorm(&sol, &s.mesh, &s.flux, SchemeFrame::Physical, None, 4);
        let hat = dg_seminorm(&sol, &s.mesh, &s.flux, SchemeFrame::HatIsotropic, None, 4);
        worst = worst.max(phys - factor * hat);
    }
    result(
        "transformation-stability",
        worst <= 1e-10,
        format!("max bound excess {worst:.3e} (factor {factor:.4})"),
    )
}

fn truncation_monotone_random(rng: &mut ChaCha8Rng) -> PropertyResult {
    // nondecreasing for generic fields; all fields obey the provable
    // relation |u|_{DG(Q_n)} ≤ √2 |u|_{DG(Q_{n+1})}
    let s = setup(1, BoundaryMode::Dirichlet);
    let opts = AssemblyOptions::default();
    let system = assemble_method1(&s.mesh, &s.family, &s.flux, &s.case, &opts).expect("assembly");
    let mut pass = true;
    let mut detail = String::new();
    for _ in 0..20 {
        let (_, sol) = random_solution(rng, &s, &system);
        let mut prev = 0.0_f64;
        for n in 1..=s.mesh.n_slabs {
            let v = dg_seminorm(&sol, &s.mesh, &s.flux, SchemeFrame::Physical, Some(n), 4);
            if v + 1e-12 < prev {
                pass = false;
                detail = format!("random field decreased: {prev:.6} -> {v:.6} at n={n}");
            }
            if prev > 2.0_f64.sqrt() * v + 1e-12 {
                pass = false;
                detail = format!("√2 relation violated: {prev:.6} vs {v:.6}");
            }
            prev = v;
        }
    }
    if detail.is_empty() {
        detail = "nondecreasing on random fields; √2 relation holds".into();
    }
    result("truncation-monotonicity", pass, detail)
}

fn patch_test() -> PropertyResult {
    let params = TensorParams {
        lambda1: 0.4,
        ..TensorParams::default()
    };
    let case = make_case("patch2d", &params, BoundaryMode::Dirichlet).expect("known case");
    let mesh = Arc::new(
        generate(
            &case.domain(),
            Arc::clone(&case.tensor),
            1,
            2,
            case.boundary_spec(),
            1.0,
        )
        .expect("valid domain"),
    );
    let family = TrefftzFamily::new(1, &mesh);
    let flux = FluxParameters::default();
    let system = assemble_method1(&mesh, &family, &flux, &case, &AssemblyOptions::default())
        .expect("assembly");
    let sol = match solve(&mesh, &family, &system, MethodTag::MethodI) {
        Ok(s) => s,
        Err(e) => return result("patch-test", false, e.to_string()),
    };
    let exact = ExactField { case: &case };
    let err = DiffField { a: &exact, b: &sol };
    let nrm = dg_seminorm(&err, &mesh, &flux, SchemeFrame::Physical, None, 4);
    result(
        "patch-test",
        nrm <= 1e-9,
        format!("error DG seminorm {nrm:.3e} (tol 1e-9)"),
    )
}

fn quadrature_measures(rng: &mut ChaCha8Rng) -> PropertyResult {
    let d = 2;
    let a = random_spd(rng, d, 50.0);
    let tensor = Arc::new(decompose(d, &a).expect("SPD"));
    let mesh = generate(
        &DomainSpec::unit_box(d, MeshFrame::Hat),
        tensor,
        1,
        2,
        BoundaryMode::Neumann.to_spec(d),
        1.0,
    )
    .expect("valid domain");
    let mut worst = 0.0_f64;
    for (id, f) in mesh.faces.iter().enumerate() {
        let r = rule_for(&mesh, crate::mesh::EntityRef::Face(id), 3).expect("face rule");
        let sp: f64 = r.w_phys.iter().sum();
        worst = worst.max((sp - f.measure_phys).abs() / f.measure_phys.max(1.0));
    }
    result(
        "quadrature-measures",
        worst <= 1e-12,
        format!("max relative measure deviation {worst:.3e}"),
    )
}

fn case_residuals() -> PropertyResult {
    // the manufactured fields satisfy the first-order system under a
    // finite-difference oracle
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = TensorParams::default();
    let h = 1e-5;
    let fd4 = |f: &dyn Fn(f64) -> f64, x: f64| {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    };
    for id in ["hom2d_hat", "hom3d_hat", "nonhom1d", "nonhom2d", "nonhom3d"] {
        let case = make_case(id, &params, BoundaryMode::Neumann).expect("known case");
        let d = case.d;
        let a_half = case.tensor.power(0.5);
        for _ in 0..100 {
            let mut x = [0.0; 3];
            for xi in x.iter_mut().take(d) {
                *xi = rng.gen_range(0.1..0.9);
            }
            let t = rng.gen_range(0.1..0.9);
            let mut div = 0.0;
            for i in 0..d {
                div += fd4(
                    &|s| {
                        let mut xs = x;
                        xs[i] = s;
                        let sig = case.sigma_exact(&xs, t);
                        (0..d).map(|k| a_half[3 * i + k] * sig[k]).sum::<f64>()
                    },
                    x[i],
                );
            }
            let vt = fd4(&|s| case.v_exact(&x, s), t);
            let r = (div + vt - case.f(&x, t)).abs();
            if r > 1e-8 {
                return result(
                    "case-pde-residuals",
                    false,
                    format!("{id}: residual {r:.3e} at x={x:?} t={t}"),
                );
            }
        }
    }
    result(
        "case-pde-residuals",
        true,
        "all catalog cases ≤ 1e-8 under the FD oracle".into(),
    )
}

/// Run every property with a deterministic seed. The flip-flux hook makes
/// the coercivity check fail on purpose, to test this harness itself.
pub fn run_properties(cfg: &PropertyConfig) -> Vec<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    vec![
        eigendecomposition_reconstruction(&mut rng),
        transform_identities(&mut rng),
        trefftz_residuals(),
        trefftz_gram(),
        mesh_lemmas(&mut rng),
        quadrature_measures(&mut rng),
        case_residuals(),
        coercivity_identity(&mut rng, cfg),
        continuity_bounds(&mut rng),
        transformation_stability(&mut rng),
        truncation_monotone_random(&mut rng),
        patch_test(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let results = run_properties(&PropertyConfig::default());
        for r in &results {
            assert!(r.pass, "property {} failed: {}", r.name, r.detail);
        }
        assert_eq!(results.len(), 12);
    }

    #[test]
    fn fault_injection_is_detected() {
        let cfg = PropertyConfig {
            flip_flux_sign: true,
            ..Default::default()
        };
        let results = run_properties(&cfg);
        let coercivity = results
            .iter()
            .find(|r| r.name == "coercivity-identity")
            .unwrap();
        assert!(!coercivity.pass, "corrupted flux sign went unnoticed");
    }
}
