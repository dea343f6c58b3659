//! Acceptance suite: one test per exit criterion, each printing a
//! `[criterion-N] PASS/FAIL` line with the measured numbers. Tolerances
//! and thresholds are pinned in the assertions.

use trefftz_wave::analysis::{rates, rho_rates, ErrorReport};
use trefftz_wave::cases::BoundaryMode;
use trefftz_wave::driver::{run_convergence, run_rho_sweep, Method, RunSpec};
use trefftz_wave::properties::{run_properties, PropertyConfig};
use trefftz_wave::solver::LocalMode;

fn final_rates(reports: &[ErrorReport]) -> [f64; 3] {
    let rs = rates(reports).expect("rates");
    let last = rs.last().expect("rows");
    [last[0].unwrap(), last[1].unwrap(), last[2].unwrap()]
}

#[test]
fn criterion1_h_convergence_homogeneous_2d() {
    // L²(Ω×{T}) rates for v and σ ≥ p + 0.8; DG rate within
    // [p + 0.25, p + 0.9]; Neumann boundary, ρ ≈ 2
    let mut all_pass = true;
    for p in [1u32, 2, 3] {
        for method in [Method::Method1, Method::Method2] {
            let spec = RunSpec::new("hom2d_hat", method, p);
            let levels: Vec<u32> = if p == 1 { vec![2, 3, 4] } else { vec![1, 2, 3] };
            let reports = run_convergence(&spec, &levels).expect("run");
            let [rv, rs_, rdg] = final_rates(&reports);
            let lo = p as f64 + 0.25;
            let hi = p as f64 + 0.9;
            let need = p as f64 + 0.8;
            let pass = rv >= need && rs_ >= need && rdg >= lo && rdg <= hi;
            all_pass &= pass;
            println!(
                "[criterion-1] {} p={p} {method:?}: rate_v={rv:.2} rate_sigma={rs_:.2} (need ≥ {need:.2}) rate_dg={rdg:.2} (need [{lo:.2}, {hi:.2}])",
                if pass { "PASS" } else { "FAIL" }
            );
        }
    }
    assert!(all_pass, "criterion 1 failed; see the lines above");
}

#[test]
fn criterion2_rho_robustness() {
    // error growth slopes in ρ ≤ 0.3 over a doubling sweep, fixed mesh
    let spec2 = RunSpec::new("hom2d_hat", Method::Method1, 1);
    let lambdas = [0.19319, 0.107458, 0.0575]; // ρ ≈ 8, 16, 32
    let reports = run_rho_sweep(&spec2, 3, &lambdas).expect("run");
    let rr = rho_rates(&reports).expect("rates");
    let mut worst = f64::NEG_INFINITY;
    for row in rr.iter().skip(1) {
        for q in 0..3 {
            worst = worst.max(row[q].unwrap());
        }
    }
    // 3D flavor at desk scale
    let mut spec3 = RunSpec::new("hom3d_hat", Method::Method1, 1);
    spec3.params.lambda2 = 1.0;
    let reports3 = run_rho_sweep(&spec3, 1, &lambdas).expect("run");
    let rr3 = rho_rates(&reports3).expect("rates");
    for row in rr3.iter().skip(1) {
        for q in 0..3 {
            worst = worst.max(row[q].unwrap());
        }
    }
    let pass = worst <= 0.3;
    println!(
        "[criterion-2] {}: max ρ-slope {worst:.4} over 2D (ρ≈8..32) and 3D sweeps (need ≤ 0.3)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion3_nonhomogeneous_1d() {
    // combined scheme: L² rates ≥ min(p,q) + 0.8, DG rates ≥ min(p,q) + 0.3
    let mut all_pass = true;
    for (p, q, levels) in [(2u32, 2u32, vec![2u32, 3, 4]), (3, 3, vec![1, 2, 3])] {
        let mut spec = RunSpec::new(
            "nonhom1d",
            Method::Combined {
                mode: LocalMode::Nonoverlapping,
            },
            p,
        );
        spec.q = q;
        spec.boundary = BoundaryMode::Dirichlet;
        let reports = run_convergence(&spec, &levels).expect("run");
        let [rv, rs_, rdg] = final_rates(&reports);
        let m = p.min(q) as f64;
        let pass = rv >= m + 0.8 && rs_ >= m + 0.8 && rdg >= m + 0.3;
        all_pass &= pass;
        println!(
            "[criterion-3] {} (p,q)=({p},{q}): rate_v={rv:.2} rate_sigma={rs_:.2} (need ≥ {:.2}) rate_dg={rdg:.2} (need ≥ {:.2}); err_v at finest = {:.3e}",
            if pass { "PASS" } else { "FAIL" },
            m + 0.8,
            m + 0.3,
            reports.last().unwrap().err_v
        );
        if p == 2 {
            // reference magnitude at h = 1/16 is about 3.5e-4 (informative)
            let ev = reports.last().unwrap().err_v;
            assert!(
                (1e-4..1.5e-3).contains(&ev),
                "err_v at h=1/16 left its reference band: {ev:.3e}"
            );
        }
    }
    assert!(all_pass, "criterion 3 failed; see the lines above");
}

#[test]
fn criterion4_nonhomogeneous_2d_boundaries() {
    // mixed and pure-Neumann boundary modes converge at the criterion-3
    // thresholds for (p,q) = (2,1), levels ≤ 3
    let mut all_pass = true;
    for bc in [BoundaryMode::Mixed, BoundaryMode::Neumann] {
        let mut spec = RunSpec::new(
            "nonhom2d",
            Method::Combined {
                mode: LocalMode::Nonoverlapping,
            },
            2,
        );
        spec.q = 1;
        spec.boundary = bc;
        let reports = run_convergence(&spec, &[1, 2, 3]).expect("run");
        let [rv, rs_, rdg] = final_rates(&reports);
        let m = 1.0; // min(p, q)
        let pass = rv >= m + 0.8 && rs_ >= m + 0.8 && rdg >= m + 0.3;
        all_pass &= pass;
        println!(
            "[criterion-4] {} {bc:?}: rate_v={rv:.2} rate_sigma={rs_:.2} (need ≥ {:.2}) rate_dg={rdg:.2} (need ≥ {:.2})",
            if pass { "PASS" } else { "FAIL" },
            m + 0.8,
            m + 0.3
        );
    }
    assert!(all_pass, "criterion 4 failed; see the lines above");
}

#[test]
fn criterion5_overlapping_vs_nonoverlapping() {
    // both particular-solution modes at (p,q) = (2,1) should produce DG
    // rates within 0.4 of each other at the final level.
    //
    // Known limitation, kept as an honest failure: with box-shaped
    // per-element fictitious domains (the only overlapping variant built
    // here), the local zero-Dirichlet walls sit where the source does not
    // vanish, so the local solutions carry an h-scale-invariant boundary
    // layer. A fixed-degree local space then has constant relative error,
    // which caps the combined DG rate near h^(1/2) while the slab-wide
    // nonoverlapping variant (walls on ∂Ω, where this source vanishes)
    // converges at the expected rate. Enlarging the boxes does not help:
    // the layer stays inside the fit region. See the solver docs.
    let mut dg_rates = Vec::new();
    for mode in [LocalMode::Overlapping, LocalMode::Nonoverlapping] {
        let mut spec = RunSpec::new("nonhom2d", Method::Combined { mode }, 2);
        spec.q = 1;
        spec.boundary = BoundaryMode::Neumann;
        let reports = run_convergence(&spec, &[1, 2, 3]).expect("run");
        let [_, _, rdg] = final_rates(&reports);
        dg_rates.push(rdg);
    }
    let gap = (dg_rates[0] - dg_rates[1]).abs();
    let pass = gap <= 0.4;
    println!(
        "[criterion-5] {}: DG rates overlapping={:.2} nonoverlapping={:.2}, gap {gap:.2} (need ≤ 0.4)",
        if pass { "PASS" } else { "FAIL" },
        dg_rates[0],
        dg_rates[1]
    );
    assert!(
        pass,
        "overlapping local DG on box fictitious domains stalls near rate 1/2 \
         (scale-invariant boundary layers of the local solutions); the gap to \
         the nonoverlapping mode exceeds 0.4"
    );
}

#[test]
fn criterion6_property_suite() {
    let results = run_properties(&PropertyConfig::default());
    let mut all_pass = true;
    for r in &results {
        all_pass &= r.pass;
        println!(
            "[criterion-6] {} {}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    assert!(all_pass, "criterion 6 failed; see the lines above");
}

#[test]
fn criterion7_3d_smoke() {
    // one homogeneous and one nonhomogeneous 3D configuration at the two
    // coarsest levels: positive L² rates ≥ p − 0.2
    let spec = RunSpec::new("hom3d_hat", Method::Method1, 2);
    let reports = run_convergence(&spec, &[1, 2]).expect("run");
    let [rv, rs_, _] = final_rates(&reports);
    let pass_hom = rv >= 1.8 && rs_ >= 1.8;
    println!(
        "[criterion-7] {} hom3d p=2: rate_v={rv:.2} rate_sigma={rs_:.2} (need ≥ 1.8)",
        if pass_hom { "PASS" } else { "FAIL" }
    );

    let mut spec = RunSpec::new(
        "nonhom3d",
        Method::Combined {
            mode: LocalMode::Nonoverlapping,
        },
        2,
    );
    spec.q = 1;
    let reports = run_convergence(&spec, &[1, 2]).expect("run");
    let [rv, rs_, _] = final_rates(&reports);
    let pass_non = rv >= 1.8 && rs_ >= 1.8;
    println!(
        "[criterion-7] {} nonhom3d (2,1): rate_v={rv:.2} rate_sigma={rs_:.2} (need ≥ 1.8; σ measured as absolute error, its exact trace vanishes at T)",
        if pass_non { "PASS" } else { "FAIL" }
    );
    assert!(pass_hom && pass_non, "criterion 7 failed; see the lines above");
}
