//! DG seminorms, L² errors at slab boundaries, and convergence rates.
//!
//! The DG seminorm squares and sums eight face families: half-weighted
//! time-jumps and initial/final traces on space-like slices, the
//! `α A^{1/4+δ/2}` and `β A^{1/2}` penalties on time-like faces, and the
//! Dirichlet/Neumann boundary penalties. The DG⁺ variant adds upwind
//! traces, `α^{-1/2} A^{1/4−δ/2}`-weighted averages, `β^{-1/2}` averages
//! and the matching boundary terms. Truncation to `Q_n` multiplies the
//! field by the indicator of the first `n` slabs, which turns the slice at
//! `t_n` into a one-sided trace term.

use crate::anisotropy::mat_vec;
use crate::assembly::{face_frame, scheme_weights, to_scheme_pair, FluxParameters, SchemeFrame};
use crate::fields::TraceField;
use crate::mesh::{EntityRef, FaceClass, SpaceTimeMesh};
use crate::quadrature::rule_for;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("time {0} does not match a slab boundary")]
    TimeNotOnSlabBoundary(f64),
    #[error("mesh sizes must decrease strictly from level to level")]
    NonMonotoneH,
    #[error("need at least two reports")]
    TooFewReports,
}

fn field_pair_at(
    mesh: &SpaceTimeMesh,
    field: &dyn TraceField,
    elem: usize,
    x: &crate::anisotropy::Vec3,
    t: f64,
    scheme: SchemeFrame,
) -> (f64, crate::anisotropy::Vec3) {
    let (w, tau) = field.eval(elem, x, t);
    to_scheme_pair(&mesh.tensor, scheme, w, &tau)
}

/// `|(w, τ)|_{DG(Q_n)}`; `truncate = None` gives the full cylinder.
pub fn dg_seminorm(
    field: &dyn TraceField,
    mesh: &SpaceTimeMesh,
    params: &FluxParameters,
    scheme: SchemeFrame,
    truncate: Option<usize>,
    order: usize,
) -> f64 {
    let d = mesh.d;
    let c2inv = 1.0 / (mesh.c * mesh.c);
    let n_t = truncate.unwrap_or(mesh.n_slabs).min(mesh.n_slabs);
    let mut acc = 0.0;
    for slab in 0..n_t {
        let sf = &mesh.slab_faces[slab];
        for &fid in &sf.bottom {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order).expect("valid face");
            let wq = scheme_weights(&rule, scheme);
            match face.class {
                FaceClass::InitialF0 => {
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (w, tau) = field_pair_at(mesh, field, face.minus, x, *t, scheme);
                        let t2: f64 = (0..d).map(|i| tau[i] * tau[i]).sum();
                        acc += wq[q] * 0.5 * (c2inv * w * w + t2);
                    }
                }
                FaceClass::SpaceLikeInternal => {
                    let below = face.minus;
                    let above = face.plus.expect("internal");
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (wb, tb) = field_pair_at(mesh, field, below, x, *t, scheme);
                        let (wa, ta) = field_pair_at(mesh, field, above, x, *t, scheme);
                        let dw = wb - wa;
                        let dt2: f64 = (0..d).map(|i| (tb[i] - ta[i]) * (tb[i] - ta[i])).sum();
                        acc += wq[q] * 0.5 * (c2inv * dw * dw + dt2);
                    }
                }
                _ => unreachable!(),
            }
        }
        for &fid in &sf.lateral {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order).expect("valid face");
            let wq = scheme_weights(&rule, scheme);
            let frame = face_frame(&mesh.tensor, face, params, scheme);
            match face.class {
                FaceClass::TimeLikeInternal => {
                    let left = face.minus;
                    let right = face.plus.expect("internal");
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (wl, tl) = field_pair_at(mesh, field, left, x, *t, scheme);
                        let (wr, tr) = field_pair_at(mesh, field, right, x, *t, scheme);
                        let jw = wl - wr;
                        let jt: f64 = (0..d).map(|i| (tl[i] - tr[i]) * frame.u[i]).sum();
                        acc += wq[q]
                            * (params.alpha * frame.m1 * jw * jw + params.beta * jt * jt);
                    }
                }
                FaceClass::DirichletFD => {
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (w, _) = field_pair_at(mesh, field, face.minus, x, *t, scheme);
                        acc += wq[q] * params.alpha * frame.m1 * w * w;
                    }
                }
                FaceClass::NeumannFN => {
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (_, tau) = field_pair_at(mesh, field, face.minus, x, *t, scheme);
                        let tn: f64 = (0..d).map(|i| tau[i] * frame.u[i]).sum();
                        acc += wq[q] * params.beta * frame.beta_scale * tn * tn;
                    }
                }
                _ => unreachable!(),
            }
        }
        // closing trace at t_{slab+1}: only for the final included slab;
        // earlier tops reappear as the jump terms of the next slab
        if slab == n_t - 1 {
            for &fid in &sf.top {
                let face = &mesh.faces[fid];
                let rule = rule_for(mesh, EntityRef::Face(fid), order).expect("valid face");
                let wq = scheme_weights(&rule, scheme);
                for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                    let (w, tau) = field_pair_at(mesh, field, face.minus, x, *t, scheme);
                    let t2: f64 = (0..d).map(|i| tau[i] * tau[i]).sum();
                    acc += wq[q] * 0.5 * (c2inv * w * w + t2);
                }
            }
        }
    }
    acc.sqrt()
}

/// The augmented seminorm `|(w, τ)|_{DG(Q_n)⁺}`.
pub fn dg_plus_seminorm(
    field: &dyn TraceField,
    mesh: &SpaceTimeMesh,
    params: &FluxParameters,
    scheme: SchemeFrame,
    truncate: Option<usize>,
    order: usize,
) -> f64 {
    let d = mesh.d;
    let c2inv = 1.0 / (mesh.c * mesh.c);
    let n_t = truncate.unwrap_or(mesh.n_slabs).min(mesh.n_slabs);
    let base = dg_seminorm(field, mesh, params, scheme, truncate, order);
    let mut acc = base * base;
    for slab in 0..n_t {
        let sf = &mesh.slab_faces[slab];
        // upwind traces on internal space-like faces strictly inside Q_n
        if slab + 1 < n_t {
            for &fid in &sf.top {
                let face = &mesh.faces[fid];
                if face.class != FaceClass::SpaceLikeInternal {
                    continue;
                }
                let rule = rule_for(mesh, EntityRef::Face(fid), order).expect("valid face");
                let wq = scheme_weights(&rule, scheme);
                for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                    let (w, tau) = field_pair_at(mesh, field, face.minus, x, *t, scheme);
                    let t2: f64 = (0..d).map(|i| tau[i] * tau[i]).sum();
                    acc += wq[q] * 2.0 * (c2inv * w * w + t2);
                }
            }
        }
        for &fid in &sf.lateral {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order).expect("valid face");
            let wq = scheme_weights(&rule, scheme);
            let frame = face_frame(&mesh.tensor, face, params, scheme);
            match face.class {
                FaceClass::TimeLikeInternal => {
                    let left = face.minus;
                    let right = face.plus.expect("internal");
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (wl, tl) = field_pair_at(mesh, field, left, x, *t, scheme);
                        let (wr, tr) = field_pair_at(mesh, field, right, x, *t, scheme);
                        let aw = 0.5 * (wl + wr);
                        let mut at = [0.0; 3];
                        for i in 0..d {
                            at[i] = 0.5 * (tl[i] + tr[i]);
                        }
                        let aqt = mat_vec(d, &frame.a_quarter, &at);
                        let quad: f64 = (0..d).map(|i| at[i] * aqt[i]).sum();
                        acc += wq[q] * (quad / params.alpha + aw * aw / params.beta);
                    }
                }
                FaceClass::DirichletFD => {
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (_, tau) = field_pair_at(mesh, field, face.minus, x, *t, scheme);
                        let aqt = mat_vec(d, &frame.a_quarter, &tau);
                        let quad: f64 = (0..d).map(|i| tau[i] * aqt[i]).sum();
                        acc += wq[q] * quad / params.alpha;
                    }
                }
                FaceClass::NeumannFN => {
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let (w, _) = field_pair_at(mesh, field, face.minus, x, *t, scheme);
                        acc += wq[q] * w * w / params.beta;
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    acc.sqrt()
}

/// Relative L² errors of `v` and `σ` on `Ω × {t}` for a slab boundary `t`.
#[derive(Debug, Clone, Copy)]
pub struct L2Errors {
    pub v: f64,
    pub sigma: f64,
    /// set when the exact norm vanished and the absolute error is reported
    pub v_absolute: bool,
    pub sigma_absolute: bool,
}

/// Compare a discrete field against the exact case on the slice `t = t_n`,
/// with traces taken from the earlier slab (the final slab for `t = T`).
pub fn l2_error_at_time(
    field: &dyn TraceField,
    case: &dyn crate::fields::WaveCase,
    mesh: &SpaceTimeMesh,
    t: f64,
    order: usize,
) -> Result<L2Errors, AnalysisError> {
    let scale = mesh.t_nodes.last().copied().unwrap_or(1.0).max(1.0);
    let n = mesh
        .t_nodes
        .iter()
        .position(|tn| (tn - t).abs() <= 1e-12 * scale)
        .ok_or(AnalysisError::TimeNotOnSlabBoundary(t))?;
    let d = mesh.d;
    // faces sitting at t_n with the trace element below (or slab 0 for t=0)
    let face_ids: &[usize] = if n == 0 {
        &mesh.slab_faces[0].bottom
    } else {
        &mesh.slab_faces[n - 1].top
    };
    let mut num_v = 0.0;
    let mut den_v = 0.0;
    let mut num_s = 0.0;
    let mut den_s = 0.0;
    for &fid in face_ids {
        let rule = rule_for(mesh, EntityRef::Face(fid), order).expect("valid face");
        let elem = mesh.faces[fid].minus;
        for (q, (x, tq)) in rule.pts_phys.iter().enumerate() {
            let w = rule.w_phys[q];
            let (vh, sh) = field.eval(elem, x, *tq);
            let ve = case.v_exact(x, *tq);
            let se = case.sigma_exact(x, *tq);
            num_v += w * (ve - vh) * (ve - vh);
            den_v += w * ve * ve;
            for i in 0..d {
                num_s += w * (se[i] - sh[i]) * (se[i] - sh[i]);
                den_s += w * se[i] * se[i];
            }
        }
    }
    let (num_v, den_v, num_s, den_s) = (num_v.sqrt(), den_v.sqrt(), num_s.sqrt(), den_s.sqrt());
    let v_absolute = den_v < 1e-14;
    let sigma_absolute = den_s < 1e-14;
    Ok(L2Errors {
        v: if v_absolute { num_v } else { num_v / den_v },
        sigma: if sigma_absolute { num_s } else { num_s / den_s },
        v_absolute,
        sigma_absolute,
    })
}

/// One row of a convergence study.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub level: u32,
    pub h: f64,
    pub h_hat: f64,
    pub dofs: usize,
    pub err_v: f64,
    pub err_sigma: f64,
    pub err_dg: f64,
    pub err_dg_plus: Option<f64>,
    pub rho: f64,
    pub v_absolute: bool,
    pub sigma_absolute: bool,
}

/// `log₂` rates of `(err_v, err_sigma, err_dg)` between consecutive levels
/// with halving `h`; the first row has no rate.
pub fn rates(reports: &[ErrorReport]) -> Result<Vec<[Option<f64>; 3]>, AnalysisError> {
    if reports.len() < 2 {
        return Err(AnalysisError::TooFewReports);
    }
    for w in reports.windows(2) {
        if !(w[1].h < w[0].h) {
            return Err(AnalysisError::NonMonotoneH);
        }
    }
    let mut out = vec![[None; 3]];
    for w in reports.windows(2) {
        let ratio = w[0].h / w[1].h;
        let rate = |e0: f64, e1: f64| Some((e0 / e1).ln() / ratio.ln());
        out.push([
            rate(w[0].err_v, w[1].err_v),
            rate(w[0].err_sigma, w[1].err_sigma),
            rate(w[0].err_dg, w[1].err_dg),
        ]);
    }
    Ok(out)
}

/// Error-growth slopes in ρ: `log(err_k/err_{k−1}) / log(ρ_k/ρ_{k−1})`.
pub fn rho_rates(reports: &[ErrorReport]) -> Result<Vec<[Option<f64>; 3]>, AnalysisError> {
    if reports.len() < 2 {
        return Err(AnalysisError::TooFewReports);
    }
    let mut out = vec![[None; 3]];
    for w in reports.windows(2) {
        let lr = (w[1].rho / w[0].rho).ln();
        let rate = |e0: f64, e1: f64| {
            if lr == 0.0 {
                Some(0.0)
            } else {
                Some((e1 / e0).ln() / lr)
            }
        };
        out.push([
            rate(w[0].err_v, w[1].err_v),
            rate(w[0].err_sigma, w[1].err_sigma),
            rate(w[0].err_dg, w[1].err_dg),
        ]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(h: f64, e: f64, rho: f64) -> ErrorReport {
        ErrorReport {
            level: 0,
            h,
            h_hat: h,
            dofs: 0,
            err_v: e,
            err_sigma: e,
            err_dg: e,
            err_dg_plus: None,
            rho,
            v_absolute: false,
            sigma_absolute: false,
        }
    }

    #[test]
    fn h_rates_log2() {
        let rs = vec![report(0.25, 4e-2, 1.0), report(0.125, 1e-2, 1.0)];
        let r = rates(&rs).unwrap();
        assert!((r[1][0].unwrap() - 2.0).abs() < 1e-12);
        let rs = vec![report(0.25, 1e-3, 1.0), report(0.125, 1e-3, 1.0)];
        let r = rates(&rs).unwrap();
        assert!(r[1][0].unwrap().abs() < 1e-12);
    }

    #[test]
    fn rho_rate_convention() {
        // errors 4.61e-2 at ρ=32 and 4.84e-2 at ρ=64 → rate 0.0702
        let rs = vec![report(0.1, 4.61e-2, 32.0), report(0.05, 4.84e-2, 64.0)];
        let r = rho_rates(&rs).unwrap();
        assert!((r[1][0].unwrap() - 0.0702).abs() < 5e-4, "{:?}", r[1][0]);
    }

    #[test]
    fn non_monotone_h_rejected() {
        let rs = vec![report(0.25, 1e-2, 1.0), report(0.25, 1e-3, 1.0)];
        assert!(matches!(rates(&rs), Err(AnalysisError::NonMonotoneH)));
        assert!(matches!(
            rates(&rs[..1]),
            Err(AnalysisError::TooFewReports)
        ));
    }
}
