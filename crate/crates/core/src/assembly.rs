//! Assembly of the space-time DG forms.
//!
//! The bilinear form couples elements only through faces:
//! space-like faces take the upwind (earlier) trace, time-like faces carry
//! averages, jumps and the `α A^δ` / `β` penalties, the final slice carries
//! a mass term, and the lateral boundary carries the Dirichlet/Neumann flux
//! terms. Volume terms vanish for Trefftz trial/test pairs and are skipped.
//!
//! Everything is expressed through a per-face frame (weighted normal `u`,
//! penalty metric `m1`, Neumann scales): with the physical frame this is the
//! anisotropic form; with the hat frame it is the isotropic form of the
//! transformed problem, whose Neumann weight is `|Λ^{1/2}P n|`. The two
//! coincide entrywise when `A = I`.
//!
//! The slab structure is causal: unknowns of slab `n` couple to slab `n−1`
//! only through the space-like trace, so the system is stored as per-slab
//! diagonal blocks plus one sub-diagonal coupling block per interface.
//! Blocks that come out bit-identical across slabs (always, on uniform
//! meshes, thanks to element-relative quadrature offsets) are stored once.

use crate::anisotropy::{mat_vec, AnisotropyTensor, Vec3};
use crate::fields::{TraceField, WaveCase};
use crate::linalg::DenseMatrix;
use crate::mesh::{EntityRef, FaceClass, FaceRecord, MeshFrame, SpaceTimeMesh};
use crate::polynomial::{tensor_indices, MultiIndex, SpaceTimePolynomial};
use crate::quadrature::{rule_for, tensor_gauss, MappedRule, QuadratureError};
use crate::trefftz_basis::{build_first_order_basis, TrefftzBasis};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("missing boundary data: case provides no {0} data but the mesh has such faces")]
    MissingBoundaryData(&'static str),
    #[error("local DG requires a physical-frame mesh")]
    LocalNeedsPhysicalFrame,
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadratureError),
}

/// Stabilization parameters of the numerical fluxes.
#[derive(Debug, Clone, Copy)]
pub struct FluxParameters {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Default for FluxParameters {
    fn default() -> Self {
        // δ = 1/2 is the transformation-stable choice
        Self {
            alpha: 1.0,
            beta: 1.0,
            delta: 0.5,
        }
    }
}

/// Geometry frame the form is assembled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeFrame {
    /// anisotropic form on physical entities (Method-I)
    Physical,
    /// isotropic form on hat entities with `|Λ^{1/2}Pn|` Neumann weights
    /// (Method-II)
    HatScheme,
    /// isotropic form on hat entities without the Neumann weight; only used
    /// for norm evaluation in transformation-stability checks
    HatIsotropic,
}

#[derive(Debug, Clone, Default)]
pub struct AssemblyOptions {
    /// Gauss points per axis; `None` picks `p + 3`
    pub quad_order: Option<usize>,
    /// test hook: negates the β penalty on time-like faces, breaking
    /// coercivity on purpose
    pub flip_flux_sign: bool,
}

/// Shared per-element Trefftz basis: the same local pairs everywhere, each
/// element evaluating them in its own hat-local frame.
#[derive(Debug, Clone)]
pub struct TrefftzFamily {
    pub basis: TrefftzBasis,
}

impl TrefftzFamily {
    pub fn new(p: u32, mesh: &SpaceTimeMesh) -> Self {
        Self {
            basis: build_first_order_basis(p, mesh.d, mesh.c, Arc::clone(&mesh.tensor)),
        }
    }

    pub fn count(&self) -> usize {
        self.basis.len()
    }

    /// Local coordinates of native-frame offsets from the element center.
    fn local_points(&self, mesh: &SpaceTimeMesh, elem: usize, rel: &[[f64; 4]]) -> Vec<(Vec3, f64)> {
        let d = mesh.d;
        let s = mesh.elements[elem].frame.scale;
        let c = mesh.c;
        rel.iter()
            .map(|r| {
                let xyz = [r[0], r[1], r[2]];
                let rel_hat = match mesh.frame {
                    MeshFrame::Physical => mesh.tensor.to_hat(&xyz),
                    MeshFrame::Hat => xyz,
                };
                let mut xi = [0.0; 3];
                for i in 0..d {
                    xi[i] = rel_hat[i] / s;
                }
                (xi, c * r[3] / s)
            })
            .collect()
    }

    /// Physical pairs `(w, Pᵀτ̂)` of every basis function at the given
    /// offsets; flat layout `[j * npts + q]`.
    pub fn tabulate(&self, mesh: &SpaceTimeMesh, elem: usize, rel: &[[f64; 4]]) -> Vec<(f64, Vec3)> {
        let pts = self.local_points(mesh, elem, rel);
        self.basis.tabulate_local(&pts)
    }

    /// Physical pair of one basis function at a physical point.
    pub fn eval(&self, mesh: &SpaceTimeMesh, elem: usize, j: usize, x: &Vec3, t: f64) -> (f64, Vec3) {
        let b = self.basis.with_frame(mesh.elements[elem].frame);
        b.evaluate_physical(j, x, t).expect("index in range")
    }
}

/// Per-face weights of the generic flux kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FaceFrame {
    /// weighted spatial normal: `A^{1/2}n` (physical) or `n̂` (hat)
    pub u: Vec3,
    /// penalty metric `n·A^{1/2+δ}n` (physical) or 1 (hat)
    pub m1: f64,
    /// scale on the β Neumann penalty: 1 or `|Λ^{1/2}Pn|`
    pub beta_scale: f64,
    /// scale on the Neumann load `w` term: 1 or `|Λ^{1/2}Pn|⁻¹`
    pub load_scale: f64,
    /// matrix `A^{1/2−δ}` (physical) or identity (hat), for DG⁺ averages
    pub a_quarter: crate::anisotropy::Mat3,
}

pub(crate) fn face_frame(
    tensor: &AnisotropyTensor,
    face: &FaceRecord,
    params: &FluxParameters,
    scheme: SchemeFrame,
) -> FaceFrame {
    let d = tensor.d;
    match scheme {
        SchemeFrame::Physical => {
            let a_half = tensor.power(0.5);
            let a_pen = tensor.power(0.5 + params.delta);
            let n = face.normal_phys;
            let u = mat_vec(d, &a_half, &n);
            let an = mat_vec(d, &a_pen, &n);
            let m1 = (0..d).map(|i| n[i] * an[i]).sum();
            FaceFrame {
                u,
                m1,
                beta_scale: 1.0,
                load_scale: 1.0,
                a_quarter: tensor.power(0.5 - params.delta),
            }
        }
        SchemeFrame::HatScheme | SchemeFrame::HatIsotropic => {
            let w = tensor.lambda_sqrt_p_norm(&face.normal_phys);
            let weighted = scheme == SchemeFrame::HatScheme;
            FaceFrame {
                u: face.normal_hat,
                m1: 1.0,
                beta_scale: if weighted { w } else { 1.0 },
                load_scale: if weighted { 1.0 / w } else { 1.0 },
                a_quarter: crate::anisotropy::mat_identity(),
            }
        }
    }
}

/// Scheme-frame weights of a mapped rule.
pub(crate) fn scheme_weights(rule: &MappedRule, scheme: SchemeFrame) -> &[f64] {
    match scheme {
        SchemeFrame::Physical => &rule.w_phys,
        SchemeFrame::HatScheme | SchemeFrame::HatIsotropic => &rule.w_hat,
    }
}

/// Convert physical pairs to the scheme's field frame: `(ŵ, τ̂) = (w, Pτ)`
/// for hat frames, unchanged for the physical frame.
pub(crate) fn to_scheme_pair(
    tensor: &AnisotropyTensor,
    scheme: SchemeFrame,
    w: f64,
    tau: &Vec3,
) -> (f64, Vec3) {
    match scheme {
        SchemeFrame::Physical => (w, *tau),
        SchemeFrame::HatScheme | SchemeFrame::HatIsotropic => {
            (w, mat_vec(tensor.d, &tensor.p, tau))
        }
    }
}

/// Causal block system: per-slab diagonal blocks, sub-diagonal coupling
/// blocks carrying the upwind traces, and right-hand-side blocks.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub n_slabs: usize,
    /// unknowns per slab
    pub block_size: usize,
    /// unknowns per element
    pub basis_count: usize,
    pub diag: Vec<Arc<DenseMatrix>>,
    /// `coupling[n]`: rows test slab `n`, columns trial slab `n−1`
    pub coupling: Vec<Option<Arc<DenseMatrix>>>,
    pub rhs: Vec<Vec<f64>>,
    pub scheme: SchemeFrame,
}

impl BlockSystem {
    /// Column of basis function `j` of `elem` inside its slab block.
    pub fn col(&self, mesh: &SpaceTimeMesh, elem: usize, j: usize) -> usize {
        (elem % mesh.n_cells) * self.basis_count + j
    }
}

fn quad_order(family: &TrefftzFamily, opts: &AssemblyOptions) -> usize {
    opts.quad_order.unwrap_or(family.basis.p as usize + 3)
}

struct FaceTabs {
    /// per basis function and point: (w, τ·u) in the scheme frame
    w: Vec<f64>,
    tu: Vec<f64>,
    /// full τ vectors (needed for space-like mass terms)
    tau: Vec<Vec3>,
    npts: usize,
}

fn tabulate_face_side(
    mesh: &SpaceTimeMesh,
    family: &TrefftzFamily,
    elem: usize,
    rel: &[[f64; 4]],
    frame: &FaceFrame,
    scheme: SchemeFrame,
) -> FaceTabs {
    let d = mesh.d;
    let raw = family.tabulate(mesh, elem, rel);
    let npts = rel.len();
    let nb = family.count();
    let mut w = vec![0.0; nb * npts];
    let mut tu = vec![0.0; nb * npts];
    let mut tau = vec![[0.0; 3]; nb * npts];
    for (idx, (wv, tv)) in raw.into_iter().enumerate() {
        let (ws, ts) = to_scheme_pair(&mesh.tensor, scheme, wv, &tv);
        w[idx] = ws;
        tau[idx] = ts;
        tu[idx] = (0..d).map(|i| ts[i] * frame.u[i]).sum();
    }
    FaceTabs { w, tu, tau, npts }
}

/// Trace values of a field on one side of a face, in the scheme frame.
struct FieldTrace {
    w: Vec<f64>,
    tu: Vec<f64>,
    tau: Vec<Vec3>,
}

fn field_trace(
    mesh: &SpaceTimeMesh,
    field: &dyn TraceField,
    elem: usize,
    rule: &MappedRule,
    frame: &FaceFrame,
    scheme: SchemeFrame,
) -> FieldTrace {
    let d = mesh.d;
    let n = rule.len();
    let mut w = vec![0.0; n];
    let mut tu = vec![0.0; n];
    let mut tau = vec![[0.0; 3]; n];
    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
        let (wv, tv) = field.eval(elem, x, *t);
        let (ws, ts) = to_scheme_pair(&mesh.tensor, scheme, wv, &tv);
        w[q] = ws;
        tu[q] = (0..d).map(|i| ts[i] * frame.u[i]).sum();
        tau[q] = ts;
    }
    FieldTrace { w, tu, tau }
}

/// Assemble the full Method-I system (matrix and load) for a case.
pub fn assemble_method1(
    mesh: &SpaceTimeMesh,
    family: &TrefftzFamily,
    params: &FluxParameters,
    case: &dyn WaveCase,
    opts: &AssemblyOptions,
) -> Result<BlockSystem, AssemblyError> {
    assemble_system(mesh, family, params, case, SchemeFrame::Physical, opts)
}

/// Assemble the Method-II (hat-domain) system; solving it and mapping back
/// through `(v, σ) = (v̂, Pᵀσ̂)` gives the standard-Trefftz approximation.
pub fn assemble_method2(
    mesh: &SpaceTimeMesh,
    family: &TrefftzFamily,
    params: &FluxParameters,
    case: &dyn WaveCase,
    opts: &AssemblyOptions,
) -> Result<BlockSystem, AssemblyError> {
    assemble_system(mesh, family, params, case, SchemeFrame::HatScheme, opts)
}

fn check_boundary_data(mesh: &SpaceTimeMesh, case: &dyn WaveCase) -> Result<(), AssemblyError> {
    let caps = case.capabilities();
    for f in &mesh.faces {
        match f.class {
            FaceClass::DirichletFD if !caps.dirichlet => {
                return Err(AssemblyError::MissingBoundaryData("Dirichlet"))
            }
            FaceClass::NeumannFN if !caps.neumann => {
                return Err(AssemblyError::MissingBoundaryData("Neumann"))
            }
            _ => {}
        }
    }
    Ok(())
}

fn assemble_system(
    mesh: &SpaceTimeMesh,
    family: &TrefftzFamily,
    params: &FluxParameters,
    case: &dyn WaveCase,
    scheme: SchemeFrame,
    opts: &AssemblyOptions,
) -> Result<BlockSystem, AssemblyError> {
    check_boundary_data(mesh, case)?;
    let order = quad_order(family, opts);
    let nb = family.count();
    let bs = mesh.n_cells * nb;
    let c2inv = 1.0 / (mesh.c * mesh.c);
    let beta_sign = if opts.flip_flux_sign { -1.0 } else { 1.0 };
    let d = mesh.d;

    let mut diag: Vec<Arc<DenseMatrix>> = Vec::with_capacity(mesh.n_slabs);
    let mut coupling: Vec<Option<Arc<DenseMatrix>>> = Vec::with_capacity(mesh.n_slabs);
    let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(mesh.n_slabs);

    for slab in 0..mesh.n_slabs {
        let mut a = DenseMatrix::zeros(bs, bs);
        let mut c_mat = if slab > 0 {
            Some(DenseMatrix::zeros(bs, bs))
        } else {
            None
        };
        let mut b = vec![0.0; bs];
        let sf = &mesh.slab_faces[slab];

        // bottom: F⁰ data for the first slab, upwind coupling otherwise
        for &fid in &sf.bottom {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order)?;
            let wq = scheme_weights(&rule, scheme);
            match face.class {
                FaceClass::InitialF0 => {
                    let frame = face_frame(&mesh.tensor, face, params, scheme);
                    let tabs = tabulate_face_side(
                        mesh,
                        family,
                        face.minus,
                        &rule.rel_minus,
                        &frame,
                        scheme,
                    );
                    let col0 = (face.minus % mesh.n_cells) * nb;
                    for (q, (x, _t)) in rule.pts_phys.iter().enumerate() {
                        let v0 = case.v0(x);
                        let s0 = case.sigma0(x);
                        let (_, s0s) = to_scheme_pair(&mesh.tensor, scheme, 0.0, &s0);
                        for i in 0..nb {
                            let wi = tabs.w[i * tabs.npts + q];
                            let ti = tabs.tau[i * tabs.npts + q];
                            let dot: f64 = (0..d).map(|k| s0s[k] * ti[k]).sum();
                            b[col0 + i] += wq[q] * (c2inv * v0 * wi + dot);
                        }
                    }
                }
                FaceClass::SpaceLikeInternal => {
                    // trial: upwind trace from the earlier slab; test: this slab
                    let frame = face_frame(&mesh.tensor, face, params, scheme);
                    let below = face.minus;
                    let above = face.plus.expect("internal");
                    let tab_below = tabulate_face_side(
                        mesh,
                        family,
                        below,
                        &rule.rel_minus,
                        &frame,
                        scheme,
                    );
                    let tab_above = tabulate_face_side(
                        mesh,
                        family,
                        above,
                        rule.rel_plus.as_ref().expect("two-sided"),
                        &frame,
                        scheme,
                    );
                    let cm = c_mat.as_mut().expect("slab > 0");
                    let row0 = (above % mesh.n_cells) * nb;
                    let colb = (below % mesh.n_cells) * nb;
                    for q in 0..rule.len() {
                        for k in 0..nb {
                            let vk = tab_below.w[k * tab_below.npts + q];
                            let tk = tab_below.tau[k * tab_below.npts + q];
                            for i in 0..nb {
                                let wi = tab_above.w[i * tab_above.npts + q];
                                let ti = tab_above.tau[i * tab_above.npts + q];
                                let dot: f64 = (0..d).map(|m| tk[m] * ti[m]).sum();
                                cm.add_at(
                                    row0 + i,
                                    colb + k,
                                    -wq[q] * (c2inv * vk * wi + dot),
                                );
                            }
                        }
                    }
                }
                _ => unreachable!("bottom faces are F0 or space-like"),
            }
        }

        // lateral: time-like internal and boundary flux terms
        for &fid in &sf.lateral {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order)?;
            let wq = scheme_weights(&rule, scheme);
            let frame = face_frame(&mesh.tensor, face, params, scheme);
            match face.class {
                FaceClass::TimeLikeInternal => {
                    let left = face.minus;
                    let right = face.plus.expect("internal");
                    let tab_l =
                        tabulate_face_side(mesh, family, left, &rule.rel_minus, &frame, scheme);
                    let tab_r = tabulate_face_side(
                        mesh,
                        family,
                        right,
                        rule.rel_plus.as_ref().expect("two-sided"),
                        &frame,
                        scheme,
                    );
                    let cols = [(left % mesh.n_cells) * nb, (right % mesh.n_cells) * nb];
                    let tabs = [&tab_l, &tab_r];
                    let signs = [1.0, -1.0];
                    for q in 0..rule.len() {
                        for (ai, &sa) in signs.iter().enumerate() {
                            let ta = tabs[ai];
                            for k in 0..nb {
                                let vk = ta.w[k * ta.npts + q];
                                let tuk = ta.tu[k * ta.npts + q];
                                for (bi, &sb) in signs.iter().enumerate() {
                                    let tb = tabs[bi];
                                    for i in 0..nb {
                                        let wi = tb.w[i * tb.npts + q];
                                        let tui = tb.tu[i * tb.npts + q];
                                        let val = 0.5 * vk * sb * tui
                                            + 0.5 * tuk * sb * wi
                                            + params.alpha * frame.m1 * sa * vk * sb * wi
                                            + beta_sign * params.beta * sa * tuk * sb * tui;
                                        a.add_at(cols[bi] + i, cols[ai] + k, wq[q] * val);
                                    }
                                }
                            }
                        }
                    }
                }
                FaceClass::DirichletFD => {
                    let elem = face.minus;
                    let tabs =
                        tabulate_face_side(mesh, family, elem, &rule.rel_minus, &frame, scheme);
                    let col0 = (elem % mesh.n_cells) * nb;
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let gd = case.g_d(x, *t);
                        for k in 0..nb {
                            let vk = tabs.w[k * tabs.npts + q];
                            let tuk = tabs.tu[k * tabs.npts + q];
                            for i in 0..nb {
                                let wi = tabs.w[i * tabs.npts + q];
                                let val = tuk * wi + params.alpha * frame.m1 * vk * wi;
                                a.add_at(col0 + i, col0 + k, wq[q] * val);
                            }
                        }
                        for i in 0..nb {
                            let wi = tabs.w[i * tabs.npts + q];
                            let tui = tabs.tu[i * tabs.npts + q];
                            b[col0 + i] +=
                                wq[q] * gd * (params.alpha * frame.m1 * wi - tui);
                        }
                    }
                }
                FaceClass::NeumannFN => {
                    let elem = face.minus;
                    let tabs =
                        tabulate_face_side(mesh, family, elem, &rule.rel_minus, &frame, scheme);
                    let col0 = (elem % mesh.n_cells) * nb;
                    for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
                        let gn = case.g_n(x, *t, &face.normal_phys);
                        for k in 0..nb {
                            let vk = tabs.w[k * tabs.npts + q];
                            let tuk = tabs.tu[k * tabs.npts + q];
                            for i in 0..nb {
                                let tui = tabs.tu[i * tabs.npts + q];
                                let val =
                                    (vk + params.beta * frame.beta_scale * tuk) * tui;
                                a.add_at(col0 + i, col0 + k, wq[q] * val);
                            }
                        }
                        for i in 0..nb {
                            let wi = tabs.w[i * tabs.npts + q];
                            let tui = tabs.tu[i * tabs.npts + q];
                            b[col0 + i] +=
                                wq[q] * gn * (params.beta * tui - frame.load_scale * wi);
                        }
                    }
                }
                _ => unreachable!("lateral faces have n_t = 0"),
            }
        }

        // top closure: upwind self-trace (space-like) or F^T mass
        for &fid in &sf.top {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order)?;
            let wq = scheme_weights(&rule, scheme);
            let frame = face_frame(&mesh.tensor, face, params, scheme);
            let below = face.minus;
            let tabs = tabulate_face_side(mesh, family, below, &rule.rel_minus, &frame, scheme);
            let col0 = (below % mesh.n_cells) * nb;
            for q in 0..rule.len() {
                for k in 0..nb {
                    let vk = tabs.w[k * tabs.npts + q];
                    let tk = tabs.tau[k * tabs.npts + q];
                    for i in 0..nb {
                        let wi = tabs.w[i * tabs.npts + q];
                        let ti = tabs.tau[i * tabs.npts + q];
                        let dot: f64 = (0..d).map(|m| tk[m] * ti[m]).sum();
                        a.add_at(col0 + i, col0 + k, wq[q] * (c2inv * vk * wi + dot));
                    }
                }
            }
        }

        // share identical blocks across slabs
        let a_arc = match diag.last() {
            Some(prev) if prev.data == a.data => Arc::clone(prev),
            _ => Arc::new(a),
        };
        diag.push(a_arc);
        let c_arc = match (&c_mat, coupling.last()) {
            (Some(cm), Some(Some(prev))) if prev.data == cm.data => Some(Arc::clone(prev)),
            (Some(_), _) => c_mat.map(Arc::new),
            (None, _) => None,
        };
        coupling.push(c_arc);
        rhs.push(b);
    }

    Ok(BlockSystem {
        n_slabs: mesh.n_slabs,
        block_size: bs,
        basis_count: nb,
        diag,
        coupling,
        rhs,
        scheme,
    })
}

/// The action `𝒜(field; φ_i)` of the trace-based form on every test
/// function, accumulated per slab. The field enters only through its
/// upwind traces, averages and jumps, exactly as the form is written.
pub fn assemble_action(
    mesh: &SpaceTimeMesh,
    family: &TrefftzFamily,
    params: &FluxParameters,
    scheme: SchemeFrame,
    field: &dyn TraceField,
    opts: &AssemblyOptions,
) -> Result<Vec<Vec<f64>>, AssemblyError> {
    let order = quad_order(family, opts);
    let nb = family.count();
    let bs = mesh.n_cells * nb;
    let c2inv = 1.0 / (mesh.c * mesh.c);
    let d = mesh.d;
    let mut out: Vec<Vec<f64>> = vec![vec![0.0; bs]; mesh.n_slabs];

    for slab in 0..mesh.n_slabs {
        let sf = &mesh.slab_faces[slab];
        for &fid in &sf.bottom {
            let face = &mesh.faces[fid];
            if face.class != FaceClass::SpaceLikeInternal {
                continue; // F⁰ does not appear in the form
            }
            let rule = rule_for(mesh, EntityRef::Face(fid), order)?;
            let wq = scheme_weights(&rule, scheme);
            let frame = face_frame(&mesh.tensor, face, params, scheme);
            let below = face.minus;
            let above = face.plus.expect("internal");
            let trace = field_trace(mesh, field, below, &rule, &frame, scheme);
            let tab_above = tabulate_face_side(
                mesh,
                family,
                above,
                rule.rel_plus.as_ref().expect("two-sided"),
                &frame,
                scheme,
            );
            let row0 = (above % mesh.n_cells) * nb;
            for q in 0..rule.len() {
                for i in 0..nb {
                    let wi = tab_above.w[i * tab_above.npts + q];
                    let ti = tab_above.tau[i * tab_above.npts + q];
                    let dot: f64 = (0..d).map(|m| trace.tau[q][m] * ti[m]).sum();
                    out[slab][row0 + i] -= wq[q] * (c2inv * trace.w[q] * wi + dot);
                }
            }
        }
        for &fid in &sf.lateral {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order)?;
            let wq = scheme_weights(&rule, scheme);
            let frame = face_frame(&mesh.tensor, face, params, scheme);
            match face.class {
                FaceClass::TimeLikeInternal => {
                    let left = face.minus;
                    let right = face.plus.expect("internal");
                    let tr_l = field_trace(mesh, field, left, &rule, &frame, scheme);
                    let tr_r = field_trace(mesh, field, right, &rule, &frame, scheme);
                    let tab_l =
                        tabulate_face_side(mesh, family, left, &rule.rel_minus, &frame, scheme);
                    let tab_r = tabulate_face_side(
                        mesh,
                        family,
                        right,
                        rule.rel_plus.as_ref().expect("two-sided"),
                        &frame,
                        scheme,
                    );
                    let cols = [(left % mesh.n_cells) * nb, (right % mesh.n_cells) * nb];
                    let tabs = [&tab_l, &tab_r];
                    let signs = [1.0, -1.0];
                    for q in 0..rule.len() {
                        let avg_v = 0.5 * (tr_l.w[q] + tr_r.w[q]);
                        let avg_tu = 0.5 * (tr_l.tu[q] + tr_r.tu[q]);
                        let jmp_v = tr_l.w[q] - tr_r.w[q];
                        let jmp_tu = tr_l.tu[q] - tr_r.tu[q];
                        for (bi, &sb) in signs.iter().enumerate() {
                            let tb = tabs[bi];
                            for i in 0..nb {
                                let wi = tb.w[i * tb.npts + q];
                                let tui = tb.tu[i * tb.npts + q];
                                let val = avg_v * sb * tui
                                    + avg_tu * sb * wi
                                    + params.alpha * frame.m1 * jmp_v * sb * wi
                                    + params.beta * jmp_tu * sb * tui;
                                out[slab][cols[bi] + i] += wq[q] * val;
                            }
                        }
                    }
                }
                FaceClass::DirichletFD => {
                    let elem = face.minus;
                    let tr = field_trace(mesh, field, elem, &rule, &frame, scheme);
                    let tabs =
                        tabulate_face_side(mesh, family, elem, &rule.rel_minus, &frame, scheme);
                    let col0 = (elem % mesh.n_cells) * nb;
                    for q in 0..rule.len() {
                        for i in 0..nb {
                            let wi = tabs.w[i * tabs.npts + q];
                            let val = tr.tu[q] * wi + params.alpha * frame.m1 * tr.w[q] * wi;
                            out[slab][col0 + i] += wq[q] * val;
                        }
                    }
                }
                FaceClass::NeumannFN => {
                    let elem = face.minus;
                    let tr = field_trace(mesh, field, elem, &rule, &frame, scheme);
                    let tabs =
                        tabulate_face_side(mesh, family, elem, &rule.rel_minus, &frame, scheme);
                    let col0 = (elem % mesh.n_cells) * nb;
                    for q in 0..rule.len() {
                        for i in 0..nb {
                            let tui = tabs.tu[i * tabs.npts + q];
                            let val =
                                (tr.w[q] + params.beta * frame.beta_scale * tr.tu[q]) * tui;
                            out[slab][col0 + i] += wq[q] * val;
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        for &fid in &sf.top {
            let face = &mesh.faces[fid];
            let rule = rule_for(mesh, EntityRef::Face(fid), order)?;
            let wq = scheme_weights(&rule, scheme);
            let frame = face_frame(&mesh.tensor, face, params, scheme);
            let below = face.minus;
            let tr = field_trace(mesh, field, below, &rule, &frame, scheme);
            let tabs = tabulate_face_side(mesh, family, below, &rule.rel_minus, &frame, scheme);
            let col0 = (below % mesh.n_cells) * nb;
            for q in 0..rule.len() {
                for i in 0..nb {
                    let wi = tabs.w[i * tabs.npts + q];
                    let ti = tabs.tau[i * tabs.npts + q];
                    let dot: f64 = (0..d).map(|m| tr.tau[q][m] * ti[m]).sum();
                    out[slab][col0 + i] += wq[q] * (c2inv * tr.w[q] * wi + dot);
                }
            }
        }
    }
    Ok(out)
}

/// Volume load `∫_Q f w_i` per slab (the extra term of the nonhomogeneous
/// functional).
pub fn assemble_volume_source(
    mesh: &SpaceTimeMesh,
    family: &TrefftzFamily,
    case: &dyn WaveCase,
    scheme: SchemeFrame,
    opts: &AssemblyOptions,
) -> Result<Vec<Vec<f64>>, AssemblyError> {
    let order = quad_order(family, opts);
    let nb = family.count();
    let bs = mesh.n_cells * nb;
    let mut out: Vec<Vec<f64>> = vec![vec![0.0; bs]; mesh.n_slabs];
    for (eid, el) in mesh.elements.iter().enumerate() {
        let rule = rule_for(mesh, EntityRef::Element(eid), order)?;
        let wq = scheme_weights(&rule, scheme);
        let tab = family.tabulate(mesh, eid, &rule.rel_minus);
        let npts = rule.len();
        let col0 = (eid % mesh.n_cells) * nb;
        for (q, (x, t)) in rule.pts_phys.iter().enumerate() {
            let fv = case.f(x, *t);
            if fv == 0.0 {
                continue;
            }
            for i in 0..nb {
                out[el.slab][col0 + i] += wq[q] * fv * tab[i * npts + q].0;
            }
        }
    }
    Ok(out)
}

/// Right-hand side of the combined scheme:
/// `ℓ̃(φ_i) − 𝒜(v¹, σ¹; φ_i)`, with `ℓ̃` the standard load plus the
/// volume source term. The particular solution enters through traces only.
pub fn assemble_nonhomogeneous_rhs(
    mesh: &SpaceTimeMesh,
    family: &TrefftzFamily,
    params: &FluxParameters,
    case: &dyn WaveCase,
    particular: &dyn TraceField,
    opts: &AssemblyOptions,
) -> Result<Vec<Vec<f64>>, AssemblyError> {
    let base = assemble_system(mesh, family, params, case, SchemeFrame::Physical, opts)?;
    let vol = assemble_volume_source(mesh, family, case, SchemeFrame::Physical, opts)?;
    let action = assemble_action(
        mesh,
        family,
        params,
        SchemeFrame::Physical,
        particular,
        opts,
    )?;
    let mut rhs = base.rhs;
    for n in 0..mesh.n_slabs {
        for i in 0..rhs[n].len() {
            rhs[n][i] += vol[n][i] - action[n][i];
        }
    }
    Ok(rhs)
}

// ---------------------------------------------------------------------------
// element/slab-local DG for the particular solution
// ---------------------------------------------------------------------------

/// Tensor-product polynomial basis `Q_q` on a box, in per-axis local
/// coordinates `u_i = (x_i − c_i)/r_i`, `θ = (t − t_c)/r_t`.
#[derive(Debug, Clone)]
pub struct LocalPolyBasis {
    pub d: usize,
    pub q: u32,
    pub indices: Vec<MultiIndex>,
}

impl LocalPolyBasis {
    pub fn new(d: usize, q: u32) -> Self {
        Self {
            d,
            q,
            indices: tensor_indices(d, q),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Monomial value and local-coordinate gradient/time-derivative at one
    /// local point.
    fn shape(&self, m: usize, u: &Vec3, theta: f64) -> (f64, Vec3, f64) {
        let idx = &self.indices[m];
        let powu = |x: f64, n: u32| -> f64 {
            let mut r = 1.0;
            for _ in 0..n {
                r *= x;
            }
            r
        };
        let mut val = powu(theta, idx.k);
        for i in 0..self.d {
            val *= powu(u[i], idx.alpha[i]);
        }
        let mut grad = [0.0; 3];
        for i in 0..self.d {
            if idx.alpha[i] > 0 {
                let mut g = idx.alpha[i] as f64 * powu(u[i], idx.alpha[i] - 1) * powu(theta, idx.k);
                for j in 0..self.d {
                    if j != i {
                        g *= powu(u[j], idx.alpha[j]);
                    }
                }
                grad[i] = g;
            }
        }
        let mut dt = 0.0;
        if idx.k > 0 {
            dt = idx.k as f64 * powu(theta, idx.k - 1);
            for i in 0..self.d {
                dt *= powu(u[i], idx.alpha[i]);
            }
        }
        (val, grad, dt)
    }

    /// The polynomial (in local coordinates) with the given coefficients.
    pub fn polynomial(&self, coeffs: &[f64]) -> SpaceTimePolynomial {
        SpaceTimePolynomial::from_terms(
            self.d,
            self.indices.iter().zip(coeffs).map(|(idx, &c)| (*idx, c)),
        )
    }
}

/// Axis-aligned physical space-time box of a local problem.
#[derive(Debug, Clone, Copy)]
pub struct LocalBox {
    pub lo: Vec3,
    pub hi: Vec3,
    pub t0: f64,
    pub t1: f64,
}

impl LocalBox {
    pub fn center(&self, d: usize) -> (Vec3, f64) {
        let mut c = [0.0; 3];
        for i in 0..d {
            c[i] = 0.5 * (self.lo[i] + self.hi[i]);
        }
        (c, 0.5 * (self.t0 + self.t1))
    }

    pub fn half_widths(&self, d: usize) -> (Vec3, f64) {
        let mut r = [0.0; 3];
        for i in 0..d {
            r[i] = 0.5 * (self.hi[i] - self.lo[i]);
        }
        (r, 0.5 * (self.t1 - self.t0))
    }

    pub fn local_of(&self, d: usize, x: &Vec3, t: f64) -> (Vec3, f64) {
        let (c, tc) = self.center(d);
        let (r, rt) = self.half_widths(d);
        let mut u = [0.0; 3];
        for i in 0..d {
            u[i] = (x[i] - c[i]) / r[i];
        }
        (u, (t - tc) / rt)
    }
}

/// Unknown layout of one local element block: `v` then the σ components,
/// `nq` coefficients each.
#[derive(Debug, Clone, Copy)]
pub struct LocalLayout {
    pub nq: usize,
    pub d: usize,
}

impl LocalLayout {
    pub fn block_size(&self) -> usize {
        (1 + self.d) * self.nq
    }

    pub fn v_index(&self, m: usize) -> usize {
        m
    }

    pub fn sigma_index(&self, comp: usize, m: usize) -> usize {
        (1 + comp) * self.nq + m
    }
}

/// Volume terms, the top-slice mass, and the `∫ f w` load of one local box,
/// written into a block of `a`/`b` starting at `offset`.
#[allow(clippy::too_many_arguments)]
fn local_volume_and_top(
    a: &mut DenseMatrix,
    b: &mut [f64],
    offset: usize,
    tensor: &AnisotropyTensor,
    c: f64,
    bx: &LocalBox,
    basis: &LocalPolyBasis,
    case: &dyn WaveCase,
    order: usize,
) -> Result<(), AssemblyError> {
    let d = basis.d;
    let nq = basis.len();
    let layout = LocalLayout { nq, d };
    let a_half = tensor.power(0.5);
    let c2inv = 1.0 / (c * c);
    let (center, tc) = bx.center(d);
    let (r, rt) = bx.half_widths(d);

    let vol_rule = tensor_gauss(&vec![order; d + 1])?;
    let mut jac = 2.0 * rt; // per-axis [0,1] → [−1,1] stretch times half-width
    for i in 0..d {
        jac *= 2.0 * r[i];
    }
    for (pt, w) in vol_rule.points.iter().zip(vol_rule.weights.iter()) {
        let mut u = [0.0; 3];
        let mut x = [0.0; 3];
        for i in 0..d {
            u[i] = 2.0 * pt[i] - 1.0;
            x[i] = center[i] + u[i] * r[i];
        }
        let theta = 2.0 * pt[d] - 1.0;
        let t = tc + theta * rt;
        let wv = w * jac;
        let mut vals = vec![0.0; nq];
        let mut gphys = vec![[0.0; 3]; nq];
        let mut dtphys = vec![0.0; nq];
        for m in 0..nq {
            let (v, g, dt) = basis.shape(m, &u, theta);
            vals[m] = v;
            for i in 0..d {
                gphys[m][i] = g[i] / r[i];
            }
            dtphys[m] = dt / rt;
        }
        for m_test in 0..nq {
            for m_trial in 0..nq {
                // −∫ σ_i ∂ₜτ_i
                for i in 0..d {
                    a.add_at(
                        offset + layout.sigma_index(i, m_test),
                        offset + layout.sigma_index(i, m_trial),
                        -wv * vals[m_trial] * dtphys[m_test],
                    );
                }
                // −∫ σ_i (A^{1/2}∇w)_i
                for i in 0..d {
                    let mut aw = 0.0;
                    for j in 0..d {
                        aw += a_half[3 * i + j] * gphys[m_test][j];
                    }
                    a.add_at(
                        offset + layout.v_index(m_test),
                        offset + layout.sigma_index(i, m_trial),
                        -wv * vals[m_trial] * aw,
                    );
                }
                // −∫ v (A^{1/2}∇)_j τ_j
                for j in 0..d {
                    let mut at = 0.0;
                    for i in 0..d {
                        at += a_half[3 * j + i] * gphys[m_test][i];
                    }
                    a.add_at(
                        offset + layout.sigma_index(j, m_test),
                        offset + layout.v_index(m_trial),
                        -wv * vals[m_trial] * at,
                    );
                }
                // −∫ c⁻² v ∂ₜw
                a.add_at(
                    offset + layout.v_index(m_test),
                    offset + layout.v_index(m_trial),
                    -wv * c2inv * vals[m_trial] * dtphys[m_test],
                );
            }
        }
        let fv = case.f(&x, t);
        if fv != 0.0 {
            for m in 0..nq {
                b[offset + layout.v_index(m)] += wv * fv * vals[m];
            }
        }
    }

    // top-slice mass at θ = 1
    let top_rule = tensor_gauss(&vec![order; d.max(1)])?;
    let mut top_jac = 1.0;
    for i in 0..d {
        top_jac *= 2.0 * r[i];
    }
    for (pt, w) in top_rule.points.iter().zip(top_rule.weights.iter()) {
        let mut u = [0.0; 3];
        for i in 0..d {
            u[i] = 2.0 * pt[i] - 1.0;
        }
        let wv = w * top_jac;
        let mut vals = vec![0.0; nq];
        for m in 0..nq {
            vals[m] = basis.shape(m, &u, 1.0).0;
        }
        for m_test in 0..nq {
            for m_trial in 0..nq {
                let mass = wv * vals[m_trial] * vals[m_test];
                a.add_at(
                    offset + layout.v_index(m_test),
                    offset + layout.v_index(m_trial),
                    c2inv * mass,
                );
                for i in 0..d {
                    a.add_at(
                        offset + layout.sigma_index(i, m_test),
                        offset + layout.sigma_index(i, m_trial),
                        mass,
                    );
                }
            }
        }
    }
    Ok(())
}

/// Zero-data Dirichlet penalty `∫ (σ·A^{1/2}n) w + α m1 v w` on one lateral
/// facet of a local box.
#[allow(clippy::too_many_arguments)]
fn local_lateral_penalty(
    a: &mut DenseMatrix,
    offset: usize,
    tensor: &AnisotropyTensor,
    bx: &LocalBox,
    basis: &LocalPolyBasis,
    params: &FluxParameters,
    axis: usize,
    side_hi: bool,
    order: usize,
) -> Result<(), AssemblyError> {
    let d = basis.d;
    let nq = basis.len();
    let layout = LocalLayout { nq, d };
    let a_half = tensor.power(0.5);
    let a_pen = tensor.power(0.5 + params.delta);
    let (r, rt) = bx.half_widths(d);
    let side = if side_hi { 1.0 } else { -1.0 };
    let mut orders: Vec<usize> = (0..d).filter(|&i| i != axis).map(|_| order).collect();
    orders.push(order); // time axis
    let rule = tensor_gauss(&orders)?;
    let mut facet_jac = 2.0 * rt;
    for i in 0..d {
        if i != axis {
            facet_jac *= 2.0 * r[i];
        }
    }
    let mut nvec = [0.0; 3];
    nvec[axis] = side;
    let un = mat_vec(d, &a_half, &nvec);
    let apn = mat_vec(d, &a_pen, &nvec);
    let m1: f64 = (0..d).map(|i| nvec[i] * apn[i]).sum();
    for (pt, w) in rule.points.iter().zip(rule.weights.iter()) {
        let mut u = [0.0; 3];
        u[axis] = side;
        let mut k = 0;
        for i in 0..d {
            if i != axis {
                u[i] = 2.0 * pt[k] - 1.0;
                k += 1;
            }
        }
        let theta = 2.0 * pt[k] - 1.0;
        let wv = w * facet_jac;
        let mut vals = vec![0.0; nq];
        for m in 0..nq {
            vals[m] = basis.shape(m, &u, theta).0;
        }
        for m_test in 0..nq {
            for m_trial in 0..nq {
                let ww = wv * vals[m_trial] * vals[m_test];
                for i in 0..d {
                    a.add_at(
                        offset + layout.v_index(m_test),
                        offset + layout.sigma_index(i, m_trial),
                        ww * un[i],
                    );
                }
                a.add_at(
                    offset + layout.v_index(m_test),
                    offset + layout.v_index(m_trial),
                    params.alpha * m1 * ww,
                );
            }
        }
    }
    Ok(())
}

/// Interior time-like flux terms of the global recipe between two local
/// boxes sharing a facet orthogonal to `axis` (left box below, right box
/// above in that axis).
#[allow(clippy::too_many_arguments)]
fn local_interior_flux(
    a: &mut DenseMatrix,
    offsets: [usize; 2],
    tensor: &AnisotropyTensor,
    boxes: [&LocalBox; 2],
    basis: &LocalPolyBasis,
    params: &FluxParameters,
    axis: usize,
    order: usize,
) -> Result<(), AssemblyError> {
    let d = basis.d;
    let nq = basis.len();
    let layout = LocalLayout { nq, d };
    let a_half = tensor.power(0.5);
    let a_pen = tensor.power(0.5 + params.delta);
    let (r, rt) = boxes[0].half_widths(d);
    let mut orders: Vec<usize> = (0..d).filter(|&i| i != axis).map(|_| order).collect();
    orders.push(order);
    let rule = tensor_gauss(&orders)?;
    let mut facet_jac = 2.0 * rt;
    for i in 0..d {
        if i != axis {
            facet_jac *= 2.0 * r[i];
        }
    }
    let mut nvec = [0.0; 3];
    nvec[axis] = 1.0; // left → right
    let un = mat_vec(d, &a_half, &nvec);
    let apn = mat_vec(d, &a_pen, &nvec);
    let m1: f64 = (0..d).map(|i| nvec[i] * apn[i]).sum();
    let signs = [1.0, -1.0];
    for (pt, w) in rule.points.iter().zip(rule.weights.iter()) {
        // local coordinates on each side: u_axis = +1 on the left box,
        // −1 on the right one
        let mut vals = [vec![0.0; nq], vec![0.0; nq]];
        for side in 0..2 {
            let mut u = [0.0; 3];
            u[axis] = if side == 0 { 1.0 } else { -1.0 };
            let mut k = 0;
            for i in 0..d {
                if i != axis {
                    u[i] = 2.0 * pt[k] - 1.0;
                    k += 1;
                }
            }
            let theta = 2.0 * pt[k] - 1.0;
            for m in 0..nq {
                vals[side][m] = basis.shape(m, &u, theta).0;
            }
        }
        let wv = w * facet_jac;
        for (ai, &sa) in signs.iter().enumerate() {
            for (bi, &sb) in signs.iter().enumerate() {
                for m_trial in 0..nq {
                    let pv = vals[ai][m_trial];
                    for m_test in 0..nq {
                        let tv = vals[bi][m_test];
                        let ww = wv * pv * tv;
                        // {{v}}[[A^{1/2}τ]]: trial v, test τ_i
                        for i in 0..d {
                            a.add_at(
                                offsets[bi] + layout.sigma_index(i, m_test),
                                offsets[ai] + layout.v_index(m_trial),
                                0.5 * sb * un[i] * ww,
                            );
                        }
                        // {{σ}}·A^{1/2}[[w]]: trial σ_j, test w
                        for j in 0..d {
                            a.add_at(
                                offsets[bi] + layout.v_index(m_test),
                                offsets[ai] + layout.sigma_index(j, m_trial),
                                0.5 * sb * un[j] * ww,
                            );
                        }
                        // α A^δ[[v]]·A^{1/2}[[w]]
                        a.add_at(
                            offsets[bi] + layout.v_index(m_test),
                            offsets[ai] + layout.v_index(m_trial),
                            params.alpha * m1 * sa * sb * ww,
                        );
                        // β [[A^{1/2}σ]][[A^{1/2}τ]]
                        for i in 0..d {
                            for j in 0..d {
                                a.add_at(
                                    offsets[bi] + layout.sigma_index(i, m_test),
                                    offsets[ai] + layout.sigma_index(j, m_trial),
                                    params.beta * sa * sb * un[i] * un[j] * ww,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Region a local problem is posed on.
#[derive(Debug, Clone, Copy)]
pub enum LocalRegion {
    /// fictitious box around one element, spatial half-widths scaled by
    /// `gamma ≥ 1`
    Element { elem: usize, gamma: f64 },
    /// the whole slab `Ω × I_n`, one `Q_q` block per spatial cell with the
    /// global interior fluxes
    Slab { slab: usize },
}

/// Physical box of an element, optionally enlarged about its center.
pub fn element_box(mesh: &SpaceTimeMesh, elem: usize, gamma: f64) -> LocalBox {
    let el = &mesh.elements[elem];
    let d = mesh.d;
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for i in 0..d {
        let c = 0.5 * (el.lo[i] + el.hi[i]);
        let r = 0.5 * (el.hi[i] - el.lo[i]) * gamma;
        lo[i] = c - r;
        hi[i] = c + r;
    }
    LocalBox {
        lo,
        hi,
        t0: el.t0,
        t1: el.t1,
    }
}

/// Assemble the dense local system for the nonhomogeneous particular
/// problem: zero data at the slab bottom and on the lateral boundary,
/// `ℓ⁽¹⁾ = ∫ f w`. For a slab region, interior facets carry the global
/// time-like fluxes.
pub fn assemble_local(
    mesh: &SpaceTimeMesh,
    region: LocalRegion,
    q: u32,
    case: &dyn WaveCase,
    params: &FluxParameters,
    opts: &AssemblyOptions,
) -> Result<(DenseMatrix, Vec<f64>), AssemblyError> {
    if mesh.frame != MeshFrame::Physical {
        return Err(AssemblyError::LocalNeedsPhysicalFrame);
    }
    let d = mesh.d;
    let basis = LocalPolyBasis::new(d, q);
    let order = opts.quad_order.unwrap_or(q as usize + 3);
    let bsz = LocalLayout { nq: basis.len(), d }.block_size();
    match region {
        LocalRegion::Element { elem, gamma } => {
            let bx = element_box(mesh, elem, gamma);
            let mut a = DenseMatrix::zeros(bsz, bsz);
            let mut b = vec![0.0; bsz];
            local_volume_and_top(&mut a, &mut b, 0, &mesh.tensor, mesh.c, &bx, &basis, case, order)?;
            for axis in 0..d {
                for side_hi in [false, true] {
                    local_lateral_penalty(
                        &mut a,
                        0,
                        &mesh.tensor,
                        &bx,
                        &basis,
                        params,
                        axis,
                        side_hi,
                        order,
                    )?;
                }
            }
            Ok((a, b))
        }
        LocalRegion::Slab { slab } => {
            let n = mesh.n_cells * bsz;
            let mut a = DenseMatrix::zeros(n, n);
            let mut b = vec![0.0; n];
            let boxes: Vec<LocalBox> = (0..mesh.n_cells)
                .map(|rank| element_box(mesh, mesh.element_id(slab, rank), 1.0))
                .collect();
            for rank in 0..mesh.n_cells {
                local_volume_and_top(
                    &mut a,
                    &mut b,
                    rank * bsz,
                    &mesh.tensor,
                    mesh.c,
                    &boxes[rank],
                    &basis,
                    case,
                    order,
                )?;
            }
            // lateral mesh faces of the slab: boundary facets get the
            // zero-Dirichlet penalty, interior ones the flux coupling
            for &fid in &mesh.slab_faces[slab].lateral {
                let face = &mesh.faces[fid];
                match face.class {
                    FaceClass::TimeLikeInternal => {
                        let left = face.minus % mesh.n_cells;
                        let right = face.plus.expect("internal") % mesh.n_cells;
                        local_interior_flux(
                            &mut a,
                            [left * bsz, right * bsz],
                            &mesh.tensor,
                            [&boxes[left], &boxes[right]],
                            &basis,
                            params,
                            face.axis,
                            order,
                        )?;
                    }
                    FaceClass::DirichletFD | FaceClass::NeumannFN => {
                        let rank = face.minus % mesh.n_cells;
                        local_lateral_penalty(
                            &mut a,
                            rank * bsz,
                            &mesh.tensor,
                            &boxes[rank],
                            &basis,
                            params,
                            face.axis,
                            face.side_hi,
                            order,
                        )?;
                    }
                    _ => unreachable!(),
                }
            }
            Ok((a, b))
        }
    }
}
