//! Slab-by-slab forward substitution for the causal block system, and the
//! local solves producing the particular solution of the nonhomogeneous
//! scheme.

use crate::anisotropy::Vec3;
use crate::assembly::{
    assemble_local, assemble_method1, assemble_nonhomogeneous_rhs, AssemblyError,
    AssemblyOptions, BlockSystem, FluxParameters, LocalBox, LocalLayout, LocalPolyBasis,
    LocalRegion, TrefftzFamily,
};
use crate::fields::{TraceField, WaveCase};
use crate::linalg::{DenseMatrix, LinalgError, LuFactor};
use crate::mesh::SpaceTimeMesh;
use crate::polynomial::SpaceTimePolynomial;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("slab {slab}: {source}")]
    SingularBlock { slab: usize, source: LinalgError },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    MethodI,
    MethodII,
    Local,
}

/// Per-element coefficient blocks over a Trefftz family. Both methods
/// evaluate the same way: `(v, σ) = Σ c_j (w_j, Pᵀτ̂_j)` at `x̂ = Sx`
/// (Method-II's coefficients come from the hat system; mapping back is
/// exactly this evaluation).
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub mesh: Arc<SpaceTimeMesh>,
    pub family: TrefftzFamily,
    pub method: MethodTag,
    /// per-slab coefficient blocks, element-major inside each slab
    pub coeffs: Vec<Vec<f64>>,
    /// relative residual `‖Au − b‖/‖b‖` per slab
    pub slab_residuals: Vec<f64>,
}

impl DiscreteSolution {
    pub fn dofs(&self) -> usize {
        self.coeffs.iter().map(Vec::len).sum()
    }

    pub fn elem_coeffs(&self, elem: usize) -> &[f64] {
        let nb = self.family.count();
        let slab = elem / self.mesh.n_cells;
        let rank = elem % self.mesh.n_cells;
        &self.coeffs[slab][rank * nb..(rank + 1) * nb]
    }
}

impl TraceField for DiscreteSolution {
    fn dim(&self) -> usize {
        self.mesh.d
    }

    fn eval(&self, elem: usize, x: &Vec3, t: f64) -> (f64, Vec3) {
        let basis = self
            .family
            .basis
            .with_frame(self.mesh.elements[elem].frame);
        let coeffs = self.elem_coeffs(elem);
        let mut w = 0.0;
        let mut tau = [0.0; 3];
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (wj, tj) = basis.evaluate_physical(j, x, t).expect("index in range");
            w += c * wj;
            for i in 0..3 {
                tau[i] += c * tj[i];
            }
        }
        (w, tau)
    }
}

/// Factor each distinct diagonal block once and sweep forward in time,
/// feeding every solved slab's upwind trace into the next right-hand side.
pub fn solve(
    mesh: &Arc<SpaceTimeMesh>,
    family: &TrefftzFamily,
    system: &BlockSystem,
    method: MethodTag,
) -> Result<DiscreteSolution, SolverError> {
    let mut lus: HashMap<usize, Arc<LuFactor>> = HashMap::new();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(system.n_slabs);
    let mut residuals = Vec::with_capacity(system.n_slabs);
    for slab in 0..system.n_slabs {
        let mut b = system.rhs[slab].clone();
        if let Some(c) = &system.coupling[slab] {
            let prev = &coeffs[slab - 1];
            let cu = c.matvec(prev);
            for (bi, cui) in b.iter_mut().zip(cu.iter()) {
                *bi -= cui;
            }
        }
        let key = Arc::as_ptr(&system.diag[slab]) as usize;
        let lu = match lus.get(&key) {
            Some(lu) => Arc::clone(lu),
            None => {
                let lu = Arc::new(
                    LuFactor::new(&system.diag[slab])
                        .map_err(|source| SolverError::SingularBlock { slab, source })?,
                );
                lus.insert(key, Arc::clone(&lu));
                lu
            }
        };
        let u = lu.solve(&b);
        let au = system.diag[slab].matvec(&u);
        let rnorm: f64 = au
            .iter()
            .zip(b.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let bnorm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        residuals.push(if bnorm > 0.0 { rnorm / bnorm } else { rnorm });
        coeffs.push(u);
    }
    Ok(DiscreteSolution {
        mesh: Arc::clone(mesh),
        family: family.clone(),
        method,
        coeffs,
        slab_residuals: residuals,
    })
}

/// Piecewise space-time polynomial field: one `(v, σ)` polynomial tuple per
/// element, in the local coordinates of its box.
#[derive(Debug, Clone)]
pub struct PiecewisePolyField {
    pub d: usize,
    pub per_elem: Vec<(LocalBox, SpaceTimePolynomial, Vec<SpaceTimePolynomial>)>,
}

impl TraceField for PiecewisePolyField {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, elem: usize, x: &Vec3, t: f64) -> (f64, Vec3) {
        let (bx, v, sigma) = &self.per_elem[elem];
        let (u, theta) = bx.local_of(self.d, x, t);
        let w = v.evaluate_unchecked(&u[..self.d], theta);
        let mut tau = [0.0; 3];
        for i in 0..self.d {
            tau[i] = sigma[i].evaluate_unchecked(&u[..self.d], theta);
        }
        (w, tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMode {
    /// one independent solve per element on its fictitious box
    Overlapping,
    /// one space-time DG solve per slab with `Q_q` blocks per cell
    Nonoverlapping,
}

/// Solve the local nonhomogeneous problems and collect the particular
/// solution `(v¹, σ¹)` as per-element polynomials. All local problems of
/// the same shape share one factorization.
pub fn solve_particular(
    mesh: &Arc<SpaceTimeMesh>,
    q: u32,
    case: &dyn WaveCase,
    params: &FluxParameters,
    mode: LocalMode,
    gamma: f64,
    opts: &AssemblyOptions,
) -> Result<PiecewisePolyField, SolverError> {
    let d = mesh.d;
    let basis = LocalPolyBasis::new(d, q);
    let nq = basis.len();
    let layout = LocalLayout { nq, d };
    let bsz = layout.block_size();
    let mut per_elem: Vec<(LocalBox, SpaceTimePolynomial, Vec<SpaceTimePolynomial>)> =
        Vec::with_capacity(mesh.elements.len());
    let mut cached: Option<(DenseMatrix, Arc<LuFactor>)> = None;
    let mut factor = |a: DenseMatrix, slab: usize| -> Result<Arc<LuFactor>, SolverError> {
        if let Some((prev, lu)) = &cached {
            if prev.data == a.data {
                return Ok(Arc::clone(lu));
            }
        }
        let lu = Arc::new(
            LuFactor::new(&a).map_err(|source| SolverError::SingularBlock { slab, source })?,
        );
        cached = Some((a, Arc::clone(&lu)));
        Ok(lu)
    };
    match mode {
        LocalMode::Overlapping => {
            for elem in 0..mesh.elements.len() {
                let slab = mesh.elements[elem].slab;
                let (a, b) = assemble_local(
                    mesh,
                    LocalRegion::Element { elem, gamma },
                    q,
                    case,
                    params,
                    opts,
                )?;
                let lu = factor(a, slab)?;
                let u = lu.solve(&b);
                let bx = crate::assembly::element_box(mesh, elem, gamma);
                let v = basis.polynomial(&u[..nq]);
                let sigma: Vec<SpaceTimePolynomial> = (0..d)
                    .map(|i| basis.polynomial(&u[layout.sigma_index(i, 0)..layout.sigma_index(i, 0) + nq]))
                    .collect();
                per_elem.push((bx, v, sigma));
            }
        }
        LocalMode::Nonoverlapping => {
            for slab in 0..mesh.n_slabs {
                let (a, b) =
                    assemble_local(mesh, LocalRegion::Slab { slab }, q, case, params, opts)?;
                let lu = factor(a, slab)?;
                let u = lu.solve(&b);
                for rank in 0..mesh.n_cells {
                    let elem = mesh.element_id(slab, rank);
                    let bx = crate::assembly::element_box(mesh, elem, 1.0);
                    let block = &u[rank * bsz..(rank + 1) * bsz];
                    let v = basis.polynomial(&block[..nq]);
                    let sigma: Vec<SpaceTimePolynomial> = (0..d)
                        .map(|i| {
                            basis.polynomial(
                                &block[layout.sigma_index(i, 0)..layout.sigma_index(i, 0) + nq],
                            )
                        })
                        .collect();
                    per_elem.push((bx, v, sigma));
                }
            }
        }
    }
    Ok(PiecewisePolyField { d, per_elem })
}

/// `(v¹ + v², σ¹ + σ²)` of the combined scheme.
#[derive(Debug, Clone)]
pub struct CombinedSolution {
    pub trefftz: DiscreteSolution,
    pub particular: PiecewisePolyField,
}

impl TraceField for CombinedSolution {
    fn dim(&self) -> usize {
        self.trefftz.dim()
    }

    fn eval(&self, elem: usize, x: &Vec3, t: f64) -> (f64, Vec3) {
        let (w1, t1) = self.particular.eval(elem, x, t);
        let (w2, t2) = self.trefftz.eval(elem, x, t);
        let mut tau = [0.0; 3];
        for i in 0..3 {
            tau[i] = t1[i] + t2[i];
        }
        (w1 + w2, tau)
    }
}

/// Drive the combined scheme end to end: local particular solves, then the
/// global Trefftz solve of the residual problem.
#[allow(clippy::too_many_arguments)]
pub fn solve_combined(
    mesh: &Arc<SpaceTimeMesh>,
    p: u32,
    q: u32,
    case: &dyn WaveCase,
    params: &FluxParameters,
    mode: LocalMode,
    gamma: f64,
    opts: &AssemblyOptions,
) -> Result<CombinedSolution, SolverError> {
    let particular = solve_particular(mesh, q, case, params, mode, gamma, opts)?;
    let family = TrefftzFamily::new(p, mesh);
    let mut system = assemble_method1(mesh, &family, params, case, opts)?;
    system.rhs = assemble_nonhomogeneous_rhs(mesh, &family, params, case, &particular, opts)?;
    let trefftz = solve(mesh, &family, &system, MethodTag::MethodI)?;
    Ok(CombinedSolution { trefftz, particular })
}
