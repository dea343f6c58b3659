//! High-level experiment driver: solve one configuration at one mesh level
//! and measure its errors, or sweep levels and condition numbers. The CLI
//! wraps these with config parsing and CSV output.

use crate::analysis::{dg_seminorm, l2_error_at_time, AnalysisError, ErrorReport};
use crate::assembly::{
    assemble_method1, assemble_method2, AssemblyError, AssemblyOptions, FluxParameters,
    SchemeFrame, TrefftzFamily,
};
use crate::cases::{make_case, BoundaryMode, CaseError, TensorParams};
use crate::fields::{DiffField, ExactField, TraceField};
use crate::mesh::{generate, MeshError, SpaceTimeMesh};
use crate::solver::{solve, solve_combined, LocalMode, MethodTag, SolverError};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Method1,
    Method2,
    Combined { mode: LocalMode },
}

/// One experiment configuration, level-independent.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub case_id: String,
    pub method: Method,
    pub p: u32,
    /// local polynomial degree, combined scheme only
    pub q: u32,
    /// fictitious-box enlargement, combined overlapping mode
    pub gamma: f64,
    pub boundary: BoundaryMode,
    pub params: TensorParams,
    pub flux: FluxParameters,
    pub quad_order: Option<usize>,
    pub compute_dg_plus: bool,
}

impl RunSpec {
    pub fn new(case_id: &str, method: Method, p: u32) -> Self {
        Self {
            case_id: case_id.to_string(),
            method,
            p,
            q: p,
            gamma: 1.0,
            boundary: BoundaryMode::Neumann,
            params: TensorParams::default(),
            flux: FluxParameters::default(),
            quad_order: None,
            compute_dg_plus: false,
        }
    }
}

/// Solve at level `l` (mesh `2^l` cells per axis, `2^l` slabs) and measure
/// the relative errors at `T` and in the DG seminorm.
pub fn run_level(spec: &RunSpec, level: u32) -> Result<ErrorReport, DriverError> {
    let case = make_case(&spec.case_id, &spec.params, spec.boundary)?;
    let n_slabs = 1usize << level;
    let mesh = Arc::new(generate(
        &case.domain(),
        Arc::clone(&case.tensor),
        level,
        n_slabs,
        case.boundary_spec(),
        1.0,
    )?);
    let opts = AssemblyOptions {
        quad_order: spec.quad_order,
        ..Default::default()
    };
    let family = TrefftzFamily::new(spec.p, &mesh);
    let norm_order = spec.quad_order.unwrap_or(spec.p as usize + 3);
    let t_end = case.domain().t_end;

    // solve and keep one trace field for error measurement
    let field: Box<dyn TraceField> = match spec.method {
        Method::Method1 => {
            let system = assemble_method1(&mesh, &family, &spec.flux, &case, &opts)?;
            Box::new(solve(&mesh, &family, &system, MethodTag::MethodI)?)
        }
        Method::Method2 => {
            let system = assemble_method2(&mesh, &family, &spec.flux, &case, &opts)?;
            Box::new(solve(&mesh, &family, &system, MethodTag::MethodII)?)
        }
        Method::Combined { mode } => Box::new(solve_combined(
            &mesh, spec.p, spec.q, &case, &spec.flux, mode, spec.gamma, &opts,
        )?),
    };

    let l2 = l2_error_at_time(field.as_ref(), &case, &mesh, t_end, norm_order)?;
    let exact = ExactField { case: &case };
    let err_field = DiffField {
        a: &exact,
        b: field.as_ref(),
    };
    let dg_err = dg_seminorm(
        &err_field,
        &mesh,
        &spec.flux,
        SchemeFrame::Physical,
        None,
        norm_order,
    );
    let dg_exact = dg_seminorm(
        &exact,
        &mesh,
        &spec.flux,
        SchemeFrame::Physical,
        None,
        norm_order,
    );
    let err_dg = if dg_exact > 1e-14 {
        dg_err / dg_exact
    } else {
        dg_err
    };
    let err_dg_plus = if spec.compute_dg_plus {
        let v = crate::analysis::dg_plus_seminorm(
            &err_field,
            &mesh,
            &spec.flux,
            SchemeFrame::Physical,
            None,
            norm_order,
        );
        Some(if dg_exact > 1e-14 { v / dg_exact } else { v })
    } else {
        None
    };

    let dofs = mesh.elements.len() * family.count();
    Ok(ErrorReport {
        level,
        h: (0.5_f64).powi(level as i32),
        h_hat: mesh.max_element_hat_diameter(),
        dofs,
        err_v: l2.v,
        err_sigma: l2.sigma,
        err_dg,
        err_dg_plus,
        rho: case.rho(),
        v_absolute: l2.v_absolute,
        sigma_absolute: l2.sigma_absolute,
    })
}

/// h-convergence sweep over ascending levels.
pub fn run_convergence(spec: &RunSpec, levels: &[u32]) -> Result<Vec<ErrorReport>, DriverError> {
    levels.iter().map(|&l| run_level(spec, l)).collect()
}

/// ρ-sweep at a fixed level: one run per `λ₁` value, ρ reported from the
/// computed eigenvalues.
pub fn run_rho_sweep(
    spec: &RunSpec,
    level: u32,
    lambda1s: &[f64],
) -> Result<Vec<ErrorReport>, DriverError> {
    lambda1s
        .iter()
        .map(|&l1| {
            let mut s = spec.clone();
            s.params.lambda1 = l1;
            run_level(&s, level)
        })
        .collect()
}

/// Convenience: the mesh a spec would run on (used by property checks).
pub fn build_mesh(spec: &RunSpec, level: u32) -> Result<Arc<SpaceTimeMesh>, DriverError> {
    let case = make_case(&spec.case_id, &spec.params, spec.boundary)?;
    Ok(Arc::new(generate(
        &case.domain(),
        Arc::clone(&case.tensor),
        level,
        1 << level,
        case.boundary_spec(),
        1.0,
    )?))
}
