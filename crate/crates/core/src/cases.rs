//! Built-in manufactured solutions: product-of-sines exact fields defined
//! either in hat coordinates (homogeneous cases on hat boxes) or in physical
//! coordinates (nonhomogeneous cases with an analytic source), plus a
//! polynomial patch-test case and an all-zero case.
//!
//! The anisotropy family is
//! `A = [[λ₁²a² + λ₂²b², ab(λ₂−λ₁)], [ab(λ₂−λ₁), λ₁²b² + λ₂²a²]]`
//! (embedded as the upper block with a unit third axis in 3D), normalized to
//! unit spectral norm before use; `ρ` is reported from the computed
//! eigenvalues.

use crate::anisotropy::{decompose, mat_transpose, mat_vec, AnisotropyTensor, Mat3, Vec3};
use crate::fields::{DataCapabilities, WaveCase};
use crate::mesh::{BoundarySpec, BoundaryCondition, DomainSpec, MeshFrame};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("unknown case id {0:?}")]
    UnknownCase(String),
    #[error("bad tensor parameters: {0}")]
    BadParameters(#[from] crate::anisotropy::AnisotropyError),
}

/// Parameters of the anisotropy family. `lambda1` solves ρ ≈ 2 by default.
#[derive(Debug, Clone, Copy)]
pub struct TensorParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for TensorParams {
    fn default() -> Self {
        Self {
            lambda1: 0.561_552_812_808_830_3,
            lambda2: 1.0,
            a: 1.0 / 2.0_f64.sqrt(),
            b: 1.0 / 2.0_f64.sqrt(),
        }
    }
}

/// The printed 2×2 family matrix.
pub fn family_matrix_2d(p: &TensorParams) -> Mat3 {
    let (l1, l2, a, b) = (p.lambda1, p.lambda2, p.a, p.b);
    let mut m = [0.0; 9];
    m[0] = l1 * l1 * a * a + l2 * l2 * b * b;
    m[1] = a * b * (l2 - l1);
    m[3] = m[1];
    m[4] = l1 * l1 * b * b + l2 * l2 * a * a;
    m
}

/// The 3D family: the 2×2 block plus a unit third axis.
pub fn family_matrix_3d(p: &TensorParams) -> Mat3 {
    let mut m = family_matrix_2d(p);
    m[8] = 1.0;
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Dirichlet,
    Neumann,
    Mixed,
}

impl BoundaryMode {
    pub fn to_spec(self, d: usize) -> BoundarySpec {
        match self {
            BoundaryMode::Dirichlet => BoundarySpec::all(d, BoundaryCondition::Dirichlet),
            BoundaryMode::Neumann => BoundarySpec::all(d, BoundaryCondition::Neumann),
            BoundaryMode::Mixed => BoundarySpec::mixed_axis0_dirichlet(d),
        }
    }
}

/// `U = Π_i sin(πx_i) · sin(ωt)` and its derivatives.
#[derive(Debug, Clone, Copy)]
struct SineProduct {
    d: usize,
    omega: f64,
}

impl SineProduct {
    fn space(&self, x: &Vec3) -> (f64, Vec3) {
        // product of sines and the per-axis cos-replaced products
        let mut prod = 1.0;
        for i in 0..self.d {
            prod *= (PI * x[i]).sin();
        }
        let mut cos_repl = [0.0; 3];
        for i in 0..self.d {
            let mut p = (PI * x[i]).cos();
            for j in 0..self.d {
                if j != i {
                    p *= (PI * x[j]).sin();
                }
            }
            cos_repl[i] = p;
        }
        (prod, cos_repl)
    }

    fn u_t(&self, x: &Vec3, t: f64) -> f64 {
        let (s, _) = self.space(x);
        self.omega * s * (self.omega * t).cos()
    }

    fn u_tt(&self, x: &Vec3, t: f64) -> f64 {
        let (s, _) = self.space(x);
        -self.omega * self.omega * s * (self.omega * t).sin()
    }

    fn grad(&self, x: &Vec3, t: f64) -> Vec3 {
        let (_, c) = self.space(x);
        let ts = (self.omega * t).sin();
        let mut g = [0.0; 3];
        for i in 0..self.d {
            g[i] = PI * c[i] * ts;
        }
        g
    }

    /// second spatial derivative `∂_i∂_j U`
    fn hess(&self, x: &Vec3, t: f64, i: usize, j: usize) -> f64 {
        let ts = (self.omega * t).sin();
        if i == j {
            let (s, _) = self.space(x);
            return -PI * PI * s * ts;
        }
        let mut p = PI * PI * (PI * x[i]).cos() * (PI * x[j]).cos();
        for k in 0..self.d {
            if k != i && k != j {
                p *= (PI * x[k]).sin();
            }
        }
        p * ts
    }
}

enum CaseKind {
    /// exact in hat coordinates, homogeneous: `v = ∂ₜÛ, σ = −Pᵀ∇̂Û`
    HatSine(SineProduct),
    /// exact in physical coordinates with analytic source:
    /// `v = ∂ₜU, σ = −A^{1/2}∇U, f = U_tt − ∇·(A∇U)`
    PhysSine(SineProduct),
    /// the polynomial pair from `b̂ = x̂₁² + t²`: `v = 2t, σ̂ = −2x̂₁e₁`
    Patch,
    Zero,
}

/// Exact solution, source and data bundle for one experiment family.
pub struct ManufacturedCase {
    pub id: String,
    pub d: usize,
    pub tensor: Arc<AnisotropyTensor>,
    pub frame: MeshFrame,
    pub boundary: BoundaryMode,
    kind: CaseKind,
    a_half: Mat3,
    a_full: Mat3,
}

impl ManufacturedCase {
    pub fn domain(&self) -> DomainSpec {
        DomainSpec::unit_box(self.d, self.frame)
    }

    pub fn boundary_spec(&self) -> BoundarySpec {
        self.boundary.to_spec(self.d)
    }

    pub fn rho(&self) -> f64 {
        self.tensor.rho
    }
}

/// Build a case by id: `hom2d_hat`, `hom3d_hat`, `nonhom1d`, `nonhom2d`,
/// `nonhom3d`, plus the test ids `patch1d/2d/3d` and `zero1d/2d`.
pub fn make_case(
    id: &str,
    params: &TensorParams,
    boundary: BoundaryMode,
) -> Result<ManufacturedCase, CaseError> {
    let (d, frame, kind, matrix): (usize, MeshFrame, CaseKind, Mat3) = match id {
        "hom2d_hat" => (
            2,
            MeshFrame::Hat,
            CaseKind::HatSine(SineProduct {
                d: 2,
                omega: 2.0_f64.sqrt() * PI,
            }),
            family_matrix_2d(params),
        ),
        "hom3d_hat" => (
            3,
            MeshFrame::Hat,
            CaseKind::HatSine(SineProduct {
                d: 3,
                omega: 3.0_f64.sqrt() * PI,
            }),
            family_matrix_3d(params),
        ),
        "nonhom1d" => {
            let mut m = [0.0; 9];
            m[0] = 1.0;
            (
                1,
                MeshFrame::Physical,
                CaseKind::PhysSine(SineProduct {
                    d: 1,
                    omega: 2.0_f64.sqrt() * PI,
                }),
                m,
            )
        }
        "nonhom2d" => (
            2,
            MeshFrame::Physical,
            CaseKind::PhysSine(SineProduct {
                d: 2,
                omega: 3.0_f64.sqrt() * PI,
            }),
            family_matrix_2d(params),
        ),
        "nonhom3d" => (
            3,
            MeshFrame::Physical,
            CaseKind::PhysSine(SineProduct { d: 3, omega: 2.0 * PI }),
            family_matrix_3d(params),
        ),
        "patch1d" | "patch2d" | "patch3d" => {
            let d = match id {
                "patch1d" => 1,
                "patch2d" => 2,
                _ => 3,
            };
            let m = if d == 1 {
                let mut m = [0.0; 9];
                m[0] = 1.0;
                m
            } else if d == 2 {
                family_matrix_2d(params)
            } else {
                family_matrix_3d(params)
            };
            (d, MeshFrame::Physical, CaseKind::Patch, m)
        }
        "zero1d" | "zero2d" => {
            let d = if id == "zero1d" { 1 } else { 2 };
            let mut m = [0.0; 9];
            m[0] = 1.0;
            m[4] = 1.0;
            (d, MeshFrame::Physical, CaseKind::Zero, m)
        }
        other => return Err(CaseError::UnknownCase(other.to_string())),
    };
    let tensor = Arc::new(decompose(d, &matrix)?.normalized());
    let a_half = tensor.power(0.5);
    let a_full = tensor.power(1.0);
    Ok(ManufacturedCase {
        id: id.to_string(),
        d,
        tensor,
        frame,
        boundary,
        kind,
        a_half,
        a_full,
    })
}

impl WaveCase for ManufacturedCase {
    fn dim(&self) -> usize {
        self.d
    }

    fn v_exact(&self, x: &Vec3, t: f64) -> f64 {
        match &self.kind {
            CaseKind::HatSine(s) => {
                let xh = self.tensor.to_hat(x);
                s.u_t(&xh, t)
            }
            CaseKind::PhysSine(s) => s.u_t(x, t),
            CaseKind::Patch => 2.0 * t,
            CaseKind::Zero => 0.0,
        }
    }

    fn sigma_exact(&self, x: &Vec3, t: f64) -> Vec3 {
        let d = self.d;
        match &self.kind {
            CaseKind::HatSine(s) => {
                let xh = self.tensor.to_hat(x);
                let gh = s.grad(&xh, t);
                let pt = mat_transpose(d, &self.tensor.p);
                let mut sig = mat_vec(d, &pt, &gh);
                for v in sig.iter_mut() {
                    *v = -*v;
                }
                sig
            }
            CaseKind::PhysSine(s) => {
                let g = s.grad(x, t);
                let mut sig = mat_vec(d, &self.a_half, &g);
                for v in sig.iter_mut() {
                    *v = -*v;
                }
                sig
            }
            CaseKind::Patch => {
                let xh = self.tensor.to_hat(x);
                let gh = [2.0 * xh[0], 0.0, 0.0];
                let pt = mat_transpose(d, &self.tensor.p);
                let mut sig = mat_vec(d, &pt, &gh);
                for v in sig.iter_mut() {
                    *v = -*v;
                }
                sig
            }
            CaseKind::Zero => [0.0; 3],
        }
    }

    fn g_n(&self, x: &Vec3, t: f64, n: &Vec3) -> f64 {
        let sig = self.sigma_exact(x, t);
        let asig = mat_vec(self.d, &self.a_half, &sig);
        (0..self.d).map(|i| asig[i] * n[i]).sum()
    }

    fn f(&self, x: &Vec3, t: f64) -> f64 {
        match &self.kind {
            CaseKind::PhysSine(s) => {
                // f = U_tt − ∇·(A∇U)
                let mut div = 0.0;
                for i in 0..self.d {
                    for j in 0..self.d {
                        div += self.a_full[3 * i + j] * s.hess(x, t, i, j);
                    }
                }
                s.u_tt(x, t) - div
            }
            _ => 0.0,
        }
    }

    fn capabilities(&self) -> DataCapabilities {
        DataCapabilities {
            dirichlet: true,
            neumann: true,
        }
    }
}
