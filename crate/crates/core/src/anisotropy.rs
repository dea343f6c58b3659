//! The anisotropy matrix `A = PᵀΛP`, the coordinate transformation
//! `x̂ = Sx` with `S = Λ^{-1/2}P`, the field scaling `(v̂, σ̂) = (v, Pσ)`,
//! and the identities `A^{1/2}∇v = Pᵀ∇̂v̂`, `∇·(A^{1/2}σ) = ∇̂·σ̂`.

use crate::linalg::{jacobi_eigen, DenseMatrix};
use crate::polynomial::{Axis, SpaceTimePolynomial};
use thiserror::Error;

pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AnisotropyError {
    #[error("matrix not symmetric: |A[{i},{j}] - A[{j},{i}]| = {dev:.3e}")]
    NotSymmetric { i: usize, j: usize, dev: f64 },
    #[error("matrix not positive definite: eigenvalue {0:.3e}")]
    NotPositiveDefinite(f64),
    #[error("unsupported spatial dimension {0}; expected 1, 2 or 3")]
    UnsupportedDimension(usize),
}

/// Row-major d×d matrix padded into a fixed 3×3 buffer.
pub type Mat3 = [f64; 9];
pub type Vec3 = [f64; 3];

pub fn mat_identity() -> Mat3 {
    let mut m = [0.0; 9];
    m[0] = 1.0;
    m[4] = 1.0;
    m[8] = 1.0;
    m
}

pub fn mat_vec(d: usize, m: &Mat3, x: &Vec3) -> Vec3 {
    let mut y = [0.0; 3];
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..d {
            s += m[3 * i + j] * x[j];
        }
        y[i] = s;
    }
    y
}

pub fn mat_mul(d: usize, a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [0.0; 9];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[3 * i + k] * b[3 * k + j];
            }
            c[3 * i + j] = s;
        }
    }
    c
}

pub fn mat_transpose(d: usize, a: &Mat3) -> Mat3 {
    let mut t = [0.0; 9];
    for i in 0..d {
        for j in 0..d {
            t[3 * i + j] = a[3 * j + i];
        }
    }
    t
}

pub fn mat_det(d: usize, m: &Mat3) -> f64 {
    match d {
        1 => m[0],
        2 => m[0] * m[4] - m[1] * m[3],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => panic!("unsupported dimension"),
    }
}

pub fn dot(d: usize, a: &Vec3, b: &Vec3) -> f64 {
    (0..d).map(|i| a[i] * b[i]).sum()
}

pub fn norm(d: usize, a: &Vec3) -> f64 {
    dot(d, a, a).sqrt()
}

/// The SPD matrix `A` with its eigendecomposition `A = PᵀΛP` and the
/// coordinate transformation `S = Λ^{-1/2}P`.
///
/// The rows of `P` are the eigenvectors, eigenvalues ascend, `det(P) = +1`.
/// `scale` records the normalization factor applied to the input matrix
/// (1 when no normalization was requested).
#[derive(Debug, Clone)]
pub struct AnisotropyTensor {
    pub d: usize,
    pub a: Mat3,
    pub p: Mat3,
    pub lambda: Vec3,
    pub s: Mat3,
    pub s_inv: Mat3,
    pub rho: f64,
    pub scale: f64,
}

impl AnisotropyTensor {
    /// Identity tensor in dimension `d`.
    pub fn identity(d: usize) -> Self {
        decompose(d, &mat_identity()).expect("identity is SPD")
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda[self.d - 1]
    }

    /// `A^s = PᵀΛ^sP` for a real exponent.
    pub fn power(&self, s: f64) -> Mat3 {
        let mut ls = [0.0; 9];
        for i in 0..self.d {
            ls[3 * i + i] = self.lambda[i].powf(s);
        }
        let pt = mat_transpose(self.d, &self.p);
        mat_mul(self.d, &mat_mul(self.d, &pt, &ls), &self.p)
    }

    /// `x̂ = Sx`.
    pub fn to_hat(&self, x: &Vec3) -> Vec3 {
        mat_vec(self.d, &self.s, x)
    }

    /// `x = S⁻¹x̂`.
    pub fn from_hat(&self, xh: &Vec3) -> Vec3 {
        mat_vec(self.d, &self.s_inv, xh)
    }

    /// Scaled fields back to physical: `(v, σ) = (v̂, Pᵀσ̂)`.
    pub fn pull_fields(&self, v_hat: f64, sigma_hat: &Vec3) -> (f64, Vec3) {
        let pt = mat_transpose(self.d, &self.p);
        (v_hat, mat_vec(self.d, &pt, sigma_hat))
    }

    /// Physical fields to scaled: `(v̂, σ̂) = (v, Pσ)`.
    pub fn push_fields(&self, v: f64, sigma: &Vec3) -> (f64, Vec3) {
        (v, mat_vec(self.d, &self.p, sigma))
    }

    /// `|Λ^{1/2}P n|` for a physical direction `n`; this also equals
    /// `|S^{-T} n|`, the stretch factor relating physical and hat normals.
    pub fn lambda_sqrt_p_norm(&self, n: &Vec3) -> f64 {
        let pn = mat_vec(self.d, &self.p, n);
        let mut s = 0.0;
        for i in 0..self.d {
            s += self.lambda[i] * pn[i] * pn[i];
        }
        s.sqrt()
    }

    /// Unit hat normal of a hyperplane with physical unit normal `n`.
    pub fn hat_normal(&self, n: &Vec3) -> Vec3 {
        let pn = mat_vec(self.d, &self.p, n);
        let mut v = [0.0; 3];
        for i in 0..self.d {
            v[i] = self.lambda[i].sqrt() * pn[i];
        }
        let len = norm(self.d, &v);
        for c in v.iter_mut() {
            *c /= len;
        }
        v
    }

    /// Tensor for `A / λ_max`, with the applied factor recorded in `scale`.
    pub fn normalized(&self) -> Self {
        let lmax = self.lambda_max();
        let mut a = self.a;
        for v in a.iter_mut() {
            *v /= lmax;
        }
        let mut t = decompose(self.d, &a).expect("normalized matrix stays SPD");
        t.scale = self.scale * lmax;
        t
    }
}

fn check_symmetric(d: usize, a: &Mat3) -> Result<(), AnisotropyError> {
    for i in 0..d {
        for j in (i + 1)..d {
            let dev = (a[3 * i + j] - a[3 * j + i]).abs();
            if dev > SYMMETRY_TOL {
                return Err(AnisotropyError::NotSymmetric { i, j, dev });
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of a symmetric positive definite `A`.
///
/// Eigenvalues ascend; each eigenvector's first significant entry is made
/// positive and a single sign flip of the last eigenvector enforces
/// `det(P) = +1`, so `P` is reproducible. Eigenvalues are returned as
/// computed (use [`normalize`] or [`AnisotropyTensor::normalized`] for the
/// `λ_max = 1` convention).
pub fn decompose(d: usize, a: &Mat3) -> Result<AnisotropyTensor, AnisotropyError> {
    if !(1..=3).contains(&d) {
        return Err(AnisotropyError::UnsupportedDimension(d));
    }
    check_symmetric(d, a)?;
    let mut dm = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            // symmetrize exactly so Jacobi sees a symmetric matrix
            dm.set(i, j, 0.5 * (a[3 * i + j] + a[3 * j + i]));
        }
    }
    let (w, v) = jacobi_eigen(&dm, 100).expect("Jacobi converges for d<=3");
    let tol = 1e-14 * w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if w[0] <= tol {
        return Err(AnisotropyError::NotPositiveDefinite(w[0]));
    }
    // rows of P are the eigenvectors
    let mut p = [0.0; 9];
    for (row, _) in w.iter().enumerate() {
        let mut e = [0.0; 3];
        for k in 0..d {
            e[k] = v.get(k, row);
        }
        let maxabs = e.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let lead = e.iter().find(|x| x.abs() > 1e-12 * maxabs).copied().unwrap();
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for k in 0..d {
            p[3 * row + k] = sign * e[k];
        }
    }
    if mat_det(d, &p) < 0.0 {
        for k in 0..d {
            p[3 * (d - 1) + k] = -p[3 * (d - 1) + k];
        }
    }
    let mut lambda = [0.0; 3];
    lambda[..d].copy_from_slice(&w[..d]);
    let mut s = [0.0; 9];
    let mut s_inv = [0.0; 9];
    for i in 0..d {
        for j in 0..d {
            s[3 * i + j] = p[3 * i + j] / lambda[i].sqrt(); // Λ^{-1/2}P
            s_inv[3 * i + j] = p[3 * j + i] * lambda[j].sqrt(); // PᵀΛ^{1/2}
        }
    }
    Ok(AnisotropyTensor {
        d,
        a: *a,
        p,
        lambda,
        s,
        s_inv,
        rho: w[d - 1] / w[0],
        scale: 1.0,
    })
}

/// `A / λ_max(A)` together with the scale factor, leaving the condition
/// number unchanged.
pub fn normalize(d: usize, a: &Mat3) -> Result<(Mat3, f64), AnisotropyError> {
    let t = decompose(d, a)?;
    let lmax = t.lambda_max();
    let mut out = *a;
    for v in out.iter_mut() {
        *v /= lmax;
    }
    Ok((out, lmax))
}

/// Random SPD matrix with condition number at most `rho_max`: random plane
/// rotations applied to a positive diagonal with `λ_max = 1`.
pub fn random_spd(rng: &mut impl rand::Rng, d: usize, rho_max: f64) -> Mat3 {
    let mut lam = [0.0; 3];
    lam[0] = 1.0;
    for l in lam.iter_mut().take(d).skip(1) {
        *l = rng.gen_range(1.0 / rho_max..=1.0);
    }
    let mut q = mat_identity();
    for i in 0..d {
        for j in (i + 1)..d {
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let (s, c) = th.sin_cos();
            let mut rot = mat_identity();
            rot[3 * i + i] = c;
            rot[3 * i + j] = -s;
            rot[3 * j + i] = s;
            rot[3 * j + j] = c;
            q = mat_mul(3, &q, &rot);
        }
    }
    let mut a = [0.0; 9];
    for r in 0..d {
        for cidx in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += q[3 * k + r] * lam[k] * q[3 * k + cidx];
            }
            a[3 * r + cidx] = s;
        }
    }
    // exact symmetry
    for r in 0..d {
        for cidx in (r + 1)..d {
            let m = 0.5 * (a[3 * r + cidx] + a[3 * cidx + r]);
            a[3 * r + cidx] = m;
            a[3 * cidx + r] = m;
        }
    }
    a
}

/// Residuals of the two transformation identities at sample points:
/// `max |A^{1/2}∇v − Pᵀ∇̂v̂|` and `max |∇·(A^{1/2}σ) − ∇̂·σ̂|`,
/// where `v(x,t) = v̂(Sx,t)` and `σ(x,t) = Pᵀσ̂(Sx,t)`, with the physical
/// derivatives taken by exact polynomial differentiation of the composition.
pub fn check_transform_identities(
    tensor: &AnisotropyTensor,
    v_hat: &SpaceTimePolynomial,
    sigma_hat: &[SpaceTimePolynomial],
    samples: &[(Vec3, f64)],
) -> (f64, f64) {
    let d = tensor.d;
    let s_flat: Vec<f64> = (0..d)
        .flat_map(|i| (0..d).map(move |j| tensor.s[3 * i + j]))
        .collect();
    let a_sqrt = tensor.power(0.5);

    // v(x,t) = v̂(Sx,t) and its physical gradient
    let v_phys = v_hat.compose_linear(&s_flat).expect("dims match");
    let grad_v: Vec<SpaceTimePolynomial> =
        (0..d).map(|i| v_phys.derivative(Axis::Spatial(i))).collect();
    let grad_v_hat: Vec<SpaceTimePolynomial> =
        (0..d).map(|i| v_hat.derivative(Axis::Spatial(i))).collect();

    // σ(x,t) = Pᵀσ̂(Sx,t), then ∇·(A^{1/2}σ) by exact differentiation
    let sigma_phys: Vec<SpaceTimePolynomial> = (0..d)
        .map(|i| {
            let mut acc = SpaceTimePolynomial::zero(d);
            for j in 0..d {
                let comp = sigma_hat[j].compose_linear(&s_flat).expect("dims match");
                acc = acc.add(&comp.scale(tensor.p[3 * j + i]));
            }
            acc
        })
        .collect();
    let mut div_asqrt_sigma = SpaceTimePolynomial::zero(d);
    for i in 0..d {
        let mut comp_i = SpaceTimePolynomial::zero(d);
        for j in 0..d {
            comp_i = comp_i.add(&sigma_phys[j].scale(a_sqrt[3 * i + j]));
        }
        div_asqrt_sigma = div_asqrt_sigma.add(&comp_i.derivative(Axis::Spatial(i)));
    }
    let mut div_sigma_hat = SpaceTimePolynomial::zero(d);
    for j in 0..d {
        div_sigma_hat = div_sigma_hat.add(&sigma_hat[j].derivative(Axis::Spatial(j)));
    }

    let mut max_grad = 0.0_f64;
    let mut max_div = 0.0_f64;
    for (x, t) in samples {
        let xh = tensor.to_hat(x);
        // A^{1/2}∇v at x
        let mut gv = [0.0; 3];
        for i in 0..d {
            gv[i] = grad_v[i].evaluate_unchecked(&x[..d], *t);
        }
        let agv = mat_vec(d, &a_sqrt, &gv);
        // Pᵀ∇̂v̂ at x̂
        let mut gvh = [0.0; 3];
        for i in 0..d {
            gvh[i] = grad_v_hat[i].evaluate_unchecked(&xh[..d], *t);
        }
        let pt = mat_transpose(d, &tensor.p);
        let ptgvh = mat_vec(d, &pt, &gvh);
        let mut diff = [0.0; 3];
        for i in 0..d {
            diff[i] = agv[i] - ptgvh[i];
        }
        max_grad = max_grad.max(norm(d, &diff));

        let lhs = div_asqrt_sigma.evaluate_unchecked(&x[..d], *t);
        let rhs = div_sigma_hat.evaluate_unchecked(&xh[..d], *t);
        max_div = max_div.max((lhs - rhs).abs());
    }
    (max_grad, max_div)
}
