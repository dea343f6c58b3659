//! Polynomial Trefftz spaces for the wave operator.
//!
//! The scalar space `Û^p` collects polynomials with `−Δ̂U + c⁻²U_tt = 0`;
//! its coefficients follow the recurrence
//! `a_{k,α} = c²/(k(k−1)) Σ_m (α_m+2)(α_m+1) a_{k−2,α+2e_m}`
//! seeded by monomial initial data at `k = 0` and `k = 1`. First-order pairs
//! are `(∂ₜb̂, −∇̂b̂)` for `b̂ ∈ Û^{p+1}`, mapped to physical space as
//! `(∂ₜb̂, −Pᵀ∇̂b̂)` at `x̂ = Sx`.
//!
//! For `c = 1` the recurrence is evaluated in exact rational arithmetic,
//! denominators are cleared, and each member is rescaled by a power of two,
//! so the stored coefficients are dyadic and every residual cancels exactly
//! in floating point.

use crate::anisotropy::{mat_transpose, mat_vec, AnisotropyTensor, Vec3};
use crate::polynomial::{binomial, spatial_indices_up_to, Axis, MultiIndex, SpaceTimePolynomial};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrefftzError {
    #[error("basis index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },
}

/// `dim Û^p = C(p+d, d) + C(p−1+d, d)` for `p ≥ 1`; constants only for `p = 0`.
pub fn dim_scalar(p: u32, d: usize) -> usize {
    if p == 0 {
        1
    } else {
        (binomial(p + d as u32, d as u32) + binomial(p - 1 + d as u32, d as u32)) as usize
    }
}

/// Reduced fraction with i128 parts; plenty of headroom for degrees ≤ 9.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn new(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i128;
        let sign = if den < 0 { -1 } else { 1 };
        Self {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    fn add(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    fn mul_int(self, k: i128) -> Frac {
        Frac::new(self.num * k, self.den)
    }

    fn div_int(self, k: i128) -> Frac {
        Frac::new(self.num, self.den * k)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u128, b: u128) -> u128 {
    if a == 0 || b == 0 {
        return a.max(b);
    }
    a / gcd(a, b) * b
}

/// Run the recurrence from one monomial seed in exact arithmetic and return
/// the member with integer-valued coefficients rescaled by a power of two so
/// the max magnitude lies in (1/2, 1].
fn member_from_seed(d: usize, p: u32, seed_k: u32, seed_alpha: [u32; 3]) -> SpaceTimePolynomial {
    let mut table: BTreeMap<MultiIndex, Frac> = BTreeMap::new();
    table.insert(MultiIndex::new(seed_k, seed_alpha), Frac::new(1, 1));
    for k in 2..=p {
        if (k % 2) != (seed_k % 2) {
            continue;
        }
        for alpha in spatial_indices_up_to(d, p - k) {
            let mut acc = Frac::new(0, 1);
            for m in 0..d {
                let mut upper = alpha;
                upper[m] += 2;
                if let Some(&prev) = table.get(&MultiIndex::new(k - 2, upper)) {
                    acc = acc.add(prev.mul_int(((alpha[m] + 2) * (alpha[m] + 1)) as i128));
                }
            }
            if acc.num != 0 {
                table.insert(
                    MultiIndex::new(k, alpha),
                    acc.div_int((k * (k - 1)) as i128),
                );
            }
        }
    }
    // clear denominators, then normalize by a power of two
    let mut denom_lcm: u128 = 1;
    for f in table.values() {
        denom_lcm = lcm(denom_lcm, f.den.unsigned_abs());
    }
    let ints: Vec<(MultiIndex, i128)> = table
        .iter()
        .map(|(idx, f)| (*idx, f.num * (denom_lcm as i128 / f.den)))
        .collect();
    let max_abs = ints.iter().map(|(_, v)| v.unsigned_abs()).max().unwrap_or(1);
    let shift = 128 - max_abs.leading_zeros() as i32; // 2^shift >= max_abs, within factor 2
    let scale = 2.0_f64.powi(-shift);
    SpaceTimePolynomial::from_terms(
        d,
        ints.into_iter().map(|(idx, v)| (idx, v as f64 * scale)),
    )
}

/// The scalar Trefftz space `Û^p` with members indexed by their seeds:
/// first the `k = 0` monomial seeds of degree ≤ p (graded lexicographic),
/// then the `k = 1` seeds of degree ≤ p−1.
#[derive(Debug, Clone)]
pub struct ScalarTrefftzSpace {
    pub d: usize,
    pub p: u32,
    pub c: f64,
    pub members: Vec<SpaceTimePolynomial>,
}

impl ScalarTrefftzSpace {
    /// Wave residual `−Δ̂U + c⁻²U_tt`, exactly zero (empty polynomial) for
    /// every member when `c = 1`.
    pub fn wave_residual(&self, u: &SpaceTimePolynomial) -> SpaceTimePolynomial {
        let mut lap = SpaceTimePolynomial::zero(self.d);
        for m in 0..self.d {
            lap = lap.add(&u.derivative(Axis::Spatial(m)).derivative(Axis::Spatial(m)));
        }
        let utt = u.derivative(Axis::Time).derivative(Axis::Time);
        utt.scale(1.0 / (self.c * self.c)).add(&lap.scale(-1.0))
    }
}

/// Build `Û^p` for wave speed `c`. The recurrence and exactness guarantees
/// are for `c = 1` (the solver always works in local units where `c = 1`);
/// other speeds rescale the even-`k` chain by `c²` per step.
pub fn build_scalar_space(p: u32, d: usize, c: f64) -> ScalarTrefftzSpace {
    assert!((1..=3).contains(&d));
    let mut members = Vec::new();
    for alpha in spatial_indices_up_to(d, p) {
        members.push(member_from_seed(d, p, 0, alpha));
    }
    if p >= 1 {
        for alpha in spatial_indices_up_to(d, p - 1) {
            members.push(member_from_seed(d, p, 1, alpha));
        }
    }
    if c != 1.0 {
        // rescale t-degree: U(x̂, ct) solves the c-equation when U solves c=1
        members = members
            .iter()
            .map(|u| {
                SpaceTimePolynomial::from_terms(
                    d,
                    u.terms().map(|(idx, &v)| (*idx, v * c.powi(idx.k as i32))),
                )
            })
            .collect();
    }
    ScalarTrefftzSpace { d, p, c, members }
}

/// One first-order pair `(w, τ)` stored in local (hat) coordinates.
#[derive(Debug, Clone)]
pub struct TrefftzPair {
    pub w: SpaceTimePolynomial,
    pub tau: Vec<SpaceTimePolynomial>,
}

impl TrefftzPair {
    /// Local residuals `(∇w + c ∂ₜτ, c ∇·τ + ∂ₜw)`; both identically zero,
    /// coefficient-exactly when `c = 1`.
    pub fn residuals(&self, c: f64) -> (Vec<SpaceTimePolynomial>, SpaceTimePolynomial) {
        let d = self.w.dim();
        let first: Vec<SpaceTimePolynomial> = (0..d)
            .map(|i| {
                self.w
                    .derivative(Axis::Spatial(i))
                    .add(&self.tau[i].derivative(Axis::Time).scale(c))
            })
            .collect();
        let mut div = SpaceTimePolynomial::zero(d);
        for i in 0..d {
            div = div.add(&self.tau[i].derivative(Axis::Spatial(i)));
        }
        let second = div.scale(c).add(&self.w.derivative(Axis::Time));
        (first, second)
    }
}

/// Where an element's basis lives inside hat space: polynomials are taken in
/// `ξ = (x̂ − x̂_c)/s`, `θ = c (t − t_c)/s`.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub center_hat: Vec3,
    pub t_center: f64,
    pub scale: f64,
}

impl LocalFrame {
    pub fn unit() -> Self {
        Self {
            center_hat: [0.0; 3],
            t_center: 0.0,
            scale: 1.0,
        }
    }
}

/// First-order Trefftz basis `Ŵ^p` with its owning tensor and local frame.
///
/// Pairs are `(∂ₜb̂, −∇̂b̂)` over the non-constant members of `Û^{p+1}`,
/// jointly rescaled per pair by a power of two. The physical pair at `(x, t)`
/// is `(w, Pᵀτ̂)` evaluated at `x̂ = Sx` in the local frame.
#[derive(Debug, Clone)]
pub struct TrefftzBasis {
    pub d: usize,
    pub p: u32,
    pub c: f64,
    pub pairs: Arc<Vec<TrefftzPair>>,
    pub tensor: Arc<AnisotropyTensor>,
    pub frame: LocalFrame,
}

pub fn build_first_order_basis(
    p: u32,
    d: usize,
    c: f64,
    tensor: Arc<AnisotropyTensor>,
) -> TrefftzBasis {
    let scalar = build_scalar_space(p + 1, d, 1.0);
    let mut pairs = Vec::new();
    for b in &scalar.members {
        if b.degree() == 0 {
            continue; // constants contribute nothing
        }
        let w = b.derivative(Axis::Time);
        let tau: Vec<SpaceTimePolynomial> = (0..d)
            .map(|i| b.derivative(Axis::Spatial(i)).scale(-1.0))
            .collect();
        // joint power-of-two rescale so the max coefficient is in (1/2, 1]
        let mut max_abs = w.terms().fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
        for t in &tau {
            max_abs = t.terms().fold(max_abs, |m, (_, v)| m.max(v.abs()));
        }
        let shift = if max_abs > 0.0 {
            max_abs.log2().ceil() as i32
        } else {
            0
        };
        let s = 2.0_f64.powi(-shift);
        pairs.push(TrefftzPair {
            w: w.scale(s),
            tau: tau.iter().map(|t| t.scale(s)).collect(),
        });
    }
    TrefftzBasis {
        d,
        p,
        c,
        pairs: Arc::new(pairs),
        tensor,
        frame: LocalFrame::unit(),
    }
}

impl TrefftzBasis {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn with_frame(&self, frame: LocalFrame) -> TrefftzBasis {
        TrefftzBasis {
            frame,
            pairs: Arc::clone(&self.pairs),
            tensor: Arc::clone(&self.tensor),
            ..*self
        }
    }

    fn to_local(&self, x_hat: &Vec3, t: f64) -> (Vec3, f64) {
        let mut xi = [0.0; 3];
        for i in 0..self.d {
            xi[i] = (x_hat[i] - self.frame.center_hat[i]) / self.frame.scale;
        }
        let theta = self.c * (t - self.frame.t_center) / self.frame.scale;
        (xi, theta)
    }

    /// Hat-frame pair value `(ŵ, τ̂)` at a hat point; the common factor
    /// `c/s` of the chain rule is dropped (it rescales the basis only).
    pub fn evaluate_hat(&self, j: usize, x_hat: &Vec3, t: f64) -> Result<(f64, Vec3), TrefftzError> {
        let pair = self.pairs.get(j).ok_or(TrefftzError::IndexOutOfRange {
            index: j,
            count: self.pairs.len(),
        })?;
        let (xi, theta) = self.to_local(x_hat, t);
        let w = pair.w.evaluate_unchecked(&xi[..self.d], theta);
        let mut tau = [0.0; 3];
        for i in 0..self.d {
            tau[i] = pair.tau[i].evaluate_unchecked(&xi[..self.d], theta);
        }
        Ok((w, tau))
    }

    /// Physical pair value `(w, τ) = (ŵ, Pᵀτ̂)` at a physical point.
    pub fn evaluate_physical(&self, j: usize, x: &Vec3, t: f64) -> Result<(f64, Vec3), TrefftzError> {
        let x_hat = self.tensor.to_hat(x);
        let (w, tau_hat) = self.evaluate_hat(j, &x_hat, t)?;
        let pt = mat_transpose(self.d, &self.tensor.p);
        Ok((w, mat_vec(self.d, &pt, &tau_hat)))
    }

    /// Tabulate all pairs at local points, physical field frame:
    /// (w, Pᵀτ̂) per (pair, point), flattened pair-major.
    pub fn tabulate_local(&self, pts: &[(Vec3, f64)]) -> Vec<(f64, Vec3)> {
        let pt = mat_transpose(self.d, &self.tensor.p);
        let mut out = Vec::with_capacity(self.pairs.len() * pts.len());
        for pair in self.pairs.iter() {
            for (xi, theta) in pts {
                let w = pair.w.evaluate_unchecked(&xi[..self.d], *theta);
                let mut tau = [0.0; 3];
                for i in 0..self.d {
                    tau[i] = pair.tau[i].evaluate_unchecked(&xi[..self.d], *theta);
                }
                out.push((w, mat_vec(self.d, &pt, &tau)));
            }
        }
        out
    }
}
