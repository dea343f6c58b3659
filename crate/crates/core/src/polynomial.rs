//! Multivariate space-time polynomials over multi-indices.
//!
//! A term is `c · t^k · x₁^α₁ ⋯ x_d^α_d`, stored in a sorted map keyed by the
//! multi-index `(k, α)`. Zero coefficients are pruned, so equality of
//! polynomials is equality of the stored maps. Values are immutable once
//! built; all operations return new polynomials.

use std::collections::BTreeMap;
use thiserror::Error;

/// Total-degree cap, bounds memory in products and compositions.
pub const DEGREE_CAP: u32 = 32;

#[derive(Debug, Error)]
pub enum PolynomialError {
    #[error("dimension mismatch: polynomial has d={expected}, argument has d={got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `(k, α)` with `k` the time exponent and `α` the spatial exponents
/// (entries beyond the spatial dimension stay zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultiIndex {
    pub k: u32,
    pub alpha: [u32; 3],
}

impl MultiIndex {
    pub fn new(k: u32, alpha: [u32; 3]) -> Self {
        Self { k, alpha }
    }

    pub fn total_degree(&self) -> u32 {
        self.k + self.alpha.iter().sum::<u32>()
    }
}

/// Axis selector for differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Time,
    Spatial(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePolynomial {
    d: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl SpaceTimePolynomial {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: f64) -> Self {
        let mut p = Self::zero(d);
        if c != 0.0 {
            p.terms.insert(MultiIndex::new(0, [0; 3]), c);
        }
        p
    }

    /// Single term `c · t^k · x^α`.
    pub fn monomial(d: usize, idx: MultiIndex, c: f64) -> Self {
        assert!(idx.total_degree() <= DEGREE_CAP, "degree cap exceeded");
        let mut p = Self::zero(d);
        if c != 0.0 {
            p.terms.insert(idx, c);
        }
        p
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        let mut p = Self::zero(d);
        for (idx, c) in terms {
            assert!(idx.total_degree() <= DEGREE_CAP, "degree cap exceeded");
            if c != 0.0 {
                *p.terms.entry(idx).or_insert(0.0) += c;
            }
        }
        p.prune();
        p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Max total degree over the support; zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(MultiIndex::total_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> f64 {
        self.terms.get(idx).copied().unwrap_or(0.0)
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<f64, PolynomialError> {
        if x.len() != self.d {
            return Err(PolynomialError::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(self.evaluate_unchecked(x, t))
    }

    /// Evaluation without the dimension check, for hot loops. The slice must
    /// have at least `d` entries.
    pub fn evaluate_unchecked(&self, x: &[f64], t: f64) -> f64 {
        let mut sum = 0.0;
        for (idx, &c) in &self.terms {
            let mut v = c * powu(t, idx.k);
            for (m, &a) in idx.alpha.iter().take(self.d).enumerate() {
                if a > 0 {
                    v *= powu(x[m], a);
                }
            }
            sum += v;
        }
        sum
    }

    /// Exact coefficient-level differentiation.
    pub fn derivative(&self, axis: Axis) -> SpaceTimePolynomial {
        let mut out = Self::zero(self.d);
        for (idx, &c) in &self.terms {
            match axis {
                Axis::Time => {
                    if idx.k > 0 {
                        let ni = MultiIndex::new(idx.k - 1, idx.alpha);
                        *out.terms.entry(ni).or_insert(0.0) += c * idx.k as f64;
                    }
                }
                Axis::Spatial(m) => {
                    debug_assert!(m < self.d);
                    if idx.alpha[m] > 0 {
                        let mut alpha = idx.alpha;
                       alpha[m] -= 1;
                        let ni = MultiIndex::new(idx.k, alpha);
                        *out.terms.entry(ni).or_insert(0.0) += c * idx.alpha[m] as f64;
                    }
                }
            }
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &SpaceTimePolynomial) -> SpaceTimePolynomial {
        debug_assert_eq!(self.d, other.d);
        let mut out = self.clone();
        for (idx, &c) in &other.terms {
            *out.terms.entry(*idx).or_insert(0.0) += c;
        }
        out.prune();
        out
    }

    pub fn scale(&self, s: f64) -> SpaceTimePolynomial {
        let mut out = Self::zero(self.d);
        if s != 0.0 {
            for (idx, &c) in &self.terms {
                out.terms.insert(*idx, c * s);
            }
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &SpaceTimePolynomial) -> SpaceTimePolynomial {
        debug_assert_eq!(self.d, other.d);
        let mut out = Self::zero(self.d);
        for (ia, &ca) in &self.terms {
            for (ib, &cb) in &other.terms {
                let mut alpha = [0u32; 3];
                for m in 0..3 {
                    alpha[m] = ia.alpha[m] + ib.alpha[m];
                }
                let idx = MultiIndex::new(ia.k + ib.k, alpha);
                assert!(idx.total_degree() <= DEGREE_CAP, "degree cap exceeded");
                *out.terms.entry(idx).or_insert(0.0) += ca * cb;
            }
        }
        out.prune();
        out
    }

    /// `q(x, t) = p(M x, t)` with `M` a d×d matrix in row-major order,
    /// expanded exactly by multinomial products.
    pub fn compose_linear(&self, m: &[f64]) -> Result<SpaceTimePolynomial, PolynomialError> {
        if m.len() != self.d * self.d {
            return Err(PolynomialError::DimensionMismatch {
                expected: self.d * self.d,
                got: m.len(),
            });
        }
        // rows of M as linear polynomials in x
        let rows: Vec<SpaceTimePolynomial> = (0..self.d)
            .map(|i| {
                SpaceTimePolynomial::from_terms(
                    self.d,
                    (0..self.d).map(|j| {
                        let mut alpha = [0u32; 3];
                        alpha[j] = 1;
                        (MultiIndex::new(0, alpha), m[i * self.d + j])
                    }),
                )
            })
            .collect();
        let mut out = Self::zero(self.d);
        for (idx, &c) in &self.terms {
            let mut term = Self::monomial(self.d, MultiIndex::new(idx.k, [0; 3]), c);
            for (i, row) in rows.iter().enumerate() {
                for _ in 0..idx.alpha[i] {
                    term = term.mul(row);
                }
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// `q(x, t) = p((x - x₀)/s, (t - t₀)/s_t)`, an affine per-axis rescaling.
    /// Expanded exactly; used to re-express local polynomials globally.
    pub fn shift_scale(&self, x0: &[f64], sx: &[f64], t0: f64, st: f64) -> SpaceTimePolynomial {
        debug_assert_eq!(x0.len(), self.d);
        debug_assert_eq!(sx.len(), self.d);
        let axes: Vec<SpaceTimePolynomial> = (0..self.d)
            .map(|i| {
                let mut alpha = [0u32; 3];
                alpha[i] = 1;
                SpaceTimePolynomial::from_terms(
                    self.d,
                    [
                        (MultiIndex::new(0, alpha), 1.0 / sx[i]),
                        (MultiIndex::new(0, [0; 3]), -x0[i] / sx[i]),
                    ],
                )
            })
            .collect();
        let time_axis = SpaceTimePolynomial::from_terms(
            self.d,
            [
                (MultiIndex::new(1, [0; 3]), 1.0 / st),
                (MultiIndex::new(0, [0; 3]), -t0 / st),
            ],
        );
        let mut out = Self::zero(self.d);
        for (idx, &c) in &self.terms {
            let mut term = Self::constant(self.d, c);
            for _ in 0..idx.k {
                term = term.mul(&time_axis);
            }
            for (i, ax) in axes.iter().enumerate() {
                for _ in 0..idx.alpha[i] {
                    term = term.mul(ax);
                }
            }
            out = out.add(&term);
        }
        out
    }
}

#[inline]
fn powu(x: f64, n: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

/// All spatial multi-indices `α` with `|α| ≤ p`, graded lexicographic.
pub fn spatial_indices_up_to(d: usize, p: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for total in 0..=p {
        let mut idx = [0u32; 3];
        gen_fixed_total(d, total, 0, &mut idx, &mut out);
    }
    out
}

fn gen_fixed_total(d: usize, remaining: u32, axis: usize, idx: &mut [u32; 3], out: &mut Vec<[u32; 3]>) {
    if axis == d - 1 {
        idx[axis] = remaining;
        out.push(*idx);
        idx[axis] = 0;
        return;
    }
    for v in (0..=remaining).rev() {
        idx[axis] = v;
        gen_fixed_total(d, remaining - v, axis + 1, idx, out);
        idx[axis] = 0;
    }
}

/// All `(k, α)` with every exponent ≤ q: the tensor-product space `Q_q`.
pub fn tensor_indices(d: usize, q: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut alpha = [0u32; 3];
    fn rec(d: usize, q: u32, axis: usize, alpha: &mut [u32; 3], k: u32, out: &mut Vec<MultiIndex>) {
        if axis == d {
            out.push(MultiIndex::new(k, *alpha));
            return;
        }
        for v in 0..=q {
            alpha[axis] = v;
            rec(d, q, axis + 1, alpha, k, out);
            alpha[axis] = 0;
        }
    }
    for k in 0..=q {
        rec(d, q, 0, &mut alpha, k, &mut out);
    }
    out
}

/// Binomial coefficient with the convention `C(n, k) = 0` for `k > n`.
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}
