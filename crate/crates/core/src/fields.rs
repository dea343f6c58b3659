//! Field abstractions shared by assembly and error measurement.
//!
//! A [`TraceField`] is anything that can report the physical pair `(w, τ)`
//! seen from inside a given element: discrete solutions, exact solutions,
//! and their differences. DG forms and seminorms only ever touch fields
//! through element-sided traces.

use crate::anisotropy::Vec3;

/// Element-sided evaluation of a physical field pair.
pub trait TraceField {
    fn dim(&self) -> usize;
    /// `(w, τ)` at physical `(x, t)`, taking the limit from inside `elem`.
    fn eval(&self, elem: usize, x: &Vec3, t: f64) -> (f64, Vec3);
}

/// Pointwise difference `a − b`.
pub struct DiffField<'a> {
    pub a: &'a dyn TraceField,
    pub b: &'a dyn TraceField,
}

impl TraceField for DiffField<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn eval(&self, elem: usize, x: &Vec3, t: f64) -> (f64, Vec3) {
        let (wa, ta) = self.a.eval(elem, x, t);
        let (wb, tb) = self.b.eval(elem, x, t);
        let mut tau = [0.0; 3];
        for i in 0..3 {
            tau[i] = ta[i] - tb[i];
        }
        (wa - wb, tau)
    }
}

/// Pointwise sum of several fields.
pub struct SumField<'a> {
    pub parts: Vec<&'a dyn TraceField>,
}

impl TraceField for SumField<'_> {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn eval(&self, elem: usize, x: &Vec3, t: f64) -> (f64, Vec3) {
        let mut w = 0.0;
        let mut tau = [0.0; 3];
        for p in &self.parts {
            let (wp, tp) = p.eval(elem, x, t);
            w += wp;
            for i in 0..3 {
                tau[i] += tp[i];
            }
        }
        (w, tau)
    }
}

/// Which boundary data a case can supply.
#[derive(Debug, Clone, Copy)]
pub struct DataCapabilities {
    pub dirichlet: bool,
    pub neumann: bool,
}

/// Everything a manufactured case feeds into assembly and error
/// measurement: exact fields, initial data, boundary data, and the source.
pub trait WaveCase {
    fn dim(&self) -> usize;

    fn v_exact(&self, x: &Vec3, t: f64) -> f64;
    fn sigma_exact(&self, x: &Vec3, t: f64) -> Vec3;

    fn v0(&self, x: &Vec3) -> f64 {
        self.v_exact(x, 0.0)
    }

    fn sigma0(&self, x: &Vec3) -> Vec3 {
        self.sigma_exact(x, 0.0)
    }

    /// Dirichlet trace `v` on the boundary.
    fn g_d(&self, x: &Vec3, t: f64) -> f64 {
        self.v_exact(x, t)
    }

    /// Neumann datum `A^{1/2}σ·n` for outward unit normal `n`.
    fn g_n(&self, x: &Vec3, t: f64, n: &Vec3) -> f64;

    /// Volume source; zero for homogeneous cases.
    fn f(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }

    fn capabilities(&self) -> DataCapabilities {
        DataCapabilities {
            dirichlet: true,
            neumann: true,
        }
    }
}

/// View an exact case as a trace field (identical from every element).
pub struct ExactField<'a> {
    pub case: &'a dyn WaveCase,
}

impl TraceField for ExactField<'_> {
    fn dim(&self) -> usize {
        self.case.dim()
    }

    fn eval(&self, _elem: usize, x: &Vec3, t: f64) -> (f64, Vec3) {
        (self.case.v_exact(x, t), self.case.sigma_exact(x, t))
    }
}

/// The zero field.
pub struct ZeroField {
    pub d: usize,
}

impl TraceField for ZeroField {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, _elem: usize, _x: &Vec3, _t: f64) -> (f64, Vec3) {
        (0.0, [0.0; 3])
    }
}
