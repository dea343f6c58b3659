//! Gauss–Legendre rules on reference boxes and mapped rules on mesh
//! entities, with volume factors from determinants and facet factors from
//! Gram determinants of the mapped spanning vectors.

use crate::anisotropy::Vec3;
use crate::mesh::{EntityRef, FaceClass, SpaceTimeMesh};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("unsupported Gauss order {0}; expected 1..=32")]
    UnsupportedOrder(usize),
    #[error("unknown entity {0:?}")]
    UnknownEntity(EntityRef),
}

/// Gauss–Legendre nodes and weights on [0, 1]; exact for degree ≤ 2n−1.
pub fn gauss_1d(n: usize) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    if n == 0 || n > 32 {
        return Err(QuadratureError::UnsupportedOrder(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Newton on P_n over [-1, 1], symmetric pairs
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pprev = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pprev) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    // map to [0, 1]
    for i in 0..n {
        nodes[i] = 0.5 * (nodes[i] + 1.0);
        weights[i] *= 0.5;
    }
    Ok((nodes, weights))
}

/// Tensor-product reference rule on `[0,1]^m` with per-axis orders.
pub struct RefRule {
    pub dims: usize,
    /// reference coordinates, one `[f64; 4]` per point (unused axes zero)
    pub points: Vec<[f64; 4]>,
    /// weights summing to 1
    pub weights: Vec<f64>,
}

pub fn tensor_gauss(orders: &[usize]) -> Result<RefRule, QuadratureError> {
    let m = orders.len();
    assert!(m <= 4);
    let axes: Vec<(Vec<f64>, Vec<f64>)> = orders
        .iter()
        .map(|&n| gauss_1d(n))
        .collect::<Result<_, _>>()?;
    let mut points = vec![[0.0; 4]];
    let mut weights = vec![1.0];
    for (ax, (nodes, ws)) in axes.iter().enumerate() {
        let mut np = Vec::with_capacity(points.len() * nodes.len());
        let mut nw = Vec::with_capacity(points.len() * nodes.len());
        for (p, w) in points.iter().zip(weights.iter()) {
            for (x, wx) in nodes.iter().zip(ws.iter()) {
                let mut q = *p;
                q[ax] = *x;
                np.push(q);
                nw.push(w * wx);
            }
        }
        points = np;
        weights = nw;
    }
    Ok(RefRule {
        dims: m,
        points,
        weights,
    })
}

/// A rule mapped onto one mesh entity.
///
/// Points are carried in physical and hat coordinates for data evaluation,
/// and as offsets from the adjacent element centers in the mesh's native
/// frame: basis tabulation goes through these offsets only, so entities at
/// the same relative position produce bit-identical matrix entries.
pub struct MappedRule {
    pub entity: EntityRef,
    /// physical (x, t)
    pub pts_phys: Vec<(Vec3, f64)>,
    /// hat (x̂, t)
    pub pts_hat: Vec<(Vec3, f64)>,
    /// weights including the physical measure; they sum to it
    pub w_phys: Vec<f64>,
    /// weights including the hat measure
    pub w_hat: Vec<f64>,
    /// native-frame offsets (3 space + 1 time) from the first adjacent
    /// element's center
    pub rel_minus: Vec<[f64; 4]>,
    /// offsets from the second adjacent element's center, when present
    pub rel_plus: Option<Vec<[f64; 4]>>,
}

impl MappedRule {
    pub fn len(&self) -> usize {
        self.w_phys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_phys.is_empty()
    }
}

/// Facet measure scale of a linear map via the Gram determinant of the
/// mapped spanning vectors (unit vectors along every axis except `axis`).
fn gram_facet_scale(d: usize, map: &dyn Fn(&Vec3) -> Vec3, axis: usize) -> f64 {
    if d == 1 {
        return 1.0; // 0-dimensional facet: a point
    }
    let mut vs: Vec<Vec3> = Vec::new();
    for i in 0..d {
        if i == axis {
            continue;
        }
        let mut e = [0.0; 3];
        e[i] = 1.0;
        vs.push(map(&e));
    }
    let m = vs.len();
    let mut g = [[0.0; 2]; 2];
    for i in 0..m {
        for j in 0..m {
            g[i][j] = (0..d).map(|k| vs[i][k] * vs[j][k]).sum();
        }
    }
    let det = match m {
        1 => g[0][0],
        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
        _ => unreachable!(),
    };
    det.sqrt()
}

/// Build the tensor-product Gauss rule for a mesh entity with `order` points
/// per axis, carrying correct physical and hat measures.
pub fn rule_for(
    mesh: &SpaceTimeMesh,
    entity: EntityRef,
    order: usize,
) -> Result<MappedRule, QuadratureError> {
    let d = mesh.d;
    let to_phys = |x: &Vec3| mesh.native_to_phys(x);
    let to_hat = |x: &Vec3| mesh.native_to_hat(x);
    let det_phys = mesh.native_to_phys_det().abs();
    let det_hat = mesh.native_to_hat_det().abs();
    match entity {
        EntityRef::Element(id) => {
            let el = mesh
                .elements
                .get(id)
                .ok_or(QuadratureError::UnknownEntity(entity))?;
            let rule = tensor_gauss(&vec![order; d + 1])?;
            let h_t = el.t1 - el.t0;
            let mut widths = [0.0; 3];
            let mut vol_native = h_t;
            for i in 0..d {
                widths[i] = el.hi[i] - el.lo[i];
                vol_native *= widths[i];
            }
            let n = rule.points.len();
            let mut out = MappedRule {
                entity,
                pts_phys: Vec::with_capacity(n),
                pts_hat: Vec::with_capacity(n),
                w_phys: Vec::with_capacity(n),
                w_hat: Vec::with_capacity(n),
                rel_minus: Vec::with_capacity(n),
                rel_plus: None,
            };
            for (p, w) in rule.points.iter().zip(rule.weights.iter()) {
                let mut xn = [0.0; 3];
                let mut rel = [0.0; 4];
                for i in 0..d {
                    xn[i] = el.lo[i] + p[i] * widths[i];
                    rel[i] = (p[i] - 0.5) * widths[i];
                }
                let tq = el.t0 + p[d] * h_t;
                rel[3] = (p[d] - 0.5) * h_t;
                out.pts_phys.push((to_phys(&xn), tq));
                out.pts_hat.push((to_hat(&xn), tq));
                out.w_phys.push(w * vol_native * det_phys);
                out.w_hat.push(w * vol_native * det_hat);
                out.rel_minus.push(rel);
            }
            Ok(out)
        }
        EntityRef::Face(id) => {
            let face = mesh
                .faces
                .get(id)
                .ok_or(QuadratureError::UnknownEntity(entity))?;
            match face.class {
                FaceClass::SpaceLikeInternal | FaceClass::InitialF0 | FaceClass::FinalFT => {
                    // d-dimensional spatial box at a fixed time
                    let rule = tensor_gauss(&vec![order; d])?;
                    let mut widths = [0.0; 3];
                    let mut area_native = 1.0;
                    for i in 0..d {
                        widths[i] = face.spatial_hi[i] - face.spatial_lo[i];
                        area_native *= widths[i];
                    }
                    let el_minus = &mesh.elements[face.minus];
                    let h_minus = el_minus.t1 - el_minus.t0;
                    let n = rule.points.len();
                    let mut out = MappedRule {
                        entity,
                        pts_phys: Vec::with_capacity(n),
                        pts_hat: Vec::with_capacity(n),
                        w_phys: Vec::with_capacity(n),
                        w_hat: Vec::with_capacity(n),
                        rel_minus: Vec::with_capacity(n),
                        rel_plus: face.plus.map(|_| Vec::with_capacity(n)),
                    };
                    // the minus element sits below a top face, above F0
                    let rel_t_minus = match face.class {
                        FaceClass::InitialF0 => -0.5 * h_minus,
                        _ => 0.5 * h_minus,
                    };
                    for (p, w) in rule.points.iter().zip(rule.weights.iter()) {
                        let mut xn = [0.0; 3];
                        let mut rel = [0.0; 4];
                        for i in 0..d {
                            xn[i] = face.spatial_lo[i] + p[i] * widths[i];
                            rel[i] = (p[i] - 0.5) * widths[i];
                        }
                        rel[3] = rel_t_minus;
                        out.pts_phys.push((to_phys(&xn), face.t0));
                        out.pts_hat.push((to_hat(&xn), face.t0));
                        out.w_phys.push(w * area_native * det_phys);
                        out.w_hat.push(w * area_native * det_hat);
                        out.rel_minus.push(rel);
                        if let Some(rp) = out.rel_plus.as_mut() {
                            let el_plus = &mesh.elements[face.plus.unwrap()];
                            let mut r = rel;
                            r[3] = -0.5 * (el_plus.t1 - el_plus.t0);
                            rp.push(r);
                        }
                    }
                    Ok(out)
                }
                FaceClass::TimeLikeInternal | FaceClass::DirichletFD | FaceClass::NeumannFN => {
                    // (d−1)-dimensional spatial facet × time interval
                    let axis = face.axis;
                    let mut orders = Vec::new();
                    let mut axes = Vec::new();
                    for i in 0..d {
                        if i != axis {
                            orders.push(order);
                            axes.push(i);
                        }
                    }
                    orders.push(order); // time axis last
                    let rule = tensor_gauss(&orders)?;
                    let h_t = face.t1 - face.t0;
                    let mut widths = [0.0; 3];
                    let mut facet_native = 1.0;
                    for &i in &axes {
                        widths[i] = face.spatial_hi[i] - face.spatial_lo[i];
                        facet_native *= widths[i];
                    }
                    let facet_phys = gram_facet_scale(d, &to_phys, axis);
                    let facet_hat = gram_facet_scale(d, &to_hat, axis);
                    let n = rule.points.len();
                    let mut out = MappedRule {
                        entity,
                        pts_phys: Vec::with_capacity(n),
                        pts_hat: Vec::with_capacity(n),
                        w_phys: Vec::with_capacity(n),
                        w_hat: Vec::with_capacity(n),
                        rel_minus: Vec::with_capacity(n),
                        rel_plus: face.plus.map(|_| Vec::with_capacity(n)),
                    };
                    let el_minus = &mesh.elements[face.minus];
                    // minus = left of the plane, or the sole adjacent element
                    let rel_a_minus = if face.plus.is_some() || face.side_hi {
                        0.5 * (el_minus.hi[axis] - el_minus.lo[axis])
                    } else {
                        -0.5 * (el_minus.hi[axis] - el_minus.lo[axis])
                    };
                    for (p, w) in rule.points.iter().zip(rule.weights.iter()) {
                        let mut xn = [0.0; 3];
                        let mut rel = [0.0; 4];
                        xn[axis] = face.spatial_lo[axis];
                        rel[axis] = rel_a_minus;
                        for (k, &i) in axes.iter().enumerate() {
                            xn[i] = face.spatial_lo[i] + p[k] * widths[i];
                            rel[i] = (p[k] - 0.5) * widths[i];
                        }
                        let tq = face.t0 + p[axes.len()] * h_t;
                        rel[3] = (p[axes.len()] - 0.5) * h_t;
                        out.pts_phys.push((to_phys(&xn), tq));
                        out.pts_hat.push((to_hat(&xn), tq));
                        out.w_phys.push(w * facet_native * h_t * facet_phys);
                        out.w_hat.push(w * facet_native * h_t * facet_hat);
                        out.rel_minus.push(rel);
                        if let Some(rp) = out.rel_plus.as_mut() {
                            let el_plus = &mesh.elements[face.plus.unwrap()];
                            let mut r = rel;
                            r[axis] = -0.5 * (el_plus.hi[axis] - el_plus.lo[axis]);
                            rp.push(r);
                        }
                    }
                    Ok(out)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_low_orders() {
        let (n1, w1) = gauss_1d(1).unwrap();
        assert!((n1[0] - 0.5).abs() < 1e-15);
        assert!((w1[0] - 1.0).abs() < 1e-15);
        let (n2, w2) = gauss_1d(2).unwrap();
        let off = 1.0 / (2.0 * 3.0_f64.sqrt());
        assert!((n2[0] - (0.5 - off)).abs() < 1e-14);
        assert!((n2[1] - (0.5 + off)).abs() < 1e-14);
        assert!((w2[0] - 0.5).abs() < 1e-14 && (w2[1] - 0.5).abs() < 1e-14);
        assert!(matches!(
            gauss_1d(0),
            Err(QuadratureError::UnsupportedOrder(0))
        ));
        assert!(matches!(
            gauss_1d(33),
            Err(QuadratureError::UnsupportedOrder(33))
        ));
    }

    #[test]
    fn degree_exactness() {
        // ∫₀¹ x³ dx = 1/4 exactly with n = 2
        let (n2, w2) = gauss_1d(2).unwrap();
        let s: f64 = n2.iter().zip(&w2).map(|(x, w)| w * x * x * x).sum();
        assert!((s - 0.25).abs() < 1e-15);
        // every n up to 12: exact for degree 2n−1
        for n in 1..=12usize {
            let (xs, ws) = gauss_1d(n).unwrap();
            let deg = 2 * n - 1;
            let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((s - exact).abs() < 1e-14, "n={n}: {s} vs {exact}");
        }
    }

    #[test]
    fn unknown_entity_is_reported() {
        use crate::mesh::{generate, BoundaryCondition, BoundarySpec, DomainSpec, MeshFrame};
        use std::sync::Arc;
        let tensor = Arc::new(crate::anisotropy::AnisotropyTensor::identity(1));
        let mesh = generate(
            &DomainSpec::unit_box(1, MeshFrame::Physical),
            tensor,
            0,
            1,
            BoundarySpec::all(1, BoundaryCondition::Dirichlet),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            rule_for(&mesh, EntityRef::Face(999), 2),
            Err(QuadratureError::UnknownEntity(_))
        ));
        assert!(matches!(
            rule_for(&mesh, EntityRef::Element(999), 2),
            Err(QuadratureError::UnknownEntity(_))
        ));
    }

    #[test]
    fn tensor_rule_weights_sum_to_one() {
        let r = tensor_gauss(&[3, 2, 4]).unwrap();
        assert_eq!(r.points.len(), 24);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mapped_weights_reproduce_measures() {
        use crate::anisotropy::{decompose, random_spd};
        use crate::mesh::{generate, BoundaryCondition, BoundarySpec, DomainSpec, MeshFrame};
        use rand::SeedableRng;
        use std::sync::Arc;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for frame in [MeshFrame::Hat, MeshFrame::Physical] {
            for d in 1..=3usize {
                let a = random_spd(&mut rng, d, 25.0);
                let tensor = Arc::new(decompose(d, &a).unwrap());
                let mesh = generate(
                    &DomainSpec::unit_box(d, frame),
                    tensor,
                    1,
                    2,
                    BoundarySpec::all(d, BoundaryCondition::Neumann),
                    1.0,
                )
                .unwrap();
                for (id, f) in mesh.faces.iter().enumerate() {
                    let r = rule_for(&mesh, EntityRef::Face(id), 3).unwrap();
                    let sp: f64 = r.w_phys.iter().sum();
                    let sh: f64 = r.w_hat.iter().sum();
                    assert!(
                        (sp - f.measure_phys).abs() <= 1e-12 * f.measure_phys.max(1.0),
                        "phys measure mismatch d={d}: {sp} vs {}",
                        f.measure_phys
                    );
                    assert!(
                        (sh - f.measure_hat).abs() <= 1e-12 * f.measure_hat.max(1.0),
                        "hat measure mismatch d={d}"
                    );
                }
                // whole-cylinder volume through element rules
                let mut vol = 0.0;
                for id in 0..mesh.elements.len() {
                    let r = rule_for(&mesh, EntityRef::Element(id), 2).unwrap();
                    vol += r.w_phys.iter().sum::<f64>();
                }
                let expected = mesh.native_to_phys_det().abs();
                assert!((vol - expected).abs() <= 1e-12 * expected.max(1.0));
            }
        }
    }

    #[test]
    fn element_rule_matches_dense_oracle() {
        use crate::mesh::{generate, BoundaryCondition, BoundarySpec, DomainSpec, MeshFrame};
        use crate::polynomial::{spatial_indices_up_to, MultiIndex, SpaceTimePolynomial};
        use rand::{Rng, SeedableRng};
        use std::sync::Arc;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let tensor = Arc::new(crate::anisotropy::AnisotropyTensor::identity(2));
        let mesh = generate(
            &DomainSpec::unit_box(2, MeshFrame::Physical),
            tensor,
            1,
            2,
            BoundarySpec::all(2, BoundaryCondition::Dirichlet),
            1.0,
        )
        .unwrap();
        let n = 3usize;
        // random polynomial of degree 2n−1 integrates exactly with n points
        let deg = 2 * n as u32 - 1;
        let mut terms = Vec::new();
        for k in 0..=deg {
            for alpha in spatial_indices_up_to(2, deg - k) {
                if alpha.iter().all(|&a| a <= deg) {
                    terms.push((MultiIndex::new(k, alpha), rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let p = SpaceTimePolynomial::from_terms(2, terms);
        let coarse = rule_for(&mesh, EntityRef::Element(0), n).unwrap();
        let dense = rule_for(&mesh, EntityRef::Element(0), (10 * n).min(30)).unwrap();
        let int = |r: &MappedRule| -> f64 {
            r.pts_phys
                .iter()
                .zip(&r.w_phys)
                .map(|((x, t), w)| w * p.evaluate_unchecked(&x[..2], *t))
                .sum()
        };
        let ic = int(&coarse);
        let id = int(&dense);
        assert!((ic - id).abs() <= 1e-11 * (1.0 + id.abs()), "{ic} vs {id}");
    }
}
