//! Tensor-product space-time meshes.
//!
//! The domain box is given either in physical or in hat coordinates (the
//! "native" frame); cells are axis-aligned boxes there and parallelotopes in
//! the other frame, per the mesh generation recipe: decompose the hat domain
//! uniformly and map back through `S⁻¹`, or the reverse for physical boxes.
//! The skeleton is classified exhaustively into space-like internal faces
//! (`n^x = 0`, `n^t > 0`), time-like internal faces (`n^t = 0`), the initial
//! and final slices, and Dirichlet/Neumann lateral boundary pieces.

use crate::anisotropy::{mat_det, mat_transpose, mat_vec, norm, AnisotropyTensor, Vec3};
use crate::trefftz_basis::LocalFrame;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid boundary spec: {0}")]
    InvalidBoundarySpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFrame {
    /// cells are axis-aligned boxes in physical coordinates
    Physical,
    /// cells are axis-aligned boxes in hat coordinates
    Hat,
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub d: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    pub frame: MeshFrame,
    pub t_end: f64,
}

impl DomainSpec {
    pub fn unit_box(d: usize, frame: MeshFrame) -> Self {
        let mut hi = [0.0; 3];
        for h in hi.iter_mut().take(d) {
            *h = 1.0;
        }
        Self {
            d,
            lo: [0.0; 3],
            hi,
            frame,
            t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Which condition each lateral boundary plane carries, per (axis, side).
#[derive(Debug, Clone)]
pub struct BoundarySpec {
    assign: [[Option<BoundaryCondition>; 2]; 3],
    pub d: usize,
}

impl BoundarySpec {
    pub fn all(d: usize, bc: BoundaryCondition) -> Self {
        let mut assign = [[None; 2]; 3];
        for a in assign.iter_mut().take(d) {
            a[0] = Some(bc);
            a[1] = Some(bc);
        }
        Self { assign, d }
    }

    /// Dirichlet on the `x₁ = lo, hi` planes, Neumann elsewhere.
    pub fn mixed_axis0_dirichlet(d: usize) -> Self {
        let mut s = Self::all(d, BoundaryCondition::Neumann);
        s.assign[0][0] = Some(BoundaryCondition::Dirichlet);
        s.assign[0][1] = Some(BoundaryCondition::Dirichlet);
        s
    }

    /// Explicit per-plane assignment; every plane of the `d`-box must be
    /// assigned exactly once.
    pub fn from_parts(
        d: usize,
        parts: &[(usize, bool, BoundaryCondition)],
    ) -> Result<Self, MeshError> {
        let mut assign = [[None; 2]; 3];
        for &(axis, side_hi, bc) in parts {
            if axis >= d {
                return Err(MeshError::InvalidBoundarySpec(format!(
                    "axis {axis} out of range for d={d}"
                )));
            }
            let slot = &mut assign[axis][side_hi as usize];
            if slot.is_some() {
                return Err(MeshError::InvalidBoundarySpec(format!(
                    "plane (axis {axis}, side_hi {side_hi}) assigned twice"
                )));
            }
            *slot = Some(bc);
        }
        for (axis, sides) in assign.iter().enumerate().take(d) {
            for (side, slot) in sides.iter().enumerate() {
                if slot.is_none() {
                    return Err(MeshError::InvalidBoundarySpec(format!(
                        "plane (axis {axis}, side {side}) not assigned"
                    )));
                }
            }
        }
        Ok(Self { assign, d })
    }

    pub fn condition(&self, axis: usize, side_hi: bool) -> BoundaryCondition {
        self.assign[axis][side_hi as usize].expect("validated at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceClass {
    SpaceLikeInternal,
    TimeLikeInternal,
    InitialF0,
    FinalFT,
    DirichletFD,
    NeumannFN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityRef {
    Element(usize),
    Face(usize),
}

#[derive(Debug, Clone)]
pub struct Element {
    pub cell: [usize; 3],
    pub slab: usize,
    /// native spatial box
    pub lo: Vec3,
    pub hi: Vec3,
    pub t0: f64,
    pub t1: f64,
    /// hat-coordinate local frame for Trefftz polynomials
    pub frame: LocalFrame,
}

#[derive(Debug, Clone)]
pub struct FaceRecord {
    pub class: FaceClass,
    /// earlier element for space-like faces, left element for time-like
    /// ones, the sole adjacent element on boundary pieces
    pub minus: usize,
    pub plus: Option<usize>,
    pub measure_phys: f64,
    pub measure_hat: f64,
    /// unit physical spatial normal; zero on space-like/F0/FT faces
    pub normal_phys: Vec3,
    /// unit hat spatial normal
    pub normal_hat: Vec3,
    /// temporal normal component: +1 space-like/FT, −1 on F0, 0 laterally
    pub n_t: f64,
    /// normal axis in native coordinates (time-like/boundary only)
    pub axis: usize,
    pub side_hi: bool,
    /// native spatial box of the face (degenerate along `axis` laterally)
    pub spatial_lo: Vec3,
    pub spatial_hi: Vec3,
    pub t0: f64,
    pub t1: f64,
}

/// Face ids a slab's assembly touches.
#[derive(Debug, Clone, Default)]
pub struct SlabFaces {
    /// time-like internal and lateral boundary faces inside the slab
    pub lateral: Vec<usize>,
    /// the space-like faces (or F^T) closing the slab at its top
    pub top: Vec<usize>,
    /// the space-like faces (or F⁰) below the slab
    pub bottom: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SpaceTimeMesh {
    pub d: usize,
    pub frame: MeshFrame,
    pub tensor: Arc<AnisotropyTensor>,
    pub c: f64,
    pub domain: DomainSpec,
    pub cells_per_axis: usize,
    pub n_cells: usize,
    pub n_slabs: usize,
    pub t_nodes: Vec<f64>,
    pub elements: Vec<Element>,
    pub faces: Vec<FaceRecord>,
    pub slab_faces: Vec<SlabFaces>,
    pub boundary: BoundarySpec,
    /// recorded ĥ_max/ĥ_min over hat spatial diameters and c·h_n
    pub quasi_uniformity: f64,
}

impl SpaceTimeMesh {
    pub fn native_to_phys(&self, x: &Vec3) -> Vec3 {
        match self.frame {
            MeshFrame::Physical => *x,
            MeshFrame::Hat => self.tensor.from_hat(x),
        }
    }

    pub fn native_to_hat(&self, x: &Vec3) -> Vec3 {
        match self.frame {
            MeshFrame::Physical => self.tensor.to_hat(x),
            MeshFrame::Hat => *x,
        }
    }

    pub fn native_to_phys_det(&self) -> f64 {
        match self.frame {
            MeshFrame::Physical => 1.0,
            MeshFrame::Hat => mat_det(self.d, &self.tensor.s_inv),
        }
    }

    pub fn native_to_hat_det(&self) -> f64 {
        match self.frame {
            MeshFrame::Physical => mat_det(self.d, &self.tensor.s),
            MeshFrame::Hat => 1.0,
        }
    }

    pub fn cell_rank(&self, cell: &[usize; 3]) -> usize {
        let n = self.cells_per_axis;
        cell[0] + n * (cell[1] + n * cell[2])
    }

    pub fn element_id(&self, slab: usize, cell_rank: usize) -> usize {
        slab * self.n_cells + cell_rank
    }

    /// Max space-time element diameter in hat coordinates (with `c·h_t` as
    /// the temporal extent).
    pub fn max_element_hat_diameter(&self) -> f64 {
        let d = self.d;
        let mut best = 0.0_f64;
        for el in &self.elements {
            let mut widths = [0.0; 3];
            for i in 0..d {
                widths[i] = el.hi[i] - el.lo[i];
            }
            // bounding-box estimate of the hat image's diagonal
            let mut diag2 = (self.c * (el.t1 - el.t0)).powi(2);
            for j in 0..d {
                let mut w = 0.0;
                match self.frame {
                    MeshFrame::Hat => w = widths[j],
                    MeshFrame::Physical => {
                        for i in 0..d {
                            w += self.tensor.s[3 * j + i].abs() * widths[i];
                        }
                    }
                }
                diag2 += w * w;
            }
            best = best.max(diag2.sqrt());
        }
        best
    }

    /// Plain-text listing: one `elem` line per element
    /// (`elem <id> slab=<n> cell=<i,j,k>`) and one `face` line per face
    /// (`face <id> <class> minus=<id> plus=<id|-> measure=<phys> normal=<x,y,z> nt=<t>`).
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for (id, el) in self.elements.iter().enumerate() {
            writeln!(
                s,
                "elem {id} slab={} cell={},{},{}",
                el.slab, el.cell[0], el.cell[1], el.cell[2]
            )
            .unwrap();
        }
        for (id, f) in self.faces.iter().enumerate() {
            let class = match f.class {
                FaceClass::SpaceLikeInternal => "space-like",
                FaceClass::TimeLikeInternal => "time-like",
                FaceClass::InitialF0 => "F0",
                FaceClass::FinalFT => "FT",
                FaceClass::DirichletFD => "FD",
                FaceClass::NeumannFN => "FN",
            };
            let plus = f
                .plus
                .map(|p| p.to_string())
                .unwrap_or_else(|| "-".to_string());
            writeln!(
                s,
                "face {id} {class} minus={} plus={plus} measure={:.12e} normal={:.6},{:.6},{:.6} nt={}",
                f.minus, f.measure_phys, f.normal_phys[0], f.normal_phys[1], f.normal_phys[2], f.n_t
            )
            .unwrap();
        }
        s
    }
}

/// Gram-determinant facet scale of a linear map: the (d−1)-volume ratio of
/// the image of a unit facet orthogonal to `axis`.
pub(crate) fn gram_facet_scale_mat(d: usize, m: &crate::anisotropy::Mat3, axis: usize) -> f64 {
    if d == 1 {
        return 1.0;
    }
    let mut vs: Vec<Vec3> = Vec::new();
    for i in 0..d {
        if i == axis {
            continue;
        }
        let mut e = [0.0; 3];
        e[i] = 1.0;
        vs.push(mat_vec(d, m, &e));
    }
    let k = vs.len();
    let mut g = [[0.0; 2]; 2];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = (0..d).map(|q| vs[i][q] * vs[j][q]).sum();
        }
    }
    let det = match k {
        1 => g[0][0],
        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
        _ => unreachable!(),
    };
    det.sqrt()
}

/// Build the mesh: `2^level` cells per axis on the native box, `n_slabs`
/// uniform time slabs up to `t_end`, faces classified per the boundary spec.
pub fn generate(
    domain: &DomainSpec,
    tensor: Arc<AnisotropyTensor>,
    level: u32,
    n_slabs: usize,
    boundary: BoundarySpec,
    c: f64,
) -> Result<SpaceTimeMesh, MeshError> {
    let d = domain.d;
    if d != tensor.d {
        return Err(MeshError::InvalidDomain(format!(
            "domain d={d} but tensor d={}",
            tensor.d
        )));
    }
    for i in 0..d {
        if !(domain.hi[i] - domain.lo[i] > 0.0) {
            return Err(MeshError::InvalidDomain(format!(
                "degenerate box on axis {i}: [{}, {}]",
                domain.lo[i], domain.hi[i]
            )));
        }
    }
    if !(domain.t_end > 0.0) {
        return Err(MeshError::InvalidDomain("t_end must be positive".into()));
    }
    if n_slabs == 0 {
        return Err(MeshError::InvalidDomain("need at least one slab".into()));
    }
    if boundary.d != d {
        return Err(MeshError::InvalidBoundarySpec(format!(
            "boundary spec d={} but domain d={d}",
            boundary.d
        )));
    }

    let cpa = 1usize << level;
    let n_cells = cpa.pow(d as u32);
    let mut widths = [0.0; 3];
    for i in 0..d {
        widths[i] = (domain.hi[i] - domain.lo[i]) / cpa as f64;
    }
    let h_t = domain.t_end / n_slabs as f64;
    let t_nodes: Vec<f64> = (0..=n_slabs)
        .map(|n| domain.t_end * n as f64 / n_slabs as f64)
        .collect();

    // hat half-widths of the native cell (bounding box of the hat image)
    let native_to_hat_mat = match domain.frame {
        MeshFrame::Physical => tensor.s,
        MeshFrame::Hat => crate::anisotropy::mat_identity(),
    };
    let mut hat_half = [0.0; 3];
    for j in 0..d {
        let mut s = 0.0;
        for i in 0..d {
            s += native_to_hat_mat[3 * j + i].abs() * widths[i] * 0.5;
        }
        hat_half[j] = s;
    }
    let max_hat_half = hat_half[..d].iter().cloned().fold(0.0_f64, f64::max);
    let scale = max_hat_half.max(c * h_t * 0.5);

    // cells in rank order (first axis fastest, matching cell_rank)
    let mut cells: Vec<[usize; 3]> = Vec::with_capacity(n_cells);
    for k in 0..if d == 3 { cpa } else { 1 } {
        for j in 0..if d >= 2 { cpa } else { 1 } {
            for i in 0..cpa {
                cells.push([i, j, k]);
            }
        }
    }

    let cell_box = |cell: &[usize; 3]| -> (Vec3, Vec3) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for i in 0..d {
            lo[i] = domain.lo[i] + cell[i] as f64 * widths[i];
            hi[i] = domain.lo[i] + (cell[i] + 1) as f64 * widths[i];
        }
        (lo, hi)
    };

    let mut elements = Vec::with_capacity(n_cells * n_slabs);
    for slab in 0..n_slabs {
        for cell in &cells {
            let (lo, hi) = cell_box(cell);
            let mut center_native = [0.0; 3];
            for i in 0..d {
                center_native[i] = 0.5 * (lo[i] + hi[i]);
            }
            let center_hat = match domain.frame {
                MeshFrame::Physical => tensor.to_hat(&center_native),
                MeshFrame::Hat => center_native,
            };
            elements.push(Element {
                cell: *cell,
                slab,
                lo,
                hi,
                t0: t_nodes[slab],
                t1: t_nodes[slab + 1],
                frame: LocalFrame {
                    center_hat,
                    t_center: 0.5 * (t_nodes[slab] + t_nodes[slab + 1]),
                    scale,
                },
            });
        }
    }

    // measures and normals shared by all faces of the same orientation
    let s_t = mat_transpose(d, &tensor.s);
    let det_phys = match domain.frame {
        MeshFrame::Physical => 1.0,
        MeshFrame::Hat => mat_det(d, &tensor.s_inv).abs(),
    };
    let det_hat = match domain.frame {
        MeshFrame::Physical => mat_det(d, &tensor.s).abs(),
        MeshFrame::Hat => 1.0,
    };
    let native_to_phys_mat = match domain.frame {
        MeshFrame::Physical => crate::anisotropy::mat_identity(),
        MeshFrame::Hat => tensor.s_inv,
    };
    // unit physical and hat normals of the native plane orthogonal to `axis`
    let plane_normals = |axis: usize, dir: f64| -> (Vec3, Vec3) {
        let mut e = [0.0; 3];
        e[axis] = dir;
        match domain.frame {
            MeshFrame::Physical => (e, tensor.hat_normal(&e)),
            MeshFrame::Hat => {
                // native plane {x̂·e = c} pulls back to {x·(Sᵀe) = c}
                let mut n = mat_vec(d, &s_t, &e);
                let len = norm(d, &n);
                for v in n.iter_mut() {
                    *v /= len;
                }
                (n, e)
            }
        }
    };

    let mut faces: Vec<FaceRecord> = Vec::new();
    let mut slab_faces: Vec<SlabFaces> = vec![SlabFaces::default(); n_slabs];

    // spatial-slice measure of one cell
    let cell_area_native: f64 = widths[..d].iter().product();

    // F0
    for cell in &cells {
        let (lo, hi) = cell_box(cell);
        let rank = cell[0] + cpa * (cell[1] + cpa * cell[2]);
        let id = faces.len();
        faces.push(FaceRecord {
            class: FaceClass::InitialF0,
            minus: rank, // slab 0 element
            plus: None,
            measure_phys: cell_area_native * det_phys,
            measure_hat: cell_area_native * det_hat,
            normal_phys: [0.0; 3],
            normal_hat: [0.0; 3],
            n_t: -1.0,
            axis: usize::MAX,
            side_hi: false,
            spatial_lo: lo,
            spatial_hi: hi,
            t0: 0.0,
            t1: 0.0,
        });
        slab_faces[0].bottom.push(id);
    }

    for slab in 0..n_slabs {
        // time-like internal faces, axis by axis
        for axis in 0..d {
            let facet_phys = gram_facet_scale_mat(d, &native_to_phys_mat, axis);
            let facet_hat = gram_facet_scale_mat(d, &native_to_hat_mat, axis);
            let (n_phys, n_hat) = plane_normals(axis, 1.0);
            let facet_native: f64 = (0..d)
                .filter(|&i| i != axis)
                .map(|i| widths[i])
                .product();
            for plane in 1..cpa {
                for cell in &cells {
                    if cell[axis] != plane - 1 {
                        continue;
                    }
                    let mut right_cell = *cell;
                    right_cell[axis] = plane;
                    let left = slab * n_cells + (cell[0] + cpa * (cell[1] + cpa * cell[2]));
                    let right = slab * n_cells
                        + (right_cell[0] + cpa * (right_cell[1] + cpa * right_cell[2]));
                    let (lo, hi) = cell_box(cell);
                    let mut flo = lo;
                    let mut fhi = hi;
                    flo[axis] = hi[axis];
                    fhi[axis] = hi[axis];
                    let id = faces.len();
                    faces.push(FaceRecord {
                        class: FaceClass::TimeLikeInternal,
                        minus: left,
                        plus: Some(right),
                        measure_phys: facet_native * h_t * facet_phys,
                        measure_hat: facet_native * h_t * facet_hat,
                        normal_phys: n_phys,
                        normal_hat: n_hat,
                        n_t: 0.0,
                        axis,
                        side_hi: false,
                        spatial_lo: flo,
                        spatial_hi: fhi,
                        t0: t_nodes[slab],
                        t1: t_nodes[slab + 1],
                    });
                    slab_faces[slab].lateral.push(id);
                }
            }
            // boundary planes
            for side_hi in [false, true] {
                let dir = if side_hi { 1.0 } else { -1.0 };
                let (bn_phys, bn_hat) = plane_normals(axis, dir);
                let bc = boundary.condition(axis, side_hi);
                for cell in &cells {
                    let at_plane = if side_hi {
                        cell[axis] == cpa - 1
                    } else {
                        cell[axis] == 0
                    };
                    if !at_plane {
                        continue;
                    }
                    let elem = slab * n_cells + (cell[0] + cpa * (cell[1] + cpa * cell[2]));
                    let (lo, hi) = cell_box(cell);
                    let mut flo = lo;
                    let mut fhi = hi;
                    if side_hi {
                        flo[axis] = hi[axis];
                    } else {
                        fhi[axis] = lo[axis];
                    }
                    let id = faces.len();
                    faces.push(FaceRecord {
                        class: match bc {
                            BoundaryCondition::Dirichlet => FaceClass::DirichletFD,
                            BoundaryCondition::Neumann => FaceClass::NeumannFN,
                        },
                        minus: elem,
                        plus: None,
                        measure_phys: facet_native * h_t * facet_phys,
                        measure_hat: facet_native * h_t * facet_hat,
                        normal_phys: bn_phys,
                        normal_hat: bn_hat,
                        n_t: 0.0,
                        axis,
                        side_hi,
                        spatial_lo: flo,
                        spatial_hi: fhi,
                        t0: t_nodes[slab],
                        t1: t_nodes[slab + 1],
                    });
                    slab_faces[slab].lateral.push(id);
                }
            }
        }
        // top closure: space-like internal or F^T
        let last = slab == n_slabs - 1;
        for cell in &cells {
            let rank = cell[0] + cpa * (cell[1] + cpa * cell[2]);
            let below = slab * n_cells + rank;
            let above = if last { None } else { Some((slab + 1) * n_cells + rank) };
            let (lo, hi) = cell_box(cell);
            let id = faces.len();
            faces.push(FaceRecord {
                class: if last {
                    FaceClass::FinalFT
                } else {
                    FaceClass::SpaceLikeInternal
                },
                minus: below,
                plus: above,
                measure_phys: cell_area_native * det_phys,
                measure_hat: cell_area_native * det_hat,
                normal_phys: [0.0; 3],
                normal_hat: [0.0; 3],
                n_t: 1.0,
                axis: usize::MAX,
                side_hi: false,
                spatial_lo: lo,
                spatial_hi: hi,
                t0: t_nodes[slab + 1],
                t1: t_nodes[slab + 1],
            });
            slab_faces[slab].top.push(id);
            if !last {
                slab_faces[slab + 1].bottom.push(id);
            }
        }
    }

    // quasi-uniformity over hat spatial diameters and c·h_n
    let mut hat_diag = [0.0; 3];
    for j in 0..d {
        hat_diag[j] = 2.0 * hat_half[j];
    }
    let hat_diam = norm(d, &hat_diag);
    let qmax = hat_diam.max(c * h_t);
    let qmin = hat_diam.min(c * h_t);

    Ok(SpaceTimeMesh {
        d,
        frame: domain.frame,
        tensor,
        c,
        domain: domain.clone(),
        cells_per_axis: cpa,
        n_cells,
        n_slabs,
        t_nodes,
        elements,
        faces,
        slab_faces,
        boundary,
        quasi_uniformity: qmax / qmin,
    })
}

/// Ratio checks behind the mesh-transformation lemmas.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    /// min and max over elements of `ĥ_K ‖Λ^{1/2}‖ / h_K`
    pub hhat_ratio_min: f64,
    pub hhat_ratio_max: f64,
    /// max over faces of `(|Γ|/|Γ̂|) / (det(Λ^{1/2}) λ₁^{-1/2})`; ≤ 1 up to
    /// rounding for normalized tensors
    pub area_bound_max: f64,
}

pub fn verify_geometry_lemmas(mesh: &SpaceTimeMesh) -> GeometryReport {
    let d = mesh.d;
    let t = &mesh.tensor;
    let lam_sqrt_norm = t.lambda_max().sqrt();
    let mut rmin = f64::INFINITY;
    let mut rmax = 0.0_f64;
    for el in &mesh.elements {
        // space-time diameters from the cell corners
        let mut corners_native: Vec<Vec3> = vec![[0.0; 3]];
        for i in 0..d {
            let mut next = Vec::new();
            for c in &corners_native {
                let mut a = *c;
                let mut b = *c;
                a[i] = el.lo[i];
                b[i] = el.hi[i];
                next.push(a);
                next.push(b);
            }
            corners_native = next;
        }
        let h_t = el.t1 - el.t0;
        let mut diam_phys = 0.0_f64;
        let mut diam_hat = 0.0_f64;
        for a in &corners_native {
            for b in &corners_native {
                let pa = mesh.native_to_phys(a);
                let pb = mesh.native_to_phys(b);
                let ha = mesh.native_to_hat(a);
                let hb = mesh.native_to_hat(b);
                let mut dp = 0.0;
                let mut dh = 0.0;
                for i in 0..d {
                    dp += (pa[i] - pb[i]).powi(2);
                    dh += (ha[i] - hb[i]).powi(2);
                }
                diam_phys = diam_phys.max((dp + (mesh.c * h_t).powi(2)).sqrt());
                diam_hat = diam_hat.max((dh + (mesh.c * h_t).powi(2)).sqrt());
            }
        }
        let r = diam_hat * lam_sqrt_norm / diam_phys;
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    let bound = {
        let mut det_lam_sqrt = 1.0;
        for i in 0..d {
            det_lam_sqrt *= t.lambda[i].sqrt();
        }
        det_lam_sqrt / t.lambda_min().sqrt()
    };
    let mut area_max = 0.0_f64;
    for f in &mesh.faces {
        let ratio = f.measure_phys / f.measure_hat;
        area_max = area_max.max(ratio / bound);
    }
    GeometryReport {
        hhat_ratio_min: rmin,
        hhat_ratio_max: rmax,
        area_bound_max: area_max,
    }
}
