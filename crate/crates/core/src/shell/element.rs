//! Thin-shell elements on the subdivision limit surface.
//!
//! Each quad face is one element integrated with a 3x3 Gauss rule.
//! Membrane strain measures the in-plane metric change, bending the
//! curvature change; both are linearised about the reference surface.
//! Transverse shear is absent, so only positions carry dofs.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::geometry::{Point, Vec3};

use super::basis;
use super::mesh::{ExtMesh, ShellMesh};
use super::patch::{PatchEval, PatchTable};

#[derive(Debug, Clone, Copy)]
pub struct ShellMaterial {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub thickness: f64,
}

impl ShellMaterial {
    pub fn membrane_stiffness(&self) -> f64 {
        self.thickness * self.youngs_modulus / (1.0 - self.poisson_ratio * self.poisson_ratio)
    }

    pub fn bending_stiffness(&self) -> f64 {
        let t = self.thickness;
        t * t * t * self.youngs_modulus / (12.0 * (1.0 - self.poisson_ratio * self.poisson_ratio))
    }
}

/// Limit-surface basis restricted to one face, resolved to control
/// vertices and tabulated at the Gauss points.
pub struct FaceBasis {
    /// Control vertices the face depends on, ascending.
    pub verts: Vec<usize>,
    pub quads: Vec<QuadPoint>,
}

pub struct QuadPoint {
    pub weight: f64,
    pub n: Vec<f64>,
    pub d1: [Vec<f64>; 2],
    pub d2: [Vec<f64>; 3],
}

/// Position and parametric derivatives of the limit surface at one point.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFrame {
    pub x: Point,
    pub a1: Vec3,
    pub a2: Vec3,
    pub a11: Vec3,
    pub a12: Vec3,
    pub a22: Vec3,
}

impl SurfaceFrame {
    pub fn raw_normal(&self) -> Vec3 {
        self.a1.cross(&self.a2)
    }
}

/// Limit-surface point bundled with the basis weights that produced it.
pub struct LimitPoint {
    pub frame: SurfaceFrame,
    pub verts: Vec<usize>,
    pub n: Vec<f64>,
    pub d1: [Vec<f64>; 2],
}

pub struct ShellModel {
    pub mesh: ShellMesh,
    pub ext: ExtMesh,
    pub patches: PatchTable,
    pub bases: Vec<FaceBasis>,
}

fn compose_weights(ext: &ExtMesh, ids: &[usize], eval: &PatchEval, verts: &[usize]) -> QuadPoint {
    let m = verts.len();
    let mut qp = QuadPoint {
        weight: 0.0,
        n: vec![0.0; m],
        d1: [vec![0.0; m], vec![0.0; m]],
        d2: [vec![0.0; m], vec![0.0; m], vec![0.0; m]],
    };
    for (k, &id) in ids.iter().enumerate() {
        for &(v, c) in &ext.expansions[id] {
            let slot = verts.binary_search(&v).expect("vertex outside face support");
            qp.n[slot] += c * eval.n[k];
            for a in 0..2 {
                qp.d1[a][slot] += c * eval.d1[a][k];
            }
            for a in 0..3 {
                qp.d2[a][slot] += c * eval.d2[a][k];
            }
        }
    }
    qp
}

fn support_verts(ext: &ExtMesh, ids: &[usize]) -> Vec<usize> {
    let mut verts: Vec<usize> = ids
        .iter()
        .flat_map(|&id| ext.expansions[id].iter().map(|&(v, _)| v))
        .collect();
    verts.sort_unstable();
    verts.dedup();
    verts
}

impl ShellModel {
    pub fn new(mesh: ShellMesh) -> Result<Self> {
        let ext = ExtMesh::build(&mesh)?;
        let patches = PatchTable::build(&ext)?;
        let gauss = basis::gauss3();
        let mut bases = Vec::with_capacity(ext.n_real_faces);
        for face in 0..ext.n_real_faces {
            let ids = patches.patches[face].stencil_ids();
            let verts = support_verts(&ext, ids);
            let mut quads = Vec::with_capacity(9);
            for &(t, wt) in &gauss {
                for &(s, ws) in &gauss {
                    let eval = patches.eval(face, s, t);
                    let mut qp = compose_weights(&ext, ids, &eval, &verts);
                    qp.weight = ws * wt;
                    quads.push(qp);
                }
            }
            bases.push(FaceBasis { verts, quads });
        }
        Ok(ShellModel { mesh, ext, patches, bases })
    }

    pub fn vertex_count(&self) -> usize {
        self.mesh.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.ext.n_real_faces
    }

    /// Replaces control positions, keeping connectivity and basis tables.
    pub fn set_positions(&mut self, positions: &[Point]) {
        assert_eq!(positions.len(), self.mesh.vertices.len());
        self.mesh.vertices.copy_from_slice(positions);
    }

    fn frame_at(&self, verts: &[usize], qp: &QuadPoint, positions: &[Point]) -> SurfaceFrame {
        let mut x = Vec3::zeros();
        let mut a = [Vec3::zeros(); 2];
        let mut h = [Vec3::zeros(); 3];
        for (slot, &v) in verts.iter().enumerate() {
            let p = positions[v].coords;
            x += qp.n[slot] * p;
            for k in 0..2 {
                a[k] += qp.d1[k][slot] * p;
            }
            for k in 0..3 {
                h[k] += qp.d2[k][slot] * p;
            }
        }
        SurfaceFrame { x: Point::from(x), a1: a[0], a2: a[1], a11: h[0], a12: h[1], a22: h[2] }
    }

    /// Evaluates the limit surface at an arbitrary parameter point.
    pub fn limit_evaluate(&self, face: usize, s: f64, t: f64) -> LimitPoint {
        let eval = self.patches.eval(face, s, t);
        let ids = self.patches.patches[face].stencil_ids();
        let verts = support_verts(&self.ext, ids);
        let qp = compose_weights(&self.ext, ids, &eval, &verts);
        let frame = self.frame_at(&verts, &qp, &self.mesh.vertices);
        LimitPoint { frame, verts, n: qp.n, d1: qp.d1 }
    }

    /// Dense element stiffness of one face plus the vertices it couples.
    /// Dof order is vertex major (x, y, z per vertex).
    pub fn element_stiffness(&self, face: usize, material: &ShellMaterial) -> (&[usize], DMatrix<f64>) {
        self.element_stiffness_at(face, material, &self.mesh.vertices)
    }

    pub fn element_stiffness_at(
        &self,
        face: usize,
        material: &ShellMaterial,
        positions: &[Point],
    ) -> (&[usize], DMatrix<f64>) {
        let fb = &self.bases[face];
        let m = fb.verts.len();
        let ndof = 3 * m;
        let mut k = DMatrix::zeros(ndof, ndof);
        let km = material.membrane_stiffness();
        let kb = material.bending_stiffness();
        let mut bm = DMatrix::zeros(3, ndof);
        let mut bb = DMatrix::zeros(3, ndof);
        for qp in &fb.quads {
            let frame = self.frame_at(&fb.verts, qp, positions);
            let jac = strain_operators(&frame, qp, &mut bm, &mut bb);
            let c = constitutive(&frame, material.poisson_ratio);
            let wm = qp.weight * jac * km;
            let wb = qp.weight * jac * kb;
            accumulate(&mut k, &bm, &c, wm);
            accumulate(&mut k, &bb, &c, wb);
        }
        (&fb.verts, k)
    }

    /// Strain energy of a displacement field, integrating the same
    /// measures as the stiffness.
    pub fn strain_energy(&self, material: &ShellMaterial, u: &[Vec3]) -> f64 {
        self.strain_energy_at(material, u, &self.mesh.vertices)
    }

    pub fn strain_energy_at(&self, material: &ShellMaterial, u: &[Vec3], positions: &[Point]) -> f64 {
        let km = material.membrane_stiffness();
        let kb = material.bending_stiffness();
        let mut total = 0.0;
        let mut bm = DMatrix::zeros(3, 3);
        let mut bb = DMatrix::zeros(3, 3);
        for fb in &self.bases {
            let ndof = 3 * fb.verts.len();
            if bm.ncols() != ndof {
                bm = DMatrix::zeros(3, ndof);
                bb = DMatrix::zeros(3, ndof);
            }
            let mut ue = Vec::with_capacity(ndof);
            for &v in &fb.verts {
                ue.extend_from_slice(u[v].as_slice());
            }
            for qp in &fb.quads {
                let frame = self.frame_at(&fb.verts, qp, positions);
                let jac = strain_operators(&frame, qp, &mut bm, &mut bb);
                let c = constitutive(&frame, material.poisson_ratio);
                let em = strain(&bm, &ue);
                let eb = strain(&bb, &ue);
                total += 0.5 * qp.weight * jac * (km * quad_form(&c, &em) + kb * quad_form(&c, &eb));
            }
        }
        total
    }

    /// Potential of one face at frozen displacements: strain energy minus
    /// the work of a constant dead pressure. Drives semi-analytic shape
    /// gradients, which difference this in the control positions.
    pub fn face_potential_at(
        &self,
        face: usize,
        material: &ShellMaterial,
        pressure: Vec3,
        u: &[Vec3],
        positions: &[Point],
    ) -> f64 {
        let fb = &self.bases[face];
        let ndof = 3 * fb.verts.len();
        let km = material.membrane_stiffness();
        let kb = material.bending_stiffness();
        let mut bm = DMatrix::zeros(3, ndof);
        let mut bb = DMatrix::zeros(3, ndof);
        let mut ue = Vec::with_capacity(ndof);
        for &v in &fb.verts {
            ue.extend_from_slice(u[v].as_slice());
        }
        let mut total = 0.0;
        for qp in &fb.quads {
            let frame = self.frame_at(&fb.verts, qp, positions);
            let jac = strain_operators(&frame, qp, &mut bm, &mut bb);
            let c = constitutive(&frame, material.poisson_ratio);
            let em = strain(&bm, &ue);
            let eb = strain(&bb, &ue);
            total += 0.5 * qp.weight * jac * (km * quad_form(&c, &em) + kb * quad_form(&c, &eb));
            let mut ux = Vec3::zeros();
            for (slot, &v) in fb.verts.iter().enumerate() {
                ux += qp.n[slot] * u[v];
            }
            total -= qp.weight * jac * pressure.dot(&ux);
        }
        total
    }

    /// Consistent nodal forces of a constant dead pressure per reference area.
    pub fn pressure_load(&self, pressure: Vec3) -> Vec<Vec3> {
        let mut f = vec![Vec3::zeros(); self.vertex_count()];
        for fb in &self.bases {
            for qp in &fb.quads {
                let frame = self.frame_at(&fb.verts, qp, &self.mesh.vertices);
                let jac = frame.raw_normal().norm();
                for (slot, &v) in fb.verts.iter().enumerate() {
                    f[v] += qp.weight * jac * qp.n[slot] * pressure;
                }
            }
        }
        f
    }

    /// Surface area and its gradient with respect to control positions.
    pub fn area_and_derivative(&self) -> (f64, Vec<Vec3>) {
        let mut area = 0.0;
        let mut grad = vec![Vec3::zeros(); self.vertex_count()];
        for fb in &self.bases {
            for qp in &fb.quads {
                let frame = self.frame_at(&fb.verts, qp, &self.mesh.vertices);
                let n = frame.raw_normal();
                let jac = n.norm();
                area += qp.weight * jac;
                if jac <= 0.0 {
                    continue;
                }
                let nhat = n / jac;
                for (slot, &v) in fb.verts.iter().enumerate() {
                    let e_terms = [
                        qp.d1[0][slot] * Vec3::x().cross(&frame.a2) + qp.d1[1][slot] * frame.a1.cross(&Vec3::x()),
                        qp.d1[0][slot] * Vec3::y().cross(&frame.a2) + qp.d1[1][slot] * frame.a1.cross(&Vec3::y()),
                        qp.d1[0][slot] * Vec3::z().cross(&frame.a2) + qp.d1[1][slot] * frame.a1.cross(&Vec3::z()),
                    ];
                    grad[v] += qp.weight * Vec3::new(nhat.dot(&e_terms[0]), nhat.dot(&e_terms[1]), nhat.dot(&e_terms[2]));
                }
            }
        }
        (area, grad)
    }

    /// Total reference area.
    pub fn area(&self) -> f64 {
        self.area_and_derivative().0
    }
}

/// Fills the membrane and bending strain operators at one point and
/// returns the area Jacobian |a1 x a2|.
fn strain_operators(frame: &SurfaceFrame, qp: &QuadPoint, bm: &mut DMatrix<f64>, bb: &mut DMatrix<f64>) -> f64 {
    let n = frame.raw_normal();
    let jac = n.norm();
    let a3 = n / jac;
    let m = qp.n.len();
    let basis_vec = [Vec3::x(), Vec3::y(), Vec3::z()];
    for slot in 0..m {
        let dn1 = qp.d1[0][slot];
        let dn2 = qp.d1[1][slot];
        for a in 0..3 {
            let col = 3 * slot + a;
            let ea = basis_vec[a];
            bm[(0, col)] = dn1 * frame.a1[a];
            bm[(1, col)] = dn2 * frame.a2[a];
            bm[(2, col)] = dn2 * frame.a1[a] + dn1 * frame.a2[a];

            let dn = dn1 * ea.cross(&frame.a2) + dn2 * frame.a1.cross(&ea);
            let da3 = (dn - a3 * a3.dot(&dn)) / jac;
            bb[(0, col)] = qp.d2[0][slot] * a3[a] + frame.a11.dot(&da3);
            bb[(1, col)] = qp.d2[2][slot] * a3[a] + frame.a22.dot(&da3);
            bb[(2, col)] = 2.0 * (qp.d2[1][slot] * a3[a] + frame.a12.dot(&da3));
        }
    }
    jac
}

/// Plane-stress constitutive matrix in curvilinear Voigt form.
fn constitutive(frame: &SurfaceFrame, nu: f64) -> [[f64; 3]; 3] {
    let a11 = frame.a1.dot(&frame.a1);
    let a12 = frame.a1.dot(&frame.a2);
    let a22 = frame.a2.dot(&frame.a2);
    let det = a11 * a22 - a12 * a12;
    let ac = [[a22 / det, -a12 / det], [-a12 / det, a11 / det]];
    let h = |al: usize, be: usize, ga: usize, de: usize| {
        nu * ac[al][be] * ac[ga][de] + 0.5 * (1.0 - nu) * (ac[al][ga] * ac[be][de] + ac[al][de] * ac[be][ga])
    };
    let pairs = [(0usize, 0usize), (1, 1), (0, 1)];
    let mut c = [[0.0; 3]; 3];
    for (r, &(al, be)) in pairs.iter().enumerate() {
        for (s, &(ga, de)) in pairs.iter().enumerate() {
            c[r][s] = h(al, be, ga, de);
        }
    }
    c
}

fn accumulate(k: &mut DMatrix<f64>, b: &DMatrix<f64>, c: &[[f64; 3]; 3], w: f64) {
    let ndof = b.ncols();
    // K += w * B^T C B, exploiting the 3-row structure.
    for col in 0..ndof {
        let cb = [
            c[0][0] * b[(0, col)] + c[0][1] * b[(1, col)] + c[0][2] * b[(2, col)],
            c[1][0] * b[(0, col)] + c[1][1] * b[(1, col)] + c[1][2] * b[(2, col)],
            c[2][0] * b[(0, col)] + c[2][1] * b[(1, col)] + c[2][2] * b[(2, col)],
        ];
        for row in 0..ndof {
            k[(row, col)] += w * (b[(0, row)] * cb[0] + b[(1, row)] * cb[1] + b[(2, row)] * cb[2]);
        }
    }
}

fn strain(b: &DMatrix<f64>, ue: &[f64]) -> [f64; 3] {
    let mut e = [0.0; 3];
    for r in 0..3 {
        let mut acc = 0.0;
        for (c, &u) in ue.iter().enumerate() {
            acc += b[(r, c)] * u;
        }
        e[r] = acc;
    }
    e
}

fn quad_form(c: &[[f64; 3]; 3], e: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for r in 0..3 {
        for s in 0..3 {
            acc += e[r] * c[r][s] * e[s];
        }
    }
    acc
}

/// Sparse stiffness entries of one face in a global free-dof numbering.
pub fn shell_face_entries(
    model: &ShellModel,
    material: &ShellMaterial,
    dofs: &crate::truss::DofMap,
    face: usize,
) -> Vec<(usize, usize, f64)> {
    let (verts, k) = model.element_stiffness(face, material);
    let ndof = 3 * verts.len();
    let mut global = Vec::with_capacity(ndof);
    for &v in verts {
        for axis in 0..3 {
            global.push(dofs.dof(v, axis));
        }
    }
    let mut entries = Vec::new();
    for (col, &gc) in global.iter().enumerate() {
        let Some(gc) = gc else { continue };
        for (row, &gr) in global.iter().enumerate() {
            let Some(gr) = gr else { continue };
            entries.push((gr, gc, k[(row, col)]));
        }
    }
    entries
}

pub struct ShellSystem {
    pub dofs: crate::truss::DofMap,
    pub stiffness: faer::sparse::SparseColMat<usize, f64>,
}

/// Assembles the free-dof stiffness with supports eliminated.
pub fn assemble_shell(
    model: &ShellModel,
    material: &ShellMaterial,
    supports: &[crate::lattice::JointSupport],
) -> Result<ShellSystem> {
    let dofs = crate::truss::DofMap::new(model.vertex_count(), 3, supports);
    let n = dofs.n_free();
    let stiffness = crate::sparse::assemble_csc(n, n, model.face_count(), |face| {
        shell_face_entries(model, material, &dofs, face)
    })?;
    Ok(ShellSystem { dofs, stiffness })
}

pub struct ShellSolution {
    pub u: Vec<Vec3>,
    pub compliance: f64,
}

/// Solves the shell under nodal loads and reports load dot displacement.
pub fn solve_shell(
    model: &ShellModel,
    material: &ShellMaterial,
    supports: &[crate::lattice::JointSupport],
    loads: &[Vec3],
) -> Result<ShellSolution> {
    assert_eq!(loads.len(), model.vertex_count());
    let system = assemble_shell(model, material, supports)?;
    let solver = crate::sparse::SpdSolver::new(&system.stiffness)?;
    let f = system.dofs.free_vector(loads);
    let x = solver.solve(&f);
    let u = system.dofs.joint_displacements(&x);
    let compliance = loads.iter().zip(&u).map(|(l, d)| l.dot(d)).sum();
    Ok(ShellSolution { u, compliance })
}

/// Closest-point queries on the limit surface. Candidate faces are pruned
/// by the bounding boxes of their control stencils, which contain the
/// patch because the basis weights are non-negative and sum to one.
pub struct SurfaceLocator {
    boxes: Vec<crate::geometry::Aabb>,
}

impl SurfaceLocator {
    pub fn new(model: &ShellModel) -> Self {
        let boxes = model
            .bases
            .iter()
            .map(|fb| {
                crate::geometry::Aabb::from_points(fb.verts.iter().map(|&v| &model.mesh.vertices[v]))
                    .expect("face has control vertices")
            })
            .collect();
        SurfaceLocator { boxes }
    }

    /// Nearest surface parameter to `target`. Faces are visited in order
    /// of box distance and skipped once they cannot beat the best found.
    pub fn project(
        &self,
        model: &ShellModel,
        target: &Point,
        tol: f64,
        max_iters: usize,
    ) -> Option<(usize, [f64; 2], f64)> {
        let mut order: Vec<(usize, f64)> = self
            .boxes
            .iter()
            .enumerate()
            .map(|(f, b)| (f, b.distance(target)))
            .collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let seeds = [[0.5, 0.5], [0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]];
        let mut best: Option<(usize, [f64; 2], f64)> = None;
        for (face, lower) in order {
            if let Some((_, _, d)) = best {
                if lower >= d {
                    break;
                }
            }
            for seed in seeds {
                if let Some((coord, dist)) = newton_project(model, face, *target, seed, tol, max_iters) {
                    if best.as_ref().map_or(true, |&(_, _, d)| dist < d - 1e-14) {
                        best = Some((face, coord, dist));
                    }
                }
            }
        }
        best
    }
}

/// Maps a shell face and local coordinate to the nearest parameter of a
/// point, used when projecting lattice joints onto the surface.
pub fn project_point(
    model: &ShellModel,
    target: &Point,
    tol: f64,
    max_iters: usize,
) -> Option<(usize, [f64; 2], f64)> {
    SurfaceLocator::new(model).project(model, target, tol, max_iters)
}

fn newton_project(
    model: &ShellModel,
    face: usize,
    target: Point,
    seed: [f64; 2],
    tol: f64,
    max_iters: usize,
) -> Option<([f64; 2], f64)> {
    let mut s = seed[0];
    let mut t = seed[1];
    for _ in 0..max_iters {
        let lp = model.limit_evaluate(face, s, t);
        let r = lp.frame.x - target;
        let g = [r.dot(&lp.frame.a1), r.dot(&lp.frame.a2)];
        let h11 = lp.frame.a1.dot(&lp.frame.a1) + r.dot(&lp.frame.a11);
        let h12 = lp.frame.a1.dot(&lp.frame.a2) + r.dot(&lp.frame.a12);
        let h22 = lp.frame.a2.dot(&lp.frame.a2) + r.dot(&lp.frame.a22);
        let det = h11 * h22 - h12 * h12;
        let (ds, dt) = if det.abs() > 1e-300 {
            ((-g[0] * h22 + g[1] * h12) / det, (g[0] * h12 - g[1] * h11) / det)
        } else {
            return None;
        };
        let ns = (s + ds).clamp(0.0, 1.0);
        let nt = (t + dt).clamp(0.0, 1.0);
        let moved = (ns - s).abs() + (nt - t).abs();
        s = ns;
        t = nt;
        if moved < tol {
            let lp = model.limit_evaluate(face, s, t);
            return Some(([s, t], (lp.frame.x - target).norm()));
        }
    }
    let lp = model.limit_evaluate(face, s, t);
    Some(([s, t], (lp.frame.x - target).norm()))
}
