//! Pin-jointed truss elements: stiffness assembly, linear solves, strains
//! and energies.

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::lattice::{JointSupport, LatticeModel, StrutGeometry};
use crate::sparse::{self, SpdSolver};

const UNCONSTRAINED: usize = usize::MAX;

/// Maps (joint, axis) pairs to free dof indices. Supported axes and, for 2D
/// models, every z axis are eliminated.
#[derive(Debug, Clone)]
pub struct DofMap {
    index: Vec<[usize; 3]>,
    n_free: usize,
    dim: usize,
}

impl DofMap {
    pub fn new(n_joints: usize, dim: usize, supports: &[JointSupport]) -> Self {
        let mut fixed = vec![[false; 3]; n_joints];
        if dim == 2 {
            for f in &mut fixed {
                f[2] = true;
            }
        }
        for s in supports {
            for a in 0..3 {
                if s.fixed[a] {
                    fixed[s.joint][a] = true;
                }
            }
        }
        let mut index = vec![[UNCONSTRAINED; 3]; n_joints];
        let mut n_free = 0;
        for j in 0..n_joints {
            for a in 0..3 {
                if !fixed[j][a] {
                    index[j][a] = n_free;
                    n_free += 1;
                }
            }
        }
        DofMap { index, n_free, dim }
    }

    pub fn for_model(model: &LatticeModel) -> Self {
        Self::new(model.joints.len(), model.dim, &model.supports)
    }

    pub fn dof(&self, joint: usize, axis: usize) -> Option<usize> {
        let i = self.index[joint][axis];
        (i != UNCONSTRAINED).then_some(i)
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_joints(&self) -> usize {
        self.index.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Expands a free-dof vector into per-joint displacements, zero on
    /// constrained axes.
    pub fn joint_displacements(&self, u: &[f64]) -> Vec<Vec3> {
        assert_eq!(u.len(), self.n_free);
        self.index
            .iter()
            .map(|ix| {
                let mut v = Vec3::zeros();
                for a in 0..3 {
                    if ix[a] != UNCONSTRAINED {
                        v[a] = u[ix[a]];
                    }
                }
                v
            })
            .collect()
    }

    /// Gathers per-joint vectors into a free-dof vector, dropping
    /// constrained axes.
    pub fn free_vector(&self, per_joint: &[Vec3]) -> Vec<f64> {
        assert_eq!(per_joint.len(), self.index.len());
        let mut out = vec![0.0; self.n_free];
        for (j, ix) in self.index.iter().enumerate() {
            for a in 0..3 {
                if ix[a] != UNCONSTRAINED {
                    out[ix[a]] = per_joint[j][a];
                }
            }
        }
        out
    }
}

/// Element stiffness of an axial strut: (EA/l) times the rank-one block
/// pattern of the unit direction.
pub fn strut_stiffness(direction: Vec3, length: f64, area: f64, e_mod: f64) -> SMatrix<f64, 6, 6> {
    let k = e_mod * area / length;
    let d = direction;
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let v = k * d[a] * d[b];
            m[(a, b)] = v;
            m[(a + 3, b + 3)] = v;
            m[(a, b + 3)] = -v;
            m[(a + 3, b)] = -v;
        }
    }
    m
}

/// Assembled truss: stiffness over free dofs plus cached strut geometry.
pub struct TrussSystem {
    pub dofs: DofMap,
    pub stiffness: faer::sparse::SparseColMat<usize, f64>,
    pub geometry: Vec<StrutGeometry>,
}

pub fn strut_geometries(model: &LatticeModel) -> Result<Vec<StrutGeometry>> {
    (0..model.struts.len()).map(|e| model.strut_geometry(e)).collect()
}

/// Per-strut free-dof stiffness entries, shared by truss-only assembly and
/// the coupled solver.
pub fn strut_entries(
    model: &LatticeModel,
    geometry: &[StrutGeometry],
    dofs: &DofMap,
    strut: usize,
    area: f64,
) -> Vec<sparse::Entry> {
    let s = &model.struts[strut];
    let g = &geometry[strut];
    let ke = strut_stiffness(g.direction, g.length, area, model.youngs_modulus);
    let mut map = [None; 6];
    for (side, &j) in s.joints.iter().enumerate() {
        for a in 0..3 {
            map[3 * side + a] = dofs.dof(j, a);
        }
    }
    let mut out = Vec::with_capacity(36);
    for r in 0..6 {
        let Some(ri) = map[r] else { continue };
        for c in 0..6 {
            let Some(ci) = map[c] else { continue };
            let v = ke[(r, c)];
            if v != 0.0 {
                out.push((ri, ci, v));
            }
        }
    }
    out
}

pub fn assemble_truss(model: &LatticeModel, areas: &[f64]) -> Result<TrussSystem> {
    if areas.len() != model.struts.len() {
        return Err(Error::InvalidParameter {
            what: "area count".into(),
            value: areas.len() as f64,
            expected: format!("{}", model.struts.len()),
        });
    }
    for (e, &a) in areas.iter().enumerate() {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter {
                what: format!("area of strut {e}"),
                value: a,
                expected: "positive and finite".into(),
            });
        }
    }
    let dofs = DofMap::for_model(model);
    let geometry = strut_geometries(model)?;
    let n = dofs.n_free();
    let stiffness = sparse::assemble_csc(n, n, model.struts.len(), |e| {
        strut_entries(model, &geometry, &dofs, e, areas[e])
    })?;
    Ok(TrussSystem { dofs, stiffness, geometry })
}

#[derive(Debug, Clone, Copy)]
pub struct PointLoad {
    pub joint: usize,
    pub force: Vec3,
}

pub fn load_vector(dofs: &DofMap, loads: &[PointLoad]) -> Vec<f64> {
    let mut f = vec![0.0; dofs.n_free()];
    for l in loads {
        for a in 0..3 {
            if let Some(i) = dofs.dof(l.joint, a) {
                f[i] += l.force[a];
            }
        }
    }
    f
}

pub struct TrussSolution {
    /// Per-joint displacement vectors.
    pub u: Vec<Vec3>,
    /// Load dotted with displacement.
    pub compliance: f64,
}

pub fn solve_truss(system: &TrussSystem, loads: &[PointLoad]) -> Result<TrussSolution> {
    let f = load_vector(&system.dofs, loads);
    let solver = SpdSolver::new(&system.stiffness)?;
    let u_free = solver.solve(&f);
    let compliance = u_free.iter().zip(&f).map(|(u, f)| u * f).sum();
    Ok(TrussSolution { u: system.dofs.joint_displacements(&u_free), compliance })
}

/// Axial elongation d·(u1 - u0) of a strut under per-joint displacements.
pub fn axial_elongation(model: &LatticeModel, geometry: &[StrutGeometry], u: &[Vec3], strut: usize) -> f64 {
    let s = &model.struts[strut];
    geometry[strut].direction.dot(&(u[s.joints[1]] - u[s.joints[0]]))
}

pub fn axial_strain(model: &LatticeModel, geometry: &[StrutGeometry], u: &[Vec3], strut: usize) -> f64 {
    axial_elongation(model, geometry, u, strut) / geometry[strut].length
}

/// Total strain energy with the given areas:
/// sum of E A / (2 l) times the squared elongation.
pub fn strain_energy(model: &LatticeModel, geometry: &[StrutGeometry], areas: &[f64], u: &[Vec3]) -> f64 {
    (0..model.struts.len())
        .map(|e| {
            let c = axial_elongation(model, geometry, u, e);
            0.5 * model.youngs_modulus * areas[e] * c * c / geometry[e].length
        })
        .sum()
}

pub fn compliance(loads: &[PointLoad], u: &[Vec3]) -> f64 {
    loads.iter().map(|l| l.force.dot(&u[l.joint])).sum()
}
