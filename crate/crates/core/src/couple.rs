//! Coupled lattice-shell mechanics.
//!
//! Lattice joints carrying a shell attachment are slaved to the limit
//! surface: their displacement is the limit-basis combination of shell
//! control displacements at the attachment parameter. The coupled system
//! therefore has shell dofs plus the dofs of unattached joints only, and
//! stays symmetric positive definite.

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::lattice::{JointSupport, LatticeModel};
use crate::shell::{ShellMaterial, ShellModel, SurfaceLocator};
use crate::sparse::{self, Entry, SpdSolver};
use crate::truss::{self, DofMap, PointLoad};
use crate::{lattice::ShellAttachment, parallel};

/// Projects every lattice joint onto the shell and attaches those within
/// `attach_tol`. Returns the number of attached joints.
pub fn attach_by_projection(lattice: &mut LatticeModel, shell: &ShellModel, attach_tol: f64) -> Result<usize> {
    let diameter = Aabb::from_points(shell.mesh.vertices.iter())
        .ok_or_else(|| Error::InvalidModel { reason: "shell has no vertices".into() })?
        .diagonal();
    let newton_tol = 1e-10 * diameter;
    let locator = SurfaceLocator::new(shell);
    let hits: Vec<Option<ShellAttachment>> = parallel::map_indexed(lattice.joints.len(), |j| {
        let target = lattice.joints[j].position;
        match locator.project(shell, &target, newton_tol, 50) {
            Some((face, coord, dist)) if dist <= attach_tol => Some(ShellAttachment { face, coord }),
            _ => None,
        }
    });
    let mut count = 0;
    for (joint, hit) in lattice.joints.iter_mut().zip(hits) {
        joint.attachment = hit;
        if joint.attachment.is_some() {
            count += 1;
        }
    }
    Ok(count)
}

/// Constant part of a coupled model: dof layout, slave expansions, and
/// the shell stiffness entries, which do not depend on strut areas.
pub struct Coupler {
    pub shell_dofs: DofMap,
    pub lattice_dofs: DofMap,
    pub n_shell_dofs: usize,
    pub n_dofs: usize,
    /// Per lattice joint and axis: coupled dofs with weights.
    expansions: Vec<[Vec<(usize, f64)>; 3]>,
    shell_entries: Vec<Entry>,
}

impl Coupler {
    pub fn new(
        shell: &ShellModel,
        material: &ShellMaterial,
        shell_supports: &[JointSupport],
        lattice: &LatticeModel,
    ) -> Result<Self> {
        if lattice.dim != 3 {
            return Err(Error::InvalidModel { reason: "coupled models need a 3D lattice".into() });
        }
        let shell_dofs = DofMap::new(shell.vertex_count(), 3, shell_supports);
        let n_shell_dofs = shell_dofs.n_free();

        let mut pseudo = lattice.supports.clone();
        for (j, joint) in lattice.joints.iter().enumerate() {
            if joint.attachment.is_some() {
                if lattice.supports.iter().any(|s| s.joint == j && s.fixed.iter().any(|&f| f)) {
                    return Err(Error::InvalidModel {
                        reason: format!("joint {j} is both supported and attached to the shell"),
                    });
                }
                pseudo.push(JointSupport { joint: j, fixed: [true, true, true] });
            }
        }
        let lattice_dofs = DofMap::new(lattice.joints.len(), 3, &pseudo);
        let n_dofs = n_shell_dofs + lattice_dofs.n_free();

        let mut expansions = Vec::with_capacity(lattice.joints.len());
        for joint in &lattice.joints {
            let mut per_axis: [Vec<(usize, f64)>; 3] = Default::default();
            match joint.attachment {
                Some(att) => {
                    if att.face >= shell.face_count() {
                        return Err(Error::InvalidModel {
                            reason: format!("attachment face {} out of range", att.face),
                        });
                    }
                    let lp = shell.limit_evaluate(att.face, att.coord[0], att.coord[1]);
                    for (slot, &v) in lp.verts.iter().enumerate() {
                        let w = lp.n[slot];
                        if w == 0.0 {
                            continue;
                        }
                        for (axis, exp) in per_axis.iter_mut().enumerate() {
                            if let Some(dof) = shell_dofs.dof(v, axis) {
                                exp.push((dof, w));
                            }
                        }
                    }
                }
                None => {
                    let j = expansions.len();
                    for (axis, exp) in per_axis.iter_mut().enumerate() {
                        if let Some(dof) = lattice_dofs.dof(j, axis) {
                            exp.push((n_shell_dofs + dof, 1.0));
                        }
                    }
                }
            }
            expansions.push(per_axis);
        }

        let per_face: Vec<Vec<Entry>> = parallel::map_indexed(shell.face_count(), |face| {
            crate::shell::shell_face_entries(shell, material, &shell_dofs, face)
        });
        let mut shell_entries = Vec::with_capacity(per_face.iter().map(Vec::len).sum());
        for list in per_face {
            shell_entries.extend(list);
        }

        Ok(Coupler { shell_dofs, lattice_dofs, n_shell_dofs, n_dofs, expansions, shell_entries })
    }

    fn strut_entries(&self, lattice: &LatticeModel, strut: usize, area: f64) -> Vec<Entry> {
        let s = &lattice.struts[strut];
        let [j0, j1] = s.joints;
        let p0 = lattice.joints[j0].position;
        let p1 = lattice.joints[j1].position;
        let d = p1 - p0;
        let length = d.norm();
        let k = truss::strut_stiffness(d / length, length, area, lattice.youngs_modulus);
        let mut entries = Vec::new();
        for (col, cj) in [(0usize, j0), (1, j1)] {
            for cax in 0..3 {
                let kcol = 3 * col + cax;
                for &(dc, wc) in &self.expansions[cj][cax] {
                    for (row, rj) in [(0usize, j0), (1, j1)] {
                        for rax in 0..3 {
                            let krow = 3 * row + rax;
                            let v = k[(krow, kcol)];
                            if v == 0.0 {
                                continue;
                            }
                            for &(dr, wr) in &self.expansions[rj][rax] {
                                entries.push((dr, dc, wr * wc * v));
                            }
                        }
                    }
                }
            }
        }
        entries
    }

    /// Assembles shell plus lattice stiffness for the given strut areas.
    pub fn assemble(&self, lattice: &LatticeModel, areas: &[f64]) -> Result<faer::sparse::SparseColMat<usize, f64>> {
        assert_eq!(areas.len(), lattice.struts.len());
        let per_strut: Vec<Vec<Entry>> =
            parallel::map_indexed(lattice.struts.len(), |e| self.strut_entries(lattice, e, areas[e]));
        let mut entries = self.shell_entries.clone();
        entries.reserve(per_strut.iter().map(Vec::len).sum());
        for list in per_strut {
            entries.extend(list);
        }
        sparse::merge_entries(self.n_dofs, self.n_dofs, entries)
    }

    /// Right-hand side from lattice point loads and per-vertex shell loads.
    pub fn rhs(&self, lattice_loads: &[PointLoad], shell_loads: &[Vec3]) -> Vec<f64> {
        let mut f = vec![0.0; self.n_dofs];
        for load in lattice_loads {
            for axis in 0..3 {
                for &(dof, w) in &self.expansions[load.joint][axis] {
                    f[dof] += w * load.force[axis];
                }
            }
        }
        if !shell_loads.is_empty() {
            for (v, force) in shell_loads.iter().enumerate() {
                for axis in 0..3 {
                    if let Some(dof) = self.shell_dofs.dof(v, axis) {
                        f[dof] += force[axis];
                    }
                }
            }
        }
        f
    }

    /// Expands a coupled solution vector to shell and lattice joint motion.
    pub fn recover(&self, x: &[f64]) -> (Vec<Vec3>, Vec<Vec3>) {
        assert_eq!(x.len(), self.n_dofs);
        let shell_u = self.shell_dofs.joint_displacements(&x[..self.n_shell_dofs]);
        let lattice_u = self
            .expansions
            .iter()
            .map(|per_axis| {
                Vec3::new(
                    per_axis[0].iter().map(|&(d, w)| w * x[d]).sum(),
                    per_axis[1].iter().map(|&(d, w)| w * x[d]).sum(),
                    per_axis[2].iter().map(|&(d, w)| w * x[d]).sum(),
                )
            })
            .collect();
        (shell_u, lattice_u)
    }
}

pub struct CoupledSolution {
    pub shell_u: Vec<Vec3>,
    pub lattice_u: Vec<Vec3>,
    /// Force each attached joint transmits to the shell; zero elsewhere.
    pub coupling_forces: Vec<Vec3>,
    pub compliance: f64,
    pub x: Vec<f64>,
}

/// Solves the coupled system and reports the work of the applied loads.
pub fn solve_coupled(
    coupler: &Coupler,
    lattice: &LatticeModel,
    areas: &[f64],
    lattice_loads: &[PointLoad],
    shell_loads: &[Vec3],
) -> Result<CoupledSolution> {
    let k = coupler.assemble(lattice, areas)?;
    let solver = SpdSolver::new(&k)?;
    let f = coupler.rhs(lattice_loads, shell_loads);
    let x = solver.solve(&f);
    let (shell_u, lattice_u) = coupler.recover(&x);

    let mut compliance = 0.0;
    for load in lattice_loads {
        compliance += load.force.dot(&lattice_u[load.joint]);
    }
    for (v, force) in shell_loads.iter().enumerate() {
        compliance += force.dot(&shell_u[v]);
    }

    let coupling_forces = coupling_forces(lattice, areas, &lattice_u, lattice_loads);
    Ok(CoupledSolution { shell_u, lattice_u, coupling_forces, compliance, x })
}

/// Residual of the free-standing lattice equations at attached joints:
/// the force the lattice exerts on the shell (applied minus internal).
pub fn coupling_forces(
    lattice: &LatticeModel,
    areas: &[f64],
    lattice_u: &[Vec3],
    lattice_loads: &[PointLoad],
) -> Vec<Vec3> {
    let mut internal = vec![Vec3::zeros(); lattice.joints.len()];
    for (e, s) in lattice.struts.iter().enumerate() {
        let [j0, j1] = s.joints;
        let p0 = lattice.joints[j0].position;
        let p1 = lattice.joints[j1].position;
        let d = p1 - p0;
        let length = d.norm();
        let dir = d / length;
        let stretch = dir.dot(&(lattice_u[j1] - lattice_u[j0]));
        let axial = lattice.youngs_modulus * areas[e] / length * stretch;
        internal[j0] -= axial * dir;
        internal[j1] += axial * dir;
    }
    let mut f = vec![Vec3::zeros(); lattice.joints.len()];
    for load in lattice_loads {
        f[load.joint] += load.force;
    }
    lattice
        .joints
        .iter()
        .enumerate()
        .map(|(j, joint)| {
            if joint.attachment.is_some() {
                f[j] - internal[j]
            } else {
                Vec3::zeros()
            }
        })
        .collect()
}
