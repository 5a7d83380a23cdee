//! Post-processing of optimised strut areas into a clean lattice.
//!
//! The pipeline thresholds areas into a kept strut set, recovers the full
//! topology of any cell that still owns a diagonal strut, and reinstates
//! struts at reflex corners of the kept region where two cells meet only at
//! a single pin.  The reconstructed lattice is then screened for mechanisms
//! by a rank test on the equilibrium matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::lattice::{JointSupport, LatticeModel};
use crate::parallel;
use crate::sparse::{self, SpdSolver};
use crate::truss::strut_geometries;

/// Struts whose area exceeds the threshold survive extraction.
pub fn extract(lattice: &LatticeModel, areas: &[f64], threshold: f64) -> Result<Vec<bool>> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter {
            what: "extraction threshold".into(),
            value: threshold,
            expected: "a non-negative area".into(),
        });
    }
    if areas.len() != lattice.struts.len() {
        return Err(Error::InvalidModel {
            reason: format!(
                "{} areas supplied for {} struts",
                areas.len(),
                lattice.struts.len()
            ),
        });
    }
    Ok(areas.iter().map(|&a| a > threshold).collect())
}

/// Completes every cell that still owns at least one kept diagonal strut.
///
/// Diagonal struts belong to exactly one cell, so a single pass reaches the
/// fixed point: recovering a cell never creates a dangling diagonal elsewhere.
pub fn recover_cells(lattice: &LatticeModel, kept: &[bool]) -> Vec<bool> {
    let mut out = kept.to_vec();
    for cell in &lattice.cells {
        if cell.diagonal_struts.iter().any(|&e| kept[e]) {
            for e in cell.strut_ids() {
                out[e] = true;
            }
        }
    }
    out
}

/// True for cells whose struts are all kept.
fn kept_cells(lattice: &LatticeModel, kept: &[bool]) -> Vec<bool> {
    lattice
        .cells
        .iter()
        .map(|cell| cell.strut_ids().all(|e| kept[e]))
        .collect()
}

/// Reinstates struts of removed cells at reflex corners of the kept region.
///
/// A removed cell is filled at a corner joint when two kept cells meet there
/// while sharing no other joint, i.e. they touch only at that pin.  Such a
/// diagonal contact is a hinge in the extracted lattice; the reinstated
/// struts brace it.  The kept-cell set is fixed during the scan, so a single
/// pass reaches the fixed point.
pub fn fill_concave_voids(lattice: &LatticeModel, kept: &[bool]) -> Vec<bool> {
    let cell_kept = kept_cells(lattice, kept);
    let mut corner_cells: Vec<Vec<usize>> = vec![Vec::new(); lattice.joints.len()];
    for (c, cell) in lattice.cells.iter().enumerate() {
        for &j in &cell.corner_joints {
            corner_cells[j].push(c);
        }
    }
    let shared_corners = |a: usize, b: usize| {
        lattice.cells[a]
            .corner_joints
            .iter()
            .filter(|j| lattice.cells[b].corner_joints.contains(j))
            .count()
    };

    let added: Vec<Vec<usize>> = parallel::map_indexed(lattice.cells.len(), |c| {
        let mut struts = Vec::new();
        if cell_kept[c] {
            return struts;
        }
        let cell = &lattice.cells[c];
        for &j in &cell.corner_joints {
            let here = &corner_cells[j];
            let pinned = here.iter().enumerate().any(|(i, &a)| {
                cell_kept[a]
                    && here[i + 1..]
                        .iter()
                        .any(|&b| cell_kept[b] && shared_corners(a, b) == 1)
            });
            if pinned {
                for e in cell.strut_ids() {
                    let s = &lattice.struts[e];
                    if s.joints[0] == j || s.joints[1] == j {
                        struts.push(e);
                    }
                }
            }
        }
        struts
    });

    let mut out = kept.to_vec();
    for struts in added {
        for e in struts {
            out[e] = true;
        }
    }
    out
}

/// Runs cell recovery and void filling alternately until neither adds a strut.
///
/// Filling introduces diagonals into previously removed cells, which recovery
/// then completes; the completed cells can expose new reflex corners, so the
/// two steps iterate jointly.  Both are monotone, so the loop terminates.
pub fn reconstruct(lattice: &LatticeModel, kept: &[bool]) -> Vec<bool> {
    let mut current = kept.to_vec();
    loop {
        let next = fill_concave_voids(lattice, &recover_cells(lattice, &current));
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Joints touched by a kept strut, their free-dof offsets, and the kept ids.
struct ActiveSystem {
    struts: Vec<usize>,
    /// Per original joint: base index of its free dofs, or usize::MAX.
    dof_base: Vec<usize>,
    /// Per original joint: which axes are free (length `dim`).
    free_axes: Vec<Vec<bool>>,
    n_free: usize,
}

fn active_system(lattice: &LatticeModel, kept: &[bool], supports: &[JointSupport]) -> ActiveSystem {
    let struts: Vec<usize> = (0..lattice.struts.len()).filter(|&e| kept[e]).collect();
    let mut touched = vec![false; lattice.joints.len()];
    for &e in &struts {
        touched[lattice.struts[e].joints[0]] = true;
        touched[lattice.struts[e].joints[1]] = true;
    }
    let mut fixed = vec![[false; 3]; lattice.joints.len()];
    for s in supports {
        for a in 0..3 {
            fixed[s.joint][a] |= s.fixed[a];
        }
    }
    let dim = lattice.dim;
    let mut dof_base = vec![usize::MAX; lattice.joints.len()];
    let mut free_axes = vec![Vec::new(); lattice.joints.len()];
    let mut n_free = 0;
    for j in 0..lattice.joints.len() {
        if !touched[j] {
            continue;
        }
        dof_base[j] = n_free;
        free_axes[j] = (0..dim).map(|a| !fixed[j][a]).collect();
        n_free += free_axes[j].iter().filter(|&&f| f).count();
    }
    ActiveSystem { struts, dof_base, free_axes, n_free }
}

impl ActiveSystem {
    /// Free-dof indices and axial direction components for one strut end.
    fn end_dofs(&self, joint: usize, direction: Vec3) -> Vec<(usize, f64)> {
        let mut base = self.dof_base[joint];
        let mut out = Vec::new();
        for (a, &free) in self.free_axes[joint].iter().enumerate() {
            if free {
                out.push((base, direction[a]));
                base += 1;
            }
        }
        out
    }
}

/// Number of zero-energy modes of the kept lattice under the given supports.
///
/// Counted as free dofs minus the rank of the equilibrium matrix, with rank
/// tolerance 1e-10 times the matrix norm.  Small systems use a column-pivoted
/// QR; large ones count near-null eigenvectors of the Gram matrix by shifted
/// inverse iteration.
pub fn mechanism_count(
    lattice: &LatticeModel,
    kept: &[bool],
    supports: &[JointSupport],
) -> Result<usize> {
    mechanism_count_with(lattice, kept, supports, None)
}

/// Mechanism count with the dense/iterative rank path forced, for testing.
#[doc(hidden)]
pub fn mechanism_count_with(
    lattice: &LatticeModel,
    kept: &[bool],
    supports: &[JointSupport],
    force_sparse: Option<bool>,
) -> Result<usize> {
    let system = active_system(lattice, kept, supports);
    if system.n_free == 0 {
        return Ok(0);
    }
    let geometry = strut_geometries(lattice)?;
    let norm = (2.0 * system.struts.len() as f64).sqrt();
    let tol = 1e-10 * norm;

    let dense = match force_sparse {
        Some(sparse) => !sparse,
        None => (system.n_free as f64) * (system.struts.len() as f64) <= 12e6,
    };
    if dense {
        let mut b = DMatrix::<f64>::zeros(system.n_free, system.struts.len());
        for (col, &e) in system.struts.iter().enumerate() {
            let [j0, j1] = lattice.struts[e].joints;
            let d = geometry[e].direction;
            for (row, v) in system.end_dofs(j0, d) {
                b[(row, col)] -= v;
            }
            for (row, v) in system.end_dofs(j1, d) {
                b[(row, col)] += v;
            }
        }
        let rank = b.rank(tol);
        return Ok(system.n_free - rank);
    }

    sparse_nullity(lattice, &system, &geometry, tol)
}

/// Counts eigenvalues of B Bt below (1e-10 |B|)^2 by deflated inverse
/// iteration on the shifted Gram matrix.
fn sparse_nullity(
    lattice: &LatticeModel,
    system: &ActiveSystem,
    geometry: &[crate::lattice::StrutGeometry],
    tol: f64,
) -> Result<usize> {
    let n = system.n_free;
    let strut_entries = |e: usize| {
        let id = system.struts[e];
        let [j0, j1] = lattice.struts[id].joints;
        let d = geometry[id].direction;
        let mut b = system.end_dofs(j0, d);
        for pair in &mut b {
            pair.1 = -pair.1;
        }
        b.extend(system.end_dofs(j1, d));
        let mut entries = Vec::with_capacity(b.len() * b.len());
        for &(r, vr) in &b {
            for &(c, vc) in &b {
                entries.push((r, c, vr * vc));
            }
        }
        entries
    };
    let gram = sparse::assemble_csc(n, n, system.struts.len(), strut_entries)?;
    let sigma = 1e-8 * sparse::mean_diagonal(&gram);
    let shifted = sparse::assemble_csc(n, n, system.struts.len() + 1, |e| {
        if e < system.struts.len() {
            strut_entries(e)
        } else {
            (0..n).map(|i| (i, i, sigma)).collect()
        }
    })?;
    let solver = SpdSolver::new(&shifted)?;

    // Rayleigh quotient evaluated strut-wise: for a numerically null vector
    // the per-strut residuals cancel before squaring, keeping the estimate
    // far below the squared rank tolerance.
    let rayleigh = |v: &[f64]| -> f64 {
        system
            .struts
            .iter()
            .map(|&id| {
                let [j0, j1] = lattice.struts[id].joints;
                let d = geometry[id].direction;
                let mut s = 0.0;
                for (row, w) in system.end_dofs(j1, d) {
                    s += w * v[row];
                }
                for (row, w) in system.end_dofs(j0, d) {
                    s -= w * v[row];
                }
                s * s
            })
            .sum()
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut rnd = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let deflate = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for b in basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
    };
    let eig_tol = tol * tol;

    while basis.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let mut lambda = f64::INFINITY;
        for _ in 0..200 {
            deflate(&mut v, &basis);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            for x in &mut v {
                *x /= norm;
            }
            let next = rayleigh(&v);
            let converged = (lambda - next).abs() <= 1e-3 * next.max(eig_tol);
            lambda = next;
            if converged {
                break;
            }
            v = solver.solve(&v);
        }
        if lambda <= eig_tol {
            basis.push(v);
        } else {
            break;
        }
    }
    Ok(basis.len())
}

/// A compacted lattice containing only kept struts and the joints they touch.
pub struct ExtractedLattice {
    pub model: LatticeModel,
    /// Original strut id per compacted strut.
    pub strut_map: Vec<usize>,
    /// Original joint id per compacted joint.
    pub joint_map: Vec<usize>,
}

/// Builds a standalone model from the kept set, carrying over the supplied
/// areas, the supports on surviving joints, and fully kept cells.
pub fn compact_model(lattice: &LatticeModel, kept: &[bool], areas: &[f64]) -> ExtractedLattice {
    let strut_map: Vec<usize> = (0..lattice.struts.len()).filter(|&e| kept[e]).collect();
    let mut new_joint = vec![usize::MAX; lattice.joints.len()];
    let mut joint_map = Vec::new();
    for &e in &strut_map {
        for j in lattice.struts[e].joints {
            if new_joint[j] == usize::MAX {
                new_joint[j] = joint_map.len();
                joint_map.push(j);
            }
        }
    }
    let joints = joint_map.iter().map(|&j| lattice.joints[j].clone()).collect();
    let mut struts = Vec::with_capacity(strut_map.len());
    for &e in &strut_map {
        let mut s = lattice.struts[e].clone();
        s.joints = [new_joint[s.joints[0]], new_joint[s.joints[1]]];
        s.area = areas[e];
        struts.push(s);
    }
    let new_strut = {
        let mut map = vec![usize::MAX; lattice.struts.len()];
        for (i, &e) in strut_map.iter().enumerate() {
            map[e] = i;
        }
        map
    };
    let cells = lattice
        .cells
        .iter()
        .filter(|cell| cell.strut_ids().all(|e| kept[e]))
        .map(|cell| {
            let mut c = cell.clone();
            c.corner_joints = c.corner_joints.iter().map(|&j| new_joint[j]).collect();
            c.centre_joints = c.centre_joints.iter().map(|&j| new_joint[j]).collect();
            c.edge_struts = c.edge_struts.iter().map(|&e| new_strut[e]).collect();
            c.diagonal_struts = c.diagonal_struts.iter().map(|&e| new_strut[e]).collect();
            c
        })
        .collect();
    let supports = lattice
        .supports
        .iter()
        .filter(|s| new_joint[s.joint] != usize::MAX)
        .map(|s| JointSupport { joint: new_joint[s.joint], ..*s })
        .collect();
    let model = LatticeModel {
        joints,
        struts,
        cells,
        supports,
        youngs_modulus: lattice.youngs_modulus,
        dim: lattice.dim,
    };
    ExtractedLattice { model, strut_map, joint_map }
}
