//! A complete structure: an optional truss lattice, an optional shell skin,
//! and the loads on each. Analysis dispatches to the truss, shell, or
//! coupled solver depending on which parts are present.

use crate::couple::{attach_by_projection, solve_coupled, Coupler};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::lattice::{lattice_volume, JointSupport, LatticeModel};
use crate::shell::{solve_shell, ShellMaterial, ShellModel};
use crate::truss::{assemble_truss, solve_truss, PointLoad};

/// Shell skin with its material, control-vertex supports, and dead load.
pub struct Skin {
    pub model: ShellModel,
    pub material: ShellMaterial,
    pub supports: Vec<JointSupport>,
    /// Constant dead load per unit reference area.
    pub pressure: Vec3,
}

impl Skin {
    /// Consistent nodal loads of the dead pressure at current geometry.
    pub fn loads(&self) -> Vec<Vec3> {
        self.model.pressure_load(self.pressure)
    }
}

pub struct Structure {
    pub lattice: Option<LatticeModel>,
    pub skin: Option<Skin>,
    pub lattice_loads: Vec<PointLoad>,
}

/// Displacements and compliance of one linear solve.
pub struct Analysis {
    pub compliance: f64,
    pub lattice_u: Vec<Vec3>,
    pub shell_u: Vec<Vec3>,
    /// Forces the lattice exerts on the shell at attached joints; empty
    /// unless both parts are present.
    pub coupling_forces: Vec<Vec3>,
}

impl Structure {
    pub fn lattice_only(lattice: LatticeModel, loads: Vec<PointLoad>) -> Structure {
        Structure { lattice: Some(lattice), skin: None, lattice_loads: loads }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice.is_none() && self.skin.is_none() {
            return Err(Error::InvalidModel { reason: "structure has neither lattice nor skin".into() });
        }
        if self.lattice.is_none() && !self.lattice_loads.is_empty() {
            return Err(Error::InvalidModel { reason: "lattice loads without a lattice".into() });
        }
        if let Some(lattice) = &self.lattice {
            lattice.validate()?;
        }
        Ok(())
    }

    /// Material volume: shell area times thickness plus strut volumes.
    pub fn volume(&self) -> f64 {
        let shell = self
            .skin
            .as_ref()
            .map_or(0.0, |s| s.model.area() * s.material.thickness);
        let lattice = self.lattice.as_ref().map_or(0.0, lattice_volume);
        shell + lattice
    }

    /// Attaches lattice joints within `tol` of the skin to its limit
    /// surface; returns how many joints attached.
    pub fn attach(&mut self, tol: f64) -> Result<usize> {
        let skin = self
            .skin
            .as_ref()
            .ok_or_else(|| Error::InvalidModel { reason: "attach needs a skin".into() })?;
        let lattice = self
            .lattice
            .as_mut()
            .ok_or_else(|| Error::InvalidModel { reason: "attach needs a lattice".into() })?;
        attach_by_projection(lattice, &skin.model, tol)
    }

    /// Solves the structure at its current geometry and areas.
    pub fn analyze(&self) -> Result<Analysis> {
        self.validate()?;
        match (&self.lattice, &self.skin) {
            (Some(lattice), None) => {
                let system = assemble_truss(lattice, &lattice.areas())?;
                let solution = solve_truss(&system, &self.lattice_loads)?;
                Ok(Analysis {
                    compliance: solution.compliance,
                    lattice_u: solution.u,
                    shell_u: Vec::new(),
                    coupling_forces: Vec::new(),
                })
            }
            (None, Some(skin)) => {
                let solution = solve_shell(&skin.model, &skin.material, &skin.supports, &skin.loads())?;
                Ok(Analysis {
                    compliance: solution.compliance,
                    lattice_u: Vec::new(),
                    shell_u: solution.u,
                    coupling_forces: Vec::new(),
                })
            }
            (Some(lattice), Some(skin)) => {
                let coupler = Coupler::new(&skin.model, &skin.material, &skin.supports, lattice)?;
                let solution = solve_coupled(
                    &coupler,
                    lattice,
                    &lattice.areas(),
                    &self.lattice_loads,
                    &skin.loads(),
                )?;
                Ok(Analysis {
                    compliance: solution.compliance,
                    lattice_u: solution.lattice_u,
                    shell_u: solution.shell_u,
                    coupling_forces: solution.coupling_forces,
                })
            }
            (None, None) => unreachable!("validate rejects empty structures"),
        }
    }
}
