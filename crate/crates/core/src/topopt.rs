//! Compliance-minimising infill optimisation of strut cross sections.
//!
//! Design variables are relative densities rho_e = A_e / reference area,
//! penalised when mapped to stiffness so intermediate values pay more
//! volume than they earn stiffness. Sensitivities are smoothed by a
//! cell-based filter before the density update.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::lattice::{LatticeModel, StrutGeometry};
use crate::optimizer::{self, HistoryEntry, NlpProblem, OptimResult, Options, Status};
use crate::penalise::{Penalisation, RHO_MIN, STIFFNESS_FLOOR};
use crate::truss::{self, PointLoad};

/// Solves the state problem for given effective strut areas and returns
/// lattice joint displacements plus the work of all applied loads.
pub trait ComplianceSolver {
    fn solve(&mut self, areas: &[f64]) -> Result<(Vec<Vec3>, f64)>;
}

/// Free-standing truss backend.
pub struct TrussCompliance<'a> {
    pub lattice: &'a LatticeModel,
    pub loads: Vec<PointLoad>,
}

impl ComplianceSolver for TrussCompliance<'_> {
    fn solve(&mut self, areas: &[f64]) -> Result<(Vec<Vec3>, f64)> {
        let system = truss::assemble_truss(self.lattice, areas)?;
        let sol = truss::solve_truss(&system, &self.loads)?;
        Ok((sol.u, sol.compliance))
    }
}

/// Lattice coupled to a shell skin; shell loads ride along unchanged.
pub struct CoupledCompliance<'a> {
    pub coupler: &'a crate::couple::Coupler,
    pub lattice: &'a LatticeModel,
    pub lattice_loads: Vec<PointLoad>,
    pub shell_loads: Vec<Vec3>,
}

impl ComplianceSolver for CoupledCompliance<'_> {
    fn solve(&mut self, areas: &[f64]) -> Result<(Vec<Vec3>, f64)> {
        let sol = crate::couple::solve_coupled(
            self.coupler,
            self.lattice,
            areas,
            &self.lattice_loads,
            &self.shell_loads,
        )?;
        Ok((sol.lattice_u, sol.compliance))
    }
}

/// Sensitivity filter over unit cells. A cell collects the length-scaled
/// sensitivities of all struts belonging to cells whose centroid lies
/// within the radius; a strut then takes the mean of its owning cells.
pub struct SensitivityFilter {
    /// Per cell: (strut, weight / strut length) terms and the weight sum.
    cell_terms: Vec<(Vec<(usize, f64)>, f64)>,
    /// Cells owning each strut.
    strut_owners: Vec<Vec<usize>>,
}

impl SensitivityFilter {
    pub fn build(lattice: &LatticeModel, radius: f64) -> Result<SensitivityFilter> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter {
                what: "filter radius".into(),
                value: radius,
                expected: "a positive length".into(),
            });
        }
        let geometry = truss::strut_geometries(lattice)?;
        let n_cells = lattice.cells.len();
        let mut cell_terms = Vec::with_capacity(n_cells);
        for c in 0..n_cells {
            let centre = lattice.cells[c].centroid;
            let mut terms: Vec<(usize, f64)> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            let mut denom = 0.0;
            for other in &lattice.cells {
                if (other.centroid - centre).norm() > radius + 1e-12 {
                    continue;
                }
                for e in other.strut_ids() {
                    if !seen.insert(e) {
                        continue;
                    }
                    let w = (radius - (geometry[e].centroid - centre).norm()).max(0.0);
                    if w > 0.0 {
                        let wl = w / geometry[e].length;
                        terms.push((e, wl));
                        denom += wl;
                    }
                }
            }
            if denom <= 0.0 {
                return Err(Error::EmptyFilterSupport { cell: c });
            }
            terms.sort_unstable_by_key(|&(e, _)| e);
            cell_terms.push((terms, denom));
        }
        Ok(SensitivityFilter { cell_terms, strut_owners: lattice.strut_owners() })
    }

    /// Smooths per-strut sensitivities; struts outside every cell keep
    /// their raw value.
    pub fn apply(&self, sens: &[f64]) -> Vec<f64> {
        let cell_values: Vec<f64> = self
            .cell_terms
            .iter()
            .map(|(terms, denom)| terms.iter().map(|&(e, wl)| wl * sens[e]).sum::<f64>() / denom)
            .collect();
        sens.iter()
            .enumerate()
            .map(|(e, &raw)| {
                let owners = &self.strut_owners[e];
                if owners.is_empty() {
                    raw
                } else {
                    owners.iter().map(|&c| cell_values[c]).sum::<f64>() / owners.len() as f64
                }
            })
            .collect()
    }
}

/// Maps relative densities to the effective areas used for stiffness.
pub fn effective_areas(lattice: &LatticeModel, pen: &Penalisation, rho: &[f64]) -> Vec<f64> {
    lattice
        .struts
        .iter()
        .zip(rho)
        .map(|(s, &r)| pen.value(r).max(STIFFNESS_FLOOR) * s.reference_area)
        .collect()
}

/// Compliance and its unfiltered density gradient at one design point.
pub fn compliance_and_sensitivity(
    lattice: &LatticeModel,
    geometry: &[StrutGeometry],
    solver: &mut dyn ComplianceSolver,
    pen: &Penalisation,
    rho: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let areas = effective_areas(lattice, pen, rho);
    let (u, compliance) = solver.solve(&areas)?;
    let e_mod = lattice.youngs_modulus;
    let grad = lattice
        .struts
        .iter()
        .enumerate()
        .map(|(e, s)| {
            let c = truss::axial_elongation(lattice, geometry, &u, e);
            let per_area = e_mod * c * c / geometry[e].length;
            -pen.derivative(rho[e]) * per_area * s.reference_area
        })
        .collect();
    Ok((compliance, grad))
}

#[derive(Debug, Clone)]
pub struct TopOptOptions {
    pub volume_fraction: f64,
    pub penalisation: Penalisation,
    pub filter_radius: f64,
    pub optim: Options,
    pub rho_min: f64,
}

impl TopOptOptions {
    pub fn new(volume_fraction: f64, penalisation: Penalisation, filter_radius: f64) -> Self {
        let mut optim = Options::default();
        optim.method = optimizer::Method::ProjectedGradient;
        TopOptOptions { volume_fraction, penalisation, filter_radius, optim, rho_min: RHO_MIN }
    }
}

pub struct TopOptOutcome {
    /// Final relative densities.
    pub rho: Vec<f64>,
    /// Physical areas rho times reference, without penalisation.
    pub areas: Vec<f64>,
    pub compliance: f64,
    pub volume_fraction: f64,
    pub status: Status,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
}

struct InfillProblem<'a, 'o> {
    lattice: &'a LatticeModel,
    geometry: Vec<StrutGeometry>,
    solver: &'a mut dyn ComplianceSolver,
    pen: Penalisation,
    filter: SensitivityFilter,
    lin_coeff: Vec<f64>,
    volume_fraction: f64,
    rho_min: f64,
    last_error: Option<Error>,
    observer: Option<&'o mut dyn FnMut(usize, &[f64])>,
}

impl NlpProblem for InfillProblem<'_, '_> {
    fn accepted(&mut self, iter: usize, x: &[f64]) {
        if let Some(obs) = self.observer.as_mut() {
            obs(iter, x);
        }
    }

    fn dim(&self) -> usize {
        self.lattice.struts.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![self.rho_min; self.dim()], vec![1.0; self.dim()])
    }

    fn objective(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let areas = effective_areas(self.lattice, &self.pen, x);
        let (u, compliance) = match self.solver.solve(&areas) {
            Ok(pair) => pair,
            Err(err) => {
                self.last_error = Some(err);
                return f64::NAN;
            }
        };
        let e_mod = self.lattice.youngs_modulus;
        let per_area: Vec<f64> = (0..self.dim())
            .map(|e| {
                let c = truss::axial_elongation(self.lattice, &self.geometry, &u, e);
                -self.pen.derivative(x[e]) * e_mod * c * c / self.geometry[e].length
            })
            .collect();
        let filtered = self.filter.apply(&per_area);
        for (e, g) in grad.iter_mut().enumerate() {
            *g = filtered[e] * self.lattice.struts[e].reference_area;
        }
        compliance
    }

    fn linear_constraint(&self) -> Option<(Vec<f64>, f64)> {
        Some((self.lin_coeff.clone(), self.volume_fraction))
    }

    fn constraint(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        grad.copy_from_slice(&self.lin_coeff);
        let value: f64 = x.iter().zip(&self.lin_coeff).map(|(a, b)| a * b).sum();
        Some(value - self.volume_fraction)
    }
}

/// Runs the infill optimisation from a uniform density at the volume bound.
pub fn run_topopt(
    lattice: &LatticeModel,
    solver: &mut dyn ComplianceSolver,
    options: &TopOptOptions,
) -> Result<TopOptOutcome> {
    run_topopt_with_observer(lattice, solver, options, None)
}

/// [`run_topopt`] with a density observer; it receives the iteration index
/// and the current relative densities at the start point and after every
/// accepted optimiser step.
pub fn run_topopt_with_observer(
    lattice: &LatticeModel,
    solver: &mut dyn ComplianceSolver,
    options: &TopOptOptions,
    observer: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<TopOptOutcome> {
    if !(options.volume_fraction > 0.0 && options.volume_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            what: "volume fraction".into(),
            value: options.volume_fraction,
            expected: "a value in (0, 1]".into(),
        });
    }
    let geometry = truss::strut_geometries(lattice)?;
    let reference_volume: f64 = lattice
        .struts
        .iter()
        .zip(&geometry)
        .map(|(s, g)| s.reference_area * g.length)
        .sum();
    let lin_coeff: Vec<f64> = lattice
        .struts
        .iter()
        .zip(&geometry)
        .map(|(s, g)| s.reference_area * g.length / reference_volume)
        .collect();
    let filter = SensitivityFilter::build(lattice, options.filter_radius)?;

    let mut problem = InfillProblem {
        lattice,
        geometry,
        solver,
        pen: options.penalisation.clone(),
        filter,
        lin_coeff,
        volume_fraction: options.volume_fraction,
        rho_min: options.rho_min,
        last_error: None,
        observer,
    };
    let x0 = vec![options.volume_fraction.clamp(options.rho_min, 1.0); problem.dim()];
    let result = optimizer::minimise(&mut problem, &x0, &options.optim);
    let result: OptimResult = match result {
        Ok(r) => r,
        Err(optim_err) => {
            return Err(problem.last_error.take().unwrap_or(optim_err));
        }
    };

    let rho = result.x;
    let areas: Vec<f64> = lattice
        .struts
        .iter()
        .zip(&rho)
        .map(|(s, &r)| r * s.reference_area)
        .collect();
    let volume_fraction: f64 = rho.iter().zip(&problem.lin_coeff).map(|(r, a)| r * a).sum();
    Ok(TopOptOutcome {
        rho,
        areas,
        compliance: result.objective,
        volume_fraction,
        status: result.status,
        iterations: result.iterations,
        history: result.history,
    })
}
