//! Shape optimisation of lattice-skin structures by free-form deformation.
//!
//! Design variables are control-point displacements of an FFD prism wrapped
//! around the structure. Shell control vertices and unattached lattice
//! joints follow the prism through their frozen local coordinates; attached
//! joints follow the deformed shell surface, so lattice-shell conformality
//! is exact at every design. Compliance gradients use the frozen-field
//! identity dJ/dy = -2 dPi/dy, with the truss contribution analytic and the
//! shell contribution differenced per element; volume gradients are
//! analytic. Supports are kept immobile by restricting the design space to
//! the null space of their basis rows.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::extract::{extract, mechanism_count, reconstruct};
use crate::ffd::FfdPrism;
use crate::geometry::{Aabb, Point, Vec3};
use crate::lattice::JointSupport;
use crate::model::Structure;
use crate::optimizer::{minimise, NlpProblem, Options, Status};
use crate::parallel;
use crate::topopt::{
    run_topopt, run_topopt_with_observer, CoupledCompliance, TopOptOptions, TopOptOutcome,
    TrussCompliance,
};
use crate::couple::Coupler;

#[derive(Debug, Clone)]
pub struct ShapeOptions {
    /// Prism Bernstein degree per direction.
    pub degrees: [usize; 3],
    /// Relative margin of the prism box beyond the structure's bounds.
    pub inflate: f64,
    /// Design-variable bound as a fraction of the prism diagonal.
    pub bound_fraction: f64,
    /// Control-point grid indices excluded from the design.
    pub fixed_controls: Vec<usize>,
    pub optim: Options,
}

impl Default for ShapeOptions {
    fn default() -> Self {
        ShapeOptions {
            degrees: [2, 2, 2],
            inflate: 0.01,
            bound_fraction: 0.5,
            fixed_controls: Vec::new(),
            optim: Options::default(),
        }
    }
}

/// Precomputed surface basis of one attached joint; geometry independent.
struct AttachedBasis {
    verts: Vec<usize>,
    weights: Vec<f64>,
}

/// Shape optimisation problem over null-space design coordinates.
pub struct ShapeProblem<'a, 'o> {
    structure: &'a mut Structure,
    prism: FfdPrism,
    /// Null-space basis per axis over all control points; fixed control
    /// points and support constraints produce zero rows.
    reduction: [DMatrix<f64>; 3],
    offsets: [usize; 4],
    base_shell: Vec<Point>,
    base_joints: Vec<Point>,
    w_shell: Vec<Vec<f64>>,
    w_joint: Vec<Option<Vec<f64>>>,
    attached: Vec<Option<AttachedBasis>>,
    areas: Vec<f64>,
    volume_limit: f64,
    bound: f64,
    /// Finite-difference step per shell face.
    h_face: Vec<f64>,
    stashed: Option<Error>,
    best: Option<(Vec<f64>, f64)>,
    on_accept: Option<&'o mut dyn FnMut(usize, &Structure)>,
}

impl<'a, 'o> ShapeProblem<'a, 'o> {
    pub fn build(structure: &'a mut Structure, options: &ShapeOptions) -> Result<ShapeProblem<'a, 'o>> {
        structure.validate()?;
        let mut points: Vec<Point> = Vec::new();
        if let Some(skin) = &structure.skin {
            points.extend_from_slice(&skin.model.mesh.vertices);
        }
        if let Some(lattice) = &structure.lattice {
            points.extend(lattice.joints.iter().map(|j| j.position));
        }
        let bbox = Aabb::from_points(points.iter())
            .ok_or_else(|| Error::InvalidModel { reason: "structure has no nodes".into() })?;
        let mut prism = FfdPrism::new(&bbox, options.degrees, options.inflate)?;
        for &k in &options.fixed_controls {
            if k >= prism.n_controls() {
                return Err(Error::InvalidParameter {
                    what: "fixed control index".into(),
                    value: k as f64,
                    expected: format!("below {}", prism.n_controls()),
                });
            }
            prism.fixed[k] = true;
        }

        let base_shell: Vec<Point> = structure
            .skin
            .as_ref()
            .map_or(Vec::new(), |s| s.model.mesh.vertices.clone());
        let w_shell = base_shell
            .iter()
            .map(|&p| prism.weights(&prism.coordinates(p)?))
            .collect::<Result<Vec<_>>>()?;

        let mut base_joints = Vec::new();
        let mut w_joint = Vec::new();
        let mut attached = Vec::new();
        if let Some(lattice) = &structure.lattice {
            for joint in &lattice.joints {
                base_joints.push(joint.position);
                match (&joint.attachment, &structure.skin) {
                    (Some(at), Some(skin)) => {
                        let lp = skin.model.limit_evaluate(at.face, at.coord[0], at.coord[1]);
                        attached.push(Some(AttachedBasis { verts: lp.verts, weights: lp.n }));
                        w_joint.push(None);
                    }
                    _ => {
                        attached.push(None);
                        w_joint.push(Some(prism.weights(&prism.coordinates(joint.position)?)?));
                    }
                }
            }
        }

        // Support points must not move along their fixed axes: one basis row
        // per (support, fixed axis) restricts that axis' design space.
        let mut rows: [Vec<Vec<f64>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut add_rows = |fixed: &[bool; 3], weights: &Vec<f64>| {
            for a in 0..3 {
                if fixed[a] {
                    rows[a].push(weights.clone());
                }
            }
        };
        if let Some(skin) = &structure.skin {
            for s in &skin.supports {
                add_rows(&s.fixed, &w_shell[s.joint]);
            }
        }
        if let Some(lattice) = &structure.lattice {
            for s in &lattice.supports {
                let w = w_joint[s.joint]
                    .as_ref()
                    .ok_or_else(|| Error::InvalidModel {
                        reason: format!("support on attached joint {}", s.joint),
                    })?;
                add_rows(&s.fixed, w);
            }
        }
        let reduction = [
            null_basis(&rows[0], &prism.fixed),
            null_basis(&rows[1], &prism.fixed),
            null_basis(&rows[2], &prism.fixed),
        ];
        let mut offsets = [0; 4];
        for a in 0..3 {
            offsets[a + 1] = offsets[a] + reduction[a].ncols();
        }

        let h_face = structure.skin.as_ref().map_or(Vec::new(), |skin| {
            skin.model
                .mesh
                .faces
                .iter()
                .map(|f| {
                    let p: Vec<Point> = f.iter().map(|&v| base_shell[v]).collect();
                    let d = (p[2] - p[0]).norm().max((p[3] - p[1]).norm());
                    1e-6 * d
                })
                .collect()
        });

        let areas = structure.lattice.as_ref().map_or(Vec::new(), |l| l.areas());
        let volume_limit = structure.volume();
        let bound = options.bound_fraction * prism.diagonal();
        Ok(ShapeProblem {
            structure,
            prism,
            reduction,
            offsets,
            base_shell,
            base_joints,
            w_shell,
            w_joint,
            attached,
            areas,
            volume_limit,
            bound,
            h_face,
            stashed: None,
            best: None,
            on_accept: None,
        })
    }

    pub fn prism(&self) -> &FfdPrism {
        &self.prism
    }

    pub fn volume_limit(&self) -> f64 {
        self.volume_limit
    }

    /// Writes the design coordinates into the prism's control displacements.
    fn expand_design(&mut self, x: &[f64]) {
        for k in 0..self.prism.n_controls() {
            let mut d = Vec3::zeros();
            for a in 0..3 {
                let z = &x[self.offsets[a]..self.offsets[a + 1]];
                let basis = &self.reduction[a];
                for (m, &zm) in z.iter().enumerate() {
                    d[a] += basis[(k, m)] * zm;
                }
            }
            self.prism.displacements[k] = d;
        }
    }

    /// Moves every node of the structure to the design `x`.
    pub fn apply(&mut self, x: &[f64]) {
        self.expand_design(x);
        let prism = &self.prism;
        let offset = |w: &[f64]| {
            let mut d = Vec3::zeros();
            for (k, &wk) in w.iter().enumerate() {
                d += wk * prism.displacements[k];
            }
            d
        };
        if let Some(skin) = &mut self.structure.skin {
            let positions: Vec<Point> = self
                .base_shell
                .iter()
                .zip(&self.w_shell)
                .map(|(&p, w)| p + offset(w))
                .collect();
            skin.model.set_positions(&positions);
        }
        let skin = self.structure.skin.as_ref();
        if let Some(lattice) = &mut self.structure.lattice {
            for (j, joint) in lattice.joints.iter_mut().enumerate() {
                joint.position = match (&self.w_joint[j], &joint.attachment) {
                    (Some(w), _) => self.base_joints[j] + offset(w),
                    (None, Some(at)) => {
                        let skin = skin.expect("attached joint without skin");
                        skin.model.limit_evaluate(at.face, at.coord[0], at.coord[1]).frame.x
                    }
                    (None, None) => unreachable!("unattached joints carry prism weights"),
                };
            }
            lattice.refresh_cell_centroids();
        }
    }

    /// Frozen-displacement potential gradient per shell control vertex,
    /// differenced element by element.
    fn shell_potential_gradient(&self, shell_u: &[Vec3]) -> Vec<Vec3> {
        let Some(skin) = &self.structure.skin else {
            return Vec::new();
        };
        let model = &skin.model;
        let h_face = &self.h_face;
        let contributions: Vec<(Vec<usize>, Vec<Vec3>)> =
            parallel::map_indexed(model.face_count(), |face| {
                let verts = model.bases[face].verts.clone();
                let h = h_face[face];
                let mut positions = model.mesh.vertices.clone();
                let mut local = vec![Vec3::zeros(); verts.len()];
                for (slot, &v) in verts.iter().enumerate() {
                    for axis in 0..3 {
                        let keep = positions[v][axis];
                        positions[v][axis] = keep + h;
                        let plus = model.face_potential_at(
                            face,
                            &skin.material,
                            skin.pressure,
                            shell_u,
                            &positions,
                        );
                        positions[v][axis] = keep - h;
                        let minus = model.face_potential_at(
                            face,
                            &skin.material,
                            skin.pressure,
                            shell_u,
                            &positions,
                        );
                        positions[v][axis] = keep;
                        local[slot][axis] = (plus - minus) / (2.0 * h);
                    }
                }
                (verts, local)
            });
        let mut g = vec![Vec3::zeros(); model.vertex_count()];
        for (verts, local) in contributions {
            for (slot, &v) in verts.iter().enumerate() {
                g[v] += local[slot];
            }
        }
        g
    }

    /// Analytic strain-energy gradient per joint position at frozen
    /// displacements. W = E A (y.du)^2 / (2 l^3) per strut with y = x1 - x0.
    fn truss_potential_gradient(&self, lattice_u: &[Vec3]) -> Vec<Vec3> {
        let Some(lattice) = &self.structure.lattice else {
            return Vec::new();
        };
        let mut g = vec![Vec3::zeros(); lattice.joints.len()];
        for (e, s) in lattice.struts.iter().enumerate() {
            let [j0, j1] = s.joints;
            let y = lattice.joints[j1].position - lattice.joints[j0].position;
            let l = y.norm();
            let du = lattice_u[j1] - lattice_u[j0];
            let c = y.dot(&du);
            let ea = lattice.youngs_modulus * self.areas[e];
            let dwdy = ea * c / l.powi(3) * du - 1.5 * ea * c * c / l.powi(5) * y;
            g[j1] += dwdy;
            g[j0] -= dwdy;
        }
        g
    }

    /// Pushes attached-joint contributions onto shell control vertices and
    /// chains both node families to control-point displacement derivatives.
    fn chain_to_controls(&self, mut g_shell: Vec<Vec3>, g_joint: &[Vec3]) -> Vec<Vec3> {
        for (j, basis) in self.attached.iter().enumerate() {
            if let Some(basis) = basis {
                for (i, &v) in basis.verts.iter().enumerate() {
                    g_shell[v] += basis.weights[i] * g_joint[j];
                }
            }
        }
        let mut g = vec![Vec3::zeros(); self.prism.n_controls()];
        for (i, w) in self.w_shell.iter().enumerate() {
            for (k, &wk) in w.iter().enumerate() {
                g[k] += wk * g_shell[i];
            }
        }
        for (j, w) in self.w_joint.iter().enumerate() {
            if let Some(w) = w {
                for (k, &wk) in w.iter().enumerate() {
                    g[k] += wk * g_joint[j];
                }
            }
        }
        g
    }

    fn reduce_gradient(&self, g_control: &[Vec3], scale: f64, grad: &mut [f64]) {
        for a in 0..3 {
            let basis = &self.reduction[a];
            for m in 0..basis.ncols() {
                let mut s = 0.0;
                for k in 0..basis.nrows() {
                    s += basis[(k, m)] * g_control[k][a];
                }
                grad[self.offsets[a] + m] = scale * s;
            }
        }
    }

    pub fn stashed_error(&mut self) -> Option<Error> {
        self.stashed.take()
    }

    fn current_volume(&self) -> f64 {
        self.structure.volume()
    }

    /// Compliance and its gradient per control-point displacement at the
    /// design `x`. Fixed control points report a zero gradient.
    pub fn compliance_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<Vec3>)> {
        self.apply(x);
        let analysis = self.structure.analyze()?;
        let g_shell = self.shell_potential_gradient(&analysis.shell_u);
        let g_joint = self.truss_potential_gradient(&analysis.lattice_u);
        let mut g = self.chain_to_controls(g_shell, &g_joint);
        for (k, g_k) in g.iter_mut().enumerate() {
            *g_k = if self.prism.fixed[k] { Vec3::zeros() } else { -2.0 * *g_k };
        }
        Ok((analysis.compliance, g))
    }

    /// Material volume and its gradient per control-point displacement at
    /// the design `x`. Fixed control points report a zero gradient.
    pub fn volume_gradient(&mut self, x: &[f64]) -> (f64, Vec<Vec3>) {
        self.apply(x);
        let mut g_shell = Vec::new();
        if let Some(skin) = &self.structure.skin {
            let (_, da) = skin.model.area_and_derivative();
            g_shell = da;
            for v in &mut g_shell {
                *v *= skin.material.thickness;
            }
        }
        let mut g_joint = Vec::new();
        if let Some(lattice) = &self.structure.lattice {
            g_joint = vec![Vec3::zeros(); lattice.joints.len()];
            for (e, s) in lattice.struts.iter().enumerate() {
                let [j0, j1] = s.joints;
                let y = lattice.joints[j1].position - lattice.joints[j0].position;
                let dir = y / y.norm();
                g_joint[j1] += self.areas[e] * dir;
                g_joint[j0] -= self.areas[e] * dir;
            }
        }
        let mut g = self.chain_to_controls(g_shell, &g_joint);
        for (k, g_k) in g.iter_mut().enumerate() {
            if self.prism.fixed[k] {
                *g_k = Vec3::zeros();
            }
        }
        (self.current_volume(), g)
    }
}

/// Orthonormal basis of the subspace where all constraint rows vanish,
/// excluding fixed control points entirely.
fn null_basis(rows: &[Vec<f64>], fixed: &[bool]) -> DMatrix<f64> {
    let n = fixed.len();
    let free: Vec<usize> = (0..n).filter(|&k| !fixed[k]).collect();
    let nf = free.len();
    if nf == 0 {
        return DMatrix::zeros(n, 0);
    }
    if rows.is_empty() {
        let mut basis = DMatrix::zeros(n, nf);
        for (m, &k) in free.iter().enumerate() {
            basis[(k, m)] = 1.0;
        }
        return basis;
    }
    let mut ata = DMatrix::<f64>::zeros(nf, nf);
    for row in rows {
        for (a, &ka) in free.iter().enumerate() {
            for (b, &kb) in free.iter().enumerate() {
                ata[(a, b)] += row[ka] * row[kb];
            }
        }
    }
    let eig = ata.symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(1.0f64, f64::max);
    let tol = 1e-12 * max;
    let mut null_cols = Vec::new();
    for m in 0..nf {
        if eig.eigenvalues[m].abs() <= tol {
            null_cols.push(m);
        }
    }
    let mut basis = DMatrix::zeros(n, null_cols.len());
    for (m, &col) in null_cols.iter().enumerate() {
        for (a, &k) in free.iter().enumerate() {
            basis[(k, m)] = eig.eigenvectors[(a, col)];
        }
    }
    basis
}

impl NlpProblem for ShapeProblem<'_, '_> {
    fn dim(&self) -> usize {
        self.offsets[3]
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-self.bound; self.dim()], vec![self.bound; self.dim()])
    }

    fn objective(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (compliance, g_control) = match self.compliance_gradient(x) {
            Ok(pair) => pair,
            Err(err) => {
                self.stashed = Some(err);
                return f64::NAN;
            }
        };
        self.reduce_gradient(&g_control, 1.0, grad);

        let feasible = self.current_volume() <= self.volume_limit * (1.0 + 1e-6);
        if feasible && self.best.as_ref().is_none_or(|(_, j)| compliance < *j) {
            self.best = Some((x.to_vec(), compliance));
        }
        compliance
    }

    fn constraint(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        let (volume, g_control) = self.volume_gradient(x);
        self.reduce_gradient(&g_control, 1.0 / self.volume_limit, grad);
        Some(volume / self.volume_limit - 1.0)
    }

    fn accepted(&mut self, iter: usize, x: &[f64]) {
        if self.on_accept.is_some() {
            // Re-apply so the reported geometry matches the iterate even if
            // the last evaluation probed a different trial point.
            self.apply(x);
            if let Some(obs) = self.on_accept.as_mut() {
                obs(iter, &*self.structure);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShapeOutcome {
    pub objective: f64,
    pub volume: f64,
    pub status: Status,
    pub iterations: usize,
    pub history: Vec<crate::optimizer::HistoryEntry>,
    /// The deformed prism at the final design.
    pub prism: FfdPrism,
}

/// Optimises the structure's shape in place and reports the final state.
pub fn run_shapeopt(structure: &mut Structure, options: &ShapeOptions) -> Result<ShapeOutcome> {
    run_shapeopt_with_observer(structure, options, None)
}

/// [`run_shapeopt`] with a geometry observer; it receives the iteration
/// index and the structure at the start point and after every accepted
/// optimiser step.
pub fn run_shapeopt_with_observer(
    structure: &mut Structure,
    options: &ShapeOptions,
    observer: Option<&mut dyn FnMut(usize, &Structure)>,
) -> Result<ShapeOutcome> {
    let mut problem = ShapeProblem::build(structure, options)?;
    problem.on_accept = observer;
    if problem.dim() == 0 {
        let analysis = problem.structure.analyze()?;
        let volume = problem.current_volume();
        let prism = problem.prism.clone();
        return Ok(ShapeOutcome {
            objective: analysis.compliance,
            volume,
            status: Status::Converged,
            iterations: 0,
            history: Vec::new(),
            prism,
        });
    }
    let x0 = vec![0.0; problem.dim()];
    match minimise(&mut problem, &x0, &options.optim) {
        Ok(result) => {
            problem.apply(&result.x);
            Ok(ShapeOutcome {
                objective: result.objective,
                volume: problem.current_volume(),
                status: result.status,
                iterations: result.iterations,
                history: result.history,
                prism: problem.prism.clone(),
            })
        }
        Err(optim_err) => {
            // Fall back to the best feasible iterate seen before the failure.
            if let Some(err) = problem.stashed_error() {
                if problem.best.is_none() {
                    return Err(err);
                }
            }
            let Some((x, objective)) = problem.best.clone() else {
                return Err(optim_err);
            };
            problem.apply(&x);
            Ok(ShapeOutcome {
                objective,
                volume: problem.current_volume(),
                status: Status::Stalled,
                iterations: 0,
                history: Vec::new(),
                prism: problem.prism.clone(),
            })
        }
    }
}

/// Inflates the structure by a scaled copy of its own deflection: every
/// shell control vertex and lattice joint moves by `scale` times its
/// displacement under the current loads. Attached joints remain exactly on
/// the shell surface because the limit surface is linear in its control
/// points.
pub fn form_find(structure: &mut Structure, scale: f64) -> Result<()> {
    let analysis = structure.analyze()?;
    if let Some(skin) = &mut structure.skin {
        let positions: Vec<Point> = skin
            .model
            .mesh
            .vertices
            .iter()
            .zip(&analysis.shell_u)
            .map(|(&p, &u)| p + scale * u)
            .collect();
        skin.model.set_positions(&positions);
    }
    if let Some(lattice) = &mut structure.lattice {
        for (joint, &u) in lattice.joints.iter_mut().zip(&analysis.lattice_u) {
            joint.position += scale * u;
        }
        lattice.refresh_cell_centroids();
    }
    Ok(())
}

pub struct SequentialOutcome {
    pub shape: ShapeOutcome,
    pub topology: TopOptOutcome,
    /// Reconstructed kept set over the original strut ids.
    pub kept: Vec<bool>,
    /// Zero-energy modes of the reconstructed lattice.
    pub mechanisms: usize,
}

/// Optimises shape first, then the lattice infill on the frozen shape, and
/// finally extracts and reconstructs the kept lattice.
pub fn run_sequential(
    structure: &mut Structure,
    shape_options: &ShapeOptions,
    topopt_options: &TopOptOptions,
    extraction_threshold: f64,
) -> Result<SequentialOutcome> {
    run_sequential_with_observers(structure, shape_options, topopt_options, extraction_threshold, None, None)
}

/// [`run_sequential`] with per-stage observers: `shape_observer` sees the
/// structure at every accepted shape iterate, `density_observer` the
/// relative densities at every accepted infill iterate.
pub fn run_sequential_with_observers(
    structure: &mut Structure,
    shape_options: &ShapeOptions,
    topopt_options: &TopOptOptions,
    extraction_threshold: f64,
    shape_observer: Option<&mut dyn FnMut(usize, &Structure)>,
    density_observer: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<SequentialOutcome> {
    if structure.lattice.is_none() {
        return Err(Error::InvalidModel { reason: "sequential optimisation needs a lattice".into() });
    }
    let shape = run_shapeopt_with_observer(structure, shape_options, shape_observer)?;

    let topology = match &structure.skin {
        Some(skin) => {
            let lattice = structure.lattice.as_ref().unwrap();
            let coupler = Coupler::new(&skin.model, &skin.material, &skin.supports, lattice)?;
            let mut solver = CoupledCompliance {
                coupler: &coupler,
                lattice,
                lattice_loads: structure.lattice_loads.clone(),
                shell_loads: skin.loads(),
            };
            run_topopt_with_observer(lattice, &mut solver, topopt_options, density_observer)?
        }
        None => {
            let lattice = structure.lattice.as_ref().unwrap();
            let mut solver =
                TrussCompliance { lattice, loads: structure.lattice_loads.clone() };
            run_topopt_with_observer(lattice, &mut solver, topopt_options, density_observer)?
        }
    };

    let lattice = structure.lattice.as_mut().unwrap();
    lattice.set_areas(&topology.areas);
    let kept = extract(lattice, &topology.areas, extraction_threshold)?;
    let kept = reconstruct(lattice, &kept);
    // Attached joints are held by the shell; treat them as supported for
    // the mechanism screen.
    let mut supports = lattice.supports.clone();
    for (j, joint) in lattice.joints.iter().enumerate() {
        if joint.attachment.is_some() {
            supports.push(JointSupport { joint: j, fixed: [true; 3] });
        }
    }
    let mechanisms = mechanism_count(lattice, &kept, &supports)?;
    Ok(SequentialOutcome { shape, topology, kept, mechanisms })
}

/// Runs a topology optimisation on the structure in place (no shape stage)
/// and applies the optimised areas to the lattice.
pub fn run_structure_topopt(
    structure: &mut Structure,
    options: &TopOptOptions,
) -> Result<TopOptOutcome> {
    if structure.lattice.is_none() {
        return Err(Error::InvalidModel { reason: "topology optimisation needs a lattice".into() });
    }
    let outcome = match &structure.skin {
        Some(skin) => {
            let lattice = structure.lattice.as_ref().unwrap();
            let coupler = Coupler::new(&skin.model, &skin.material, &skin.supports, lattice)?;
            let mut solver = CoupledCompliance {
                coupler: &coupler,
                lattice,
                lattice_loads: structure.lattice_loads.clone(),
                shell_loads: skin.loads(),
            };
            run_topopt(lattice, &mut solver, options)?
        }
        None => {
            let lattice = structure.lattice.as_ref().unwrap();
            let mut solver =
                TrussCompliance { lattice, loads: structure.lattice_loads.clone() };
            run_topopt(lattice, &mut solver, options)?
        }
    };
    structure.lattice.as_mut().unwrap().set_areas(&outcome.areas);
    Ok(outcome)
}
