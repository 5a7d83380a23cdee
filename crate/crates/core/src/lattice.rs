//! Lattice models: joints, struts, unit cells, and grid generation from
//! cell templates with joint/strut deduplication.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, MergeGrid, Point, Vec3};

/// Parametric location of a lattice joint on the shell mid-surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellAttachment {
    pub face: usize,
    pub coord: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub position: Point,
    pub attachment: Option<ShellAttachment>,
}

#[derive(Debug, Clone)]
pub struct Strut {
    pub joints: [usize; 2],
    /// Current cross-sectional area.
    pub area: f64,
    /// Reference area used to define the relative density area/reference.
    pub reference_area: f64,
}

/// One instance of a cell template. Edge struts may be shared with
/// neighbouring cells; diagonal struts belong to exactly this cell.
#[derive(Debug, Clone)]
pub struct UnitCell {
    pub corner_joints: Vec<usize>,
    pub centre_joints: Vec<usize>,
    pub edge_struts: Vec<usize>,
    pub diagonal_struts: Vec<usize>,
    pub centroid: Point,
    pub template: String,
    pub size: Vec3,
}

impl UnitCell {
    pub fn strut_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.edge_struts.iter().chain(self.diagonal_struts.iter()).copied()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JointSupport {
    pub joint: usize,
    pub fixed: [bool; 3],
}

#[derive(Debug, Clone)]
pub struct LatticeModel {
    pub joints: Vec<Joint>,
    pub struts: Vec<Strut>,
    pub cells: Vec<UnitCell>,
    pub supports: Vec<JointSupport>,
    pub youngs_modulus: f64,
    /// Spatial dimension of the model, 2 or 3. In 2D all z coordinates are
    /// zero and z displacements are constrained implicitly.
    pub dim: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct StrutGeometry {
    pub length: f64,
    pub centroid: Point,
    pub direction: Vec3,
}

impl LatticeModel {
    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.joints.iter().map(|j| &j.position))
            .expect("lattice has at least one joint")
    }

    pub fn areas(&self) -> Vec<f64> {
        self.struts.iter().map(|s| s.area).collect()
    }

    pub fn set_areas(&mut self, areas: &[f64]) {
        assert_eq!(areas.len(), self.struts.len());
        for (s, &a) in self.struts.iter_mut().zip(areas) {
            s.area = a;
        }
    }

    pub fn reference_areas(&self) -> Vec<f64> {
        self.struts.iter().map(|s| s.reference_area).collect()
    }

    /// Scales every strut area by `factor`.
    pub fn scale_areas(&mut self, factor: f64) {
        for s in &mut self.struts {
            s.area *= factor;
        }
    }

    pub fn strut_geometry(&self, strut: usize) -> Result<StrutGeometry> {
        let s = &self.struts[strut];
        let a = self.joints[s.joints[0]].position;
        let b = self.joints[s.joints[1]].position;
        let d = b - a;
        let length = d.norm();
        if length <= 0.0 {
            return Err(Error::DegenerateStrut { strut });
        }
        Ok(StrutGeometry {
            length,
            centroid: Point::from((a.coords + b.coords) * 0.5),
            direction: d / length,
        })
    }

    pub fn strut_length(&self, strut: usize) -> f64 {
        let s = &self.struts[strut];
        (self.joints[s.joints[1]].position - self.joints[s.joints[0]].position).norm()
    }

    /// Owning cells of every strut, in ascending cell order.
    pub fn strut_owners(&self) -> Vec<Vec<usize>> {
        let mut owners = vec![Vec::new(); self.struts.len()];
        for (c, cell) in self.cells.iter().enumerate() {
            for s in cell.strut_ids() {
                owners[s].push(c);
            }
        }
        owners
    }

    /// Recomputes cell centroids from corner joints, e.g. after the joints
    /// moved under a shape update.
    pub fn refresh_cell_centroids(&mut self) {
        for c in 0..self.cells.len() {
            let mut sum = Vec3::zeros();
            for &j in &self.cells[c].corner_joints {
                sum += self.joints[j].position.coords;
            }
            self.cells[c].centroid = Point::from(sum / self.cells[c].corner_joints.len() as f64);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, j) in self.joints.iter().enumerate() {
            if !j.position.coords.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidModel { reason: format!("joint {i} has non-finite position") });
            }
        }
        for (i, s) in self.struts.iter().enumerate() {
            if s.joints[0] == s.joints[1] || s.joints.iter().any(|&j| j >= self.joints.len()) {
                return Err(Error::InvalidModel { reason: format!("strut {i} has invalid joints") });
            }
            if !(s.area > 0.0) || !(s.reference_area > 0.0) {
                return Err(Error::InvalidModel { reason: format!("strut {i} has non-positive area") });
            }
            self.strut_geometry(i)?;
        }
        for cell in &self.cells {
            for s in cell.strut_ids() {
                if s >= self.struts.len() {
                    return Err(Error::InvalidModel { reason: "cell references missing strut".into() });
                }
            }
        }
        for s in &self.supports {
            if s.joint >= self.joints.len() {
                return Err(Error::InvalidModel { reason: "support references missing joint".into() });
            }
        }
        // Diagonals are owned by exactly one cell.
        let owners = self.strut_owners();
        for cell in &self.cells {
            for &d in &cell.diagonal_struts {
                if owners[d].len() != 1 {
                    return Err(Error::InvalidModel {
                        reason: format!("diagonal strut {d} owned by {} cells", owners[d].len()),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Total material volume, the sum of area times length over all struts.
pub fn lattice_volume(model: &LatticeModel) -> f64 {
    model
        .struts
        .iter()
        .enumerate()
        .map(|(i, s)| s.area * model.strut_length(i))
        .sum()
}

/// A cell template: joint layout in the unit cube and strut connectivity,
/// split into edge struts (sharable between neighbouring cells) and
/// diagonal struts (private to the instantiating cell).
#[derive(Debug, Clone)]
pub struct CellTemplate {
    pub name: String,
    pub dim: usize,
    /// Local joint coordinates in [0,1]^dim; the first `corner_count`
    /// entries are the cell corners.
    pub joints: Vec<[f64; 3]>,
    pub corner_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub diagonals: Vec<(usize, usize)>,
}

impl CellTemplate {
    /// 2D square cell: 4 corners and a centre joint, 4 edge struts and
    /// 4 half-diagonals from the corners to the centre.
    pub fn square_x2d() -> Self {
        CellTemplate {
            name: "square-x2d".into(),
            dim: 2,
            joints: vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.5, 0.5, 0.0],
            ],
            corner_count: 4,
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            diagonals: vec![(0, 4), (1, 4), (2, 4), (3, 4)],
        }
    }

    /// 3D body-centred cubic cell: 8 corners and a body centre, 12 cube
    /// edges and 8 corner-to-centre diagonals.
    pub fn bcc3d() -> Self {
        CellTemplate {
            name: "bcc3d".into(),
            dim: 3,
            joints: vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 1.0],
                [1.0, 1.0, 1.0],
                [0.0, 1.0, 1.0],
                [0.5, 0.5, 0.5],
            ],
            corner_count: 8,
            edges: vec![
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 0),
                (4, 5),
                (5, 6),
                (6, 7),
                (7, 4),
                (0, 4),
                (1, 5),
                (2, 6),
                (3, 7),
            ],
            diagonals: (0..8).map(|i| (i, 8)).collect(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "square-x2d" => Some(Self::square_x2d()),
            "bcc3d" => Some(Self::bcc3d()),
            _ => None,
        }
    }
}

/// Lookup table of cell templates; starts with the builtin set and accepts
/// further registrations.
pub struct TemplateRegistry {
    templates: Vec<CellTemplate>,
}

impl TemplateRegistry {
    pub fn builtin() -> Self {
        TemplateRegistry { templates: vec![CellTemplate::square_x2d(), CellTemplate::bcc3d()] }
    }

    pub fn register(&mut self, template: CellTemplate) {
        self.templates.push(template);
    }

    pub fn get(&self, name: &str) -> Option<&CellTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }
}

/// A rectangular grid of template instances: `counts[a]` cells of size
/// `cell_size[a]` along each axis starting at `origin`. For 2D templates
/// `counts[2]` must be 1 and the z components are ignored.
#[derive(Debug, Clone, Copy)]
pub struct GridBlock {
    pub origin: Point,
    pub cell_size: Vec3,
    pub counts: [usize; 3],
}

impl GridBlock {
    pub fn aabb(&self, dim: usize) -> Aabb {
        let mut max = self.origin;
        for a in 0..dim {
            max[a] += self.counts[a] as f64 * self.cell_size[a];
        }
        Aabb { min: self.origin, max }
    }

    pub fn cell_aabb(&self, idx: [usize; 3], dim: usize) -> Aabb {
        let mut min = self.origin;
        let mut max = self.origin;
        for a in 0..dim {
            min[a] += idx[a] as f64 * self.cell_size[a];
            max[a] = min[a] + self.cell_size[a];
        }
        Aabb { min, max }
    }
}

/// Incremental lattice assembly with joint merging and strut deduplication.
pub struct LatticeBuilder {
    grid: MergeGrid,
    struts: Vec<Strut>,
    strut_map: HashMap<(usize, usize), usize>,
    cells: Vec<UnitCell>,
    dim: usize,
}

impl LatticeBuilder {
    pub fn new(merge_tol: f64, dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        LatticeBuilder {
            grid: MergeGrid::new(merge_tol),
            struts: Vec::new(),
            strut_map: HashMap::new(),
            cells: Vec::new(),
            dim,
        }
    }

    pub fn add_joint(&mut self, p: Point) -> usize {
        self.grid.insert(p)
    }

    /// Adds a strut between two joints, returning the existing id when the
    /// pair is already connected.
    pub fn add_strut(&mut self, j0: usize, j1: usize, area: f64) -> Result<usize> {
        if j0 == j1 {
            return Err(Error::DegenerateStrut { strut: self.struts.len() });
        }
        let key = (j0.min(j1), j0.max(j1));
        if let Some(&id) = self.strut_map.get(&key) {
            return Ok(id);
        }
        let id = self.struts.len();
        self.struts.push(Strut { joints: [j0, j1], area, reference_area: area });
        self.strut_map.insert(key, id);
        Ok(id)
    }

    /// Instantiates one template cell with its minimum corner at `origin`.
    pub fn add_cell(&mut self, template: &CellTemplate, origin: Point, cell_size: Vec3, area: f64) -> Result<usize> {
        let mut ids = Vec::with_capacity(template.joints.len());
        for local in &template.joints {
            let mut p = origin;
            for a in 0..self.dim {
                p[a] += local[a] * cell_size[a];
            }
            ids.push(self.add_joint(p));
        }
        let mut edge_struts = Vec::with_capacity(template.edges.len());
        for &(a, b) in &template.edges {
            edge_struts.push(self.add_strut(ids[a], ids[b], area)?);
        }
        let mut diagonal_struts = Vec::with_capacity(template.diagonals.len());
        for &(a, b) in &template.diagonals {
            diagonal_struts.push(self.add_strut(ids[a], ids[b], area)?);
        }
        let corner_joints: Vec<usize> = ids[..template.corner_count].to_vec();
        let centre_joints: Vec<usize> = ids[template.corner_count..].to_vec();
        let mut centroid = Vec3::zeros();
        for &j in &corner_joints {
            centroid += self.grid.points()[j].coords;
        }
        centroid /= corner_joints.len() as f64;
        let mut size = Vec3::zeros();
        for a in 0..self.dim {
            size[a] = cell_size[a];
        }
        let id = self.cells.len();
        self.cells.push(UnitCell {
            corner_joints,
            centre_joints,
            edge_struts,
            diagonal_struts,
            centroid: Point::from(centroid),
            template: template.name.clone(),
            size,
        });
        Ok(id)
    }

    pub fn finish(self, youngs_modulus: f64) -> LatticeModel {
        let joints = self
            .grid
            .into_points()
            .into_iter()
            .map(|position| Joint { position, attachment: None })
            .collect();
        LatticeModel {
            joints,
            struts: self.struts,
            cells: self.cells,
            supports: Vec::new(),
            youngs_modulus,
            dim: self.dim,
        }
    }
}

fn checked_counts(domain: &Aabb, cell_size: Vec3, dim: usize) -> Result<[usize; 3]> {
    let mut counts = [1usize; 3];
    let extent = domain.extent();
    for a in 0..dim {
        if !(cell_size[a] > 0.0) {
            return Err(Error::InvalidParameter {
                what: "cell size".into(),
                value: cell_size[a],
                expected: "positive".into(),
            });
        }
        let n = (extent[a] / cell_size[a]).round();
        let residual = (extent[a] - n * cell_size[a]).abs();
        if n < 1.0 || residual > 1e-9 * extent[a].max(cell_size[a]) {
            return Err(Error::NonIntegralTiling { axis: a, extent: extent[a], cell: cell_size[a], residual });
        }
        counts[a] = n as usize;
    }
    Ok(counts)
}

/// Generates the blocks into one deduplicated model. `keep` can drop
/// individual cells (block index, cell index triple, cell bounds); joints
/// and struts are only created for kept cells.
pub fn generate_blocks(
    blocks: &[GridBlock],
    template: &CellTemplate,
    youngs_modulus: f64,
    area: f64,
    keep: Option<&dyn Fn(usize, [usize; 3], &Aabb) -> bool>,
) -> Result<LatticeModel> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter { what: "grid blocks".into(), value: 0.0, expected: "at least one block".into() });
    }
    if !(area > 0.0) {
        return Err(Error::InvalidParameter { what: "strut area".into(), value: area, expected: "positive".into() });
    }
    let dim = template.dim;
    let mut overall: Option<Aabb> = None;
    for b in blocks {
        if dim == 2 && b.counts[2] != 1 {
            return Err(Error::InvalidParameter {
                what: "z cell count for a 2D template".into(),
                value: b.counts[2] as f64,
                expected: "1".into(),
            });
        }
        let bb = b.aabb(dim);
        overall = Some(match overall {
            None => bb,
            Some(o) => Aabb {
                min: Point::new(o.min.x.min(bb.min.x), o.min.y.min(bb.min.y), o.min.z.min(bb.min.z)),
                max: Point::new(o.max.x.max(bb.max.x), o.max.y.max(bb.max.y), o.max.z.max(bb.max.z)),
            },
        });
    }
    let overall = overall.unwrap();
    let merge_tol = 1e-8 * overall.max_extent();
    let mut builder = LatticeBuilder::new(merge_tol, dim);
    for (bi, block) in blocks.iter().enumerate() {
        for k in 0..block.counts[2] {
            for j in 0..block.counts[1] {
                for i in 0..block.counts[0] {
                    let idx = [i, j, k];
                    let bb = block.cell_aabb(idx, dim);
                    if let Some(f) = keep {
                        if !f(bi, idx, &bb) {
                            continue;
                        }
                    }
                    builder.add_cell(template, bb.min, block.cell_size, area)?;
                }
            }
        }
    }
    let model = builder.finish(youngs_modulus);
    if model.cells.is_empty() {
        return Err(Error::InvalidModel { reason: "no cells generated".into() });
    }
    Ok(model)
}

/// Fills an axis-aligned domain with a uniform grid of template cells.
/// The domain extents must be integer multiples of the cell size.
pub fn generate_grid_lattice(
    domain: &Aabb,
    cell_size: Vec3,
    template: &CellTemplate,
    youngs_modulus: f64,
    area: f64,
) -> Result<LatticeModel> {
    let counts = checked_counts(domain, cell_size, template.dim)?;
    let block = GridBlock { origin: domain.min, cell_size, counts };
    generate_blocks(&[block], template, youngs_modulus, area, None)
}
